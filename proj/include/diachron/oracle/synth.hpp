#pragma once

// Synthetic corpora with planted feature occurrences and exact ground truth.
// Ground truth is computed from token positions chosen by the generator, never
// by scanning the emitted text.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "diachron/corpus.hpp"
#include "diachron/ensemble.hpp"
#include "diachron/error.hpp"
#include "diachron/evaluation.hpp"
#include "diachron/io.hpp"
#include "diachron/pattern.hpp"

namespace diachron::oracle {

class SpecError : public Error {
public:
    using Error::Error;
};

struct SynthText {
    std::string text_id;
    Period period = Period::EarlyVedic;
    std::size_t token_count = 1000;
    std::map<std::string, double> rates;  // feature id -> injections per 1,000 words
    double positive_cue_probability = 0.0;
    double negative_cue_probability = 0.0;
};

struct SynthSpec {
    std::uint64_t seed = 1;
    std::size_t window = kDefaultWindow;
    std::size_t num_features = 20;
    std::vector<SynthText> texts;
};

struct PlantedOccurrence {
    std::size_t word_index = 0;
    std::string surface;
    std::size_t positives = 0;
    std::size_t negatives = 0;
    double confidence = 0.0;
    bool retained = false;
};

struct CellTruth {
    std::size_t injected = 0;
    std::size_t retained = 0;
    double injected_frequency = 0.0;
    double expected_frequency = 0.0;  // retained occurrences per 1,000 words
    std::vector<PlantedOccurrence> planted;
};

struct GroundTruth {
    std::vector<std::string> texts;
    std::vector<std::string> features;
    std::vector<std::size_t> token_counts;
    std::vector<std::vector<CellTruth>> cells;  // [text][feature]
};

struct SynthCorpus {
    std::vector<std::string> raw_texts;  // one per SynthSpec text, in order
    CorpusManifest manifest;             // file paths relative: texts/<id>.txt
    std::vector<FeaturePattern> catalog;
    GroundTruth truth;
};

namespace detail {

inline constexpr const char* kCodes[] = {"bh", "dh", "gh", "jh", "kh", "ph", "th", "ṭh", "ḍh", "ch",
                                         "bṛ", "dṛ", "gṛ", "kṛ", "pṛ", "tṛ", "śr", "ṣṭ", "ṇḍ", "ḷh"};
inline constexpr std::size_t kMaxFeatures = sizeof(kCodes) / sizeof(kCodes[0]);
inline constexpr const char* kMarkerEndings[] = {"a", "ām", "asya", "ena"};
inline constexpr const char* kConsonants[] = {"k", "g", "c", "j", "ṭ", "ḍ", "t", "d", "n", "p", "b",
                                              "m", "y", "r", "l", "v", "ś", "ṣ", "s", "h", "ṇ"};
inline constexpr const char* kVowels[] = {"a", "ā", "i", "ī", "u", "ū", "ṛ", "e", "o", "ai", "au"};

// Deterministic across standard libraries, unlike std::uniform_*_distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(engine_() % n); }
    double unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    bool chance(double p) { return unit() < p; }

private:
    std::mt19937_64 engine_;
};

inline std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::string marker(std::size_t feature, Rng& rng) {
    return std::string("q") + kCodes[feature] + kMarkerEndings[rng.index(4)];
}

// Two positive and two negative cue words per feature.
inline std::string cue(std::size_t feature, bool positive, std::size_t which) {
    if (positive) return which == 0 ? std::string("xa") + kCodes[feature] + "ya" : std::string("xi") + kCodes[feature] + "vā";
    return which == 0 ? std::string("zo") + kCodes[feature] + "na" : std::string("zu") + kCodes[feature] + "ṣa";
}

inline std::string filler(Rng& rng) {
    std::string w;
    const std::size_t syllables = 1 + rng.index(3);
    for (std::size_t s = 0; s < syllables; ++s) {
        w += kConsonants[rng.index(std::size(kConsonants))];
        w += kVowels[rng.index(std::size(kVowels))];
    }
    const auto coda = rng.index(8);
    if (coda == 0) w += "ṃ";
    if (coda == 1) w += "ḥ";
    return w;
}

// Surface variants: case and decomposition changes normalize back to the same
// token; the elision mark (filler only) changes the token but not its role.
inline std::string disguise(const std::string& word, Rng& rng, bool allow_elision) {
    const auto roll = rng.index(40);
    if (roll == 0 && word.size() >= 1 && word[0] >= 'a' && word[0] <= 'z') {
        std::string up = word;
        up[0] = static_cast<char>(up[0] - 'a' + 'A');
        return up;
    }
    if (roll == 1) {
        const std::string precomposed = "\u0101";
        auto pos = word.find(precomposed);
        if (pos != std::string::npos) return word.substr(0, pos) + "a\u0304" + word.substr(pos + precomposed.size());
    }
    if (roll == 2 && allow_elision) return "'" + word;
    return word;
}

inline std::string separator(Rng& rng, std::size_t position) {
    if (position % 12 == 11) {
        const auto r = rng.index(3);
        if (r == 0) return " ॥ " + std::to_string(position / 12 + 1) + " ॥\n";
        if (r == 1) return " ।\n";
        return ".\n";
    }
    const auto r = rng.index(30);
    if (r == 0) return ", ";
    if (r == 1) return " । ";
    if (r == 2) return " - ";
    return " ";
}

inline std::size_t round_half_up(double x) { return static_cast<std::size_t>(std::floor(x + 0.5)); }

inline double oracle_confidence(std::size_t pos, std::size_t neg) {
    const double raw = 0.6 + 0.2 * static_cast<double>(pos) - 0.3 * static_cast<double>(neg);
    return std::min(0.95, std::max(0.1, raw));
}

}  // namespace detail

inline std::string feature_id(std::size_t k) {
    return "f" + std::string(k < 10 ? "0" : "") + std::to_string(k);
}

// The toy catalog the generator's markers and cues are drawn from.
inline std::vector<FeaturePattern> toy_catalog(std::size_t num_features) {
    if (num_features > detail::kMaxFeatures)
        throw SpecError("at most " + std::to_string(detail::kMaxFeatures) + " toy features are available");
    std::vector<FeaturePattern> out;
    for (std::size_t k = 0; k < num_features; ++k) {
        FeaturePattern p;
        p.feature_id = feature_id(k);
        p.category = kAllCategories[k % kAllCategories.size()];
        p.base_regex = std::string("q") + detail::kCodes[k] + "(?:a|ām|asya|ena)";
        p.positive_contexts = {detail::cue(k, true, 0), detail::cue(k, true, 1)};
        p.negative_contexts = {detail::cue(k, false, 0), detail::cue(k, false, 1)};
        p.description = "synthetic marker q" + std::string(detail::kCodes[k]) + "- (non-linguistic test feature)";
        out.push_back(std::move(p));
    }
    return out;
}

inline SynthCorpus generate(const SynthSpec& spec) {
    if (spec.num_features > detail::kMaxFeatures) throw SpecError("too many toy features requested");
    SynthCorpus out;
    out.catalog = toy_catalog(spec.num_features);
    std::map<std::string, std::size_t> feature_index;
    for (std::size_t k = 0; k < spec.num_features; ++k) {
        feature_index[feature_id(k)] = k;
        out.truth.features.push_back(feature_id(k));
    }
    std::set<std::string> ids;
    for (std::size_t t = 0; t < spec.texts.size(); ++t) {
        const auto& text = spec.texts[t];
        if (!ids.insert(text.text_id).second) throw SpecError("duplicate synthetic text id '" + text.text_id + "'");
        if (text.token_count == 0) throw SpecError("text '" + text.text_id + "': token_count must be > 0");
        detail::Rng rng(detail::mix(spec.seed, t));
        const std::size_t n = text.token_count;

        std::vector<std::size_t> counts(spec.num_features, 0);
        std::size_t injections = 0;
        for (const auto& [fid, rate] : text.rates) {
            auto it = feature_index.find(fid);
            if (it == feature_index.end()) throw SpecError("text '" + text.text_id + "': unknown feature '" + fid + "'");
            if (!(rate >= 0.0) || !std::isfinite(rate)) throw SpecError("text '" + text.text_id + "': rate must be >= 0");
            counts[it->second] = detail::round_half_up(rate * static_cast<double>(n) / 1000.0);
            injections += counts[it->second];
        }
        if (injections > n)
            throw SpecError("text '" + text.text_id + "': " + std::to_string(injections) +
                            " injections exceed token_count " + std::to_string(n));

        // Slot roles: -1 filler, otherwise encoded feature/role.
        std::vector<std::string> words(n);
        std::vector<bool> used(n, false);
        std::vector<std::size_t> slots(n);
        for (std::size_t i = 0; i < n; ++i) slots[i] = i;
        for (std::size_t i = n; i > 1; --i) std::swap(slots[i - 1], slots[rng.index(i)]);

        struct Injection {
            std::size_t position;
            std::size_t feature;
        };
        std::vector<Injection> planted;
        std::size_t next = 0;
        for (std::size_t k = 0; k < spec.num_features; ++k) {
            for (std::size_t c = 0; c < counts[k]; ++c) {
                const auto pos = slots[next++];
                planted.push_back({pos, k});
                used[pos] = true;
                words[pos] = detail::marker(k, rng);
            }
        }
        std::sort(planted.begin(), planted.end(), [](const Injection& a, const Injection& b) { return a.position < b.position; });

        // cue positions per (feature, positive?, which)
        std::map<std::tuple<std::size_t, bool, std::size_t>, std::vector<std::size_t>> cue_positions;
        auto plant_cue = [&](const Injection& inj, bool positive) {
            if (spec.window == 0) return;
            const std::size_t which = rng.index(2);
            for (int attempt = 0; attempt < 20; ++attempt) {
                const auto offset = 1 + rng.index(spec.window);
                const bool left = rng.chance(0.5);
                if (left && offset > inj.position) continue;
                const auto pos = left ? inj.position - offset : inj.position + offset;
                if (pos >= n || used[pos]) continue;
                used[pos] = true;
                words[pos] = detail::cue(inj.feature, positive, which);
                cue_positions[{inj.feature, positive, which}].push_back(pos);
                return;
            }
        };
        for (const auto& inj : planted) {
            if (rng.chance(text.positive_cue_probability)) plant_cue(inj, true);
            if (rng.chance(text.negative_cue_probability)) plant_cue(inj, false);
        }
        for (std::size_t i = 0; i < n; ++i)
            if (!used[i]) words[i] = detail::filler(rng);

        std::string raw;
        for (std::size_t i = 0; i < n; ++i) {
            raw += detail::disguise(words[i], rng, !used[i]);
            raw += i + 1 == n ? std::string("\n") : detail::separator(rng, i);
        }

        std::vector<CellTruth> cells(spec.num_features);
        auto near = [&](std::size_t feature, bool positive, std::size_t which, std::size_t pos) {
            auto it = cue_positions.find({feature, positive, which});
            if (it == cue_positions.end()) return false;
            for (auto c : it->second) {
                const auto dist = c > pos ? c - pos : pos - c;
                if (dist <= spec.window) return true;
            }
            return false;
        };
        for (const auto& inj : planted) {
            PlantedOccurrence occ;
            occ.word_index = inj.position;
            occ.surface = words[inj.position];
            for (std::size_t which = 0; which < 2; ++which) {
                occ.positives += near(inj.feature, true, which, inj.position) ? 1 : 0;
                occ.negatives += near(inj.feature, false, which, inj.position) ? 1 : 0;
            }
            occ.confidence = detail::oracle_confidence(occ.positives, occ.negatives);
            occ.retained = occ.confidence >= 0.4;
            auto& cell = cells[inj.feature];
            ++cell.injected;
            cell.retained += occ.retained ? 1 : 0;
            cell.planted.push_back(std::move(occ));
        }
        for (auto& cell : cells) {
            cell.injected_frequency = 1000.0 * static_cast<double>(cell.injected) / static_cast<double>(n);
            cell.expected_frequency = 1000.0 * static_cast<double>(cell.retained) / static_cast<double>(n);
        }

        out.raw_texts.push_back(std::move(raw));
        out.manifest.entries.push_back(ManifestEntry{text.text_id, "Synthetic text " + text.text_id, text.period, t,
                                                     std::filesystem::path("texts") / (text.text_id + ".txt"), n});
        out.truth.texts.push_back(text.text_id);
        out.truth.token_counts.push_back(n);
        out.truth.cells.push_back(std::move(cells));
    }
    return out;
}

inline json truth_to_json(const GroundTruth& truth) {
    json texts = json::array();
    for (std::size_t t = 0; t < truth.texts.size(); ++t) {
        json features = json::object();
        for (std::size_t k = 0; k < truth.features.size(); ++k) {
            const auto& cell = truth.cells[t][k];
            json planted = json::array();
            for (const auto& p : cell.planted) {
                planted.push_back({{"word_index", p.word_index},
                                   {"surface", p.surface},
                                   {"positives", p.positives},
                                   {"negatives", p.negatives},
                                   {"confidence", p.confidence},
                                   {"retained", p.retained}});
            }
            features[truth.features[k]] = {{"injected", cell.injected},
                                           {"retained", cell.retained},
                                           {"injected_frequency", cell.injected_frequency},
                                           {"expected_frequency", cell.expected_frequency},
                                           {"planted", planted}};
        }
        texts.push_back({{"text_id", truth.texts[t]}, {"token_count", truth.token_counts[t]}, {"features", features}});
    }
    return json{{"format", "diachron-ground-truth/1"}, {"texts", texts}};
}

inline json spec_to_json(const SynthSpec& spec) {
    json texts = json::array();
    for (const auto& t : spec.texts) {
        json rates = json::object();
        for (const auto& [id, r] : t.rates) rates[id] = r;
        texts.push_back({{"text_id", t.text_id},
                         {"period", std::string(to_string(t.period))},
                         {"token_count", t.token_count},
                         {"rates", rates},
                         {"positive_cue_probability", t.positive_cue_probability},
                         {"negative_cue_probability", t.negative_cue_probability}});
    }
    return json{{"seed", spec.seed}, {"window", spec.window}, {"num_features", spec.num_features}, {"texts", texts}};
}

inline SynthSpec spec_from_json(const json& j) {
    SynthSpec spec;
    try {
        spec.seed = j.value("seed", std::uint64_t{1});
        spec.window = j.value("window", kDefaultWindow);
        spec.num_features = j.value("num_features", std::size_t{20});
        for (const auto& t : j.at("texts")) {
            SynthText text;
            text.text_id = t.at("text_id").get<std::string>();
            auto p = parse_period(t.at("period").get<std::string>());
            if (!p) throw SpecError("text '" + text.text_id + "': invalid period");
            text.period = *p;
            text.token_count = t.at("token_count").get<std::size_t>();
            const json rates = t.value("rates", json::object());
            for (const auto& [id, r] : rates.items()) text.rates[id] = r.get<double>();
            text.positive_cue_probability = t.value("positive_cue_probability", 0.0);
            text.negative_cue_probability = t.value("negative_cue_probability", 0.0);
            spec.texts.push_back(std::move(text));
        }
    } catch (const json::exception& e) {
        throw SpecError(std::string("malformed synthetic spec: ") + e.what());
    }
    return spec;
}

// Writes texts/, manifest.json, catalog.json and ground_truth.json under dir.
inline void write_corpus(const SynthCorpus& corpus, const std::filesystem::path& dir, const std::string& catalog_version) {
    for (std::size_t t = 0; t < corpus.raw_texts.size(); ++t)
        write_file(dir / corpus.manifest.entries[t].file_path, corpus.raw_texts[t]);
    write_json(dir / "manifest.json", manifest_to_json(corpus.manifest));
    write_json(dir / "catalog.json", catalog_to_json(make_catalog(catalog_version, corpus.catalog)));
    write_json(dir / "ground_truth.json", truth_to_json(corpus.truth));
}

// Stand-in for the neural component's output: noisy versions of the injected
// frequencies, extra low-rate detections where nothing was injected, and
// confidences that are higher on real occurrences.
inline std::vector<NeuralPrediction> stub_predictions(const GroundTruth& truth, std::uint64_t seed) {
    detail::Rng rng(detail::mix(seed, 0xA11CE));
    std::vector<NeuralPrediction> out;
    for (std::size_t t = 0; t < truth.texts.size(); ++t) {
        for (std::size_t k = 0; k < truth.features.size(); ++k) {
            const auto& cell = truth.cells[t][k];
            NeuralPrediction p;
            p.text_id = truth.texts[t];
            p.feature_id = truth.features[k];
            if (cell.injected > 0) {
                p.frequency = cell.injected_frequency * (0.75 + 0.5 * rng.unit());
                p.confidence = 0.45 + 0.55 * rng.unit();
            } else if (rng.chance(0.35)) {
                p.frequency = 0.5 + 2.5 * rng.unit();
                p.confidence = 0.8 * rng.unit();
            } else {
                p.frequency = 0.0;
                p.confidence = 0.6 * rng.unit();
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

// Synthetic (non-philological) gold examples built from toy markers and cues.
// Truth is what was planted; contexts with a suppressing cue make some
// examples hard for the symbolic detector.
inline std::vector<GoldExample> synthetic_gold(std::size_t num_examples, std::size_t num_features, std::uint64_t seed) {
    detail::Rng rng(detail::mix(seed, 0x601D));
    std::vector<GoldExample> out;
    for (std::size_t i = 0; i < num_examples; ++i) {
        const std::size_t k = rng.index(num_features);
        const std::size_t kind = i % 5;
        std::vector<std::string> words;
        for (int w = 0; w < 6; ++w) words.push_back(detail::filler(rng));
        GoldExample g;
        g.target_word = detail::marker(k, rng);
        words.insert(words.begin() + 3, g.target_word);
        const auto fid = feature_id(k);
        switch (kind) {
            case 0:
                words.push_back(detail::cue(k, true, 0));
                g.true_features[fid] = 0.9;
                g.distinguishing_cues = "positive cue " + words.back();
                break;
            case 1:
                g.true_features[fid] = 0.8;
                g.distinguishing_cues = "bare marker";
                break;
            case 2:
                words.push_back(detail::cue(k, false, 0));
                g.expected_false_positives.insert(fid);
                g.distinguishing_cues = "negative cue " + words.back() + " rules the marker out";
                break;
            case 3:
                words.push_back(detail::cue(k, false, 1));
                words.insert(words.begin(), detail::cue(k, true, 1));
                g.expected_false_positives.insert(fid);
                g.distinguishing_cues = "mixed cues; annotated as not the feature";
                break;
            default:
                words.push_back(detail::cue(k, false, 0));
                g.true_features[fid] = 0.7;
                g.distinguishing_cues = "genuine despite negative cue";
                break;
        }
        for (std::size_t w = 0; w < words.size(); ++w) g.context += (w ? " " : "") + words[w];
        out.push_back(std::move(g));
    }
    return out;
}

// The shipped demonstration corpus: 12 texts, three per period, with
// rising, falling and flat features.
inline SynthSpec demo_spec(std::uint64_t seed = 20240501) {
    SynthSpec spec;
    spec.seed = seed;
    spec.num_features = 20;
    const std::size_t n_texts = 12;
    for (std::size_t t = 0; t < n_texts; ++t) {
        SynthText text;
        text.text_id = "T" + std::string(t < 10 ? "0" : "") + std::to_string(t);
        text.period = kAllPeriods[t / 3];
        text.token_count = 2000 + 250 * ((t * 7) % 5);
        text.positive_cue_probability = 0.5;
        text.negative_cue_probability = 0.25;
        const double x = static_cast<double>(t);
        for (std::size_t k = 0; k < spec.num_features; ++k) {
            double rate = 0.0;
            if (k < 5) rate = 1.0 + 1.5 * x;                  // rising
            else if (k < 8) rate = 18.0 - 1.4 * x;            // falling
            else if (k < 12) rate = 6.0 + ((t * (k + 3)) % 4);  // flat with jitter
            else if (k < 16) rate = (t % 3 == 0) ? 4.0 : 0.0;  // sporadic
            else rate = 0.0;                                  // absent
            if (rate > 0.0) text.rates[feature_id(k)] = rate;
        }
        spec.texts.push_back(std::move(text));
    }
    return spec;
}

}  // namespace diachron::oracle
