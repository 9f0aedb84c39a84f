#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "diachron/error.hpp"
#include "diachron/feature_matrix.hpp"
#include "diachron/io.hpp"

namespace diachron {

struct NeuralPrediction {
    std::string text_id;
    std::string feature_id;
    double frequency = 0.0;
    double confidence = 0.0;

    friend bool operator==(const NeuralPrediction&, const NeuralPrediction&) = default;
};

inline json prediction_to_json(const NeuralPrediction& p) {
    return json{{"text_id", p.text_id}, {"feature_id", p.feature_id}, {"frequency", p.frequency},
                {"confidence", p.confidence}};
}

// Reads the neural wire format: one {"text_id","feature_id","frequency",
// "confidence"} object per line.
inline std::vector<NeuralPrediction> parse_predictions(std::string_view text, const std::string& origin) {
    std::vector<NeuralPrediction> out;
    std::size_t record = 0;
    for (const auto& j : parse_json_lines(text, origin)) {
        ++record;
        const std::string where = origin + ": record " + std::to_string(record);
        NeuralPrediction p;
        try {
            p.text_id = j.at("text_id").get<std::string>();
            p.feature_id = j.at("feature_id").get<std::string>();
            p.frequency = j.at("frequency").get<double>();
            p.confidence = j.at("confidence").get<double>();
        } catch (const json::exception& e) {
            throw LoadError(where + ": " + e.what());
        }
        if (!std::isfinite(p.frequency) || p.frequency < 0.0) throw LoadError(where + ": frequency must be finite and >= 0");
        if (!(p.confidence >= 0.0 && p.confidence <= 1.0)) throw LoadError(where + ": confidence must lie in [0, 1]");
        out.push_back(std::move(p));
    }
    return out;
}

inline std::vector<NeuralPrediction> load_predictions(const std::filesystem::path& path) {
    return parse_predictions(read_file(path), path.string());
}

inline std::string predictions_to_jsonl(const std::vector<NeuralPrediction>& preds) {
    std::string out;
    for (const auto& p : preds) out += prediction_to_json(p).dump() + "\n";
    return out;
}

struct MethodWeights {
    double transformer = 0.35;
    double regex = 0.65;
};

struct EnsembleConfig {
    MethodWeights weights;
    double high_conf = 0.75;
    double low_conf = 0.25;
    std::map<Category, MethodWeights> category_weights;
    // Feature groups whose ensemble frequencies form a distribution; each is
    // rescaled per text to sum to 1 after combination.
    std::map<std::string, std::vector<std::string>> distribution_groups;

    MethodWeights weights_for(Category c) const {
        auto it = category_weights.find(c);
        return it == category_weights.end() ? weights : it->second;
    }

    void validate() const {
        auto check = [](const MethodWeights& w, const std::string& where) {
            if (!(w.transformer >= 0.0) || !(w.regex >= 0.0) || !std::isfinite(w.transformer) || !std::isfinite(w.regex))
                throw DomainError(where + ": ensemble weights must be finite and non-negative");
            if (w.transformer + w.regex <= 0.0) throw DomainError(where + ": w_t + w_r must be positive");
        };
        check(weights, "ensemble config");
        for (const auto& [c, w] : category_weights) check(w, "category " + std::string(to_string(c)));
        if (!(0.0 <= low_conf && low_conf <= high_conf && high_conf <= 1.0))
            throw DomainError("ensemble config: thresholds must satisfy 0 <= low_conf <= high_conf <= 1");
    }
};

// Regex weight given; transformer weight defaults to its complement.
inline EnsembleConfig make_config(double regex_weight, double high_conf = 0.75, double low_conf = 0.25) {
    EnsembleConfig c;
    c.weights = {1.0 - regex_weight, regex_weight};
    c.high_conf = high_conf;
    c.low_conf = low_conf;
    c.validate();
    return c;
}

inline json config_to_json(const EnsembleConfig& c) {
    json cats = json::object();
    for (const auto& [cat, w] : c.category_weights)
        cats[std::string(to_string(cat))] = {{"transformer_weight", w.transformer}, {"regex_weight", w.regex}};
    json groups = json::object();
    for (const auto& [name, ids] : c.distribution_groups) groups[name] = ids;
    return json{{"regex_weight", c.weights.regex},
                {"transformer_weight", c.weights.transformer},
                {"high_conf", c.high_conf},
                {"low_conf", c.low_conf},
                {"category_weights", cats},
                {"distribution_groups", groups}};
}

inline EnsembleConfig config_from_json(const json& j) {
    EnsembleConfig c;
    try {
        c.weights.regex = j.value("regex_weight", 0.65);
        c.weights.transformer = j.value("transformer_weight", 1.0 - c.weights.regex);
        c.high_conf = j.value("high_conf", 0.75);
        c.low_conf = j.value("low_conf", 0.25);
        if (j.contains("category_weights")) {
            for (const auto& [name, w] : j["category_weights"].items()) {
                auto cat = parse_category(name);
                if (!cat) throw LoadError("ensemble config: unknown category '" + name + "'");
                const double wr = w.value("regex_weight", c.weights.regex);
                c.category_weights[*cat] = {w.value("transformer_weight", 1.0 - wr), wr};
            }
        }
        if (j.contains("distribution_groups"))
            for (const auto& [name, ids] : j["distribution_groups"].items())
                c.distribution_groups[name] = ids.get<std::vector<std::string>>();
    } catch (const json::exception& e) {
        throw LoadError(std::string("malformed ensemble config: ") + e.what());
    }
    c.validate();
    return c;
}

// (w_t * c * f_t + w_r * f_r) / (w_t * c + w_r), evaluated as
// f_r + lambda * (f_t - f_r) with lambda = w_t c / (w_t c + w_r), which keeps
// the c = 0 and f_t = f_r identities exact.
inline double combine(double f_t, double f_r, double c, double w_t, double w_r) {
    const double denom = w_t * c + w_r;
    if (!(denom > 0.0)) throw DomainError("degenerate ensemble weights: w_t * c + w_r = " + format_double(denom));
    const double lambda = (w_t * c) / denom;
    const double value = f_r + lambda * (f_t - f_r);
    return std::clamp(value, std::min(f_t, f_r), std::max(f_t, f_r));
}

enum class DecisionSource { Both, RegexOnly, NeuralOnly, None };

inline std::string_view to_string(DecisionSource s) {
    switch (s) {
        case DecisionSource::Both: return "both";
        case DecisionSource::RegexOnly: return "regex_only";
        case DecisionSource::NeuralOnly: return "neural_only";
        case DecisionSource::None: return "none";
    }
    return "";
}

struct Decision {
    bool detected = false;
    DecisionSource source = DecisionSource::None;

    friend bool operator==(const Decision&, const Decision&) = default;
};

// Regex hits always detect. The neural signal counts only when f_t > 0 and
// c > low_conf; at or above high_conf it detects on its own, and between the
// thresholds it detects through a positive ensemble frequency.
inline Decision decide(double f_r, double f_t, double c, const EnsembleConfig& config,
                       const MethodWeights& weights) {
    const bool regex_fires = f_r > 0.0;
    const bool neural_fires = f_t > 0.0 && c > config.low_conf;
    bool detected = regex_fires;
    if (!detected && neural_fires) {
        if (c >= config.high_conf) {
            detected = true;
        } else {
            detected = combine(f_t, f_r, c, weights.transformer, weights.regex) > 0.0;
        }
    }
    DecisionSource source = DecisionSource::None;
    if (regex_fires && neural_fires) source = DecisionSource::Both;
    else if (regex_fires) source = DecisionSource::RegexOnly;
    else if (neural_fires) source = DecisionSource::NeuralOnly;
    return {detected, source};
}

inline Decision decide(double f_r, double f_t, double c, const EnsembleConfig& config) {
    return decide(f_r, f_t, c, config, config.weights);
}

struct EnsembleCell {
    double f_r = 0.0;
    double f_t = 0.0;
    double c = 0.0;
    double f_ensemble = 0.0;
    double w_t = 0.0;
    double w_r = 0.0;
    bool has_neural = false;
    Decision decision;
};

struct EnsembleResult {
    FeatureMatrix matrix;                       // method = Ensemble
    std::vector<std::vector<EnsembleCell>> cells;  // [feature][text]
    std::vector<std::string> warnings;
};

// Neural predictions as a matrix over the regex matrix's universe; missing
// records are f_t = 0, c = 0.
struct NeuralGrid {
    std::vector<std::vector<double>> freq;
    std::vector<std::vector<double>> confidence;
    std::vector<std::vector<bool>> present;
};

inline NeuralGrid align_predictions(const FeatureMatrix& universe, const std::vector<NeuralPrediction>& preds) {
    NeuralGrid grid;
    const auto nf = universe.num_features(), nt = universe.num_texts();
    grid.freq.assign(nf, std::vector<double>(nt, 0.0));
    grid.confidence.assign(nf, std::vector<double>(nt, 0.0));
    grid.present.assign(nf, std::vector<bool>(nt, false));
    std::map<std::string, std::size_t> text_index, feature_index;
    for (std::size_t t = 0; t < nt; ++t) text_index[universe.texts[t]] = t;
    for (std::size_t f = 0; f < nf; ++f) feature_index[universe.features[f]] = f;

    std::set<std::string> orphan_texts, orphan_features;
    for (const auto& p : preds) {
        auto ti = text_index.find(p.text_id);
        auto fi = feature_index.find(p.feature_id);
        if (ti == text_index.end()) orphan_texts.insert(p.text_id);
        if (fi == feature_index.end()) orphan_features.insert(p.feature_id);
        if (ti == text_index.end() || fi == feature_index.end()) continue;
        if (grid.present[fi->second][ti->second])
            throw AlignmentError("duplicate neural prediction for (" + p.text_id + ", " + p.feature_id + ")");
        grid.freq[fi->second][ti->second] = p.frequency;
        grid.confidence[fi->second][ti->second] = p.confidence;
        grid.present[fi->second][ti->second] = true;
    }
    if (!orphan_texts.empty() || !orphan_features.empty()) {
        std::string msg = "neural predictions do not align with the corpus/catalog;";
        if (!orphan_texts.empty()) {
            msg += " orphan text ids:";
            for (const auto& id : orphan_texts) msg += " " + id;
            msg += ";";
        }
        if (!orphan_features.empty()) {
            msg += " orphan feature ids:";
            for (const auto& id : orphan_features) msg += " " + id;
        }
        throw AlignmentError(msg);
    }
    return grid;
}

// The neural predictions on their own, as a FeatureMatrix (detected = f_t > 0).
inline FeatureMatrix neural_matrix(const FeatureMatrix& universe, const std::vector<NeuralPrediction>& preds) {
    const auto grid = align_predictions(universe, preds);
    FeatureMatrix m = universe;
    m.method = Method::Neural;
    for (std::size_t f = 0; f < m.num_features(); ++f) {
        for (std::size_t t = 0; t < m.num_texts(); ++t) {
            m.freq[f][t] = grid.freq[f][t];
            m.detected[f][t] = grid.freq[f][t] > 0.0;
            m.counts[f][t] = 0;
        }
    }
    return m;
}

inline EnsembleResult combine_matrix(const FeatureMatrix& regex, const std::vector<NeuralPrediction>& preds,
                                     const EnsembleConfig& config) {
    config.validate();
    const auto grid = align_predictions(regex, preds);
    EnsembleResult result;
    result.matrix = regex;
    result.matrix.method = Method::Ensemble;
    const auto nf = regex.num_features(), nt = regex.num_texts();
    result.cells.assign(nf, std::vector<EnsembleCell>(nt));
    for (std::size_t f = 0; f < nf; ++f) {
        const auto w = config.weights_for(regex.categories[f]);
        for (std::size_t t = 0; t < nt; ++t) {
            EnsembleCell cell;
            cell.f_r = regex.freq[f][t];
            cell.f_t = grid.freq[f][t];
            cell.c = grid.confidence[f][t];
            cell.has_neural = grid.present[f][t];
            cell.w_t = w.transformer;
            cell.w_r = w.regex;
            cell.f_ensemble = combine(cell.f_t, cell.f_r, cell.c, w.transformer, w.regex);
            cell.decision = decide(cell.f_r, cell.f_t, cell.c, config, w);
            result.matrix.freq[f][t] = cell.f_ensemble;
            result.matrix.detected[f][t] = cell.decision.detected;
            result.cells[f][t] = cell;
        }
    }

    for (const auto& [group, ids] : config.distribution_groups) {
        std::vector<std::size_t> rows;
        for (const auto& id : ids) {
            auto idx = regex.feature_index(id);
            if (!idx) throw AlignmentError("distribution group '" + group + "' names unknown feature '" + id + "'");
            rows.push_back(*idx);
        }
        for (std::size_t t = 0; t < nt; ++t) {
            double sum = 0.0;
            for (auto r : rows) sum += result.matrix.freq[r][t];
            if (sum <= 0.0) {
                result.warnings.push_back("distribution group '" + group + "' is all zero in text '" + regex.texts[t] +
                                          "'; left unnormalized");
                continue;
            }
            for (auto r : rows) result.matrix.freq[r][t] /= sum;
        }
    }
    return result;
}

inline json ensemble_to_json(const EnsembleResult& r, const EnsembleConfig& config) {
    json cells = json::array();
    const auto& m = r.matrix;
    for (std::size_t f = 0; f < m.num_features(); ++f) {
        for (std::size_t t = 0; t < m.num_texts(); ++t) {
            const auto& c = r.cells[f][t];
            cells.push_back({{"feature_id", m.features[f]},
                             {"text_id", m.texts[t]},
                             {"f_r", c.f_r},
                             {"f_t", c.f_t},
                             {"c", c.c},
                             {"f_ensemble", c.f_ensemble},
                             {"frequency", m.freq[f][t]},
                             {"w_t", c.w_t},
                             {"w_r", c.w_r},
                             {"neural_present", c.has_neural},
                             {"detected", c.decision.detected},
                             {"decision_source", std::string(to_string(c.decision.source))}});
        }
    }
    json j;
    j["config"] = config_to_json(config);
    j["detections"] = m.detection_count();
    j["cells"] = std::move(cells);
    j["warnings"] = r.warnings;
    return j;
}

}  // namespace diachron
