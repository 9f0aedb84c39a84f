#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "diachron/error.hpp"
#include "diachron/feature_matrix.hpp"
#include "diachron/io.hpp"
#include "diachron/pattern.hpp"
#include "diachron/text.hpp"

namespace diachron {

inline constexpr double kAgreementTolerance = 0.30;
inline constexpr std::size_t kDefaultBins = 10;

// 1 when both frequencies are zero or their relative difference is below 0.30.
inline int agreement(double f_regex, double f_transformer) noexcept {
    const double hi = std::max(f_regex, f_transformer);
    if (hi <= 0.0) return 1;
    return std::abs(f_regex - f_transformer) / hi < kAgreementTolerance ? 1 : 0;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw DomainError("pearson: vectors differ in length");
    if (x.size() < 2) throw DomainError("pearson: need at least two observations");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw DomainError("pearson: correlation undefined for zero variance");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

inline std::optional<double> try_pearson(std::span<const double> x, std::span<const double> y) {
    try {
        return pearson(x, y);
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

struct CalibrationBin {
    double lower = 0.0;  // exclusive, except for the first bin
    double upper = 0.0;  // inclusive
    std::size_t count = 0;
    double accuracy = 0.0;
    double confidence = 0.0;
};

struct CalibrationReport {
    std::size_t num_bins = 0;
    std::size_t total = 0;
    std::vector<CalibrationBin> bins;
    double ece = 0.0;
    // Pearson r between per-bin mean confidence and per-bin accuracy over
    // non-empty bins; absent when fewer than two bins or zero variance.
    std::optional<double> pearson_r;
};

// Bin b covers (b/B, (b+1)/B]; confidence 0 falls in the first bin.
inline std::size_t calibration_bin(double confidence, std::size_t bins) noexcept {
    const auto b = static_cast<double>(bins);
    std::size_t idx = confidence <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(confidence * b)) - 1;
    idx = std::min(idx, bins - 1);
    while (idx > 0 && confidence <= static_cast<double>(idx) / b) --idx;
    while (idx + 1 < bins && confidence > static_cast<double>(idx + 1) / b) ++idx;
    return idx;
}

inline CalibrationReport ece(std::span<const double> confidences, const std::vector<bool>& correct,
                             std::size_t num_bins = kDefaultBins) {
    if (confidences.empty()) throw DomainError("ece: no predictions");
    if (confidences.size() != correct.size()) throw DomainError("ece: confidence and correctness lengths differ");
    if (num_bins == 0) throw DomainError("ece: need at least one bin");
    CalibrationReport r;
    r.num_bins = num_bins;
    r.total = confidences.size();
    r.bins.resize(num_bins);
    // Mean confidence is accumulated as the first value in the bin plus mean
    // deviation, so a bin of identical confidences has that exact mean.
    std::vector<double> first(num_bins, 0.0), deviation(num_bins, 0.0), hits(num_bins, 0.0);
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        const double c = confidences[i];
        if (!(c >= 0.0 && c <= 1.0)) throw DomainError("ece: confidence outside [0, 1]");
        const auto b = calibration_bin(c, num_bins);
        if (r.bins[b].count++ == 0) first[b] = c;
        deviation[b] += c - first[b];
        hits[b] += correct[i] ? 1.0 : 0.0;
    }
    std::vector<double> bin_conf, bin_acc;
    const auto n = static_cast<double>(r.total);
    for (std::size_t b = 0; b < num_bins; ++b) {
        auto& bin = r.bins[b];
        bin.lower = static_cast<double>(b) / static_cast<double>(num_bins);
        bin.upper = static_cast<double>(b + 1) / static_cast<double>(num_bins);
        if (bin.count == 0) continue;
        const auto cnt = static_cast<double>(bin.count);
        bin.accuracy = hits[b] / cnt;
        bin.confidence = first[b] + deviation[b] / cnt;
        r.ece += cnt / n * std::abs(bin.accuracy - bin.confidence);
        bin_conf.push_back(bin.confidence);
        bin_acc.push_back(bin.accuracy);
    }
    if (bin_conf.size() >= 2) r.pearson_r = try_pearson(bin_conf, bin_acc);
    return r;
}

inline json calibration_to_json(const CalibrationReport& r) {
    json bins = json::array();
    for (const auto& b : r.bins) {
        bins.push_back({{"lower", b.lower},
                        {"upper", b.upper},
                        {"count", b.count},
                        {"accuracy", b.accuracy},
                        {"confidence", b.confidence}});
    }
    return json{{"bins", r.num_bins},
                {"total", r.total},
                {"ece", r.ece},
                {"pearson_r", r.pearson_r ? json(*r.pearson_r) : json(nullptr)},
                {"reliability", bins}};
}

// Frequency-indicator agreement and joint-detection agreement between two
// matrices over the same universe.
struct AgreementReport {
    std::vector<std::vector<int>> agree;  // [feature][text]
    std::size_t total = 0;
    std::size_t positive_agreements = 0;  // both frequencies > 0 and within tolerance
    std::size_t negative_agreements = 0;  // both frequencies zero
    double agreement_rate = 0.0;
    std::optional<double> correlation;  // Pearson r over all frequency pairs
    std::size_t both_detected = 0;
    std::size_t neither_detected = 0;
    double detection_agreement_rate = 0.0;
};

inline void require_same_universe(const FeatureMatrix& a, const FeatureMatrix& b) {
    if (a.texts != b.texts) throw AlignmentError("matrices cover different texts");
    if (a.features != b.features) throw AlignmentError("matrices cover different features");
}

inline AgreementReport compare_methods(const FeatureMatrix& regex, const FeatureMatrix& neural) {
    require_same_universe(regex, neural);
    AgreementReport r;
    std::vector<double> xs, ys;
    r.agree.assign(regex.num_features(), std::vector<int>(regex.num_texts(), 0));
    for (std::size_t f = 0; f < regex.num_features(); ++f) {
        for (std::size_t t = 0; t < regex.num_texts(); ++t) {
            const double a = regex.freq[f][t], b = neural.freq[f][t];
            const int bit = agreement(a, b);
            r.agree[f][t] = bit;
            ++r.total;
            if (bit && a == 0.0 && b == 0.0) ++r.negative_agreements;
            else if (bit) ++r.positive_agreements;
            const bool da = regex.detected[f][t], db = neural.detected[f][t];
            if (da && db) ++r.both_detected;
            if (!da && !db) ++r.neither_detected;
            xs.push_back(a);
            ys.push_back(b);
        }
    }
    if (r.total > 0) {
        r.agreement_rate = static_cast<double>(r.positive_agreements + r.negative_agreements) / static_cast<double>(r.total);
        r.detection_agreement_rate = static_cast<double>(r.both_detected + r.neither_detected) / static_cast<double>(r.total);
    }
    if (xs.size() >= 2) r.correlation = try_pearson(xs, ys);
    return r;
}

inline json agreement_to_json(const AgreementReport& r, const FeatureMatrix& universe) {
    json cells = json::array();
    for (std::size_t f = 0; f < universe.num_features(); ++f)
        for (std::size_t t = 0; t < universe.num_texts(); ++t)
            cells.push_back({{"feature_id", universe.features[f]}, {"text_id", universe.texts[t]}, {"agree", r.agree[f][t]}});
    return json{{"total_comparisons", r.total},
                {"positive_agreements", r.positive_agreements},
                {"negative_agreements", r.negative_agreements},
                {"agreement_rate", r.agreement_rate},
                {"correlation", r.correlation ? json(*r.correlation) : json(nullptr)},
                {"both_detected", r.both_detected},
                {"neither_detected", r.neither_detected},
                {"detection_agreement_rate", r.detection_agreement_rate},
                {"cells", cells}};
}

struct GoldExample {
    std::string target_word;
    std::string context;
    std::map<std::string, double> true_features;  // feature id -> annotated confidence
    std::set<std::string> expected_false_positives;
    std::string distinguishing_cues;
};

struct GoldPrediction {
    std::set<std::string> features;
    double confidence = 0.0;
};

inline std::vector<GoldExample> parse_gold(const json& doc, const std::string& origin) {
    std::vector<GoldExample> out;
    try {
        std::size_t i = 0;
        for (const auto& e : doc.at("examples")) {
            GoldExample g;
            g.target_word = e.at("target_word").get<std::string>();
            g.context = e.at("context").get<std::string>();
            for (const auto& [id, c] : e.at("true_features").items()) g.true_features[id] = c.get<double>();
            for (const auto& id : e.value("expected_false_positives", std::vector<std::string>{}))
                g.expected_false_positives.insert(id);
            g.distinguishing_cues = e.value("distinguishing_cues", std::string{});
            for (const auto& id : g.expected_false_positives) {
                if (g.true_features.count(id))
                    throw LoadError(origin + ": example " + std::to_string(i) + ": feature '" + id +
                                    "' is both a true feature and an expected false positive");
            }
            out.push_back(std::move(g));
            ++i;
        }
    } catch (const json::exception& e) {
        throw LoadError(origin + ": malformed gold file: " + e.what());
    }
    return out;
}

inline std::vector<GoldExample> load_gold(const std::filesystem::path& path) {
    return parse_gold(read_json(path), path.string());
}

inline json gold_to_json(const std::vector<GoldExample>& gold) {
    json examples = json::array();
    for (const auto& g : gold) {
        json tf = json::object();
        for (const auto& [id, c] : g.true_features) tf[id] = c;
        examples.push_back({{"target_word", g.target_word},
                            {"context", g.context},
                            {"true_features", tf},
                            {"expected_false_positives", g.expected_false_positives},
                            {"distinguishing_cues", g.distinguishing_cues}});
    }
    return json{{"examples", examples}};
}

struct GoldMetrics {
    std::size_t examples = 0;
    double accuracy = 0.0;  // exact label-set match
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;  // micro-averaged over feature labels
    std::size_t expected_false_positive_hits = 0;
    CalibrationReport calibration;
};

inline GoldMetrics evaluate_gold(const std::vector<GoldExample>& gold, const std::vector<GoldPrediction>& predictions,
                                 std::size_t num_bins = kDefaultBins) {
    if (gold.size() != predictions.size())
        throw AlignmentError("gold has " + std::to_string(gold.size()) + " examples but " +
                             std::to_string(predictions.size()) + " predictions were supplied");
    if (gold.empty()) throw DomainError("evaluate_gold: empty gold standard");
    GoldMetrics m;
    m.examples = gold.size();
    std::size_t exact = 0, tp = 0, fp = 0, fn = 0;
    std::vector<double> conf;
    std::vector<bool> correct;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto& truth = gold[i].true_features;
        const auto& pred = predictions[i].features;
        std::size_t hit = 0;
        for (const auto& id : pred) {
            if (truth.count(id)) ++hit;
            if (gold[i].expected_false_positives.count(id)) ++m.expected_false_positive_hits;
        }
        tp += hit;
        fp += pred.size() - hit;
        fn += truth.size() - hit;
        const bool ok = hit == pred.size() && hit == truth.size();
        exact += ok ? 1 : 0;
        conf.push_back(predictions[i].confidence);
        correct.push_back(ok);
    }
    m.accuracy = static_cast<double>(exact) / static_cast<double>(gold.size());
    m.precision = tp + fp == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    m.recall = tp + fn == 0 ? 1.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    m.f1 = tp + fp + fn == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
    m.calibration = ece(conf, correct, num_bins);
    return m;
}

inline constexpr double kEmptyPredictionConfidence = 0.5;

// Runs the catalog over each gold context and keeps the matches on the target
// word. Confidence is the strongest retained match (0.5 when nothing matched).
inline std::vector<GoldPrediction> predict_gold(const std::vector<GoldExample>& gold, const PatternCatalog& catalog,
                                                std::size_t window = kDefaultWindow) {
    std::vector<GoldPrediction> out;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        TextDocument doc;
        doc.id = "gold:" + std::to_string(i);
        doc.text = normalize(gold[i].context);
        doc.tokens = tokenize(doc.text);
        const auto target = normalize(gold[i].target_word);
        auto it = std::find_if(doc.tokens.begin(), doc.tokens.end(), [&](const Token& t) { return t.surface == target; });
        if (it == doc.tokens.end())
            throw AlignmentError("gold example " + std::to_string(i) + ": target word '" + gold[i].target_word +
                                 "' does not occur in its context");
        GoldPrediction p;
        p.confidence = kEmptyPredictionConfidence;
        double best = -1.0;
        for (const auto& m : scan_document(doc, catalog, window)) {
            if (m.word_index != it->word_index) continue;
            p.features.insert(m.feature_id);
            best = std::max(best, m.confidence);
        }
        if (best >= 0.0) p.confidence = best;
        out.push_back(std::move(p));
    }
    return out;
}

inline json gold_metrics_to_json(const GoldMetrics& m) {
    return json{{"examples", m.examples},
                {"accuracy", m.accuracy},
                {"precision", m.precision},
                {"recall", m.recall},
                {"f1", m.f1},
                {"expected_false_positive_hits", m.expected_false_positive_hits},
                {"calibration", calibration_to_json(m.calibration)}};
}

}  // namespace diachron
