#pragma once

// Command implementations behind the CLI. Each command reloads its inputs and
// rewrites its artifacts, so reruns on identical inputs are byte-identical.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diachron/cluster.hpp"
#include "diachron/corpus.hpp"
#include "diachron/digest.hpp"
#include "diachron/ensemble.hpp"
#include "diachron/evaluation.hpp"
#include "diachron/feature_matrix.hpp"
#include "diachron/io.hpp"
#include "diachron/labels.hpp"
#include "diachron/oracle/synth.hpp"
#include "diachron/pattern.hpp"
#include "diachron/pca.hpp"
#include "diachron/stats.hpp"

namespace diachron::pipeline {

namespace fs = std::filesystem;

// Bad invocation: missing inputs or contradictory options (exit code 1).
class UsageError : public Error {
public:
    using Error::Error;
};

enum class OutputFormat { Both, Csv, Json };

struct RunConfig {
    fs::path manifest;
    fs::path catalog;
    fs::path neural;
    fs::path gold;
    fs::path ensemble_config;
    fs::path out = "diachron_out";
    EnsembleConfig ensemble;
    std::size_t window = kDefaultWindow;
    std::size_t bins = kDefaultBins;
    std::size_t pca_components = 5;
    std::size_t cluster_cut = 3;
    TrendOptions trends;
    std::uint64_t seed = 20240501;
    OutputFormat format = OutputFormat::Both;

    bool csv() const { return format != OutputFormat::Json; }
    bool json_out() const { return format != OutputFormat::Csv; }
};

inline void print_warning(const std::string& message) { std::cerr << "warning: " << message << '\n'; }

struct Provenance {
    std::string catalog_version;
    std::string corpus_hash;
    std::string config_digest;

    std::string line() const {
        return "catalog_version=" + catalog_version + " corpus_hash=" + corpus_hash + " config_digest=" + config_digest;
    }
    json to_json() const {
        return json{{"catalog_version", catalog_version}, {"corpus_hash", corpus_hash}, {"config_digest", config_digest}};
    }
};

// Loaded inputs shared by the commands.
class Session {
public:
    explicit Session(const RunConfig& config) : config_(config) {
        if (config.manifest.empty()) throw UsageError("--manifest is required");
        if (!config.ensemble_config.empty()) config_.ensemble = config_from_json(read_json(config.ensemble_config));
        config_.ensemble.validate();
        corpus_ = load_corpus(load_manifest(config.manifest), print_warning);
        if (corpus_.empty()) throw LoadError(config.manifest.string() + ": manifest has no entries");
        if (!config.catalog.empty()) catalog_ = load_catalog(config.catalog);
        if (!config.neural.empty()) neural_ = load_predictions(config.neural);
        provenance_.corpus_hash = corpus_hash(corpus_);
        provenance_.catalog_version = catalog_ ? catalog_->version : "none";
        provenance_.config_digest = config_digest();
    }

    const RunConfig& config() const { return config_; }
    const std::vector<TextDocument>& corpus() const { return corpus_; }
    const Provenance& provenance() const { return provenance_; }
    bool has_neural() const { return neural_.has_value(); }
    const std::vector<NeuralPrediction>& neural() const { return *neural_; }

    const PatternCatalog& catalog() const {
        if (!catalog_) throw UsageError("--catalog is required for this command");
        return *catalog_;
    }

    const FeatureMatrix& regex_matrix() {
        if (!regex_) regex_ = detect_all(corpus_, catalog(), config_.window, print_warning);
        return *regex_;
    }

    const EnsembleResult& ensemble() {
        if (!ensemble_) {
            if (!neural_) print_warning("no neural predictions supplied; ensemble degrades to regex-only");
            ensemble_ = combine_matrix(regex_matrix(), neural_ ? *neural_ : std::vector<NeuralPrediction>{},
                                       config_.ensemble);
            for (const auto& w : ensemble_->warnings) print_warning(w);
        }
        return *ensemble_;
    }

    FeatureMatrix neural_matrix_view() { return neural_matrix(regex_matrix(), *neural_); }

    // Matrix the diachronic statistics run on: the ensemble when neural
    // predictions exist, the regex matrix otherwise.
    const FeatureMatrix& analysis_matrix() { return neural_ ? ensemble().matrix : regex_matrix(); }

    json header() const { return provenance_.to_json(); }

private:
    std::string config_digest() const {
        json cfg{{"window", config_.window},
                 {"bins", config_.bins},
                 {"pca_components", config_.pca_components},
                 {"cluster_cut", config_.cluster_cut},
                 {"early_group", config_.trends.early_group},
                 {"late_group", config_.trends.late_group},
                 {"alpha", config_.trends.alpha},
                 {"exact_spearman", config_.trends.exact_spearman},
                 {"ensemble", config_to_json(config_.ensemble)}};
        Sha256 h;
        h.update_field(cfg.dump());
        h.update_field(config_.neural.empty() ? std::string("-") : sha256_hex(read_file(config_.neural)));
        h.update_field(config_.gold.empty() ? std::string("-") : sha256_hex(read_file(config_.gold)));
        return h.hex();
    }

    RunConfig config_;
    std::vector<TextDocument> corpus_;
    std::optional<PatternCatalog> catalog_;
    std::optional<std::vector<NeuralPrediction>> neural_;
    std::optional<FeatureMatrix> regex_;
    std::optional<EnsembleResult> ensemble_;
    Provenance provenance_;
};

inline json with_provenance(const Session& s, json body) {
    json doc;
    doc["provenance"] = s.header();
    for (auto& [k, v] : body.items()) doc[k] = v;
    return doc;
}

inline void emit_json(const Session& s, const fs::path& path, json body) { write_json(path, with_provenance(s, std::move(body))); }

inline void emit_csv(const Session& s, const fs::path& path, const std::string& body) {
    write_file(path, "# " + s.provenance().line() + "\n" + body);
}

inline json corpus_summary(const Session& s) {
    json texts = json::array();
    std::map<Period, std::size_t> totals, counts;
    for (const auto& d : s.corpus()) {
        texts.push_back({{"id", d.id},
                         {"title", d.title},
                         {"period", std::string(to_string(d.period))},
                         {"chrono_index", d.chrono_index},
                         {"word_count", d.word_count()}});
        totals[d.period] += d.word_count();
        ++counts[d.period];
    }
    json periods = json::array();
    for (Period p : kAllPeriods) {
        const auto info = period_info(p);
        periods.push_back({{"period", std::string(info.key)},
                           {"name", std::string(info.display_name)},
                           {"dates", std::string(info.date_range)},
                           {"texts", counts[p]},
                           {"words", totals[p]}});
    }
    return json{{"texts", texts}, {"periods", periods}, {"total_words", total_word_count(s.corpus())}};
}

inline void cmd_ingest(Session& s) {
    const auto& out = s.config().out;
    emit_json(s, out / "corpus_summary.json", corpus_summary(s));
    // first line is the provenance record
    std::string cache = json{{"provenance", s.provenance().to_json()}}.dump() + "\n";
    for (const auto& d : s.corpus()) {
        json tokens = json::array();
        for (const auto& t : d.tokens) tokens.push_back(t.surface);
        cache += json{{"id", d.id}, {"tokens", tokens}}.dump() + "\n";
    }
    write_file(out / "tokens.jsonl", cache);
}

inline void cmd_detect(Session& s) {
    const auto& m = s.regex_matrix();
    const auto& out = s.config().out;
    if (s.config().csv()) write_file(out / "regex_matrix.csv", matrix_to_csv(m, s.provenance().line()));
    if (s.config().json_out()) emit_json(s, out / "regex_matrix.json", matrix_to_json(m));
}

inline void cmd_labels(Session& s) {
    const auto labels = generate_labels(s.corpus(), s.catalog(), s.config().window);
    export_labels(labels, s.config().out / "weak_labels.jsonl");
}

inline void cmd_ensemble(Session& s) {
    const auto& r = s.ensemble();
    const auto& out = s.config().out;
    if (s.config().csv()) write_file(out / "ensemble_matrix.csv", matrix_to_csv(r.matrix, s.provenance().line()));
    if (s.config().json_out()) {
        json body = ensemble_to_json(r, s.config().ensemble);
        body["neural_supplied"] = s.has_neural();
        emit_json(s, out / "ensemble.json", std::move(body));
    }
}

// Calibration of neural confidences against agreement with the symbolic
// detector: a neural cell is correct when its detection matches the regex one.
inline CalibrationReport neural_calibration(Session& s) {
    const auto& regex = s.regex_matrix();
    const auto grid = align_predictions(regex, s.neural());
    std::vector<double> conf;
    std::vector<bool> correct;
    for (std::size_t f = 0; f < regex.num_features(); ++f) {
        for (std::size_t t = 0; t < regex.num_texts(); ++t) {
            if (!grid.present[f][t]) continue;
            conf.push_back(grid.confidence[f][t]);
            correct.push_back((grid.freq[f][t] > 0.0) == static_cast<bool>(regex.detected[f][t]));
        }
    }
    return ece(conf, correct, s.config().bins);
}

inline std::string reliability_csv(const CalibrationReport& r) {
    std::string out = csv_row({"bin", "lower", "upper", "count", "confidence", "accuracy"});
    for (std::size_t b = 0; b < r.bins.size(); ++b) {
        const auto& bin = r.bins[b];
        out += csv_row({std::to_string(b), format_double(bin.lower), format_double(bin.upper), std::to_string(bin.count),
                        format_double(bin.confidence), format_double(bin.accuracy)});
    }
    return out;
}

inline std::optional<GoldMetrics> gold_metrics(Session& s) {
    if (s.config().gold.empty()) return std::nullopt;
    const auto gold = load_gold(s.config().gold);
    return evaluate_gold(gold, predict_gold(gold, s.catalog(), s.config().window), s.config().bins);
}

inline void cmd_evaluate(Session& s) {
    if (!s.has_neural() && s.config().gold.empty())
        throw UsageError("evaluate needs --neural (agreement, calibration) and/or --gold");
    const auto& out = s.config().out;
    if (s.has_neural()) {
        const auto& regex = s.regex_matrix();
        const auto report = compare_methods(regex, s.neural_matrix_view());
        emit_json(s, out / "agreement.json", agreement_to_json(report, regex));
        const auto cal = neural_calibration(s);
        emit_json(s, out / "calibration.json", calibration_to_json(cal));
        if (s.config().csv()) emit_csv(s, out / "reliability_diagram.csv", reliability_csv(cal));
    }
    if (auto gm = gold_metrics(s)) emit_json(s, out / "gold_metrics.json", gold_metrics_to_json(*gm));
}

// Per-text detection rate (detected features / features) grouped by period.
inline std::vector<std::vector<double>> detection_rates_by_period(const FeatureMatrix& m) {
    std::vector<std::vector<double>> groups(kAllPeriods.size());
    for (std::size_t t = 0; t < m.num_texts(); ++t) {
        std::size_t hits = 0;
        for (std::size_t f = 0; f < m.num_features(); ++f) hits += m.detected[f][t] ? 1 : 0;
        const double rate = m.num_features() ? static_cast<double>(hits) / static_cast<double>(m.num_features()) : 0.0;
        groups[static_cast<std::size_t>(m.periods[t])].push_back(rate);
    }
    std::vector<std::vector<double>> nonempty;
    for (auto& g : groups)
        if (!g.empty()) nonempty.push_back(std::move(g));
    return nonempty;
}

struct TrendBundle {
    std::vector<TrendStats> stats;
    std::optional<PcaResult> pca_result;
    std::optional<ClusterTree> tree;
    std::optional<AnovaResult> anova;
    std::vector<std::string> notes;
};

inline TrendBundle compute_trends(Session& s) {
    const auto& m = s.analysis_matrix();
    TrendBundle b;
    b.stats = classify_trends(m, s.config().trends);
    try {
        b.pca_result = pca(m, s.config().pca_components);
        for (const auto& w : b.pca_result->warnings) print_warning("pca: " + w);
    } catch (const DomainError& e) {
        b.notes.push_back(std::string("pca skipped: ") + e.what());
        print_warning(b.notes.back());
    }
    b.tree = cluster(m);
    try {
        const auto groups = detection_rates_by_period(m);
        if (groups.size() >= 2) b.anova = anova_oneway(groups);
    } catch (const DomainError& e) {
        b.notes.push_back(std::string("anova skipped: ") + e.what());
    }
    return b;
}

inline json anova_to_json(const std::optional<AnovaResult>& a) {
    if (!a) return nullptr;
    return json{{"f_statistic", json_number(a->f_statistic)},
                {"p_value", a->p_value},
                {"df_between", a->df_between},
                {"df_within", a->df_within},
                {"degenerate", a->degenerate}};
}

inline std::string trend_series_csv(const FeatureMatrix& m, const std::vector<TrendStats>& stats) {
    std::string out = csv_row({"feature_id", "text_id", "chrono_index", "period", "frequency", "fitted"});
    for (std::size_t f = 0; f < m.num_features(); ++f) {
        const auto& y = m.freq[f];
        double intercept = 0.0, slope = stats[f].slope;
        double mean = 0.0;
        for (double v : y) mean += v;
        mean /= static_cast<double>(y.size());
        intercept = mean - slope * (static_cast<double>(y.size()) - 1.0) / 2.0;
        for (std::size_t t = 0; t < m.num_texts(); ++t) {
            out += csv_row({m.features[f], m.texts[t], std::to_string(t), std::string(to_string(m.periods[t])),
                            format_double(y[t]), format_double(intercept + slope * static_cast<double>(t))});
        }
    }
    return out;
}

inline void cmd_trends(Session& s) {
    const auto b = compute_trends(s);
    const auto& m = s.analysis_matrix();
    const auto& out = s.config().out;
    if (s.config().csv()) {
        write_file(out / "trends.csv", trends_to_csv(b.stats, s.provenance().line()));
        emit_csv(s, out / "plots" / "feature_trends.csv", trend_series_csv(m, b.stats));
    }
    json stats = json::array();
    for (const auto& t : b.stats) stats.push_back(trend_to_json(t));
    std::map<std::string, std::size_t> classes, bands;
    for (const auto& t : b.stats) {
        ++classes[std::string(to_string(t.trend_class))];
        ++bands[std::string(to_string(t.effect_band))];
    }
    if (s.config().json_out()) {
        emit_json(s, out / "trends.json",
                  json{{"matrix_method", std::string(to_string(m.method))},
                       {"features", stats},
                       {"trend_counts", classes},
                       {"effect_band_counts", bands},
                       {"period_detection_anova", anova_to_json(b.anova)},
                       {"notes", b.notes}});
    }
    emit_json(s, out / "pca.json", b.pca_result ? pca_to_json(*b.pca_result) : json{{"skipped", true}});
    emit_json(s, out / "cluster.json", dendrogram_to_json(*b.tree, std::min(s.config().cluster_cut, m.num_texts())));
}

inline void cmd_report(Session& s) {
    const auto& regex = s.regex_matrix();
    const auto& ens = s.ensemble();
    const auto& out = s.config().out;
    const double cells = static_cast<double>(regex.num_features() * regex.num_texts());
    auto rate = [&](std::size_t n, double total) { return total > 0 ? 100.0 * static_cast<double>(n) / total : 0.0; };

    std::optional<FeatureMatrix> neural;
    if (s.has_neural()) neural = s.neural_matrix_view();

    json methods = json::array();
    methods.push_back({{"method", "regex"}, {"detections", regex.detection_count()}, {"rate_percent", rate(regex.detection_count(), cells)}});
    if (neural) {
        methods.push_back({{"method", "neural"},
                           {"detections", neural->detection_count()},
                           {"rate_percent", rate(neural->detection_count(), cells)}});
    }
    methods.push_back({{"method", "ensemble"},
                       {"detections", ens.matrix.detection_count()},
                       {"rate_percent", rate(ens.matrix.detection_count(), cells)}});

    // Per-period detection table.
    json period_rows = json::array();
    std::string period_csv = csv_row({"period", "checks", "ensemble_percent", "agreement_percent", "regex", "neural"});
    for (Period p : kAllPeriods) {
        std::size_t checks = 0, e = 0, r = 0, n = 0, agree = 0;
        for (std::size_t t = 0; t < regex.num_texts(); ++t) {
            if (regex.periods[t] != p) continue;
            for (std::size_t f = 0; f < regex.num_features(); ++f) {
                ++checks;
                e += ens.matrix.detected[f][t] ? 1 : 0;
                r += regex.detected[f][t] ? 1 : 0;
                const bool nd = neural ? static_cast<bool>(neural->detected[f][t]) : false;
                n += nd ? 1 : 0;
                agree += static_cast<bool>(regex.detected[f][t]) == nd ? 1 : 0;
            }
        }
        if (checks == 0) continue;
        const double c = static_cast<double>(checks);
        const double ep = rate(e, c);
        const double ap = neural ? rate(agree, c) : 0.0;
        period_rows.push_back({{"period", std::string(to_string(p))},
                               {"checks", checks},
                               {"ensemble_percent", ep},
                               {"agreement_percent", neural ? json(ap) : json(nullptr)},
                               {"regex", r},
                               {"neural", neural ? json(n) : json(nullptr)}});
        period_csv += csv_row({std::string(to_string(p)), std::to_string(checks), format_fixed(ep, 1),
                               neural ? format_fixed(ap, 1) : "", std::to_string(r), neural ? std::to_string(n) : ""});
    }

    // Mean frequency per period for each feature.
    json evolution = json::array();
    std::string evolution_csv;
    {
        std::vector<std::string> header{"feature_id", "category"};
        for (Period p : kAllPeriods) header.emplace_back(to_string(p));
        header.emplace_back("trend");
        evolution_csv = csv_row(header);
    }
    const auto b = compute_trends(s);
    const auto& am = s.analysis_matrix();
    for (std::size_t f = 0; f < am.num_features(); ++f) {
        json means = json::object();
        std::vector<std::string> row{am.features[f], std::string(to_string(am.categories[f]))};
        for (Period p : kAllPeriods) {
            double sum = 0.0;
            std::size_t n = 0;
            for (std::size_t t = 0; t < am.num_texts(); ++t)
                if (am.periods[t] == p) sum += am.freq[f][t], ++n;
            const double mean = n ? sum / static_cast<double>(n) : 0.0;
            means[std::string(to_string(p))] = n ? json(mean) : json(nullptr);
            row.push_back(n ? format_fixed(mean, 2) : "");
        }
        row.emplace_back(to_string(b.stats[f].trend_class));
        evolution_csv += csv_row(row);
        evolution.push_back({{"feature_id", am.features[f]},
                             {"category", std::string(to_string(am.categories[f]))},
                             {"period_means", means},
                             {"trend", std::string(to_string(b.stats[f].trend_class))}});
    }

    std::map<std::string, std::size_t> classes, bands;
    for (const auto& t : b.stats) {
        ++classes[std::string(to_string(t.trend_class))];
        ++bands[std::string(to_string(t.effect_band))];
    }
    json trends = json::array();
    for (const auto& t : b.stats) trends.push_back(trend_to_json(t));

    json report;
    report["corpus"] = corpus_summary(s);
    report["catalog"] = {{"version", s.catalog().version}, {"features", regex.num_features()}};
    report["method_performance"] = methods;
    report["period_detection"] = period_rows;
    report["feature_evolution"] = evolution;
    report["trend_counts"] = classes;
    report["effect_band_counts"] = bands;
    report["trends"] = trends;
    report["period_detection_anova"] = anova_to_json(b.anova);
    report["pca"] = b.pca_result ? pca_to_json(*b.pca_result) : json(nullptr);
    report["cluster"] = dendrogram_to_json(*b.tree, std::min(s.config().cluster_cut, am.num_texts()));
    if (neural) {
        const auto agreement_report = compare_methods(regex, *neural);
        json a = agreement_to_json(agreement_report, regex);
        a.erase("cells");
        report["agreement"] = a;
        const auto cal = neural_calibration(s);
        report["calibration"] = calibration_to_json(cal);
        emit_csv(s, out / "plots" / "reliability_diagram.csv", reliability_csv(cal));
    }
    if (auto gm = gold_metrics(s)) report["gold"] = gold_metrics_to_json(*gm);
    report["ensemble_config"] = config_to_json(s.config().ensemble);

    emit_json(s, out / "report.json", std::move(report));
    emit_csv(s, out / "tables" / "period_detection.csv", period_csv);
    emit_csv(s, out / "tables" / "feature_evolution.csv", evolution_csv);
    write_file(out / "tables" / "trends.csv", trends_to_csv(b.stats, s.provenance().line()));
    emit_csv(s, out / "plots" / "period_detection_rates.csv", period_csv);
    emit_csv(s, out / "plots" / "feature_trends.csv", trend_series_csv(am, b.stats));
}

// Writes the demonstration corpus plus stub neural predictions, a synthetic
// gold file and the generator's ground truth.
inline void cmd_synth(const fs::path& out, std::uint64_t seed, const fs::path& spec_path) {
    const auto spec = spec_path.empty() ? oracle::demo_spec(seed) : oracle::spec_from_json(read_json(spec_path));
    const auto corpus = oracle::generate(spec);
    oracle::write_corpus(corpus, out, "synthetic-demo-1");
    write_json(out / "synth_spec.json", oracle::spec_to_json(spec));
    write_file(out / "neural_predictions.jsonl", predictions_to_jsonl(oracle::stub_predictions(corpus.truth, spec.seed)));
    auto gold = gold_to_json(oracle::synthetic_gold(50, spec.num_features, spec.seed));
    gold["note"] = "synthetic, non-philological fixture generated from toy markers";
    write_json(out / "gold.json", gold);
    write_json(out / "ensemble_config.json", config_to_json(EnsembleConfig{}));
}

}  // namespace diachron::pipeline
