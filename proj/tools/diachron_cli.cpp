// diachron: command-line front end for the detection pipeline.
//
// Exit codes: 0 ok, 1 usage, 2 data/validation error, 3 anything else.

#include <cstdlib>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "diachron/pipeline.hpp"

namespace {

using namespace diachron;
using namespace diachron::pipeline;

std::string default_out() {
    if (const char* env = std::getenv("DIACHRON_OUT"); env && *env) return env;
    return "diachron_out";
}

void add_common(CLI::App* cmd, RunConfig& cfg, bool needs_catalog) {
    cmd->add_option("--manifest", cfg.manifest, "Corpus manifest (JSON)")->required()->check(CLI::ExistingFile);
    auto* cat = cmd->add_option("--catalog", cfg.catalog, "Pattern catalog (JSON)")->check(CLI::ExistingFile);
    if (needs_catalog) cat->required();
    cmd->add_option("--out", cfg.out, "Output directory (default: $DIACHRON_OUT or ./diachron_out)");
    cmd->add_option("--window", cfg.window, "Context window in tokens")->check(CLI::Range(1, 100000));
    cmd->add_option("--format", cfg.format, "Tabular output format: csv, json (default both)")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, OutputFormat>{{"csv", OutputFormat::Csv}, {"json", OutputFormat::Json}},
            CLI::ignore_case));
}

void add_ensemble(CLI::App* cmd, RunConfig& cfg, double& regex_weight, double& high, double& low) {
    cmd->add_option("--neural", cfg.neural, "Neural predictions (JSONL)")->check(CLI::ExistingFile);
    cmd->add_option("--ensemble-config", cfg.ensemble_config, "Ensemble configuration (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--regex-weight", regex_weight, "Regex weight; neural weight is 1 - this")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--high-conf", high, "Neural-only acceptance threshold")->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--low-conf", low, "Neural confidence floor")->check(CLI::Range(0.0, 1.0));
}

void add_analysis(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--bins", cfg.bins, "Calibration bins")->check(CLI::Range(1, 1000));
    cmd->add_option("--gold", cfg.gold, "Gold-standard examples (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--components", cfg.pca_components, "PCA components")->check(CLI::Range(1, 1000));
    cmd->add_option("--clusters", cfg.cluster_cut, "Dendrogram cut (number of clusters)")->check(CLI::Range(1, 1000));
    cmd->add_flag("--exact-spearman", cfg.trends.exact_spearman, "Exact permutation p-values for n <= 10");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weakly supervised diachronic feature detection"};
    app.require_subcommand(1);

    RunConfig cfg;
    cfg.out = default_out();
    double regex_weight = -1, high = -1, low = -1;
    std::uint64_t seed = cfg.seed;
    std::filesystem::path spec;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with ground truth");
    synth->add_option("--out", cfg.out, "Output directory");
    synth->add_option("--seed", seed, "Generator seed");
    synth->add_option("--spec", spec, "Generator spec (JSON)")->check(CLI::ExistingFile);

    auto* ingest = app.add_subcommand("ingest", "Load, normalize and tokenize the corpus");
    add_common(ingest, cfg, false);
    auto* detect = app.add_subcommand("detect", "Regex detection matrix");
    add_common(detect, cfg, true);
    auto* labels = app.add_subcommand("labels", "Export weak labels");
    add_common(labels, cfg, true);
    auto* ens = app.add_subcommand("ensemble", "Combine regex and neural detections");
    add_common(ens, cfg, true);
    add_ensemble(ens, cfg, regex_weight, high, low);
    auto* evaluate = app.add_subcommand("evaluate", "Agreement, calibration and gold metrics");
    add_common(evaluate, cfg, true);
    add_ensemble(evaluate, cfg, regex_weight, high, low);
    add_analysis(evaluate, cfg);
    auto* trends = app.add_subcommand("trends", "Trend statistics, PCA and clustering");
    add_common(trends, cfg, true);
    add_ensemble(trends, cfg, regex_weight, high, low);
    add_analysis(trends, cfg);
    auto* report = app.add_subcommand("report", "Full report with tables and plot data");
    add_common(report, cfg, true);
    add_ensemble(report, cfg, regex_weight, high, low);
    add_analysis(report, cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            cmd_synth(cfg.out, seed, spec);
            return 0;
        }
        if (regex_weight >= 0 || high >= 0 || low >= 0) {
            if (!cfg.ensemble_config.empty())
                throw UsageError("--ensemble-config cannot be combined with --regex-weight/--high-conf/--low-conf");
            cfg.ensemble = make_config(regex_weight >= 0 ? regex_weight : cfg.ensemble.weights.regex,
                                       high >= 0 ? high : cfg.ensemble.high_conf, low >= 0 ? low : cfg.ensemble.low_conf);
        }
        Session session(cfg);
        if (ingest->parsed()) cmd_ingest(session);
        else if (detect->parsed()) cmd_detect(session);
        else if (labels->parsed()) cmd_labels(session);
        else if (ens->parsed()) cmd_ensemble(session);
        else if (evaluate->parsed()) cmd_evaluate(session);
        else if (trends->parsed()) cmd_trends(session);
        else if (report->parsed()) cmd_report(session);
        return 0;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const diachron::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << '\n';
        return 3;
    }
}
