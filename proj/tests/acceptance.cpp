// Acceptance gate: one PASS/FAIL line per criterion, with runtime.
#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "diachron/cluster.hpp"
#include "diachron/ensemble.hpp"
#include "diachron/evaluation.hpp"
#include "diachron/labels.hpp"
#include "diachron/oracle/brute_scan.hpp"
#include "diachron/oracle/reference_stats.hpp"
#include "diachron/pca.hpp"
#include "diachron/stats.hpp"
#include "support.hpp"

using namespace diachron;
using testsupport::Gen;
namespace fs = std::filesystem;

namespace {

// Collects the first few failures of a criterion.
struct Failures {
    std::size_t count = 0;
    std::ostringstream first;

    void add(const std::string& what) {
        if (count++ < 3) first << (count > 1 ? "; " : "") << what;
    }
    void expect(bool ok, const std::string& what) {
        if (!ok) add(what);
    }
    void near(double a, double b, double tol, const std::string& what) {
        if (!(std::fabs(a - b) <= tol)) add(what + ": " + format_double(a) + " vs " + format_double(b));
    }
};

int failed = 0;

void criterion(const std::string& name, double limit_seconds, const std::function<std::string(Failures&)>& body) {
    Failures f;
    const auto start = std::chrono::steady_clock::now();
    std::string summary;
    try {
        summary = body(f);
    } catch (const std::exception& e) {
        f.add(std::string("exception: ") + e.what());
    }
    const double seconds = testsupport::seconds_since(start);
    if (seconds > limit_seconds) f.add("runtime over limit");
    const bool ok = f.count == 0;
    if (!ok) ++failed;
    std::printf("%s  %-28s %8.3f s (limit %4.0f s)  %s\n", ok ? "PASS" : "FAIL", name.c_str(), seconds, limit_seconds,
                ok ? summary.c_str() : (std::to_string(f.count) + " failure(s): " + f.first.str()).c_str());
    std::fflush(stdout);
}

std::vector<oracle::SynthCorpus> corpora() {
    // 25 corpora of up to 50k tokens each over the 20-feature toy catalog.
    std::vector<oracle::SynthCorpus> out;
    for (std::uint64_t s = 0; s < 25; ++s) out.push_back(oracle::generate(testsupport::random_spec(1000 + s, 5, 1000, 10000)));
    return out;
}

FeatureMatrix from_rows(const DenseMatrix& rows) {
    FeatureMatrix m;
    const auto nt = rows.size(), nf = rows.front().size();
    for (std::size_t t = 0; t < nt; ++t) {
        m.texts.push_back("t" + std::to_string(t));
        m.periods.push_back(kAllPeriods[t * 4 / nt]);
        m.token_counts.push_back(1000);
    }
    for (std::size_t f = 0; f < nf; ++f) {
        m.features.push_back("f" + std::to_string(f));
        m.categories.push_back(Category::Morphological);
        std::vector<double> col;
        for (std::size_t t = 0; t < nt; ++t) col.push_back(rows[t][f]);
        m.freq.push_back(col);
        m.detected.push_back(std::vector<bool>(nt, true));
        m.counts.push_back(std::vector<std::size_t>(nt, 0));
    }
    return m;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int shell(const std::string& args) {
    const int status = std::system((std::string(DIACHRON_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::map<std::string, std::string> tree_contents(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = slurp(e.path());
    return files;
}

}  // namespace

int main() {
    criterion("confidence formula", 1, [](Failures& f) {
        for (std::size_t p = 0; p <= 5; ++p)
            for (std::size_t n = 0; n <= 5; ++n) {
                const double raw = 0.6 + 0.2 * static_cast<double>(p) - 0.3 * static_cast<double>(n);
                f.expect(match_confidence(p, n) == std::clamp(raw, 0.1, 0.95),
                         "p=" + std::to_string(p) + " n=" + std::to_string(n));
            }
        Gen g(1);
        for (int i = 0; i < 1000; ++i) {
            const auto p = g.index(40), n = g.index(40);
            const double c = match_confidence(p, n);
            f.expect(c >= 0.1 && c <= 0.95, "bounds");
            f.expect(match_confidence(p + 1, n) >= c, "non-decreasing in positives");
            f.expect(match_confidence(p, n + 1) <= c, "non-increasing in negatives");
        }
        return std::string("36 exhaustive cells, 1000 random pairs");
    });

    const auto synth = corpora();
    std::vector<std::vector<oracle::BruteMatch>> engine_sets(synth.size());

    criterion("pattern engine differential", 30, [&](Failures& f) {
        std::size_t tokens = 0, matches = 0;
        for (std::size_t s = 0; s < synth.size(); ++s) {
            const auto& c = synth[s];
            const auto docs = testsupport::documents(c);
            const auto cat = make_catalog("toy", c.catalog);
            std::vector<oracle::BruteMatch> engine;
            for (const auto& d : docs) {
                tokens += d.word_count();
                for (const auto& m : scan_document(d, cat)) engine.push_back({m.text_id, m.feature_id, m.word_index, m.confidence});
            }
            std::sort(engine.begin(), engine.end());
            const auto brute = oracle::brute_scan(docs, c.catalog, kDefaultWindow);
            matches += brute.size();
            f.expect(engine == brute, "corpus " + std::to_string(s) + ": match sets differ");
            engine_sets[s] = std::move(engine);
            const auto m = detect_all(docs, cat);
            for (std::size_t t = 0; t < docs.size(); ++t)
                for (std::size_t k = 0; k < c.truth.features.size(); ++k)
                    f.expect(m.freq[k][t] == c.truth.cells[t][k].expected_frequency,
                             "corpus " + std::to_string(s) + " frequency " + c.truth.features[k]);
        }
        return std::to_string(synth.size()) + " corpora, " + std::to_string(tokens) + " tokens, " +
               std::to_string(matches) + " retained matches";
    });

    criterion("weak-label equivalence", 10, [&](Failures& f) {
        testsupport::TempDir tmp("acceptance-labels");
        std::size_t total = 0;
        for (std::size_t s = 0; s < synth.size(); ++s) {
            const auto docs = testsupport::documents(synth[s]);
            const auto cat = make_catalog("toy", synth[s].catalog);
            const auto set = generate_labels(docs, cat);
            std::vector<oracle::BruteMatch> from_labels;
            for (const auto& l : set.labels) from_labels.push_back({l.text_id, l.feature_id, l.word_index, l.confidence});
            std::sort(from_labels.begin(), from_labels.end());
            f.expect(from_labels == engine_sets[s], "corpus " + std::to_string(s) + ": labels differ from retained matches");
            const auto path = tmp.path() / ("labels" + std::to_string(s) + ".jsonl");
            export_labels(set, path);
            f.expect(import_labels(path) == set, "corpus " + std::to_string(s) + ": round-trip");
            total += set.labels.size();
        }
        return std::to_string(total) + " labels, round-trip lossless";
    });

    criterion("ensemble math", 5, [](Failures& f) {
        Gen g(4);
        for (int i = 0; i < 10000; ++i) {
            const double ft = g.chance(0.1) ? 0.0 : g.uniform(0, 50), fr = g.chance(0.1) ? 0.0 : g.uniform(0, 50);
            const double c = g.chance(0.05) ? 0.0 : g.uniform(), wt = g.uniform(0.01, 1), wr = g.uniform(0.01, 1);
            const double v = combine(ft, fr, c, wt, wr);
            const double direct = (wt * c * ft + wr * fr) / (wt * c + wr);
            f.near(v, direct, 1e-12 * std::max(1.0, std::fabs(direct)), "weighted mean");
            f.expect(v >= std::min(ft, fr) && v <= std::max(ft, fr), "convexity");
            f.expect(combine(ft, fr, 0.0, wt, wr) == fr, "c = 0 identity");
            f.expect(combine(fr, fr, c, wt, wr) == fr, "f_t = f_r identity");
        }
        // Documented rule: a regex hit always detects; otherwise the neural
        // signal detects when f_t > 0 and c is at least in the middle band
        // (a positive f_t makes the ensemble frequency positive there).
        const auto config = make_config(0.5);
        std::size_t cells = 0;
        for (double fr : {0.0, 1.0, 3.0})
            for (double ft : {0.0, 1.0, 3.0})
                for (double c : {0.1, 0.5, 0.9}) {
                    ++cells;
                    const bool neural = ft > 0 && c > config.low_conf;
                    const bool expected = fr > 0 || neural;
                    const auto source = fr > 0 ? (neural ? DecisionSource::Both : DecisionSource::RegexOnly)
                                               : (neural ? DecisionSource::NeuralOnly : DecisionSource::None);
                    const auto d = decide(fr, ft, c, config);
                    const auto where = "f_r=" + format_double(fr) + " f_t=" + format_double(ft) + " c=" + format_double(c);
                    f.expect(d.detected == expected, "decision " + where);
                    f.expect(d.source == source, "source " + where);
                }
        return "10000 tuples, " + std::to_string(cells) + "-cell decision table";
    });

    criterion("evaluation metrics", 5, [](Failures& f) {
        const std::vector<std::tuple<double, double, int>> table{
            {0, 0, 1}, {0, 2, 0}, {2, 0, 0}, {1, 1, 1}, {1, 1.2, 1}, {1.2, 1, 1}, {1, 1.5, 0}, {10, 7.5, 1}, {10, 6, 0}};
        for (const auto& [a, b, want] : table)
            f.expect(agreement(a, b) == want, "agreement(" + format_double(a) + ", " + format_double(b) + ")");
        Gen g(5);
        for (int i = 0; i < 100; ++i) {
            const auto n = g.range(3, 50);
            const auto x = g.vec(n, 0, 10);
            auto y = g.vec(n, 0, 10);
            for (std::size_t k = 0; k < n; ++k) y[k] += x[k] * g.uniform(-1, 1);
            f.near(pearson(x, y), oracle::ref_pearson(x, y), 1e-9, "pearson");
            const auto bins = g.range(1, 15);
            std::vector<double> conf(n);
            std::vector<bool> correct(n);
            for (std::size_t k = 0; k < n; ++k) {
                // Some confidences sit exactly on bin edges.
                conf[k] = g.chance(0.2) ? static_cast<double>(g.index(bins + 1)) / static_cast<double>(bins) : g.uniform();
                correct[k] = g.chance(conf[k]);
            }
            f.near(ece(conf, correct, bins).ece, oracle::ref_ece(conf, correct, bins), 1e-9, "ece");
        }
        // Perfect calibration: each bin's accuracy equals its confidence.
        std::vector<double> conf;
        std::vector<bool> correct;
        for (int b = 1; b <= 10; ++b)
            for (int k = 0; k < 10; ++k) {
                conf.push_back(b / 10.0);
                correct.push_back(k < b);
            }
        const auto perfect = ece(conf, correct, 10).ece;
        f.expect(perfect == 0.0, "perfect calibration ECE = " + format_double(perfect));
        return "9-case agreement table, 100 fixtures, perfect ECE = 0";
    });

    criterion("statistics oracle equivalence", 60, [](Failures& f) {
        Gen g(6);
        for (int i = 0; i < 200; ++i) {
            const auto n = g.range(3, 30);
            auto y = g.chance(0.3) ? g.tied_vec(n, 5) : g.vec(n, 0, 10);
            for (std::size_t k = 0; k < n; ++k) y[k] += g.uniform(-0.5, 0.5) * static_cast<double>(k) * (i % 3);
            const auto o = ols_trend(y);
            const auto ro = oracle::ref_ols(y);
            f.near(o.slope, ro.slope, 1e-9, "ols slope");
            f.near(o.intercept, ro.intercept, 1e-9, "ols intercept");
            f.near(o.r_squared, ro.r_squared, 1e-9, "ols r2");
            f.near(o.p_value, ro.p_value, 1e-6, "ols p");
            const auto s = spearman(y);
            const auto rs = oracle::ref_spearman(y);
            f.near(s.rho, rs.rho, 1e-9, "spearman rho");
            f.near(s.p_value, rs.p_value, 1e-6, "spearman p");
            const auto a = g.vec(g.range(2, 10), 0, 10), b = g.vec(g.range(2, 10), 0, 10);
            f.near(cohens_d(a, b), oracle::ref_cohens_d(a, b), 1e-9, "cohens d");
            std::vector<std::vector<double>> groups(g.range(2, 5));
            for (auto& grp : groups) grp = g.vec(g.range(2, 8), 0, 10);
            const auto an = anova_oneway(groups);
            const auto ra = oracle::ref_anova(groups);
            f.near(an.f_statistic, ra.f_statistic, 1e-9 * std::max(1.0, ra.f_statistic), "anova F");
            f.near(an.p_value, ra.p_value, 1e-6, "anova p");
        }
        const auto fit = ols_trend(std::vector<double>{1, 3, 5, 7});
        f.expect(fit.slope == 2.0 && fit.r_squared == 1.0 && fit.p_value == 0.0, "perfect fit");
        const auto flat = ols_trend(std::vector<double>{4, 4, 4, 4});
        f.expect(flat.slope == 0.0 && flat.r_squared == 0.0 && flat.p_value == 1.0, "constant series");
        const auto sflat = spearman(std::vector<double>{4, 4, 4, 4});
        f.expect(sflat.rho == 0.0 && sflat.p_value == 1.0, "constant series spearman");
        const auto same = anova_oneway({{2, 2, 2}, {2, 2}, {2, 2, 2, 2}});
        f.expect(same.f_statistic == 0.0 && same.p_value == 1.0, "identical groups");
        f.expect(cohens_d(std::vector<double>{1, 2, 3}, std::vector<double>{3, 4, 5}) == 2.0, "cohens d example");

        for (int trial = 0; trial < 50; ++trial) {
            const auto n = g.range(5, 20), p = g.range(2, 8);
            DenseMatrix rows(n, std::vector<double>(p));
            for (auto& r : rows)
                for (auto& v : r) v = g.normal();
            const auto m = from_rows(rows);
            const auto r = pca(m, p);
            const auto z = standardize(m).z;
            DenseMatrix corr(p, std::vector<double>(p, 0.0));
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j < p; ++j)
                    for (std::size_t t = 0; t < n; ++t) corr[i][j] += z[t][i] * z[t][j] / static_cast<double>(n - 1);
            const auto ref = oracle::ref_eigenvalues(corr);
            for (std::size_t k = 0; k < p; ++k) f.near(r.eigenvalues[k], ref[k], 1e-8, "eigenvalue");
            double worst = 0.0;
            for (std::size_t t = 0; t < n; ++t)
                for (std::size_t i = 0; i < p; ++i) {
                    double back = 0.0;
                    for (std::size_t c = 0; c < r.components(); ++c) back += r.scores[t][c] * r.loadings[i][c];
                    worst = std::max(worst, std::fabs(back - z[t][i]));
                }
            if (r.components() == p) f.expect(worst < 1e-8, "reconstruction error " + format_double(worst));
        }

        const DenseMatrix centers{{0, 0, 0}, {20, 0, 5}, {0, 20, -5}};
        for (int fixture = 0; fixture < 20; ++fixture) {
            DenseMatrix rows;
            std::vector<std::size_t> blob;
            const auto per = g.range(3, 8);
            for (std::size_t b = 0; b < 3; ++b)
                for (std::size_t i = 0; i < per; ++i) {
                    std::vector<double> r(3);
                    for (std::size_t k = 0; k < 3; ++k) r[k] = centers[b][k] + g.normal(0, 1.0);
                    rows.push_back(r);
                    blob.push_back(b);
                }
            f.expect(cut_tree(cluster(from_rows(rows)), 3) == blob, "ward fixture " + std::to_string(fixture));
        }
        return std::string("200 instances x 4 tests, 50 PCA fixtures, 20 Ward fixtures");
    });

    criterion("trend classification", 10, [](Failures& f) {
        const auto c = oracle::generate(oracle::demo_spec());
        const auto docs = testsupport::documents(c);
        const auto stats = classify_trends(detect_all(docs, make_catalog("toy", c.catalog)));
        std::map<TrendClass, std::size_t> counts;
        for (std::size_t k = 0; k < stats.size(); ++k) {
            const auto want = k < 5 ? TrendClass::Increasing : k < 8 ? TrendClass::Decreasing : TrendClass::Stable;
            ++counts[stats[k].trend_class];
            f.expect(stats[k].trend_class == want, stats[k].feature_id + " misclassified");
            if (k < 8)
                f.expect(stats[k].p_regression < 0.001 && stats[k].p_spearman < 0.001,
                         stats[k].feature_id + " planted signal not below 0.001");
        }
        return std::to_string(counts[TrendClass::Increasing]) + " increasing, " +
               std::to_string(counts[TrendClass::Decreasing]) + " decreasing, " +
               std::to_string(counts[TrendClass::Stable]) + " stable";
    });

    criterion("end-to-end CLI", 60, [](Failures& f) {
        const fs::path data = fs::path(DIACHRON_SOURCE_DIR) / "data" / "synthetic";
        f.expect(fs::exists(data / "manifest.json"), "shipped corpus missing");
        testsupport::TempDir tmp("acceptance-cli");
        // The shipped corpus is exactly what the generator produces.
        f.expect(shell("synth --out " + (tmp.path() / "regen").string()) == 0, "synth exit code");
        for (const auto& [name, body] : tree_contents(data))
            f.expect(slurp(tmp.path() / "regen" / name) == body, "shipped " + name + " differs from generator output");

        const auto in = "--manifest " + (data / "manifest.json").string() + " --catalog " + (data / "catalog.json").string();
        const auto neural = " --neural " + (data / "neural_predictions.jsonl").string();
        const auto gold = " --gold " + (data / "gold.json").string();
        for (auto run : {"a", "b"}) {
            const auto out = " --out " + (tmp.path() / run).string();
            for (const auto& cmd :
                 {"ingest --manifest " + (data / "manifest.json").string() + out, "detect " + in + out,
                  "labels " + in + out,
                  "ensemble " + in + neural + " --ensemble-config " + (data / "ensemble_config.json").string() + out,
                  "evaluate " + in + neural + gold + out, "trends " + in + neural + out,
                  "report " + in + neural + gold + out})
                f.expect(shell(cmd) == 0, "exit code: " + cmd.substr(0, cmd.find(' ')));
        }
        const auto a = tree_contents(tmp.path() / "a"), b = tree_contents(tmp.path() / "b");
        for (auto name : {"corpus_summary.json", "tokens.jsonl", "regex_matrix.csv", "regex_matrix.json",
                          "weak_labels.jsonl", "ensemble_matrix.csv", "ensemble.json", "agreement.json",
                          "calibration.json", "reliability_diagram.csv", "gold_metrics.json", "trends.csv",
                          "trends.json", "pca.json", "cluster.json", "report.json", "tables/period_detection.csv",
                          "tables/feature_evolution.csv", "tables/trends.csv", "plots/period_detection_rates.csv",
                          "plots/feature_trends.csv", "plots/reliability_diagram.csv"})
            f.expect(a.count(name) == 1, std::string("missing artifact ") + name);
        f.expect(a == b, "outputs differ between runs");
        return std::to_string(a.size()) + " artifacts, byte-identical across runs";
    });

    std::printf("%s: %d criterion failure(s)\n", failed ? "FAIL" : "PASS", failed);
    return failed ? 1 : 0;
}
