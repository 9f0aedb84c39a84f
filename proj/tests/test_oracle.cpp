#include <gtest/gtest.h>

#include "diachron/oracle/brute_scan.hpp"
#include "diachron/oracle/reference_stats.hpp"
#include "support.hpp"

using namespace diachron;
using namespace diachron::oracle;

TEST(Synth, Deterministic) {
    const auto spec = testsupport::random_spec(17, 3, 200, 400);
    const auto a = generate(spec);
    const auto b = generate(spec);
    EXPECT_EQ(a.raw_texts, b.raw_texts);
    EXPECT_EQ(truth_to_json(a.truth), truth_to_json(b.truth));
    auto other = spec;
    other.seed = 18;
    EXPECT_NE(generate(other).raw_texts, a.raw_texts);
}

TEST(Synth, TokenCountsAndInjectionRates) {
    const auto spec = testsupport::random_spec(21, 6, 500, 2000);
    const auto c = generate(spec);
    const auto docs = testsupport::documents(c);
    for (std::size_t t = 0; t < docs.size(); ++t) {
        EXPECT_EQ(docs[t].word_count(), spec.texts[t].token_count);
        for (std::size_t k = 0; k < spec.num_features; ++k) {
            const auto it = spec.texts[t].rates.find(feature_id(k));
            const double rate = it == spec.texts[t].rates.end() ? 0.0 : it->second;
            const auto expected =
                static_cast<std::size_t>(std::floor(rate * static_cast<double>(spec.texts[t].token_count) / 1000.0 + 0.5));
            EXPECT_EQ(c.truth.cells[t][k].injected, expected);
            // The marker at each planted position survives disguise and normalization.
            for (const auto& occ : c.truth.cells[t][k].planted)
                EXPECT_EQ(docs[t].tokens[occ.word_index].surface, normalize(occ.surface));
        }
    }
}

TEST(Synth, SpecErrors) {
    SynthSpec spec;
    spec.texts.push_back({"a", Period::EarlyVedic, 10, {{"f00", 2000.0}}, 0, 0});
    EXPECT_THROW(generate(spec), SpecError);
    spec.texts[0].rates = {{"nope", 1.0}};
    EXPECT_THROW(generate(spec), SpecError);
    spec.texts[0].rates = {};
    spec.texts.push_back(spec.texts[0]);
    EXPECT_THROW(generate(spec), SpecError);
    spec.num_features = 99;
    EXPECT_THROW(generate(spec), SpecError);
}

TEST(Synth, SpecJsonRoundTrip) {
    const auto spec = testsupport::random_spec(5, 3, 100, 200);
    EXPECT_EQ(spec_to_json(spec_from_json(spec_to_json(spec))), spec_to_json(spec));
}

TEST(Synth, DetectorMatchesOracleAndTruth) {
    for (std::uint64_t seed = 100; seed < 106; ++seed) {
        const auto c = generate(testsupport::random_spec(seed, 4, 200, 1500));
        const auto docs = testsupport::documents(c);
        const auto cat = make_catalog("toy", c.catalog);
        const auto m = detect_all(docs, cat);
        const auto brute = brute_scan(docs, c.catalog, kDefaultWindow);
        std::vector<BruteMatch> truth;
        for (std::size_t t = 0; t < docs.size(); ++t)
            for (std::size_t k = 0; k < c.truth.features.size(); ++k)
                for (const auto& occ : c.truth.cells[t][k].planted)
                    if (occ.retained) truth.push_back({docs[t].id, feature_id(k), occ.word_index, occ.confidence});
        std::sort(truth.begin(), truth.end());
        EXPECT_EQ(brute, truth) << "seed " << seed;
        for (std::size_t t = 0; t < docs.size(); ++t)
            for (std::size_t k = 0; k < c.truth.features.size(); ++k)
                EXPECT_EQ(m.freq[k][t], c.truth.cells[t][k].expected_frequency);
    }
}

TEST(Synth, StubPredictionsCoverTheGrid) {
    const auto c = generate(demo_spec());
    const auto preds = stub_predictions(c.truth, 1);
    EXPECT_EQ(preds.size(), c.truth.texts.size() * c.truth.features.size());
    for (const auto& p : preds) {
        EXPECT_GE(p.frequency, 0.0);
        EXPECT_GE(p.confidence, 0.0);
        EXPECT_LE(p.confidence, 1.0);
    }
}

TEST(ReferenceStats, ScopeLimit) {
    std::vector<double> big(51, 1.0);
    big[0] = 2.0;
    EXPECT_THROW(ref_ols(big), OracleScopeError);
    EXPECT_THROW(ref_spearman(big), OracleScopeError);
}

TEST(ReferenceStats, TailIntegralsAgainstKnownValues) {
    // Critical values from standard tables.
    EXPECT_NEAR(ref_t_two_sided(2.2281388519649385, 10), 0.05, 1e-9);
    EXPECT_NEAR(ref_t_two_sided(12.706204736432102, 1), 0.05, 1e-9);
    EXPECT_NEAR(ref_f_upper(4.1028210151304005, 2, 10), 0.05, 1e-9);
    EXPECT_NEAR(ref_f_upper(12.246383348435081, 1, 7), 0.01, 1e-9);
    EXPECT_NEAR(ref_t_two_sided(0.0, 5), 1.0, 1e-12);
}

TEST(ReferenceStats, EigenvaluesOfKnownMatrix) {
    const auto ev = ref_eigenvalues({{2, 1, 0}, {1, 2, 1}, {0, 1, 2}});
    ASSERT_EQ(ev.size(), 3u);
    EXPECT_NEAR(ev[0], 2 + std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(ev[1], 2.0, 1e-12);
    EXPECT_NEAR(ev[2], 2 - std::sqrt(2.0), 1e-12);
}
