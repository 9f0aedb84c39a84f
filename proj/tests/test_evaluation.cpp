#include <gtest/gtest.h>

#include "diachron/evaluation.hpp"
#include "diachron/oracle/reference_stats.hpp"
#include "support.hpp"

using namespace diachron;
using testsupport::Gen;

TEST(Agreement, RelativeTolerance) {
    EXPECT_EQ(agreement(0.0, 0.0), 1);
    EXPECT_EQ(agreement(1.0, 1.25), 1);
    EXPECT_EQ(agreement(10.0, 7.1), 1);
    EXPECT_EQ(agreement(10.0, 7.0), 0);  // exactly 0.30 apart is not agreement
    EXPECT_EQ(agreement(1.0, 1.5), 0);
    EXPECT_EQ(agreement(0.0, 0.2), 0);
    EXPECT_EQ(agreement(3.0, 0.0), 0);
}

TEST(Pearson, KnownValuesAndErrors) {
    const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 5, 4, 5};
    EXPECT_NEAR(pearson(x, y), 0.7745966692414834, 1e-15);
    const std::vector<double> c{3, 3, 3, 3, 3};
    EXPECT_THROW(pearson(x, c), DomainError);
    EXPECT_FALSE(try_pearson(x, c).has_value());
    EXPECT_THROW(pearson(std::vector<double>{1.0}, std::vector<double>{2.0}), DomainError);
    EXPECT_THROW(pearson(x, std::vector<double>{1, 2}), DomainError);
}

TEST(Pearson, AffineInvarianceAndSymmetry) {
    Gen g(13);
    for (int i = 0; i < 300; ++i) {
        const auto n = g.range(3, 40);
        const auto x = g.vec(n, -10, 10), y = g.vec(n, -10, 10);
        const double r = pearson(x, y);
        const double a = g.uniform(0.1, 5) * (g.chance(0.5) ? 1 : -1), b = g.uniform(-20, 20);
        std::vector<double> x2(n);
        for (std::size_t k = 0; k < n; ++k) x2[k] = a * x[k] + b;
        EXPECT_NEAR(pearson(x2, y), a > 0 ? r : -r, 1e-9);
        EXPECT_NEAR(pearson(y, x), r, 1e-12);
        EXPECT_NEAR(r, oracle::ref_pearson(x, y), 1e-9);
    }
}

TEST(Ece, BinBoundaries) {
    EXPECT_EQ(calibration_bin(0.0, 10), 0u);
    EXPECT_EQ(calibration_bin(0.1, 10), 0u);  // right-closed
    EXPECT_EQ(calibration_bin(std::nextafter(0.1, 1.0), 10), 1u);
    EXPECT_EQ(calibration_bin(0.3, 10), 2u);
    EXPECT_EQ(calibration_bin(0.7, 10), 6u);
    EXPECT_EQ(calibration_bin(1.0, 10), 9u);
    for (int k = 1; k <= 10; ++k) EXPECT_EQ(calibration_bin(k / 10.0, 10), static_cast<std::size_t>(k - 1));
}

TEST(Ece, HandComputed) {
    // Bin 9: confidences 0.95, 0.95, accuracy 1/2 -> gap 0.45
    // Bin 5: confidence 0.6, accuracy 1 -> gap 0.4
    const std::vector<double> conf{0.95, 0.95, 0.6};
    const auto r = ece(conf, {true, false, true});
    EXPECT_NEAR(r.ece, 2.0 / 3.0 * 0.45 + 1.0 / 3.0 * 0.4, 1e-15);
    EXPECT_EQ(r.bins[9].count, 2u);
    EXPECT_EQ(r.bins[5].count, 1u);
    ASSERT_TRUE(r.pearson_r.has_value());
    EXPECT_NEAR(*r.pearson_r, -1.0, 1e-12);
}

TEST(Ece, TwoBinExample) {
    const std::vector<double> conf{0.8, 0.8, 0.6, 0.6};
    const auto r = ece(conf, {true, true, false, false}, 2);
    EXPECT_EQ(r.bins[1].count, 4u);
    EXPECT_DOUBLE_EQ(r.bins[1].accuracy, 0.5);
    EXPECT_DOUBLE_EQ(r.bins[1].confidence, 0.7);
    EXPECT_NEAR(r.ece, 0.2, 1e-15);
    EXPECT_FALSE(r.pearson_r.has_value());
    const std::vector<double> ones(5, 1.0);
    EXPECT_EQ(ece(ones, std::vector<bool>(5, true)).ece, 0.0);
}

TEST(Ece, PerfectCalibrationIsZero) {
    // 10 predictions at 0.7 with 7 correct, 4 at 0.25 with 1 correct.
    std::vector<double> conf(10, 0.7);
    std::vector<bool> correct{true, true, true, true, true, true, true, false, false, false};
    for (int i = 0; i < 4; ++i) conf.push_back(0.25), correct.push_back(i == 0);
    EXPECT_EQ(ece(conf, correct).ece, 0.0);
}

TEST(Ece, MatchesOracleAndStaysInRange) {
    Gen g(21);
    for (int i = 0; i < 200; ++i) {
        const auto n = g.range(1, 300);
        const auto bins = g.range(1, 20);
        std::vector<double> conf(n);
        std::vector<bool> correct(n);
        for (std::size_t k = 0; k < n; ++k) {
            conf[k] = g.chance(0.2) ? static_cast<double>(g.range(0, bins)) / static_cast<double>(bins) : g.uniform();
            correct[k] = g.chance(conf[k]);
        }
        const auto r = ece(conf, correct, bins);
        EXPECT_GE(r.ece, 0.0);
        EXPECT_LE(r.ece, 1.0);
        EXPECT_NEAR(r.ece, oracle::ref_ece(conf, correct, bins), 1e-12);
        std::size_t total = 0;
        for (const auto& b : r.bins) total += b.count;
        EXPECT_EQ(total, n);
    }
}

TEST(Ece, Errors) {
    EXPECT_THROW(ece(std::vector<double>{}, {}), DomainError);
    EXPECT_THROW(ece(std::vector<double>{1.2}, {true}), DomainError);
    EXPECT_THROW(ece(std::vector<double>{0.5}, {true}, 0), DomainError);
    EXPECT_THROW(ece(std::vector<double>{0.5, 0.2}, {true}), DomainError);
}

TEST(CompareMethods, CountsAndRates) {
    FeatureMatrix a;
    a.texts = {"t0", "t1"};
    a.features = {"f"};
    a.freq = {{0.0, 2.0}};
    a.detected = {{false, true}};
    auto b = a;
    b.freq = {{0.0, 2.5}};
    auto r = compare_methods(a, b);
    EXPECT_EQ(r.total, 2u);
    EXPECT_EQ(r.negative_agreements, 1u);
    EXPECT_EQ(r.positive_agreements, 1u);
    EXPECT_DOUBLE_EQ(r.agreement_rate, 1.0);
    EXPECT_DOUBLE_EQ(r.detection_agreement_rate, 1.0);
    b.freq = {{1.0, 9.0}};
    b.detected = {{true, true}};
    r = compare_methods(a, b);
    EXPECT_DOUBLE_EQ(r.agreement_rate, 0.0);
    EXPECT_DOUBLE_EQ(r.detection_agreement_rate, 0.5);
    b.texts = {"t0", "tX"};
    EXPECT_THROW(compare_methods(a, b), AlignmentError);
}

TEST(Gold, MetricsByHand) {
    std::vector<GoldExample> gold(3);
    gold[0].true_features = {{"a", 0.9}};
    gold[1].true_features = {{"a", 0.9}, {"b", 0.8}};
    gold[2].expected_false_positives = {"c"};
    std::vector<GoldPrediction> pred{{{"a"}, 0.9}, {{"a"}, 0.8}, {{"c"}, 0.6}};
    const auto m = evaluate_gold(gold, pred);
    EXPECT_DOUBLE_EQ(m.accuracy, 1.0 / 3.0);
    // tp 2, fp 1, fn 1
    EXPECT_DOUBLE_EQ(m.precision, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.recall, 2.0 / 3.0);
    EXPECT_DOUBLE_EQ(m.f1, 2.0 / 3.0);
    EXPECT_EQ(m.expected_false_positive_hits, 1u);
    EXPECT_THROW(evaluate_gold(gold, {}), AlignmentError);
}

TEST(Gold, ParseRejectsContradictions) {
    json bad{{"examples", json::array({{{"target_word", "x"},
                                        {"context", "x"},
                                        {"true_features", {{"a", 0.9}}},
                                        {"expected_false_positives", {"a"}}}})}};
    EXPECT_THROW(parse_gold(bad, "g"), LoadError);
    const auto gold = oracle::synthetic_gold(10, 5, 3);
    const auto back = parse_gold(gold_to_json(gold), "g");
    ASSERT_EQ(back.size(), gold.size());
    EXPECT_EQ(gold_to_json(back), gold_to_json(gold));
}

TEST(Gold, PredictionsFromCatalog) {
    const auto cat = make_catalog("v", oracle::toy_catalog(5));
    const auto gold = oracle::synthetic_gold(25, 5, 8);
    const auto preds = predict_gold(gold, cat);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        switch (i % 5) {
            case 0: EXPECT_DOUBLE_EQ(preds[i].confidence, 0.8); break;
            case 1: EXPECT_DOUBLE_EQ(preds[i].confidence, 0.6); break;
            case 2: EXPECT_TRUE(preds[i].features.empty()); EXPECT_EQ(preds[i].confidence, 0.5); break;
            case 3: EXPECT_EQ(preds[i].features.size(), 1u); break;
            default: EXPECT_TRUE(preds[i].features.empty()); break;
        }
    }
    const auto m = evaluate_gold(gold, preds);
    EXPECT_DOUBLE_EQ(m.accuracy, 0.6);
    std::vector<GoldExample> missing(1);
    missing[0].target_word = "absent";
    missing[0].context = "some words";
    EXPECT_THROW(predict_gold(missing, cat), AlignmentError);
}
