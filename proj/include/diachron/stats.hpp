#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "diachron/error.hpp"
#include "diachron/feature_matrix.hpp"
#include "diachron/io.hpp"
#include "diachron/special_functions.hpp"

namespace diachron {

struct OlsTrend {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double t_statistic = 0.0;
    double p_value = 1.0;
};

// Regression of y on x = 0, 1, ..., n-1 with a two-sided t test on the slope.
inline OlsTrend ols_trend(std::span<const double> y) {
    const std::size_t n = y.size();
    if (n < 3) throw DomainError("ols_trend: need at least 3 observations");
    const double nn = static_cast<double>(n);
    const double mean_x = (nn - 1.0) / 2.0;
    double mean_y = 0.0;
    for (double v : y) mean_y += v;
    mean_y /= nn;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = static_cast<double>(i) - mean_x, dy = y[i] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    OlsTrend r;
    if (syy == 0.0) {
        r.intercept = mean_y;
        return r;
    }
    r.slope = sxy / sxx;
    r.intercept = mean_y - r.slope * mean_x;
    r.r_squared = std::clamp(sxy * sxy / (sxx * syy), 0.0, 1.0);
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = y[i] - (r.intercept + r.slope * static_cast<double>(i));
        sse += e * e;
    }
    const double df = nn - 2.0;
    const double se = std::sqrt(sse / df / sxx);
    if (se == 0.0) {
        r.t_statistic = r.slope == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.slope);
        r.p_value = r.slope == 0.0 ? 1.0 : 0.0;
        return r;
    }
    r.t_statistic = r.slope / se;
    r.p_value = special::student_t_two_sided(r.t_statistic, df);
    return r;
}

// 1-based ranks; tied values share the average of their positions.
inline std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

struct SpearmanResult {
    double rho = 0.0;
    double p_value = 1.0;
    bool exact = false;  // p from full permutation enumeration
};

namespace detail {

inline double rank_correlation_with_index(std::span<const double> ranks) {
    const double n = static_cast<double>(ranks.size());
    const double mean = (n + 1.0) / 2.0;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        const double dx = static_cast<double>(i + 1) - mean, dy = ranks[i] - mean;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (syy == 0.0) return 0.0;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace detail

inline constexpr std::size_t kMaxExactSpearman = 10;

// Spearman correlation of y against chronological position. The p-value uses
// the t approximation unless `exact` is set and n <= 10, in which case all n!
// orderings are enumerated.
inline SpearmanResult spearman(std::span<const double> y, bool exact = false) {
    const std::size_t n = y.size();
    if (n < 3) throw DomainError("spearman: need at least 3 observations");
    const auto ranks = average_ranks(y);
    SpearmanResult r;
    if (std::all_of(ranks.begin(), ranks.end(), [&](double v) { return v == ranks.front(); })) return r;
    r.rho = detail::rank_correlation_with_index(ranks);
    if (exact && n <= kMaxExactSpearman) {
        std::vector<double> perm = ranks;
        std::sort(perm.begin(), perm.end());
        std::size_t total = 0, extreme = 0;
        const double threshold = std::abs(r.rho) - 1e-12;
        do {
            ++total;
            if (std::abs(detail::rank_correlation_with_index(perm)) >= threshold) ++extreme;
        } while (std::next_permutation(perm.begin(), perm.end()));
        // next_permutation skips duplicate orderings of tied ranks; each
        // distinct ordering is equally likely, so the ratio is unchanged.
        r.p_value = static_cast<double>(extreme) / static_cast<double>(total);
        r.exact = true;
        return r;
    }
    if (std::abs(r.rho) >= 1.0) {
        r.p_value = 0.0;
        return r;
    }
    const double df = static_cast<double>(n) - 2.0;
    const double t = r.rho * std::sqrt(df / (1.0 - r.rho * r.rho));
    r.p_value = special::student_t_two_sided(t, df);
    return r;
}

// (mean(late) - mean(early)) / pooled SD; positive means higher in late texts.
inline double cohens_d(std::span<const double> early, std::span<const double> late) {
    if (early.size() < 2 || late.size() < 2) throw DomainError("cohens_d: each group needs at least 2 values");
    auto moments = [](std::span<const double> v) {
        double mean = 0.0;
        for (double x : v) mean += x;
        mean /= static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        return std::pair{mean, ss / static_cast<double>(v.size() - 1)};
    };
    const auto [m1, v1] = moments(early);
    const auto [m2, v2] = moments(late);
    const double n1 = static_cast<double>(early.size()), n2 = static_cast<double>(late.size());
    const double pooled = std::sqrt(((n1 - 1.0) * v1 + (n2 - 1.0) * v2) / (n1 + n2 - 2.0));
    if (pooled == 0.0) {
        if (m1 == m2) return 0.0;
        throw DomainError("cohens_d: zero pooled standard deviation with unequal means (infinite effect)");
    }
    return (m2 - m1) / pooled;
}

struct AnovaResult {
    double f_statistic = 0.0;
    double p_value = 1.0;
    double df_between = 0.0;
    double df_within = 0.0;
    bool degenerate = false;  // zero within-group variance with distinct group means
};

inline AnovaResult anova_oneway(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw DomainError("anova_oneway: need at least 2 groups");
    std::size_t total = 0;
    double grand = 0.0;
    for (const auto& g : groups) {
        if (g.empty()) throw DomainError("anova_oneway: empty group");
        total += g.size();
        for (double v : g) grand += v;
    }
    if (total <= groups.size()) throw DomainError("anova_oneway: need more observations than groups");
    grand /= static_cast<double>(total);
    double ss_between = 0.0, ss_within = 0.0;
    for (const auto& g : groups) {
        double mean = 0.0;
        for (double v : g) mean += v;
        mean /= static_cast<double>(g.size());
        ss_between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
        for (double v : g) ss_within += (v - mean) * (v - mean);
    }
    AnovaResult r;
    r.df_between = static_cast<double>(groups.size() - 1);
    r.df_within = static_cast<double>(total - groups.size());
    if (ss_within == 0.0) {
        if (ss_between == 0.0) return r;
        r.f_statistic = std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        r.degenerate = true;
        return r;
    }
    r.f_statistic = (ss_between / r.df_between) / (ss_within / r.df_within);
    r.p_value = special::f_upper_tail(r.f_statistic, r.df_between, r.df_within);
    return r;
}

enum class EffectBand { Negligible, Small, Medium, Large };
enum class TrendClass { Increasing, Decreasing, Stable };

inline std::string_view to_string(EffectBand b) {
    switch (b) {
        case EffectBand::Negligible: return "Negligible";
        case EffectBand::Small: return "Small";
        case EffectBand::Medium: return "Medium";
        case EffectBand::Large: return "Large";
    }
    return "";
}

inline std::string_view to_string(TrendClass c) {
    switch (c) {
        case TrendClass::Increasing: return "Increasing";
        case TrendClass::Decreasing: return "Decreasing";
        case TrendClass::Stable: return "Stable";
    }
    return "";
}

inline EffectBand effect_band(double d) noexcept {
    const double a = std::abs(d);
    if (std::isnan(a)) return EffectBand::Negligible;
    if (a >= 0.8) return EffectBand::Large;
    if (a >= 0.5) return EffectBand::Medium;
    if (a >= 0.2) return EffectBand::Small;
    return EffectBand::Negligible;
}

struct TrendStats {
    std::string feature_id;
    double r_squared = 0.0;
    double slope = 0.0;
    double p_regression = 1.0;
    double spearman_rho = 0.0;
    double p_spearman = 1.0;
    double cohens_d = 0.0;
    EffectBand effect_band = EffectBand::Negligible;
    TrendClass trend_class = TrendClass::Stable;
    std::vector<std::string> flags;
};

struct TrendOptions {
    std::size_t early_group = 5;
    std::size_t late_group = 5;
    double alpha = 0.05;
    bool exact_spearman = false;
};

// Dual-significance rule: a trend needs p < alpha from both the regression
// and the Spearman test; the slope's sign picks the direction.
inline TrendClass classify(double slope, double p_regression, double p_spearman, double alpha = 0.05) noexcept {
    if (!(p_regression < alpha && p_spearman < alpha) || slope == 0.0) return TrendClass::Stable;
    return slope > 0.0 ? TrendClass::Increasing : TrendClass::Decreasing;
}

inline std::vector<TrendStats> classify_trends(const FeatureMatrix& m, const TrendOptions& options = {}) {
    const std::size_t n = m.num_texts();
    if (n < 3) throw DomainError("classify_trends: need at least 3 texts");
    std::size_t early = options.early_group, late = options.late_group;
    if (early + late > n) early = late = n / 2;

    std::vector<TrendStats> out;
    out.reserve(m.num_features());
    for (std::size_t f = 0; f < m.num_features(); ++f) {
        const auto& y = m.freq[f];
        TrendStats s;
        s.feature_id = m.features[f];
        if (std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; })) {
            s.flags.push_back("all_zero");
            out.push_back(std::move(s));
            continue;
        }
        const auto ols = ols_trend(y);
        const auto sp = spearman(y, options.exact_spearman);
        s.r_squared = ols.r_squared;
        s.slope = ols.slope;
        s.p_regression = ols.p_value;
        s.spearman_rho = sp.rho;
        s.p_spearman = sp.p_value;
        if (early >= 2 && late >= 2) {
            const std::span<const double> all(y);
            try {
                s.cohens_d = cohens_d(all.first(early), all.last(late));
            } catch (const DomainError&) {
                double me = 0.0, ml = 0.0;
                for (double v : all.first(early)) me += v;
                for (double v : all.last(late)) ml += v;
                s.cohens_d = std::copysign(std::numeric_limits<double>::infinity(), ml / late - me / early);
                s.flags.push_back("infinite_effect");
            }
        } else {
            s.cohens_d = std::numeric_limits<double>::quiet_NaN();
            s.flags.push_back("too_few_texts_for_effect_size");
        }
        s.effect_band = std::isinf(s.cohens_d) ? EffectBand::Large : effect_band(s.cohens_d);
        s.trend_class = classify(s.slope, s.p_regression, s.p_spearman, options.alpha);
        if (std::all_of(y.begin(), y.end(), [&](double v) { return v == y.front(); })) s.flags.push_back("constant");
        out.push_back(std::move(s));
    }
    return out;
}

// Rows mirror the diachronic summary table: feature, R², β, p, ρ, d, effect.
inline std::string trends_to_csv(const std::vector<TrendStats>& stats, std::string_view provenance = {}) {
    std::string out;
    if (!provenance.empty()) out += "# " + std::string(provenance) + "\n";
    out += csv_row({"feature", "r_squared", "beta", "p", "rho", "p_spearman", "cohens_d", "effect", "trend"});
    for (const auto& s : stats) {
        out += csv_row({s.feature_id, format_fixed(s.r_squared, 3), format_fixed(s.slope, 4), format_fixed(s.p_regression, 4),
                        format_fixed(s.spearman_rho, 3), format_fixed(s.p_spearman, 4), format_fixed(s.cohens_d, 3),
                        std::string(to_string(s.effect_band)), std::string(to_string(s.trend_class))});
    }
    return out;
}

inline json trend_to_json(const TrendStats& s) {
    return json{{"feature_id", s.feature_id},
                {"r_squared", s.r_squared},
                {"beta", s.slope},
                {"p_regression", s.p_regression},
                {"spearman_rho", s.spearman_rho},
                {"p_spearman", s.p_spearman},
                {"cohens_d", json_number(s.cohens_d)},
                {"effect_band", std::string(to_string(s.effect_band))},
                {"trend_class", std::string(to_string(s.trend_class))},
                {"flags", s.flags}};
}

}  // namespace diachron
