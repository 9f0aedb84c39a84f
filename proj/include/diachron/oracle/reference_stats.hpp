#pragma once

// Brute-force statistical references for differential tests. Nothing here
// calls into the production statistics: distributions are integrated
// numerically and eigenvalues come from Sylvester-inertia bisection.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <vector>

#include "diachron/error.hpp"

namespace diachron::oracle {

class OracleScopeError : public Error {
public:
    using Error::Error;
};

inline constexpr std::size_t kMaxOracleObservations = 50;
inline constexpr std::size_t kMaxOracleDimension = 8;

inline void require_small(std::size_t n, const char* what) {
    if (n > kMaxOracleObservations) throw OracleScopeError(std::string(what) + ": instance too large for the oracle");
}

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa, double fm, double fb,
                      double whole, double eps, int depth) {
    const double m = (a + b) / 2.0;
    const double lm = (a + m) / 2.0, rm = (m + b) / 2.0;
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || (depth < 46 && std::abs(delta) <= 15.0 * eps)) return left + right + delta / 15.0;
    return simpson(f, a, m, fa, flm, fm, left, eps / 2.0, depth - 1) +
           simpson(f, m, b, fm, frm, fb, right, eps / 2.0, depth - 1);
}

inline double integrate_piece(const std::function<double(double)>& f, double a, double b, double eps) {
    const double fa = f(a), fb = f(b), fm = f((a + b) / 2.0);
    return simpson(f, a, b, fa, fm, fb, (b - a) / 6.0 * (fa + 4.0 * fm + fb), eps, 50);
}

}  // namespace detail

// Integral over [0, x] split at 1, 2, 4, ... so narrow mass near the origin is
// never skipped by a coarse first estimate.
inline double integrate_from_zero(const std::function<double(double)>& f, double x, double eps = 1e-15) {
    double total = 0.0, lo = 0.0, hi = std::min(x, 0.5);
    while (lo < x) {
        total += detail::integrate_piece(f, lo, hi, eps);
        lo = hi;
        hi = std::min(x, hi * 2.0);
    }
    return total;
}

inline double t_density(double t, double df) {
    const double log_c = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) - 0.5 * std::log(df * M_PI);
    return std::exp(log_c - (df + 1.0) / 2.0 * std::log1p(t * t / df));
}

// P(|T| >= |t|) by integrating the density over [0, |t|].
inline double ref_t_two_sided(double t, double df) {
    if (std::isinf(t)) return 0.0;
    const double inner = integrate_from_zero([df](double s) { return t_density(s, df); }, std::abs(t));
    return std::max(0.0, 1.0 - 2.0 * inner);
}

// P(F >= f) with x = s^2 substitution to remove the d1 = 1 singularity.
inline double ref_f_upper(double f, double d1, double d2) {
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    const double log_c = 0.5 * d1 * std::log(d1 / d2) - (std::lgamma(d1 / 2.0) + std::lgamma(d2 / 2.0) -
                                                         std::lgamma((d1 + d2) / 2.0));
    auto g = [=](double s) {
        const double x = s * s;
        const double log_tail = -(d1 + d2) / 2.0 * std::log1p(d1 * x / d2);
        const double power = d1 == 1.0 ? 1.0 : std::pow(s, d1 - 1.0);
        return 2.0 * std::exp(log_c + log_tail) * power;
    };
    return std::max(0.0, 1.0 - integrate_from_zero(g, std::sqrt(f)));
}

struct RefOls {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double p_value = 1.0;
};

// Normal equations [n Sx; Sx Sxx][b0; b1] = [Sy; Sxy] solved by Cramer's rule.
inline RefOls ref_ols(const std::vector<double>& y) {
    require_small(y.size(), "ref_ols");
    const std::size_t n = y.size();
    double sx = 0, sxx = 0, sy = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i);
        sx += x;
        sxx += x * x;
        sy += y[i];
        sxy += x * y[i];
    }
    const double nn = static_cast<double>(n);
    const double det = nn * sxx - sx * sx;
    RefOls r;
    r.intercept = (sy * sxx - sx * sxy) / det;
    r.slope = (nn * sxy - sx * sy) / det;
    const double mean = sy / nn;
    double sst = 0, sse = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double fit = r.intercept + r.slope * static_cast<double>(i);
        sst += (y[i] - mean) * (y[i] - mean);
        sse += (y[i] - fit) * (y[i] - fit);
    }
    if (sst == 0.0) {
        r.slope = 0.0;
        r.intercept = mean;
        return r;
    }
    r.r_squared = 1.0 - sse / sst;
    const double sigma2 = sse / (nn - 2.0);
    const double var_slope = sigma2 * nn / det;  // (X'X)^-1 [1][1]
    if (var_slope == 0.0) {
        r.p_value = 0.0;
        return r;
    }
    r.p_value = ref_t_two_sided(r.slope / std::sqrt(var_slope), nn - 2.0);
    return r;
}

// Rank of v[i] = 1 + #(smaller) + (#(equal) - 1) / 2.
inline std::vector<double> ref_ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double smaller = 0, equal = 0;
        for (double w : v) {
            if (w < v[i]) smaller += 1;
            if (w == v[i]) equal += 1;
        }
        r[i] = 1.0 + smaller + (equal - 1.0) / 2.0;
    }
    return r;
}

// Raw-sum product-moment formula.
inline double ref_pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
        sxy += x[i] * y[i];
    }
    return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

struct RefSpearman {
    double rho = 0.0;
    double p_value = 1.0;
};

inline RefSpearman ref_spearman(const std::vector<double>& y) {
    require_small(y.size(), "ref_spearman");
    const auto ry = ref_ranks(y);
    RefSpearman r;
    if (std::all_of(ry.begin(), ry.end(), [&](double v) { return v == ry[0]; })) return r;
    std::vector<double> rx(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) rx[i] = static_cast<double>(i + 1);
    r.rho = ref_pearson(rx, ry);
    const double df = static_cast<double>(y.size()) - 2.0;
    if (std::abs(r.rho) >= 1.0 - 1e-15) {
        r.p_value = 0.0;
        return r;
    }
    r.p_value = ref_t_two_sided(r.rho * std::sqrt(df / (1.0 - r.rho * r.rho)), df);
    return r;
}

inline double ref_cohens_d(const std::vector<double>& early, const std::vector<double>& late) {
    require_small(early.size() + late.size(), "ref_cohens_d");
    auto mean = [](const std::vector<double>& v) {
        double s = 0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto var = [&](const std::vector<double>& v) {
        const double m = mean(v);
        double s = 0;
        for (double x : v) s += (x - m) * (x - m);
        return s / static_cast<double>(v.size() - 1);
    };
    const double n1 = static_cast<double>(early.size()), n2 = static_cast<double>(late.size());
    const double pooled = std::sqrt(((n1 - 1) * var(early) + (n2 - 1) * var(late)) / (n1 + n2 - 2));
    return (mean(late) - mean(early)) / pooled;
}

struct RefAnova {
    double f_statistic = 0.0;
    double p_value = 1.0;
};

// Total sum of squares split as SST = SSB + SSW, SSW computed directly.
inline RefAnova ref_anova(const std::vector<std::vector<double>>& groups) {
    std::size_t total = 0;
    for (const auto& g : groups) total += g.size();
    require_small(total, "ref_anova");
    double grand = 0;
    for (const auto& g : groups)
        for (double v : g) grand += v;
    grand /= static_cast<double>(total);
    double ssw = 0, sst = 0;
    for (const auto& g : groups) {
        double m = 0;
        for (double v : g) m += v;
        m /= static_cast<double>(g.size());
        for (double v : g) {
            ssw += (v - m) * (v - m);
            sst += (v - grand) * (v - grand);
        }
    }
    const double ssb = sst - ssw;
    const double d1 = static_cast<double>(groups.size() - 1), d2 = static_cast<double>(total - groups.size());
    RefAnova r;
    if (ssw == 0.0) return r;
    r.f_statistic = (ssb / d1) / (ssw / d2);
    r.p_value = ref_f_upper(r.f_statistic, d1, d2);
    return r;
}

// Number of eigenvalues of symmetric A below lambda: negative pivots of the
// LDL^T factorisation of A - lambda I.
inline std::size_t eigen_count_below(const std::vector<std::vector<double>>& a, double lambda) {
    const std::size_t n = a.size();
    auto m = a;
    for (std::size_t i = 0; i < n; ++i) m[i][i] -= lambda;
    std::size_t negatives = 0;
    for (std::size_t k = 0; k < n; ++k) {
        double pivot = m[k][k];
        if (pivot == 0.0) pivot = -1e-300;
        if (pivot < 0.0) ++negatives;
        for (std::size_t i = k + 1; i < n; ++i) {
            const double factor = m[i][k] / pivot;
            for (std::size_t j = k + 1; j < n; ++j) m[i][j] -= factor * m[k][j];
        }
    }
    return negatives;
}

// Eigenvalues, descending.
inline std::vector<double> ref_eigenvalues(const std::vector<std::vector<double>>& a) {
    const std::size_t n = a.size();
    if (n > kMaxOracleDimension) throw OracleScopeError("ref_eigenvalues: matrix larger than 8x8");
    double bound = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = 0;
        for (std::size_t j = 0; j < n; ++j) r += std::abs(a[i][j]);
        bound = std::max(bound, r);
    }
    bound = bound * 1.01 + 1e-12;
    std::vector<double> out;
    for (std::size_t k = 1; k <= n; ++k) {
        double lo = -bound, hi = bound;
        for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, bound); ++it) {
            const double mid = 0.5 * (lo + hi);
            if (eigen_count_below(a, mid) >= k) hi = mid;
            else lo = mid;
        }
        out.push_back(0.5 * (lo + hi));
    }
    std::reverse(out.begin(), out.end());
    return out;
}

// Bin membership by direct interval test on every bin.
inline double ref_ece(const std::vector<double>& conf, const std::vector<bool>& correct, std::size_t bins) {
    double total = 0;
    const double n = static_cast<double>(conf.size());
    for (std::size_t b = 0; b < bins; ++b) {
        const double lo = static_cast<double>(b) / static_cast<double>(bins);
        const double hi = static_cast<double>(b + 1) / static_cast<double>(bins);
        double count = 0, hits = 0, csum = 0;
        for (std::size_t i = 0; i < conf.size(); ++i) {
            const bool inside = (b == 0 ? conf[i] >= lo : conf[i] > lo) && conf[i] <= hi;
            if (!inside) continue;
            count += 1;
            csum += conf[i];
            hits += correct[i] ? 1 : 0;
        }
        if (count > 0) total += count / n * std::abs(hits / count - csum / count);
    }
    return total;
}

}  // namespace diachron::oracle
