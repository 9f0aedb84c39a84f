#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "diachron/corpus.hpp"
#include "diachron/error.hpp"
#include "diachron/feature_matrix.hpp"
#include "diachron/io.hpp"

namespace diachron {

using DenseMatrix = std::vector<std::vector<double>>;

struct SymmetricEigen {
    std::vector<double> values;   // descending
    DenseMatrix vectors;          // vectors[i][k]: component i of eigenvector k
    int sweeps = 0;
};

// Cyclic Jacobi rotations until the off-diagonal norm falls below
// tolerance * ||A||_F.
inline SymmetricEigen jacobi_eigen(DenseMatrix a, double tolerance = 1e-14, int max_sweeps = 100) {
    const std::size_t n = a.size();
    for (const auto& row : a)
        if (row.size() != n) throw DomainError("jacobi_eigen: matrix is not square");
    DenseMatrix v(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) v[i][i] = 1.0;

    double frob = 0.0;
    for (const auto& row : a)
        for (double x : row) frob += x * x;
    frob = std::sqrt(frob);

    SymmetricEigen out;
    for (; out.sweeps < max_sweeps; ++out.sweeps) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += 2.0 * a[p][q] * a[p][q];
        if (std::sqrt(off) <= tolerance * std::max(frob, 1.0)) break;
        for (std::size_t p = 0; p < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a[p][q] == 0.0) continue;
                const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < n; ++k) {
                    const double akp = a[k][p], akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double apk = a[p][k], aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v[k][p], vkq = v[k][q];
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    if (out.sweeps == max_sweeps) throw Error("jacobi_eigen: no convergence");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return a[i][i] > a[j][j]; });
    out.values.resize(n);
    out.vectors.assign(n, std::vector<double>(n));
    for (std::size_t k = 0; k < n; ++k) {
        out.values[k] = a[order[k]][order[k]];
        for (std::size_t i = 0; i < n; ++i) out.vectors[i][k] = v[i][order[k]];
    }
    return out;
}

struct Standardized {
    DenseMatrix z;                  // [text][feature]
    std::vector<std::size_t> kept;  // indices into the source feature list
    std::vector<std::string> dropped;
};

// Zero mean, unit (sample) variance per feature across texts; constant
// features are dropped.
inline Standardized standardize(const FeatureMatrix& m) {
    Standardized s;
    const std::size_t n = m.num_texts();
    s.z.assign(n, {});
    for (std::size_t f = 0; f < m.num_features(); ++f) {
        double mean = 0.0;
        for (double v : m.freq[f]) mean += v;
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (double v : m.freq[f]) ss += (v - mean) * (v - mean);
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        if (sd == 0.0) {
            s.dropped.push_back(m.features[f]);
            continue;
        }
        s.kept.push_back(f);
        for (std::size_t t = 0; t < n; ++t) s.z[t].push_back((m.freq[f][t] - mean) / sd);
    }
    return s;
}

struct PcaResult {
    std::vector<std::string> features;  // retained (non-constant) features
    std::vector<std::string> texts;
    std::vector<double> eigenvalues;    // all, descending
    std::vector<double> explained_variance_ratio;  // first k
    DenseMatrix loadings;  // [feature][component]
    DenseMatrix scores;    // [text][component]
    std::vector<std::string> warnings;

    std::size_t components() const noexcept { return explained_variance_ratio.size(); }
};

inline constexpr double kEigenRankTolerance = 1e-10;

// PCA on the correlation matrix of the standardized features.
inline PcaResult pca(const FeatureMatrix& m, std::size_t k) {
    if (m.num_texts() < 2 || m.num_features() < 2) throw DomainError("pca: need at least 2 texts and 2 features");
    PcaResult r;
    r.texts = m.texts;
    const auto std_data = standardize(m);
    for (const auto& id : std_data.dropped) r.warnings.push_back("feature '" + id + "' has zero variance; dropped");
    for (auto f : std_data.kept) r.features.push_back(m.features[f]);
    const std::size_t p = std_data.kept.size();
    const std::size_t n = m.num_texts();
    if (p < 2) throw DomainError("pca: fewer than 2 features with nonzero variance");

    DenseMatrix corr(p, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < n; ++t) s += std_data.z[t][i] * std_data.z[t][j];
            corr[i][j] = corr[j][i] = s / static_cast<double>(n - 1);
        }
    }
    const auto eig = jacobi_eigen(corr);
    r.eigenvalues = eig.values;
    double trace = 0.0;
    for (double v : eig.values) trace += v;

    std::size_t rank = 0;
    for (double v : eig.values)
        if (v > kEigenRankTolerance * std::max(trace, 1.0)) ++rank;
    if (k > rank) {
        r.warnings.push_back("requested " + std::to_string(k) + " components but the correlation matrix has rank " +
                             std::to_string(rank) + "; truncated");
        k = rank;
    }

    r.loadings.assign(p, std::vector<double>(k, 0.0));
    for (std::size_t c = 0; c < k; ++c) {
        r.explained_variance_ratio.push_back(eig.values[c] / trace);
        std::size_t big = 0;
        for (std::size_t i = 1; i < p; ++i)
            if (std::abs(eig.vectors[i][c]) > std::abs(eig.vectors[big][c])) big = i;
        const double sign = eig.vectors[big][c] < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < p; ++i) r.loadings[i][c] = sign * eig.vectors[i][c];
    }
    r.scores.assign(n, std::vector<double>(k, 0.0));
    for (std::size_t t = 0; t < n; ++t)
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t i = 0; i < p; ++i) r.scores[t][c] += std_data.z[t][i] * r.loadings[i][c];
    return r;
}

inline json pca_to_json(const PcaResult& r) {
    json loadings = json::object();
    for (std::size_t i = 0; i < r.features.size(); ++i) loadings[r.features[i]] = r.loadings[i];
    json scores = json::object();
    for (std::size_t t = 0; t < r.texts.size(); ++t) scores[r.texts[t]] = r.scores[t];
    double cumulative = 0.0;
    json scree = json::array();
    for (std::size_t c = 0; c < r.explained_variance_ratio.size(); ++c) {
        cumulative += r.explained_variance_ratio[c];
        scree.push_back({{"component", c + 1},
                         {"eigenvalue", r.eigenvalues[c]},
                         {"explained_ratio", r.explained_variance_ratio[c]},
                         {"cumulative_ratio", cumulative}});
    }
    return json{{"components", r.components()},
                {"features", r.features},
                {"eigenvalues", r.eigenvalues},
                {"explained_variance_ratio", r.explained_variance_ratio},
                {"scree", scree},
                {"loadings", loadings},
                {"scores", scores},
                {"warnings", r.warnings}};
}

}  // namespace diachron
