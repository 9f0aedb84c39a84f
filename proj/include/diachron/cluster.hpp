#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <string>
#include <vector>

#include "diachron/error.hpp"
#include "diachron/feature_matrix.hpp"
#include "diachron/io.hpp"
#include "diachron/pca.hpp"

namespace diachron {

// Node ids follow the usual linkage convention: leaves are 0..n-1 and the
// cluster created by merge step s has id n + s.
struct Merge {
    std::size_t left = 0;
    std::size_t right = 0;
    double height = 0.0;
    std::size_t size = 0;
};

struct ClusterTree {
    std::vector<std::string> texts;
    std::vector<Merge> merges;

    std::size_t leaves() const noexcept { return texts.size(); }
};

// Agglomerative Ward clustering of row vectors under Euclidean distance
// (Lance-Williams update). Ties go to the pair whose smallest member index is
// lowest, then to the lowest partner.
inline std::vector<Merge> ward_linkage(const DenseMatrix& points) {
    const std::size_t n = points.size();
    std::vector<Merge> merges;
    if (n < 2) return merges;
    DenseMatrix dist(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < points[i].size(); ++k) {
                const double d = points[i][k] - points[j][k];
                s += d * d;
            }
            dist[i][j] = dist[j][i] = std::sqrt(s);
        }
    }
    // Slot i holds the cluster whose smallest member is leaf i.
    std::vector<bool> active(n, true);
    std::vector<std::size_t> node(n), size(n, 1);
    std::iota(node.begin(), node.end(), std::size_t{0});

    for (std::size_t step = 0; step + 1 < n; ++step) {
        std::size_t bi = 0, bj = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i) {
            if (!active[i]) continue;
            for (std::size_t j = i + 1; j < n; ++j) {
                if (!active[j]) continue;
                if (dist[i][j] < best) {
                    best = dist[i][j];
                    bi = i;
                    bj = j;
                }
            }
        }
        merges.push_back(Merge{std::min(node[bi], node[bj]), std::max(node[bi], node[bj]), best, size[bi] + size[bj]});
        const double ni = static_cast<double>(size[bi]), nj = static_cast<double>(size[bj]);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == bi || k == bj) continue;
            const double nk = static_cast<double>(size[k]);
            const double d2 = ((nk + ni) * dist[bi][k] * dist[bi][k] + (nk + nj) * dist[bj][k] * dist[bj][k] -
                               nk * best * best) /
                              (nk + ni + nj);
            dist[bi][k] = dist[k][bi] = std::sqrt(std::max(d2, 0.0));
        }
        active[bj] = false;
        size[bi] += size[bj];
        node[bi] = n + step;
    }
    return merges;
}

// Ward clustering of the texts' standardized feature vectors.
inline ClusterTree cluster(const FeatureMatrix& m) {
    if (m.num_texts() < 2) throw DomainError("cluster: need at least 2 texts");
    ClusterTree tree;
    tree.texts = m.texts;
    tree.merges = ward_linkage(standardize(m).z);
    return tree;
}

// Flat labels from undoing the last k-1 merges. Labels are numbered in order
// of each cluster's first text.
inline std::vector<std::size_t> cut_tree(const ClusterTree& tree, std::size_t k) {
    const std::size_t n = tree.leaves();
    if (k == 0 || k > n) throw DomainError("cut_tree: cluster count must be in [1, number of texts]");
    std::vector<std::size_t> parent(2 * n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (std::size_t s = 0; s < n - k; ++s) {
        const auto& mg = tree.merges[s];
        parent[find(mg.left)] = n + s;
        parent[find(mg.right)] = n + s;
    }
    std::map<std::size_t, std::size_t> label_of_root;
    std::vector<std::size_t> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto root = find(i);
        auto [it, inserted] = label_of_root.try_emplace(root, label_of_root.size());
        labels[i] = it->second;
    }
    return labels;
}

// Leaf order plus the four-point segments of each merge, ready for plotting.
inline json dendrogram_to_json(const ClusterTree& tree, std::size_t cut) {
    const std::size_t n = tree.leaves();
    std::vector<double> x(2 * n, 0.0), h(2 * n, 0.0);
    std::vector<std::size_t> order;
    std::vector<std::size_t> stack{n + tree.merges.size() - 1};
    if (tree.merges.empty()) stack = {0};
    while (!stack.empty()) {
        const auto id = stack.back();
        stack.pop_back();
        if (id < n) {
            order.push_back(id);
            continue;
        }
        const auto& mg = tree.merges[id - n];
        stack.push_back(mg.right);
        stack.push_back(mg.left);
    }
    for (std::size_t pos = 0; pos < order.size(); ++pos) x[order[pos]] = 5.0 + 10.0 * static_cast<double>(pos);
    json segments = json::array();
    json merges = json::array();
    for (std::size_t s = 0; s < tree.merges.size(); ++s) {
        const auto& mg = tree.merges[s];
        x[n + s] = (x[mg.left] + x[mg.right]) / 2.0;
        h[n + s] = mg.height;
        segments.push_back({{"x", {x[mg.left], x[mg.left], x[mg.right], x[mg.right]}},
                            {"y", {h[mg.left], mg.height, mg.height, h[mg.right]}}});
        merges.push_back({{"step", s}, {"left", mg.left}, {"right", mg.right}, {"height", mg.height}, {"size", mg.size}});
    }
    json leaves = json::array();
    for (auto id : order) leaves.push_back(tree.texts[id]);
    json labels = json::object();
    if (cut >= 1 && cut <= n) {
        const auto lab = cut_tree(tree, cut);
        for (std::size_t i = 0; i < n; ++i) labels[tree.texts[i]] = lab[i];
    }
    return json{{"linkage", "ward"},
                {"distance", "euclidean"},
                {"texts", tree.texts},
                {"merges", merges},
                {"leaf_order", leaves},
                {"segments", segments},
                {"cut", cut},
                {"labels", labels}};
}

}  // namespace diachron
