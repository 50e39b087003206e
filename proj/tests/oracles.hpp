#pragma once

// Brute-force reference computations for tests. Deliberately written along a
// different route than the library (full sorts, union-find, explicit
// enumeration) so agreement is meaningful.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "noisegate/dataset.hpp"
#include "noisegate/matrix.hpp"

namespace oracle {

using noisegate::Label;
using noisegate::Matrix;

inline double distance(const Matrix& x, std::size_t a, std::size_t b) {
    double acc = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) acc += (x(a, c) - x(b, c)) * (x(a, c) - x(b, c));
    return std::sqrt(acc);
}

/// k nearest other points by full stable sort over (distance, index).
inline std::vector<std::vector<std::size_t>> knn(const Matrix& x, std::size_t k) {
    std::vector<std::vector<std::size_t>> out(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        std::vector<std::pair<double, std::size_t>> all;
        for (std::size_t j = 0; j < x.rows(); ++j)
            if (j != i) all.emplace_back(distance(x, i, j), j);
        std::stable_sort(all.begin(), all.end());
        for (std::size_t r = 0; r < k; ++r) out[i].push_back(all[r].second);
    }
    return out;
}

/// Edge set {a < b} of the union-symmetrized kNN graph.
inline std::set<std::pair<std::size_t, std::size_t>> knn_edges(const Matrix& x, std::size_t k) {
    std::set<std::pair<std::size_t, std::size_t>> edges;
    const auto nn = knn(x, k);
    for (std::size_t a = 0; a < nn.size(); ++a)
        for (std::size_t b : nn[a]) edges.insert({std::min(a, b), std::max(a, b)});
    return edges;
}

struct UnionFind {
    std::vector<std::size_t> parent;
    explicit UnionFind(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

/// Per-class largest component via union-find over same-label edges.
inline std::vector<bool> largest_components(std::size_t n, const std::set<std::pair<std::size_t, std::size_t>>& edges,
                                            const std::vector<Label>& labels) {
    UnionFind uf(n);
    for (auto [a, b] : edges)
        if (labels[a] == labels[b]) uf.unite(a, b);
    // root -> members; roots are the minimum vertex of each component
    std::map<std::size_t, std::vector<std::size_t>> comps;
    for (std::size_t v = 0; v < n; ++v) comps[uf.find(v)].push_back(v);
    std::map<Label, std::pair<std::size_t, std::size_t>> best;  // label -> (size, root)
    for (const auto& [root, members] : comps) {
        const Label c = labels[root];
        auto it = best.find(c);
        if (it == best.end() || members.size() > it->second.first ||
            (members.size() == it->second.first && root < it->second.second))
            best[c] = {members.size(), root};
    }
    std::vector<bool> kept(n, false);
    for (std::size_t v = 0; v < n; ++v) kept[v] = best[labels[v]].second == uf.find(v);
    return kept;
}

inline std::vector<bool> zeta(const std::vector<bool>& kept, const Matrix& x, const std::vector<Label>& labels,
                              std::size_t k, double zeta) {
    const auto nn = knn(x, k);
    std::vector<bool> out(kept.size());
    for (std::size_t v = 0; v < kept.size(); ++v) {
        if (!kept[v]) continue;
        std::size_t same = 0;
        for (std::size_t w : nn[v]) same += labels[w] == labels[v];
        out[v] = static_cast<double>(same) >= zeta * static_cast<double>(k);
    }
    return out;
}

inline double margin(const std::vector<double>& z, std::size_t label) {
    std::vector<double> others;
    for (std::size_t j = 0; j < z.size(); ++j)
        if (j != label) others.push_back(z[j]);
    std::sort(others.begin(), others.end());
    return z[label] - others.back();
}

struct ClOutcome {
    std::vector<double> thresholds;
    std::vector<std::vector<std::size_t>> counts;
    std::vector<std::vector<double>> q;
    std::vector<bool> flagged;
};

/// Confident-learning pipeline (thresholds, joint, calibration, prune by
/// noise rate) by explicit enumeration.
inline ClOutcome confident_learning(const Matrix& p, const std::vector<Label>& y) {
    const std::size_t n = y.size(), k = p.cols();
    ClOutcome out;
    out.thresholds.assign(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) {
        double s = 0.0;
        std::size_t c = 0;
        for (std::size_t i = 0; i < n; ++i)
            if (static_cast<std::size_t>(y[i]) == j) {
                s += p(i, j);
                ++c;
            }
        out.thresholds[j] = s / static_cast<double>(c);
    }
    out.counts.assign(k, std::vector<std::size_t>(k, 0));
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::pair<double, std::size_t>> confident;  // (-prob, class) sorts best first
        for (std::size_t j = 0; j < k; ++j)
            if (p(i, j) >= out.thresholds[j]) confident.emplace_back(-p(i, j), j);
        if (confident.empty()) continue;
        std::sort(confident.begin(), confident.end());
        ++out.counts[static_cast<std::size_t>(y[i])][confident.front().second];
    }
    std::vector<double> class_size(k, 0.0);
    for (Label c : y) class_size[static_cast<std::size_t>(c)] += 1.0;
    out.q.assign(k, std::vector<double>(k, 0.0));
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < k; ++j) row += static_cast<double>(out.counts[i][j]);
        if (row == 0.0) continue;
        for (std::size_t j = 0; j < k; ++j) {
            out.q[i][j] = static_cast<double>(out.counts[i][j]) / row * class_size[i];
            total += out.q[i][j];
        }
    }
    if (total > 0)
        for (auto& r : out.q)
            for (double& v : r) v /= total;

    out.flagged.assign(n, false);
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            auto want = static_cast<std::size_t>(std::llround(static_cast<double>(n) * out.q[i][j]));
            std::vector<std::pair<double, std::size_t>> ranked;  // (-p_j, index)
            for (std::size_t s = 0; s < n; ++s)
                if (static_cast<std::size_t>(y[s]) == i) ranked.emplace_back(-p(s, j), s);
            std::sort(ranked.begin(), ranked.end());
            want = std::min(want, ranked.size());
            for (std::size_t r = 0; r < want; ++r) out.flagged[ranked[r].second] = true;
        }
    return out;
}

struct Counts {
    double precision, recall, f1, remaining;
};

inline Counts detection(const std::vector<bool>& flagged, const std::vector<bool>& noisy) {
    double tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < flagged.size(); ++i) {
        tp += flagged[i] && noisy[i];
        fp += flagged[i] && !noisy[i];
        fn += !flagged[i] && noisy[i];
        tn += !flagged[i] && !noisy[i];
    }
    Counts c{};
    if (tp + fn == 0) {
        c.recall = 1.0;
        c.precision = tp + fp == 0 ? 1.0 : 0.0;
    } else {
        c.recall = tp / (tp + fn);
        c.precision = tp + fp == 0 ? 0.0 : tp / (tp + fp);
    }
    c.f1 = c.precision + c.recall == 0 ? 0.0 : 2 * c.precision * c.recall / (c.precision + c.recall);
    c.remaining = fn + tn == 0 ? 0.0 : fn / (fn + tn);
    return c;
}

/// Nearest class mean (means from true labels) prediction.
inline std::vector<Label> nearest_center(const noisegate::Dataset& ds) {
    const auto k = static_cast<std::size_t>(ds.num_classes);
    Matrix mean(k, ds.dim());
    std::vector<double> count(k, 0.0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto c = static_cast<std::size_t>(ds.true_labels[i]);
        count[c] += 1.0;
        for (std::size_t f = 0; f < ds.dim(); ++f) mean(c, f) += ds.features(i, f);
    }
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t f = 0; f < ds.dim(); ++f) mean(c, f) /= count[c];
    std::vector<Label> out(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        double best = INFINITY;
        for (std::size_t c = 0; c < k; ++c) {
            double d = 0.0;
            for (std::size_t f = 0; f < ds.dim(); ++f) d += std::pow(ds.features(i, f) - mean(c, f), 2);
            if (d < best) {
                best = d;
                out[i] = static_cast<Label>(c);
            }
        }
    }
    return out;
}

/// Wilson-Hilferty approximation of the chi-square upper quantile.
inline double chi2_quantile(double df, double z) {
    const double a = 2.0 / (9.0 * df);
    return df * std::pow(1.0 - a + z * std::sqrt(a), 3);
}

}  // namespace oracle
