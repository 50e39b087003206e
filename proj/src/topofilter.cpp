#include "noisegate/topofilter.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <stdexcept>

#include "noisegate/kernels.hpp"

namespace noisegate {

void TopoConfig::validate() const {
    if (k_neighbors < 1) throw std::invalid_argument("topofilter: k_neighbors must be >= 1");
    if (!(zeta >= 0.0 && zeta <= 1.0)) throw std::invalid_argument("topofilter: zeta must lie in [0, 1]");
    if (filter_interval < 1) throw std::invalid_argument("topofilter: filter_interval must be >= 1");
    if (first_filter_epoch < 1 || first_filter_epoch > train.epochs)
        throw std::invalid_argument("topofilter: first_filter_epoch must lie in [1, epochs]");
    train.validate();
}

Adjacency knn_graph(const std::vector<std::vector<std::size_t>>& neighbors) {
    Adjacency graph(neighbors.size());
    for (std::size_t a = 0; a < neighbors.size(); ++a)
        for (std::size_t b : neighbors[a]) {
            graph[a].push_back(b);
            graph[b].push_back(a);
        }
    for (auto& list : graph) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    return graph;
}

Adjacency knn_graph(const Matrix& embeddings, std::size_t k) {
    if (k >= embeddings.rows()) throw std::invalid_argument("knn_graph: k must be smaller than the point count");
    return knn_graph(kernels::knn(embeddings, k));
}

std::vector<bool> largest_component_per_class(const Adjacency& graph, std::span<const Label> labels) {
    if (labels.size() != graph.size())
        throw std::invalid_argument("largest_component_per_class: label count != vertex count");
    const std::size_t n = graph.size();
    const Label num_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;

    std::vector<int> component(n, -1);
    std::vector<std::size_t> best_root(static_cast<std::size_t>(num_classes), n);
    std::vector<std::size_t> best_size(static_cast<std::size_t>(num_classes), 0);
    std::vector<std::size_t> stack;
    int next_id = 0;
    // Vertices are visited in ascending order, so the first component found
    // for a class at a given size is the one holding the lowest vertex.
    for (std::size_t start = 0; start < n; ++start) {
        if (component[start] >= 0) continue;
        const Label c = labels[start];
        const int id = next_id++;
        std::size_t size = 0;
        stack.assign(1, start);
        component[start] = id;
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            ++size;
            for (std::size_t w : graph[v])
                if (component[w] < 0 && labels[w] == c) {
                    component[w] = id;
                    stack.push_back(w);
                }
        }
        const auto cls = static_cast<std::size_t>(c);
        if (size > best_size[cls]) {
            best_size[cls] = size;
            best_root[cls] = static_cast<std::size_t>(id);
        }
    }
    std::vector<bool> kept(n, false);
    for (std::size_t v = 0; v < n; ++v)
        kept[v] = best_root[static_cast<std::size_t>(labels[v])] == static_cast<std::size_t>(component[v]);
    return kept;
}

std::vector<bool> zeta_filter(const std::vector<bool>& kept, const std::vector<std::vector<std::size_t>>& neighbors,
                              std::span<const Label> labels, double zeta) {
    if (kept.size() != neighbors.size() || labels.size() != neighbors.size())
        throw std::invalid_argument("zeta_filter: size mismatch");
    std::vector<bool> out = kept;
    for (std::size_t v = 0; v < kept.size(); ++v) {
        if (!kept[v] || neighbors[v].empty()) continue;
        std::size_t same = 0;
        for (std::size_t w : neighbors[v])
            if (labels[w] == labels[v]) ++same;
        const double purity = static_cast<double>(same) / static_cast<double>(neighbors[v].size());
        if (purity < zeta) out[v] = false;
    }
    return out;
}

std::vector<bool> zeta_filter(const std::vector<bool>& kept, const Matrix& embeddings,
                              std::span<const Label> labels, std::size_t k, double zeta) {
    return zeta_filter(kept, kernels::knn(embeddings, k), labels, zeta);
}

std::vector<std::size_t> filter_schedule(const TopoConfig& cfg) {
    std::vector<std::size_t> epochs;
    for (std::size_t e = cfg.first_filter_epoch; e <= cfg.train.epochs; e += cfg.filter_interval) epochs.push_back(e);
    return epochs;
}

TopoResult run_topofilter(const Dataset& ds, const TopoConfig& cfg) {
    cfg.validate();
    const auto rows = ds.indices(Split::train);
    if (rows.size() <= cfg.k_neighbors)
        throw std::invalid_argument("topofilter: train split must have more than k_neighbors rows");
    const Matrix x = ds.features.select_rows(rows);
    std::vector<Label> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) y[i] = ds.observed_labels[rows[i]];
    std::set<Label> present(y.begin(), y.end());

    Trainer trainer(x, y, static_cast<std::size_t>(ds.num_classes), cfg.train);
    std::vector<bool> kept(rows.size(), true);
    std::vector<std::size_t> active(rows.size());
    std::iota(active.begin(), active.end(), std::size_t{0});

    TopoResult result;
    result.detection.method = "topofilter";
    const auto schedule = filter_schedule(cfg);
    bool filtering = true;
    std::size_t next_event = 0;
    for (std::size_t epoch = 1; epoch <= cfg.train.epochs; ++epoch) {
        trainer.run_epoch(active);
        if (!filtering || next_event >= schedule.size() || schedule[next_event] != epoch) continue;
        ++next_event;

        // Re-evaluated from the full train split each time, so rows dropped at
        // an earlier event can come back.
        const Matrix emb = embed(trainer.model(), x);
        const auto neighbors = kernels::knn(emb, cfg.k_neighbors);
        const auto components = largest_component_per_class(knn_graph(neighbors), y);
        const auto candidate = zeta_filter(components, neighbors, y, cfg.zeta);

        std::set<Label> kept_classes;
        std::size_t kept_count = 0;
        for (std::size_t i = 0; i < candidate.size(); ++i)
            if (candidate[i]) {
                ++kept_count;
                kept_classes.insert(y[i]);
            }
        if (kept_count < static_cast<std::size_t>(ds.num_classes) || kept_classes != present) {
            result.detection.diagnostics["degenerate_filter_epoch"] = static_cast<double>(epoch);
            filtering = false;
            continue;
        }
        result.filter_epochs.push_back(epoch);
        kept = candidate;
        active.clear();
        for (std::size_t i = 0; i < kept.size(); ++i)
            if (kept[i]) active.push_back(i);
    }

    auto& det = result.detection;
    det.rows = rows;
    det.flagged.resize(rows.size());
    det.scores.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        det.flagged[i] = !kept[i];
        det.scores[i] = kept[i] ? 0.0 : 1.0;
    }
    det.finalize();
    det.diagnostics["filter_events"] = static_cast<double>(result.filter_epochs.size());
    det.diagnostics["k_neighbors"] = static_cast<double>(cfg.k_neighbors);
    det.diagnostics["zeta"] = cfg.zeta;
    result.model = trainer.model();
    return result;
}

}  // namespace noisegate
