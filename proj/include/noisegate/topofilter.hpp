#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "noisegate/dataset.hpp"
#include "noisegate/detection.hpp"
#include "noisegate/matrix.hpp"
#include "noisegate/trainer.hpp"

namespace noisegate {

/// Undirected graph as sorted neighbor lists.
using Adjacency = std::vector<std::vector<std::size_t>>;

struct TopoConfig {
    std::size_t k_neighbors = 10;
    double zeta = 0.5;
    std::size_t first_filter_epoch = 10;
    std::size_t filter_interval = 5;
    TrainConfig train;

    void validate() const;
};

/// Union-symmetrized k-nearest-neighbor graph over the rows of `embeddings`.
Adjacency knn_graph(const Matrix& embeddings, std::size_t k);
Adjacency knn_graph(const std::vector<std::vector<std::size_t>>& neighbors);

/// Per class, the largest connected component of the subgraph induced by the
/// vertices carrying that label (ties: the component with the lowest vertex).
std::vector<bool> largest_component_per_class(const Adjacency& graph, std::span<const Label> labels);

/// Drops kept vertices whose k nearest neighbors (over all vertices) carry
/// the same label in a fraction below `zeta`.
std::vector<bool> zeta_filter(const std::vector<bool>& kept, const Matrix& embeddings,
                              std::span<const Label> labels, std::size_t k, double zeta);
std::vector<bool> zeta_filter(const std::vector<bool>& kept, const std::vector<std::vector<std::size_t>>& neighbors,
                              std::span<const Label> labels, double zeta);

/// Epochs (1-based) after which the filter runs.
std::vector<std::size_t> filter_schedule(const TopoConfig& cfg);

struct TopoResult {
    DetectionResult detection;
    Model model;  ///< trained online on the selected rows
    std::vector<std::size_t> filter_epochs;
};

/// Alternates training and clean-set selection; the final kept set's
/// complement is flagged.
TopoResult run_topofilter(const Dataset& ds, const TopoConfig& cfg);

}  // namespace noisegate
