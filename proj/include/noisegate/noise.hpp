#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "noisegate/dataset.hpp"
#include "noisegate/matrix.hpp"

namespace noisegate {

enum class NoiseType { uniform, asymmetric };

/// K x K row-stochastic label corruption model:
/// entries(true, observed) = P(observed | true).
struct TransitionMatrix {
    Matrix entries;
    double noise_level = 0.0;
    NoiseType type = NoiseType::uniform;
    double sparsity = 0.0;
    std::uint64_t seed = 0;

    int num_classes() const { return static_cast<int>(entries.rows()); }
    /// 1 - trace / K.
    double trace_noise_level() const;
};

/// Diagonal 1 - level, off-diagonals level / (K - 1).
TransitionMatrix uniform_matrix(int num_classes, double level);

/// Per-class noise levels drawn around `level`, rescaled so their mean is
/// exactly `level`, each spread over a random subset of
/// max(1, round((1 - sparsity) (K - 1))) other classes.
TransitionMatrix asymmetric_matrix(int num_classes, double level, double sparsity, double sigma,
                                   std::uint64_t seed);

/// Redraws observed labels of train-split rows from T[true][.].
Dataset corrupt(const Dataset& ds, const TransitionMatrix& t, std::uint64_t seed);

/// Fraction of train rows whose observed label differs from the true one.
double realized_noise_level(const Dataset& ds);

nlohmann::json to_json(const TransitionMatrix& t);
TransitionMatrix transition_matrix_from_json(const nlohmann::json& j);

}  // namespace noisegate
