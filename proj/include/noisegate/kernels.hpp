#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "noisegate/matrix.hpp"

// Data-parallel inner loops. Each kernel has an OpenMP version and a serial
// reference in `kernels::serial`; both produce bit-identical output because
// every output element is computed by exactly one thread in a fixed order.
namespace noisegate::kernels {

/// out = X W^T + b, optionally followed by max(0, .). W is (out_dim x in_dim).
Matrix affine(const Matrix& x, const Matrix& w, std::span<const double> b, bool relu);

/// Squared Euclidean distance between every pair of rows.
Matrix pairwise_sq_distances(const Matrix& x);

/// For each row, the indices of its k nearest other rows ordered by
/// (distance, index). Requires k < rows.
std::vector<std::vector<std::size_t>> knn(const Matrix& x, std::size_t k);

/// Number of OpenMP threads the parallel kernels would use (1 without OpenMP).
int max_threads();

namespace serial {

Matrix affine(const Matrix& x, const Matrix& w, std::span<const double> b, bool relu);
Matrix pairwise_sq_distances(const Matrix& x);
std::vector<std::vector<std::size_t>> knn(const Matrix& x, std::size_t k);

}  // namespace serial

}  // namespace noisegate::kernels
