#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "noisegate/matrix.hpp"

namespace noisegate {

using Label = int;

enum class Split : std::uint8_t { unassigned, train, val, test };

const char* to_string(Split s);

/// Feature vectors with true and observed labels.
///
/// observed_labels starts equal to true_labels; only noise::corrupt changes it,
/// and only on train-split rows.
struct Dataset {
    Matrix features;
    std::vector<Label> true_labels;
    std::vector<Label> observed_labels;
    std::vector<Split> split;
    int num_classes = 0;
    std::vector<std::string> class_names;

    std::size_t size() const { return true_labels.size(); }
    std::size_t dim() const { return features.cols(); }

    /// Row indices tagged with the given split, ascending.
    std::vector<std::size_t> indices(Split s) const;

    /// Throws std::invalid_argument when an invariant is broken.
    void validate() const;

    bool operator==(const Dataset&) const = default;
};

struct BlobsParams {
    int num_classes = 4;
    std::size_t n_per_class = 200;
    std::size_t dim = 16;
    double separation = 10.0;
    double spread = 1.0;
    std::uint64_t seed = 0;
};

/// Isotropic Gaussian classes around centers whose pairwise distance is at
/// least `separation`.
Dataset make_blobs(const BlobsParams& p);

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

/// Stratified split; per class, a seeded shuffle followed by largest-remainder
/// allocation of the counts.
Dataset split(const Dataset& ds, SplitFractions fractions, std::uint64_t seed);

/// Per-split counts for `n` samples, largest-remainder rounding. Ties on the
/// remainder go to the earlier split.
std::array<std::size_t, 3> allocate_counts(std::size_t n, SplitFractions fractions);

/// CSV with header f0..f{d-1},label, plus optional `<path>.meta.json` sidecar.
Dataset load_features(const std::filesystem::path& path);
void save_features(const Dataset& ds, const std::filesystem::path& path);

}  // namespace noisegate
