#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "noisegate/dataset.hpp"
#include "noisegate/detection.hpp"
#include "noisegate/matrix.hpp"
#include "noisegate/trainer.hpp"

namespace noisegate {

struct AumConfig {
    TrainConfig train;
    double threshold_percentile = 99.0;
    /// Share of the train split relabeled to the extra class; 1 / (K + 1)
    /// when unset.
    std::optional<double> threshold_fraction;
    bool two_run = true;

    double fraction_for(int num_classes) const;
    void validate(int num_classes) const;
};

struct MarginTrace {
    std::vector<double> aum;              ///< per row
    std::vector<std::vector<double>> margins_per_epoch;  ///< E x N
};

/// logits[assigned] - max over the other entries.
double margin(std::span<const double> logits, std::size_t assigned);

/// Per-row mean margin across all recorded epochs.
MarginTrace compute_aum(const TrainingTrace& trace, std::span<const Label> assigned, bool keep_epochs = false);

/// Linear-interpolation percentile (p in [0, 100]) of a non-empty sample.
double percentile(std::vector<double> values, double p);

/// Threshold-sample sets as positions into the train split: A, and a
/// disjoint B when two_run (empty otherwise). Both ascending.
struct ThresholdSets {
    std::vector<std::size_t> a;
    std::vector<std::size_t> b;
};
ThresholdSets threshold_sets(std::size_t n_train, int num_classes, const AumConfig& cfg);

struct ThresholdRun {
    std::vector<double> aum;  ///< per row of x
    double threshold = 0.0;   ///< percentile of the held-out rows' AuM
};

/// One training run with `held` relabeled to the extra class.
ThresholdRun threshold_run(const Matrix& x, std::span<const Label> observed, std::span<const std::size_t> held,
                           int num_classes, const AumConfig& cfg, std::uint64_t seed);

/// Area-under-the-margin detection with extra-class threshold samples. The
/// diagnostics carry the threshold of each run.
DetectionResult run_aum(const Dataset& ds, const AumConfig& cfg);

}  // namespace noisegate
