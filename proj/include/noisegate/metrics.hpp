#pragma once

#include <vector>

namespace noisegate {

struct DetectionMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double remaining_noise = 0.0;  ///< noisy share of the unflagged rows
};

struct NoiseLevelMetrics {
    double delta = 0.0;  ///< predicted - true
    double smape = 0.0;  ///< percent, in [0, 200]
};

struct FilterMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double remaining_noise = 0.0;
    double predicted_noise_level = 0.0;
    double true_noise_level = 0.0;
    double delta_noise = 0.0;
    double smape = 0.0;
};

/// Positive class = noisy. With nothing flagged, precision is 0 if noise
/// exists; with no noise at all, recall is 1, and precision is 1 as long as
/// nothing was flagged.
DetectionMetrics detection_metrics(const std::vector<bool>& flagged, const std::vector<bool>& truly_noisy);

/// SMAPE(0, 0) is 0.
NoiseLevelMetrics noise_level_metrics(double predicted, double truth);

FilterMetrics filter_metrics(const std::vector<bool>& flagged, const std::vector<bool>& truly_noisy);

}  // namespace noisegate
