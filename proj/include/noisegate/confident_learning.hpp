#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "noisegate/dataset.hpp"
#include "noisegate/detection.hpp"
#include "noisegate/matrix.hpp"
#include "noisegate/trainer.hpp"

namespace noisegate {

/// counts(i, j): confident examples observed as i and predicted as j.
/// calibrated: counts rescaled to the observed class sizes, normalized to 1.
struct ConfidentJoint {
    std::vector<std::vector<std::size_t>> counts;
    Matrix calibrated;
    std::vector<double> thresholds;
};

/// t_j = mean of probs[., j] over rows observed as j.
std::vector<double> class_thresholds(const Matrix& probs, std::span<const Label> observed);

ConfidentJoint confident_joint(const Matrix& probs, std::span<const Label> observed,
                               std::span<const double> thresholds);

/// Prune by noise rate: for every off-diagonal (i, j), flag the
/// round(N * Q(i, j)) rows observed as i with the largest probs[., j].
DetectionResult prune(const Matrix& probs, std::span<const Label> observed, const ConfidentJoint& joint);

struct ClResult {
    DetectionResult detection;
    ConfidentJoint joint;
};

ClResult run_cl(const Dataset& ds, const TrainConfig& cfg, std::size_t folds = 4);

nlohmann::json to_json(const ConfidentJoint& j);

}  // namespace noisegate
