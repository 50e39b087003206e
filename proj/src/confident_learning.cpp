#include "noisegate/confident_learning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace noisegate {

namespace {

void check_shapes(const Matrix& probs, std::span<const Label> observed) {
    if (probs.rows() != observed.size()) throw std::invalid_argument("confident learning: probs rows != label count");
    for (Label y : observed)
        if (y < 0 || static_cast<std::size_t>(y) >= probs.cols())
            throw std::invalid_argument("confident learning: label outside [0, K)");
}

}  // namespace

std::vector<double> class_thresholds(const Matrix& probs, std::span<const Label> observed) {
    check_shapes(probs, observed);
    const std::size_t k = probs.cols();
    std::vector<double> sum(k, 0.0);
    std::vector<std::size_t> count(k, 0);
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const auto c = static_cast<std::size_t>(observed[i]);
        sum[c] += probs(i, c);
        ++count[c];
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (count[c] == 0) throw std::invalid_argument("class_thresholds: class " + std::to_string(c) + " is empty");
        sum[c] /= static_cast<double>(count[c]);
    }
    return sum;
}

ConfidentJoint confident_joint(const Matrix& probs, std::span<const Label> observed,
                               std::span<const double> thresholds) {
    check_shapes(probs, observed);
    const std::size_t k = probs.cols();
    if (thresholds.size() != k) throw std::invalid_argument("confident_joint: need one threshold per class");

    ConfidentJoint joint;
    joint.thresholds.assign(thresholds.begin(), thresholds.end());
    joint.counts.assign(k, std::vector<std::size_t>(k, 0));
    std::vector<std::size_t> class_size(k, 0);
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const auto row = probs.row(i);
        const auto given = static_cast<std::size_t>(observed[i]);
        ++class_size[given];
        std::size_t best = k;
        for (std::size_t j = 0; j < k; ++j)
            if (row[j] >= thresholds[j] && (best == k || row[j] > row[best])) best = j;
        if (best < k) ++joint.counts[given][best];
    }

    joint.calibrated = Matrix(k, k, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t row_sum = std::accumulate(joint.counts[i].begin(), joint.counts[i].end(), std::size_t{0});
        if (row_sum == 0) continue;
        for (std::size_t j = 0; j < k; ++j) {
            const double v = static_cast<double>(joint.counts[i][j]) / static_cast<double>(row_sum) *
                             static_cast<double>(class_size[i]);
            joint.calibrated(i, j) = v;
            total += v;
        }
    }
    if (total > 0.0)
        for (double& v : joint.calibrated.values()) v /= total;
    return joint;
}

DetectionResult prune(const Matrix& probs, std::span<const Label> observed, const ConfidentJoint& joint) {
    check_shapes(probs, observed);
    const std::size_t n = observed.size();
    const std::size_t k = probs.cols();
    if (joint.calibrated.rows() != k) throw std::invalid_argument("prune: joint has the wrong class count");

    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(observed[i])].push_back(i);

    DetectionResult det;
    det.method = "cl";
    det.rows.resize(n);
    std::iota(det.rows.begin(), det.rows.end(), std::size_t{0});
    det.flagged.assign(n, false);
    det.scores.assign(n, 0.0);
    std::size_t clamped = 0;
    std::size_t targeted = 0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            if (i == j) continue;
            auto want = static_cast<std::size_t>(std::llround(static_cast<double>(n) * joint.calibrated(i, j)));
            if (want == 0) continue;
            if (want > members[i].size()) {
                want = members[i].size();
                ++clamped;
            }
            targeted += want;
            std::vector<std::size_t> ranked = members[i];
            std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(want), ranked.end(),
                              [&](std::size_t a, std::size_t b) {
                                  return probs(a, j) > probs(b, j) || (probs(a, j) == probs(b, j) && a < b);
                              });
            for (std::size_t r = 0; r < want; ++r) det.flagged[ranked[r]] = true;
        }
    }
    for (std::size_t s = 0; s < n; ++s) {
        const auto given = static_cast<std::size_t>(observed[s]);
        double best_other = -1.0;
        for (std::size_t j = 0; j < k; ++j)
            if (j != given) best_other = std::max(best_other, probs(s, j));
        det.scores[s] = best_other - probs(s, given);
    }
    det.finalize();
    det.diagnostics["targeted"] = static_cast<double>(targeted);
    if (clamped > 0) det.diagnostics["clamped_pairs"] = static_cast<double>(clamped);
    return det;
}

ClResult run_cl(const Dataset& ds, const TrainConfig& cfg, std::size_t folds) {
    const auto cv = cv_predict(ds, cfg, folds);
    std::vector<Label> y(cv.rows.size());
    for (std::size_t i = 0; i < cv.rows.size(); ++i) y[i] = ds.observed_labels[cv.rows[i]];

    ClResult out;
    const auto thresholds = class_thresholds(cv.probs, y);
    out.joint = confident_joint(cv.probs, y, thresholds);
    out.detection = prune(cv.probs, y, out.joint);
    out.detection.rows = cv.rows;
    out.detection.diagnostics["folds"] = static_cast<double>(folds);
    return out;
}

nlohmann::json to_json(const ConfidentJoint& j) {
    nlohmann::json q = nlohmann::json::array();
    for (std::size_t i = 0; i < j.calibrated.rows(); ++i) {
        const auto r = j.calibrated.row(i);
        q.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return {{"counts", j.counts}, {"calibrated", std::move(q)}, {"thresholds", j.thresholds}};
}

}  // namespace noisegate
