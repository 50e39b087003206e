#include "noisegate/metrics.hpp"

#include <cmath>
#include <cstddef>
#include <stdexcept>

namespace noisegate {

DetectionMetrics detection_metrics(const std::vector<bool>& flagged, const std::vector<bool>& truly_noisy) {
    if (flagged.size() != truly_noisy.size()) throw std::invalid_argument("detection_metrics: mask length mismatch");
    std::size_t tp = 0, fp = 0, fn = 0, kept = 0;
    for (std::size_t i = 0; i < flagged.size(); ++i) {
        if (flagged[i] && truly_noisy[i]) ++tp;
        else if (flagged[i]) ++fp;
        else {
            ++kept;
            if (truly_noisy[i]) ++fn;
        }
    }
    DetectionMetrics m;
    const std::size_t noisy = tp + fn;
    m.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : (noisy == 0 ? 1.0 : 0.0);
    m.recall = noisy > 0 ? static_cast<double>(tp) / static_cast<double>(noisy) : 1.0;
    m.f1 = m.precision + m.recall > 0.0 ? 2.0 * m.precision * m.recall / (m.precision + m.recall) : 0.0;
    m.remaining_noise = kept > 0 ? static_cast<double>(fn) / static_cast<double>(kept) : 0.0;
    return m;
}

NoiseLevelMetrics noise_level_metrics(double predicted, double truth) {
    NoiseLevelMetrics m;
    m.delta = predicted - truth;
    const double denom = std::abs(predicted) + std::abs(truth);
    m.smape = denom > 0.0 ? 2.0 * std::abs(predicted - truth) / denom * 100.0 : 0.0;
    return m;
}

FilterMetrics filter_metrics(const std::vector<bool>& flagged, const std::vector<bool>& truly_noisy) {
    const auto d = detection_metrics(flagged, truly_noisy);
    std::size_t n_flagged = 0, n_noisy = 0;
    for (std::size_t i = 0; i < flagged.size(); ++i) {
        n_flagged += flagged[i] ? 1 : 0;
        n_noisy += truly_noisy[i] ? 1 : 0;
    }
    const double n = flagged.empty() ? 1.0 : static_cast<double>(flagged.size());
    FilterMetrics f;
    f.precision = d.precision;
    f.recall = d.recall;
    f.f1 = d.f1;
    f.remaining_noise = d.remaining_noise;
    f.predicted_noise_level = static_cast<double>(n_flagged) / n;
    f.true_noise_level = static_cast<double>(n_noisy) / n;
    const auto level = noise_level_metrics(f.predicted_noise_level, f.true_noise_level);
    f.delta_noise = level.delta;
    f.smape = level.smape;
    return f;
}

}  // namespace noisegate
