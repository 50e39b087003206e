#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace noisegate {

/// Verdicts of one detector over the train split. Entries follow `rows`
/// (dataset row indices of the train split, ascending).
struct DetectionResult {
    std::string method;
    std::vector<std::size_t> rows;
    std::vector<bool> flagged;   ///< true = predicted noisy
    std::vector<double> scores;  ///< higher = more suspicious
    double predicted_noise_level = 0.0;
    std::map<std::string, double> diagnostics;

    std::size_t flagged_count() const;
    /// Sets predicted_noise_level from the flag mask.
    void finalize();
};

nlohmann::json to_json(const DetectionResult& r);

}  // namespace noisegate
