#include "noisegate/detection.hpp"

#include <algorithm>

namespace noisegate {

std::size_t DetectionResult::flagged_count() const {
    return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), true));
}

void DetectionResult::finalize() {
    predicted_noise_level =
        flagged.empty() ? 0.0 : static_cast<double>(flagged_count()) / static_cast<double>(flagged.size());
}

nlohmann::json to_json(const DetectionResult& r) {
    std::vector<std::size_t> flagged_rows;
    for (std::size_t i = 0; i < r.rows.size(); ++i)
        if (r.flagged[i]) flagged_rows.push_back(r.rows[i]);
    return {{"method", r.method},
            {"predicted_noise_level", r.predicted_noise_level},
            {"train_size", r.rows.size()},
            {"flagged_rows", flagged_rows},
            {"scores", r.scores},
            {"diagnostics", r.diagnostics}};
}

}  // namespace noisegate
