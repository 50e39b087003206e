#include "noisegate/noise.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "noisegate/random.hpp"

namespace noisegate {

namespace {

constexpr double kMaxClassNoise = 0.95;

void check_level(int num_classes, double level) {
    if (num_classes < 2) throw std::invalid_argument("transition matrix: need at least 2 classes");
    const double max_level = static_cast<double>(num_classes - 1) / num_classes;
    if (!(level >= 0.0 && level < max_level))
        throw std::invalid_argument("transition matrix: level must lie in [0, (K-1)/K)");
}

const char* type_name(NoiseType t) { return t == NoiseType::uniform ? "uniform" : "asymmetric"; }

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

double TransitionMatrix::trace_noise_level() const {
    const auto k = entries.rows();
    double trace = 0.0;
    for (std::size_t i = 0; i < k; ++i) trace += entries(i, i);
    return 1.0 - trace / static_cast<double>(k);
}

TransitionMatrix uniform_matrix(int num_classes, double level) {
    check_level(num_classes, level);
    const auto k = static_cast<std::size_t>(num_classes);
    TransitionMatrix t;
    t.entries = Matrix(k, k, level / static_cast<double>(k - 1));
    for (std::size_t i = 0; i < k; ++i) t.entries(i, i) = 1.0 - level;
    t.noise_level = level;
    t.type = NoiseType::uniform;
    return t;
}

TransitionMatrix asymmetric_matrix(int num_classes, double level, double sparsity, double sigma,
                                   std::uint64_t seed) {
    check_level(num_classes, level);
    if (!(sparsity >= 0.0 && sparsity < 1.0))
        throw std::invalid_argument("asymmetric_matrix: sparsity must lie in [0, 1)");
    if (!(sigma >= 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("asymmetric_matrix: sigma must be finite and >= 0");

    const auto k = static_cast<std::size_t>(num_classes);
    Rng rng(seed);

    // A zero floor would leave a row without any off-diagonal mass while the
    // overall level is positive.
    const double floor = level > 0.0 ? 1e-3 * level : 0.0;
    auto clip = [&](double x) { return std::clamp(x, floor, kMaxClassNoise); };

    std::vector<double> eta(k);
    for (auto& e : eta) e = clip(rng.normal(level, sigma));
    for (int iter = 0; iter < 10; ++iter) {
        const double m = mean(eta);
        if (std::abs(m - level) <= 1e-12 || m <= 0.0) break;
        for (auto& e : eta) e = clip(e * (level / m));
    }
    // Clipping at the ceiling can stall the multiplicative rescale; move the
    // remaining gap onto the rows that still have room.
    for (int iter = 0; iter < 10; ++iter) {
        const double gap = level - mean(eta);
        if (std::abs(gap) <= 1e-12) break;
        std::size_t free = 0;
        for (double e : eta)
            if (gap > 0 ? e < kMaxClassNoise : e > floor) ++free;
        if (free == 0) break;
        const double step = gap * static_cast<double>(k) / static_cast<double>(free);
        for (auto& e : eta)
            if (gap > 0 ? e < kMaxClassNoise : e > floor) e = clip(e + step);
    }
    if (std::abs(mean(eta) - level) > 1e-6)
        throw std::invalid_argument("asymmetric_matrix: cannot reach the requested level");

    const std::size_t targets = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::lround((1.0 - sparsity) * static_cast<double>(k - 1))));

    TransitionMatrix t;
    t.entries = Matrix(k, k, 0.0);
    std::vector<std::size_t> others;
    std::vector<double> weights(targets);
    for (std::size_t y = 0; y < k; ++y) {
        others.clear();
        for (std::size_t c = 0; c < k; ++c)
            if (c != y) others.push_back(c);
        // partial Fisher-Yates: the first `targets` entries are a uniform subset
        for (std::size_t i = 0; i < targets; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(others.size() - i));
            std::swap(others[i], others[j]);
        }
        double total = 0.0;
        for (auto& w : weights) {
            w = 1.0 - rng.uniform();  // (0, 1]
            total += w;
        }
        for (std::size_t i = 0; i < targets; ++i)
            t.entries(y, others[i]) = eta[y] > 0.0 ? eta[y] * weights[i] / total : 0.0;
        t.entries(y, y) = 1.0 - eta[y];
    }
    t.noise_level = level;
    t.type = NoiseType::asymmetric;
    t.sparsity = sparsity;
    t.seed = seed;
    return t;
}

Dataset corrupt(const Dataset& ds, const TransitionMatrix& t, std::uint64_t seed) {
    if (t.num_classes() != ds.num_classes)
        throw std::invalid_argument("corrupt: transition matrix has " + std::to_string(t.num_classes()) +
                                    " classes, dataset has " + std::to_string(ds.num_classes));
    Dataset out = ds;
    Rng rng(seed);
    const auto k = static_cast<std::size_t>(ds.num_classes);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.split[i] != Split::train) continue;
        const auto row = t.entries.row(static_cast<std::size_t>(ds.true_labels[i]));
        const double u = rng.uniform();
        double cumulative = 0.0;
        std::size_t drawn = k - 1;
        for (std::size_t c = 0; c < k; ++c) {
            cumulative += row[c];
            if (u < cumulative) {
                drawn = c;
                break;
            }
        }
        // rounding can leave the cumulative sum just below 1; fall back to the
        // last class with positive mass
        if (u >= cumulative)
            while (drawn > 0 && row[drawn] <= 0.0) --drawn;
        out.observed_labels[i] = static_cast<Label>(drawn);
    }
    return out;
}

double realized_noise_level(const Dataset& ds) {
    std::size_t train = 0, flipped = 0;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.split[i] != Split::train) continue;
        ++train;
        if (ds.observed_labels[i] != ds.true_labels[i]) ++flipped;
    }
    return train == 0 ? 0.0 : static_cast<double>(flipped) / static_cast<double>(train);
}

nlohmann::json to_json(const TransitionMatrix& t) {
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < t.entries.rows(); ++i) {
        const auto r = t.entries.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return {{"k", t.num_classes()},
            {"type", type_name(t.type)},
            {"level", t.noise_level},
            {"sparsity", t.sparsity},
            {"rows", std::move(rows)}};
}

TransitionMatrix transition_matrix_from_json(const nlohmann::json& j) {
    TransitionMatrix t;
    const auto k = j.at("k").get<std::size_t>();
    const auto rows = j.at("rows").get<std::vector<std::vector<double>>>();
    if (rows.size() != k) throw std::invalid_argument("transition matrix json: row count != k");
    t.entries = Matrix(k, k);
    for (std::size_t i = 0; i < k; ++i) {
        if (rows[i].size() != k) throw std::invalid_argument("transition matrix json: ragged rows");
        for (std::size_t c = 0; c < k; ++c) t.entries(i, c) = rows[i][c];
    }
    const auto type = j.at("type").get<std::string>();
    if (type == "uniform")
        t.type = NoiseType::uniform;
    else if (type == "asymmetric")
        t.type = NoiseType::asymmetric;
    else
        throw std::invalid_argument("transition matrix json: unknown type '" + type + "'");
    t.noise_level = j.at("level").get<double>();
    t.sparsity = j.value("sparsity", 0.0);
    return t;
}

}  // namespace noisegate
