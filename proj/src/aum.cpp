#include "noisegate/aum.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace noisegate {

double AumConfig::fraction_for(int num_classes) const {
    return threshold_fraction.value_or(1.0 / static_cast<double>(num_classes + 1));
}

void AumConfig::validate(int num_classes) const {
    train.validate();
    if (!(threshold_percentile > 0.0 && threshold_percentile <= 100.0))
        throw std::invalid_argument("aum: threshold_percentile must lie in (0, 100]");
    const double f = fraction_for(num_classes);
    if (!(f > 0.0 && f < 0.5)) throw std::invalid_argument("aum: threshold_fraction must lie in (0, 0.5)");
}

double margin(std::span<const double> logits, std::size_t assigned) {
    if (logits.size() < 2) throw std::invalid_argument("margin: need at least 2 logits");
    if (assigned >= logits.size()) throw std::invalid_argument("margin: assigned label out of range");
    double other = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < logits.size(); ++j)
        if (j != assigned) other = std::max(other, logits[j]);
    return logits[assigned] - other;
}

MarginTrace compute_aum(const TrainingTrace& trace, std::span<const Label> assigned, bool keep_epochs) {
    if (trace.logits_per_epoch.empty()) throw std::invalid_argument("compute_aum: trace has no recorded logits");
    const std::size_t n = assigned.size();
    MarginTrace out;
    out.aum.assign(n, 0.0);
    for (const Matrix& z : trace.logits_per_epoch) {
        if (z.rows() != n) throw std::invalid_argument("compute_aum: logits rows != label count");
        std::vector<double> margins(n);
        for (std::size_t i = 0; i < n; ++i) {
            margins[i] = margin(z.row(i), static_cast<std::size_t>(assigned[i]));
            out.aum[i] += margins[i];
        }
        if (keep_epochs) out.margins_per_epoch.push_back(std::move(margins));
    }
    const double epochs = static_cast<double>(trace.logits_per_epoch.size());
    for (double& a : out.aum) a /= epochs;
    return out;
}

double percentile(std::vector<double> values, double p) {
    if (values.empty()) throw std::invalid_argument("percentile: empty sample");
    std::sort(values.begin(), values.end());
    const double pos = std::clamp(p, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

ThresholdSets threshold_sets(std::size_t n, int num_classes, const AumConfig& cfg) {
    const auto count = static_cast<std::size_t>(std::lround(cfg.fraction_for(num_classes) * static_cast<double>(n)));
    if (count == 0) throw std::invalid_argument("aum: threshold set is empty (degenerate threshold)");
    if (cfg.two_run && 2 * count > n) throw std::invalid_argument("aum: train split too small for two threshold sets");

    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    Rng rng(derive_seed(cfg.train.seed, "aum-threshold-sets"));
    rng.shuffle(std::span<std::size_t>(perm));
    ThresholdSets sets;
    sets.a.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(count));
    if (cfg.two_run)
        sets.b.assign(perm.begin() + static_cast<std::ptrdiff_t>(count),
                      perm.begin() + static_cast<std::ptrdiff_t>(2 * count));
    std::sort(sets.a.begin(), sets.a.end());
    std::sort(sets.b.begin(), sets.b.end());
    return sets;
}

ThresholdRun threshold_run(const Matrix& x, std::span<const Label> observed, std::span<const std::size_t> held,
                           int num_classes, const AumConfig& cfg, std::uint64_t seed) {
    if (held.empty()) throw std::invalid_argument("aum: threshold set is empty (degenerate threshold)");
    std::vector<Label> assigned(observed.begin(), observed.end());
    for (std::size_t i : held) assigned[i] = num_classes;
    TrainConfig tc = cfg.train;
    tc.record_logits = true;
    tc.subset.reset();
    tc.seed = seed;
    const auto result = fit(x, assigned, static_cast<std::size_t>(num_classes) + 1, tc);

    ThresholdRun run;
    run.aum = compute_aum(result.trace, assigned).aum;
    std::vector<double> held_aum;
    held_aum.reserve(held.size());
    for (std::size_t i : held) held_aum.push_back(run.aum[i]);
    run.threshold = percentile(std::move(held_aum), cfg.threshold_percentile);
    return run;
}

DetectionResult run_aum(const Dataset& ds, const AumConfig& cfg) {
    cfg.validate(ds.num_classes);
    const auto rows = ds.indices(Split::train);
    const std::size_t n = rows.size();
    const Matrix x = ds.features.select_rows(rows);
    std::vector<Label> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = ds.observed_labels[rows[i]];

    const auto sets = threshold_sets(n, ds.num_classes, cfg);
    const auto& set_a = sets.a;
    const auto& set_b = sets.b;
    const std::size_t count = set_a.size();

    const std::size_t runs = cfg.two_run ? 2 : 1;
    std::vector<ThresholdRun> results(runs);
    std::vector<std::string> errors(runs);
#pragma omp parallel for schedule(static, 1)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(runs); ++r) {
        try {
            const auto& held = r == 0 ? set_a : set_b;
            results[static_cast<std::size_t>(r)] = threshold_run(
                x, y, held, ds.num_classes, cfg, derive_seed(cfg.train.seed, static_cast<std::uint64_t>(r) + 1));
        } catch (const std::exception& e) {
            errors[static_cast<std::size_t>(r)] = e.what();
        }
    }
    for (std::size_t r = 0; r < runs; ++r)
        if (!errors[r].empty()) throw std::runtime_error("aum run " + std::to_string(r + 1) + ": " + errors[r]);

    DetectionResult det;
    det.method = "aum";
    det.rows = rows;
    det.flagged.assign(n, false);
    det.scores.assign(n, 0.0);
    std::vector<bool> in_a(n, false);
    for (std::size_t i : set_a) in_a[i] = true;
    for (std::size_t i = 0; i < n; ++i) {
        if (in_a[i]) {
            if (!cfg.two_run) continue;  // unscored without the second run
            det.scores[i] = -results[1].aum[i];
            det.flagged[i] = results[1].aum[i] <= results[1].threshold;
        } else {
            det.scores[i] = -results[0].aum[i];
            det.flagged[i] = results[0].aum[i] <= results[0].threshold;
        }
    }
    det.finalize();
    det.diagnostics["threshold_samples"] = static_cast<double>(count);
    det.diagnostics["threshold_run1"] = results[0].threshold;
    if (cfg.two_run) det.diagnostics["threshold_run2"] = results[1].threshold;
    else det.diagnostics["unscored"] = static_cast<double>(count);
    return det;
}

}  // namespace noisegate
