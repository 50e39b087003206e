#include <doctest.h>

#include <cmath>
#include <numeric>

#include "noisegate/confident_learning.hpp"
#include "noisegate/dataset.hpp"
#include "noisegate/metrics.hpp"
#include "noisegate/noise.hpp"
#include "noisegate/random.hpp"
#include "oracles.hpp"

using namespace noisegate;

namespace {

Matrix random_probs(std::size_t n, std::size_t k, Rng& gen) {
    Matrix p(n, k);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (double& v : p.row(i)) {
            // occasional exact zeros and repeats exercise the tie rules
            v = gen.below(5) == 0 ? 0.0 : static_cast<double>(1 + gen.below(6));
            s += v;
        }
        if (s == 0.0) {
            p(i, 0) = 1.0;
            s = 1.0;
        }
        for (double& v : p.row(i)) v /= s;
    }
    return p;
}

Dataset noisy_blobs(double level, std::uint64_t seed) {
    const auto clean = split(make_blobs({.num_classes = 4, .n_per_class = 200, .dim = 16, .separation = 10.0,
                                         .spread = 1.0, .seed = seed}),
                             {}, seed);
    return corrupt(clean, uniform_matrix(4, level), seed + 100);
}

}  // namespace

TEST_CASE("class_thresholds examples") {
    const Matrix uniform(4, 2, 0.5);
    CHECK(class_thresholds(uniform, std::vector<Label>{0, 1, 0, 1}) == std::vector<double>{0.5, 0.5});

    const Matrix p(3, 2, std::vector<double>{0.9, 0.1, 0.7, 0.3, 0.4, 0.6});
    const auto t = class_thresholds(p, std::vector<Label>{0, 0, 1});
    CHECK(t[0] == doctest::Approx(0.8));
    CHECK(t[1] == doctest::Approx(0.6));
    CHECK_THROWS_AS(class_thresholds(p, std::vector<Label>{0, 0, 0}), std::invalid_argument);
}

TEST_CASE("confident_joint with one-hot probabilities is diagonal") {
    const std::vector<Label> y{0, 1, 2, 1, 0, 0};
    Matrix p(6, 3, 0.0);
    for (std::size_t i = 0; i < 6; ++i) p(i, static_cast<std::size_t>(y[i])) = 1.0;
    const auto j = confident_joint(p, y, class_thresholds(p, y));
    CHECK(j.counts == std::vector<std::vector<std::size_t>>{{3, 0, 0}, {0, 2, 0}, {0, 0, 1}});
    CHECK(j.calibrated(0, 0) == doctest::Approx(0.5));
    const auto det = prune(p, y, j);
    CHECK(det.flagged_count() == 0);
    CHECK(det.predicted_noise_level == 0.0);
}

TEST_CASE("confident_joint on a hand-counted six-sample instance") {
    // thresholds t = (0.6, 0.5)
    const Matrix p(6, 2, std::vector<double>{0.9, 0.1,    // obs 0 -> confident 0
                                             0.3, 0.7,    // obs 0 -> confident 1
                                             0.55, 0.45,  // obs 0 -> none
                                             0.2, 0.8,    // obs 1 -> confident 1
                                             0.6, 0.4,    // obs 1 -> confident 0
                                             0.65, 0.55}); // obs 1 -> both, 0.65 wins
    const std::vector<Label> y{0, 0, 0, 1, 1, 1};
    const std::vector<double> t{0.6, 0.5};
    const auto j = confident_joint(p, y, t);
    CHECK(j.counts == std::vector<std::vector<std::size_t>>{{1, 1}, {2, 1}});
    const auto o = oracle::confident_learning(p, y);  // oracle uses its own thresholds
    const auto jo = confident_joint(p, y, class_thresholds(p, y));
    CHECK(jo.counts == o.counts);
}

TEST_CASE("prune flags the top-ranked rows of a targeted pair") {
    // N = 6, Q(0, 1) = 2/6: the two class-0 rows with the largest p(1)
    const Matrix p(6, 2, std::vector<double>{0.9, 0.1, 0.4, 0.6, 0.5, 0.5, 0.3, 0.7, 0.1, 0.9, 0.2, 0.8});
    const std::vector<Label> y{0, 0, 0, 0, 1, 1};
    ConfidentJoint j;
    j.counts = {{2, 2}, {0, 2}};
    j.calibrated = Matrix(2, 2, std::vector<double>{2.0 / 6, 2.0 / 6, 0.0, 2.0 / 6});
    j.thresholds = {0.5, 0.5};
    const auto det = prune(p, y, j);
    CHECK(det.flagged == std::vector<bool>{false, true, false, true, false, false});
    CHECK(det.scores[0] == doctest::Approx(-0.8));
    CHECK(det.scores[3] == doctest::Approx(0.4));
    CHECK(det.predicted_noise_level == doctest::Approx(2.0 / 6));

    j.calibrated = Matrix(2, 2, std::vector<double>{0.0, 5.0 / 6, 0.0, 1.0 / 6});
    const auto clamped = prune(p, y, j);
    CHECK(clamped.diagnostics.at("clamped_pairs") == 1.0);
    CHECK(clamped.flagged_count() == 4);
}

TEST_CASE("property: full pipeline matches the brute-force oracle (N <= 30)") {
    Rng gen(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t k = 2 + gen.below(4);
        const std::size_t n = k + gen.below(31 - k);
        std::vector<Label> y(n);
        for (std::size_t i = 0; i < n; ++i)
            y[i] = static_cast<Label>(i < k ? i : gen.below(k));  // every class present
        const auto p = random_probs(n, k, gen);

        const auto o = oracle::confident_learning(p, y);
        const auto t = class_thresholds(p, y);
        for (std::size_t c = 0; c < k; ++c) CHECK(std::abs(t[c] - o.thresholds[c]) <= 1e-9);
        const auto j = confident_joint(p, y, t);
        CHECK(j.counts == o.counts);
        double total = 0.0;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b) {
                CHECK(std::abs(j.calibrated(a, b) - o.q[a][b]) <= 1e-9);
                total += j.calibrated(a, b);
            }
        std::size_t confident = 0;
        for (const auto& row : j.counts) confident = std::accumulate(row.begin(), row.end(), confident);
        CHECK(confident <= n);
        if (confident > 0) CHECK(std::abs(total - 1.0) <= 1e-9);

        const auto det = prune(p, y, j);
        CHECK(det.flagged == o.flagged);
        std::size_t targeted = 0;
        for (std::size_t a = 0; a < k; ++a)
            for (std::size_t b = 0; b < k; ++b)
                if (a != b) targeted += static_cast<std::size_t>(std::llround(static_cast<double>(n) * o.q[a][b]));
        CHECK(det.flagged_count() <= targeted);
    }
}

TEST_CASE("property: calibration keeps the observed-class marginals") {
    Rng gen(5);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 2 + gen.below(5);
        const std::size_t n = 5 * k + gen.below(100);
        std::vector<Label> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<Label>(i < k ? i : gen.below(k));
        const auto p = random_probs(n, k, gen);
        const auto j = confident_joint(p, y, class_thresholds(p, y));
        std::vector<double> observed(k, 0.0);
        for (Label c : y) observed[static_cast<std::size_t>(c)] += 1.0;
        bool every_row_counted = true;
        for (std::size_t a = 0; a < k; ++a) {
            const auto row = std::accumulate(j.counts[a].begin(), j.counts[a].end(), std::size_t{0});
            CHECK(static_cast<double>(row) <= observed[a]);
            every_row_counted = every_row_counted && row > 0;
        }
        if (!every_row_counted) continue;
        for (std::size_t a = 0; a < k; ++a) {
            double row = 0.0;
            for (std::size_t b = 0; b < k; ++b) row += j.calibrated(a, b);
            CHECK(std::abs(row * static_cast<double>(n) - observed[a]) <= 1e-6);
        }
    }
}

TEST_CASE("run_cl on clean blobs flags little") {
    const auto ds = noisy_blobs(0.0, 0);
    const auto r = run_cl(ds, {}, 4);
    CHECK(r.detection.predicted_noise_level <= 0.05);
    CHECK(r.detection.rows == ds.indices(Split::train));
}

TEST_CASE("run_cl detects and estimates 30% uniform noise") {
    double f1 = 0.0, predicted = 0.0, truth = 0.0;
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto ds = noisy_blobs(0.3, seed);
        TrainConfig cfg;
        cfg.seed = seed;
        const auto r = run_cl(ds, cfg, 4);
        std::vector<bool> noisy;
        for (std::size_t row : r.detection.rows) noisy.push_back(ds.observed_labels[row] != ds.true_labels[row]);
        f1 += detection_metrics(r.detection.flagged, noisy).f1;
        predicted += r.detection.predicted_noise_level;
        truth += realized_noise_level(ds);
    }
    CHECK(f1 / 3.0 >= 0.75);
    CHECK(std::abs(predicted - truth) / 3.0 <= 0.10);
}

TEST_CASE("joint json carries counts, calibration and thresholds") {
    const Matrix p(2, 2, std::vector<double>{0.8, 0.2, 0.3, 0.7});
    const std::vector<Label> y{0, 1};
    const auto j = to_json(confident_joint(p, y, class_thresholds(p, y)));
    CHECK(j.at("counts").size() == 2);
    CHECK(j.at("calibrated").size() == 2);
    CHECK(j.at("thresholds").size() == 2);
}
