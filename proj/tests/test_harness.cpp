#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>

#include "noisegate/harness.hpp"

using namespace noisegate;

namespace {

/// Small, fast grid settings.
ExperimentConfig quick_config() {
    ExperimentConfig cfg;
    cfg.dataset.blobs = BlobsParams{.num_classes = 4, .n_per_class = 40, .dim = 8, .separation = 8.0, .spread = 1.0,
                                    .seed = 3};
    cfg.train.epochs = 12;
    cfg.train.hidden_dim = 8;
    cfg.noise_types = {NoiseKind::uniform};
    cfg.noise_levels = {0.3};
    cfg.methods = {Method::none};
    return cfg;
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) out.push_back(line);
    return out;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, ',');) out.push_back(f);
    return out;
}

}  // namespace

TEST_CASE("names round-trip") {
    for (auto k : {NoiseKind::uniform, NoiseKind::asym_low, NoiseKind::asym_high})
        CHECK(noise_kind_from_string(to_string(k)) == k);
    for (auto m : {Method::none, Method::topofilter, Method::aum, Method::cl}) CHECK(method_from_string(to_string(m)) == m);
    CHECK_THROWS_AS(method_from_string("magic"), std::invalid_argument);
}

TEST_CASE("method none at level 0 matches the clean reference") {
    auto cfg = quick_config();
    const auto clean = prepare_dataset(cfg);
    const auto row = run_cell(clean, cfg, NoiseKind::uniform, 0.0, Method::none, 0);
    REQUIRE_FALSE(row.failed());
    CHECK(row.acc_noisy == row.acc_clean_ref);
    CHECK(row.acc_cleaned == row.acc_noisy);
    CHECK(row.metrics.true_noise_level == 0.0);
    CHECK(row.metrics.predicted_noise_level == 0.0);
}

TEST_CASE("cl cell on blobs reduces the noise") {
    ExperimentConfig cfg;
    cfg.dataset.blobs = BlobsParams{.num_classes = 4, .n_per_class = 200, .dim = 16, .separation = 10.0};
    const auto clean = prepare_dataset(cfg);
    const auto row = run_cell(clean, cfg, NoiseKind::uniform, 0.3, Method::cl, 0);
    REQUIRE_FALSE(row.failed());
    for (double v : {row.metrics.precision, row.metrics.recall, row.metrics.f1, row.metrics.remaining_noise,
                     row.metrics.predicted_noise_level, row.metrics.delta_noise, row.metrics.smape, row.acc_noisy,
                     row.acc_cleaned, row.acc_clean_ref})
        CHECK(std::isfinite(v));
    CHECK(row.metrics.remaining_noise < 0.30);
}

TEST_CASE("cells are deterministic") {
    auto cfg = quick_config();
    const auto clean = prepare_dataset(cfg);
    for (auto m : {Method::topofilter, Method::aum, Method::cl}) {
        const auto a = run_cell(clean, cfg, NoiseKind::asym_high, 0.3, m, 2);
        const auto b = run_cell(clean, cfg, NoiseKind::asym_high, 0.3, m, 2);
        REQUIRE_FALSE(a.failed());
        ExperimentReport ra, rb;
        ra.rows = {a};
        rb.rows = {b};
        CHECK(report_csv_string(ra) == report_csv_string(rb));
        CHECK(a.details == b.details);
    }
}

TEST_CASE("all accuracies of a cell use the same clean test split") {
    auto cfg = quick_config();
    const auto clean = prepare_dataset(cfg);
    const auto ctx = prepare_context(clean, cfg, NoiseKind::uniform, 0.5, 1);
    CHECK(ctx.noisy.split == clean.split);
    for (std::size_t i : clean.indices(Split::test)) CHECK(ctx.noisy.observed_labels[i] == clean.true_labels[i]);
    CHECK(ctx.truly_noisy.size() == clean.indices(Split::train).size());
}

TEST_CASE("grid counting and aggregates") {
    auto cfg = quick_config();
    const auto rep = run_grid(cfg);
    REQUIRE(rep.rows.size() == 3);
    REQUIRE(rep.aggregates.size() == 1);
    CHECK(rep.failures() == 0);
    const auto& agg = rep.aggregates.front();
    CHECK(agg.seed == "agg");
    double hand = 0.0, hand_f1 = 0.0;
    for (const auto& r : rep.rows) {
        hand += r.acc_noisy;
        hand_f1 += r.metrics.f1;
    }
    CHECK(agg.acc_noisy == doctest::Approx(hand / 3).epsilon(1e-12));
    CHECK(agg.metrics.f1 == doctest::Approx(hand_f1 / 3).epsilon(1e-12));
    CHECK(agg.details.at("std").contains("acc_noisy"));

    const auto text = report_csv_string(rep);
    const auto ls = lines(text);
    REQUIRE(ls.size() == 5);
    CHECK(ls[0] == kReportHeader);
    CHECK(fields(ls[4])[4] == "agg");
}

TEST_CASE("full default grid has 144 rows") {
    // defaults everywhere except a tiny dataset and short training
    ExperimentConfig cfg;
    cfg.dataset.blobs = BlobsParams{.num_classes = 10, .n_per_class = 12, .dim = 4, .separation = 8.0};
    cfg.train.epochs = 10;
    cfg.train.hidden_dim = 4;
    cfg.topo.k_neighbors = 3;
    const auto rep = run_grid(cfg);
    CHECK(rep.rows.size() == 144);
    CHECK(rep.aggregates.size() == 48);
    CHECK(lines(report_csv_string(rep)).size() == 1 + 144 + 48);
    // ordering: type, level, method, seed
    CHECK(rep.rows[0].noise_type == NoiseKind::uniform);
    CHECK(rep.rows[0].noise_level == 0.10);
    CHECK(rep.rows[0].method == Method::topofilter);
    CHECK(rep.rows[1].seed == "1");
    CHECK(rep.rows[3].method == Method::aum);
    CHECK(rep.rows[12].noise_level == 0.30);
    CHECK(rep.rows[48].noise_type == NoiseKind::asym_low);
}

TEST_CASE("permuting the seed list leaves aggregates unchanged") {
    auto cfg = quick_config();
    cfg.methods = {Method::none, Method::cl};
    cfg.seeds = {4, 9, 1};
    const auto a = run_grid(cfg);
    cfg.seeds = {1, 4, 9};
    const auto b = run_grid(cfg);
    REQUIRE(a.aggregates.size() == b.aggregates.size());
    for (std::size_t i = 0; i < a.aggregates.size(); ++i) {
        ExperimentReport ra, rb;
        ra.rows = {a.aggregates[i]};
        rb.rows = {b.aggregates[i]};
        CHECK(report_csv_string(ra) == report_csv_string(rb));
    }
    // rows are permuted, not changed
    CHECK(a.rows[0].acc_noisy == b.rows[1].acc_noisy);
    CHECK(a.rows[1].acc_noisy == b.rows[2].acc_noisy);
}

TEST_CASE("worker count does not change the report") {
    auto cfg = quick_config();
    cfg.methods = {Method::topofilter, Method::cl, Method::none};
    cfg.noise_types = {NoiseKind::uniform, NoiseKind::asym_low};
    const auto one = report_csv_string(run_grid(cfg));
    cfg.workers = 3;
    CHECK(report_csv_string(run_grid(cfg)) == one);
}

TEST_CASE("failing cells are recorded and the grid continues") {
    auto cfg = quick_config();
    cfg.methods = {Method::none};
    cfg.train.learning_rate = 1e300;
    const auto rep = run_grid(cfg);
    CHECK(rep.rows.size() == 3);
    CHECK(rep.failures() == 3);
    CHECK(rep.rows[0].error.find("epoch") != std::string::npos);
    CHECK(std::isnan(rep.rows[0].acc_noisy));
    const auto ls = lines(report_csv_string(rep));
    CHECK(fields(ls[1]).back() == "nan");
}

TEST_CASE("csv: empty report, numeric round-trip") {
    CHECK(report_csv_string(ExperimentReport{}) == std::string(kReportHeader) + "\n");

    ReportRow r;
    r.dataset = "d";
    r.seed = "0";
    r.metrics.precision = 1.0 / 3.0;
    r.metrics.smape = 18.181818181818;
    r.acc_noisy = 0.123456789012345;
    r.noise_level = 0.3;
    ExperimentReport rep;
    rep.rows = {r};
    const auto f = fields(lines(report_csv_string(rep))[1]);
    REQUIRE(f.size() == 15);
    CHECK(std::abs(std::stod(f[5]) - r.metrics.precision) <= 1e-9 * r.metrics.precision);
    CHECK(std::abs(std::stod(f[11]) - r.metrics.smape) <= 1e-9 * r.metrics.smape);
    CHECK(std::abs(std::stod(f[12]) - r.acc_noisy) <= 1e-9 * r.acc_noisy);
    CHECK(f[2] == "0.3");
}

TEST_CASE("config json: defaults, round-trip and strictness") {
    const auto defaults = experiment_config_from_json(nlohmann::json::object());
    CHECK(defaults.noise_levels == std::vector<double>{0.10, 0.30, 0.50, 0.70});
    CHECK(defaults.methods.size() == 4);
    CHECK(defaults.seeds.size() == 3);
    CHECK(defaults.dataset.blobs.has_value());

    auto cfg = quick_config();
    cfg.aum.threshold_fraction = 0.1;
    cfg.seeds = {5, 6};
    const auto back = experiment_config_from_json(to_json(cfg));
    CHECK(to_json(back) == to_json(cfg));

    CHECK_THROWS_AS(experiment_config_from_json({{"noise_level", {0.1}}}), std::invalid_argument);
    CHECK_THROWS_AS(experiment_config_from_json({{"train", {{"epoch", 3}}}}), std::invalid_argument);
    CHECK_THROWS_AS(experiment_config_from_json({{"methods", {"magic"}}}), std::invalid_argument);

    auto bad = quick_config();
    bad.seeds.clear();
    CHECK_THROWS_AS(bad.validate(4), std::invalid_argument);
    bad = quick_config();
    bad.noise_levels = {0.75};
    CHECK_THROWS_AS(bad.validate(4), std::invalid_argument);
}
