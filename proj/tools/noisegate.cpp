// noisegate: label-noise injection, detection and benchmarking from the shell.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "noisegate/dataset.hpp"
#include "noisegate/harness.hpp"
#include "noisegate/metrics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

int gen_blobs(const noisegate::BlobsParams& params, const fs::path& out) {
    const auto ds = noisegate::make_blobs(params);
    noisegate::save_features(ds, out);
    std::cout << "wrote " << ds.size() << " samples (" << ds.num_classes << " classes, dim " << ds.dim() << ") to "
              << out.string() << '\n';
    return kExitOk;
}

int run(const fs::path& config_path, const fs::path& out_dir, int workers, bool dump_joint) {
    noisegate::ExperimentConfig cfg;
    noisegate::Dataset clean;
    try {
        std::ifstream in(config_path);
        if (!in) throw std::runtime_error("cannot open config " + config_path.string());
        cfg = noisegate::experiment_config_from_json(json::parse(in));
        if (!cfg.dataset.blobs && cfg.dataset.path.is_relative())
            cfg.dataset.path = config_path.parent_path() / cfg.dataset.path;
        if (workers > 0) cfg.workers = static_cast<std::size_t>(workers);
        cfg.keep_joints = dump_joint;
        clean = noisegate::prepare_dataset(cfg);
        cfg.validate(clean.num_classes);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    const auto report = noisegate::run_grid(clean, cfg);

    fs::create_directories(out_dir);
    noisegate::report_csv(report, out_dir / "report.csv");
    {
        std::ofstream out(out_dir / "report.json");
        out << noisegate::to_json(report).dump(2) << '\n';
    }
    {
        std::ofstream out(out_dir / "config.json");
        out << noisegate::to_json(cfg).dump(2) << '\n';
    }
    if (dump_joint) {
        fs::create_directories(out_dir / "joints");
        for (const auto& row : report.rows) {
            if (!row.details.contains("joint")) continue;
            char level[32];
            std::snprintf(level, sizeof level, "%g", row.noise_level);
            const auto name = noisegate::to_string(row.noise_type) + "_" + level + "_seed" + row.seed + ".json";
            std::ofstream out(out_dir / "joints" / name);
            out << row.details["joint"].dump(2) << '\n';
        }
    }

    for (const auto& row : report.rows)
        if (row.failed())
            std::cerr << "cell failed: " << noisegate::to_string(row.noise_type) << " level " << row.noise_level << ' '
                      << noisegate::to_string(row.method) << " seed " << row.seed << ": " << row.error << '\n';
    std::cout << report.rows.size() << " rows, " << report.failures() << " failed; report in " << out_dir.string()
              << '\n';
    return report.failures() > 0 ? kExitPartial : kExitOk;
}

int metrics(const fs::path& flags_path, const fs::path& truth_path) {
    const auto flagged = noisegate::load_mask_csv(flags_path);
    const auto truth = noisegate::load_mask_csv(truth_path);
    const auto m = noisegate::filter_metrics(flagged, truth);
    const json j{{"precision", m.precision},
                 {"recall", m.recall},
                 {"f1", m.f1},
                 {"remaining_noise", m.remaining_noise},
                 {"predicted_noise", m.predicted_noise_level},
                 {"true_noise", m.true_noise_level},
                 {"delta_noise", m.delta_noise},
                 {"smape", m.smape}};
    std::cout << j.dump(2) << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Inject label noise, detect it, and measure the effect of cleaning"};
    app.require_subcommand(1);

    noisegate::BlobsParams blobs;
    fs::path blobs_out;
    auto* gen = app.add_subcommand("gen-blobs", "Write a synthetic Gaussian-blob dataset as CSV");
    gen->add_option("--k", blobs.num_classes, "Number of classes")->required();
    gen->add_option("--n-per-class", blobs.n_per_class, "Samples per class")->required();
    gen->add_option("--dim", blobs.dim, "Feature dimension")->required();
    gen->add_option("--separation", blobs.separation, "Minimum distance between class centers")->required();
    gen->add_option("--spread", blobs.spread, "Per-class standard deviation")->capture_default_str();
    gen->add_option("--seed", blobs.seed, "Random seed")->required();
    gen->add_option("--out", blobs_out, "Output CSV path")->required();

    fs::path config_path, out_dir;
    int workers = 0;
    bool dump_joint = false;
    auto* run_cmd = app.add_subcommand("run", "Run an experiment grid from a JSON config");
    run_cmd->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run_cmd->add_option("--out", out_dir, "Output directory")->required();
    run_cmd->add_option("--workers", workers, "Concurrent cells (overrides the config)")->check(CLI::PositiveNumber);
    run_cmd->add_flag("--dump-joint", dump_joint, "Write confident joints of CL cells to <out>/joints");

    fs::path flags_path, truth_path;
    auto* metrics_cmd = app.add_subcommand("metrics", "Score a flag mask against a ground-truth noise mask");
    metrics_cmd->add_option("--flags", flags_path, "CSV with one 0/1 flag per sample")->required()->check(CLI::ExistingFile);
    metrics_cmd->add_option("--truth", truth_path, "CSV with one 0/1 truth value per sample")
        ->required()
        ->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (*gen) return gen_blobs(blobs, blobs_out);
        if (*run_cmd) return run(config_path, out_dir, workers, dump_joint);
        if (*metrics_cmd) return metrics(flags_path, truth_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitOk;
}
