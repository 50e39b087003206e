#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "noisegate/aum.hpp"
#include "noisegate/dataset.hpp"
#include "noisegate/metrics.hpp"
#include "noisegate/noise.hpp"
#include "noisegate/topofilter.hpp"
#include "noisegate/trainer.hpp"

namespace noisegate {

/// Noise settings of the grid: uniform, or asymmetric at sparsity 0.25 / 0.75.
enum class NoiseKind { uniform, asym_low, asym_high };
enum class Method { none, topofilter, aum, cl };

std::string to_string(NoiseKind k);
std::string to_string(Method m);
NoiseKind noise_kind_from_string(const std::string& s);
Method method_from_string(const std::string& s);

/// Blob parameters used when a config names no dataset.
BlobsParams default_blobs();

struct DatasetSpec {
    std::string name = "blobs";
    std::optional<BlobsParams> blobs = default_blobs();  ///< generated when set
    std::filesystem::path path;                          ///< feature CSV otherwise
};

struct ExperimentConfig {
    DatasetSpec dataset;
    std::vector<NoiseKind> noise_types{NoiseKind::uniform, NoiseKind::asym_low, NoiseKind::asym_high};
    std::vector<double> noise_levels{0.10, 0.30, 0.50, 0.70};
    std::vector<Method> methods{Method::topofilter, Method::aum, Method::cl, Method::none};
    std::vector<std::uint64_t> seeds{0, 1, 2};
    std::uint64_t base_seed = 0;
    SplitFractions split;
    double sigma = 0.05;  ///< spread of the per-class noise levels (asymmetric)
    TrainConfig train;
    TopoConfig topo;  ///< topo.train is replaced by `train` (with a derived seed)
    AumConfig aum;    ///< likewise
    std::size_t cl_folds = 4;
    std::size_t workers = 1;
    bool keep_joints = false;

    /// Throws std::invalid_argument on inconsistent settings.
    void validate(int num_classes) const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& cfg);

struct ReportRow {
    std::string dataset;
    NoiseKind noise_type = NoiseKind::uniform;
    double noise_level = 0.0;
    Method method = Method::none;
    std::string seed;  ///< seed value, or "agg" for aggregate rows
    FilterMetrics metrics;
    double acc_noisy = 0.0;
    double acc_cleaned = 0.0;
    double acc_clean_ref = 0.0;
    std::string error;  ///< non-empty when the cell failed
    nlohmann::json details;  ///< diagnostics, confident joint, std of aggregates

    bool failed() const { return !error.empty(); }
};

struct ExperimentReport {
    std::vector<ReportRow> rows;       ///< one per (cell, seed)
    std::vector<ReportRow> aggregates; ///< seed-mean per cell; std in details

    std::size_t failures() const;
};

/// Everything a method needs for one (noise setting, seed): the corrupted
/// dataset and the shared baselines.
struct CellContext {
    Dataset noisy;
    std::vector<bool> truly_noisy;  ///< over the train split, ascending rows
    double acc_noisy = 0.0;
    double acc_clean_ref = 0.0;
};

/// `clean` must already carry split tags. `clean_ref` skips retraining the
/// clean reference when the caller already has it for this seed.
CellContext prepare_context(const Dataset& clean, const ExperimentConfig& cfg, NoiseKind kind, double level,
                            std::uint64_t seed, std::optional<double> clean_ref = std::nullopt);

ReportRow run_method(const CellContext& ctx, const ExperimentConfig& cfg, NoiseKind kind, double level,
                     Method method, std::uint64_t seed);

/// corrupt -> baseline -> detect -> clean -> retrain -> evaluate, for one cell.
/// Stage failures are recorded in the row.
ReportRow run_cell(const Dataset& clean, const ExperimentConfig& cfg, NoiseKind kind, double level, Method method,
                   std::uint64_t seed);

/// Loads or generates the dataset and tags the splits.
Dataset prepare_dataset(const ExperimentConfig& cfg);

ExperimentReport run_grid(const ExperimentConfig& cfg);
ExperimentReport run_grid(const Dataset& clean, const ExperimentConfig& cfg);

/// Mean of the successful seed rows; standard deviations go to details["std"].
ReportRow aggregate(const std::vector<ReportRow>& seed_rows);

inline constexpr const char* kReportHeader =
    "dataset,noise_type,noise_level,method,seed,precision,recall,f1,remaining_noise,predicted_noise,"
    "delta_noise,smape,acc_noisy,acc_cleaned,acc_clean_ref";

/// Seed rows of each cell followed by its "agg" row.
void report_csv(const ExperimentReport& rep, const std::filesystem::path& path);
std::string report_csv_string(const ExperimentReport& rep);
nlohmann::json to_json(const ExperimentReport& rep);

/// One 0/1 value per line (last column), after a header line.
std::vector<bool> load_mask_csv(const std::filesystem::path& path);

}  // namespace noisegate
