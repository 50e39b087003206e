#include "noisegate/harness.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "noisegate/confident_learning.hpp"
#include "noisegate/random.hpp"

namespace noisegate {

using nlohmann::json;

std::string to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::uniform: return "uniform";
        case NoiseKind::asym_low: return "asym_low";
        case NoiseKind::asym_high: return "asym_high";
    }
    return "?";
}

std::string to_string(Method m) {
    switch (m) {
        case Method::none: return "none";
        case Method::topofilter: return "topofilter";
        case Method::aum: return "aum";
        case Method::cl: return "cl";
    }
    return "?";
}

NoiseKind noise_kind_from_string(const std::string& s) {
    for (auto k : {NoiseKind::uniform, NoiseKind::asym_low, NoiseKind::asym_high})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown noise type '" + s + "'");
}

Method method_from_string(const std::string& s) {
    for (auto m : {Method::none, Method::topofilter, Method::aum, Method::cl})
        if (to_string(m) == s) return m;
    throw std::invalid_argument("unknown method '" + s + "'");
}

BlobsParams default_blobs() {
    BlobsParams p;
    p.num_classes = 10;
    p.n_per_class = 100;
    p.dim = 16;
    p.separation = 4.0;  // below the accuracy ceiling so noise effects show up
    p.spread = 1.0;
    p.seed = 0;
    return p;
}

namespace {

std::string fmt_number(double v) {
    if (std::isnan(v)) return "nan";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string seed_key(std::uint64_t base, const std::string& stage, NoiseKind kind, double level, std::uint64_t seed) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", level);
    return stage + "|" + to_string(kind) + "|" + buf + "|" + std::to_string(seed) + "|" + std::to_string(base);
}

std::uint64_t stage_seed(std::uint64_t base, const std::string& stage, NoiseKind kind, double level,
                         std::uint64_t seed) {
    return derive_seed(base, seed_key(base, stage, kind, level, seed));
}

// Network initialization is tied to the seed alone, so baseline, clean
// reference and retrained models of one seed start from the same weights.
std::uint64_t init_seed(std::uint64_t base, std::uint64_t seed) {
    return derive_seed(base, "init|" + std::to_string(seed));
}

double sparsity_of(NoiseKind k) {
    switch (k) {
        case NoiseKind::asym_low: return 0.25;
        case NoiseKind::asym_high: return 0.75;
        case NoiseKind::uniform: break;
    }
    return 0.0;
}

TransitionMatrix build_matrix(int num_classes, const ExperimentConfig& cfg, NoiseKind kind, double level,
                              std::uint64_t seed) {
    if (kind == NoiseKind::uniform) return uniform_matrix(num_classes, level);
    return asymmetric_matrix(num_classes, level, sparsity_of(kind), cfg.sigma,
                             stage_seed(cfg.base_seed, "matrix", kind, level, seed));
}

double clean_reference(const Dataset& clean, const ExperimentConfig& cfg, std::uint64_t seed) {
    TrainConfig tc = cfg.train;
    tc.seed = init_seed(cfg.base_seed, seed);
    const auto result = train(clean, tc, LabelSource::truth, static_cast<std::size_t>(clean.num_classes));
    return evaluate(result.model, clean, Split::test);
}

double retrain_and_evaluate(const Dataset& noisy, const ExperimentConfig& cfg, const DetectionResult& det,
                            std::uint64_t seed) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < det.rows.size(); ++i)
        if (!det.flagged[i]) keep.push_back(det.rows[i]);
    if (keep.empty()) throw std::runtime_error("every train row was flagged; nothing left to retrain on");
    TrainConfig tc = cfg.train;
    tc.seed = init_seed(cfg.base_seed, seed);
    tc.subset = std::move(keep);
    const auto result = train(noisy, tc, LabelSource::observed, static_cast<std::size_t>(noisy.num_classes));
    return evaluate(result.model, noisy, Split::test);
}

ReportRow blank_row(const ExperimentConfig& cfg, NoiseKind kind, double level, Method method, std::uint64_t seed) {
    ReportRow row;
    row.dataset = cfg.dataset.name;
    row.noise_type = kind;
    row.noise_level = level;
    row.method = method;
    row.seed = std::to_string(seed);
    row.details = json::object();
    return row;
}

void mark_failed(ReportRow& row, const std::string& what) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    row.error = what;
    row.metrics = FilterMetrics{nan, nan, nan, nan, nan, nan, nan, nan};
    row.acc_noisy = row.acc_cleaned = row.acc_clean_ref = nan;
}

// Field accessors shared by aggregation, CSV and JSON output.
constexpr std::size_t kNumericFields = 10;
constexpr const char* kNumericNames[kNumericFields] = {
    "precision", "recall",    "f1",        "remaining_noise", "predicted_noise",
    "delta_noise", "smape", "acc_noisy", "acc_cleaned",     "acc_clean_ref"};

std::array<double*, kNumericFields> numeric_fields(ReportRow& r) {
    return {&r.metrics.precision, &r.metrics.recall,    &r.metrics.f1,  &r.metrics.remaining_noise,
            &r.metrics.predicted_noise_level, &r.metrics.delta_noise, &r.metrics.smape,
            &r.acc_noisy,         &r.acc_cleaned,       &r.acc_clean_ref};
}

std::array<double, kNumericFields> numeric_values(const ReportRow& r) {
    auto copy = r;
    std::array<double, kNumericFields> out{};
    const auto fields = numeric_fields(copy);
    for (std::size_t i = 0; i < kNumericFields; ++i) out[i] = *fields[i];
    return out;
}

// Rejects keys outside `allowed` so typos in config files surface.
void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw std::invalid_argument(where + ": expected an object");
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || key == a;
        if (!ok) throw std::invalid_argument(where + ": unknown key '" + key + "'");
    }
}

}  // namespace

void ExperimentConfig::validate(int num_classes) const {
    if (noise_types.empty() || noise_levels.empty() || methods.empty())
        throw std::invalid_argument("config: noise_types, noise_levels and methods must be non-empty");
    if (seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
    const double max_level = static_cast<double>(num_classes - 1) / num_classes;
    for (double l : noise_levels)
        if (!(l >= 0.0 && l < max_level))
            throw std::invalid_argument("config: noise level " + fmt_number(l) + " outside [0, (K-1)/K)");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
        throw std::invalid_argument("config: duplicate seeds");
    if (std::set<Method>(methods.begin(), methods.end()).size() != methods.size() ||
        std::set<NoiseKind>(noise_types.begin(), noise_types.end()).size() != noise_types.size() ||
        std::set<double>(noise_levels.begin(), noise_levels.end()).size() != noise_levels.size())
        throw std::invalid_argument("config: duplicate entries in noise_types, noise_levels or methods");
    if (!(sigma >= 0.0)) throw std::invalid_argument("config: sigma must be >= 0");
    if (workers < 1) throw std::invalid_argument("config: workers must be >= 1");
    if (cl_folds < 2) throw std::invalid_argument("config: cl folds must be >= 2");
    train.validate();
    TopoConfig t = topo;
    t.train = train;
    t.validate();
    AumConfig a = aum;
    a.train = train;
    a.validate(num_classes);
}

ExperimentConfig experiment_config_from_json(const json& j) {
    check_keys(j, "config",
               {"dataset", "noise_types", "noise_levels", "methods", "seeds", "base_seed", "split", "sigma", "train",
                "topofilter", "aum", "cl", "workers"});
    ExperimentConfig cfg;
    cfg.dataset.blobs = default_blobs();
    if (j.contains("dataset")) {
        const auto& d = j.at("dataset");
        check_keys(d, "dataset", {"name", "blobs", "path"});
        if (d.contains("blobs") && d.contains("path"))
            throw std::invalid_argument("dataset: give either blobs or path, not both");
        if (d.contains("path")) {
            cfg.dataset.blobs.reset();
            cfg.dataset.path = d.at("path").get<std::string>();
            cfg.dataset.name = cfg.dataset.path.stem().string();
        }
        if (d.contains("blobs")) {
            const auto& b = d.at("blobs");
            check_keys(b, "dataset.blobs", {"k", "n_per_class", "dim", "separation", "spread", "seed"});
            auto& p = *cfg.dataset.blobs;
            p.num_classes = b.value("k", p.num_classes);
            p.n_per_class = b.value("n_per_class", p.n_per_class);
            p.dim = b.value("dim", p.dim);
            p.separation = b.value("separation", p.separation);
            p.spread = b.value("spread", p.spread);
            p.seed = b.value("seed", p.seed);
        }
        cfg.dataset.name = d.value("name", cfg.dataset.name);
    }
    if (j.contains("noise_types")) {
        cfg.noise_types.clear();
        for (const auto& s : j.at("noise_types")) cfg.noise_types.push_back(noise_kind_from_string(s.get<std::string>()));
    }
    if (j.contains("noise_levels")) cfg.noise_levels = j.at("noise_levels").get<std::vector<double>>();
    if (j.contains("methods")) {
        cfg.methods.clear();
        for (const auto& s : j.at("methods")) cfg.methods.push_back(method_from_string(s.get<std::string>()));
    }
    if (j.contains("seeds")) cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    cfg.base_seed = j.value("base_seed", cfg.base_seed);
    if (j.contains("split")) {
        const auto& s = j.at("split");
        check_keys(s, "split", {"train", "val", "test"});
        cfg.split.train = s.value("train", cfg.split.train);
        cfg.split.val = s.value("val", cfg.split.val);
        cfg.split.test = s.value("test", cfg.split.test);
    }
    cfg.sigma = j.value("sigma", cfg.sigma);
    if (j.contains("train")) {
        const auto& t = j.at("train");
        check_keys(t, "train", {"hidden_dim", "epochs", "learning_rate", "batch_size", "weight_init_scale"});
        cfg.train.hidden_dim = t.value("hidden_dim", cfg.train.hidden_dim);
        cfg.train.epochs = t.value("epochs", cfg.train.epochs);
        cfg.train.learning_rate = t.value("learning_rate", cfg.train.learning_rate);
        cfg.train.batch_size = t.value("batch_size", cfg.train.batch_size);
        cfg.train.weight_init_scale = t.value("weight_init_scale", cfg.train.weight_init_scale);
    }
    if (j.contains("topofilter")) {
        const auto& t = j.at("topofilter");
        check_keys(t, "topofilter", {"k_neighbors", "zeta", "first_filter_epoch", "filter_interval"});
        cfg.topo.k_neighbors = t.value("k_neighbors", cfg.topo.k_neighbors);
        cfg.topo.zeta = t.value("zeta", cfg.topo.zeta);
        cfg.topo.first_filter_epoch = t.value("first_filter_epoch", cfg.topo.first_filter_epoch);
        cfg.topo.filter_interval = t.value("filter_interval", cfg.topo.filter_interval);
    }
    if (j.contains("aum")) {
        const auto& a = j.at("aum");
        check_keys(a, "aum", {"threshold_percentile", "threshold_fraction", "two_run"});
        cfg.aum.threshold_percentile = a.value("threshold_percentile", cfg.aum.threshold_percentile);
        if (a.contains("threshold_fraction")) cfg.aum.threshold_fraction = a.at("threshold_fraction").get<double>();
        cfg.aum.two_run = a.value("two_run", cfg.aum.two_run);
    }
    if (j.contains("cl")) {
        const auto& c = j.at("cl");
        check_keys(c, "cl", {"folds"});
        cfg.cl_folds = c.value("folds", cfg.cl_folds);
    }
    cfg.workers = j.value("workers", cfg.workers);
    return cfg;
}

json to_json(const ExperimentConfig& cfg) {
    json j;
    json d{{"name", cfg.dataset.name}};
    if (cfg.dataset.blobs) {
        const auto& p = *cfg.dataset.blobs;
        d["blobs"] = {{"k", p.num_classes},         {"n_per_class", p.n_per_class}, {"dim", p.dim},
                      {"separation", p.separation}, {"spread", p.spread},           {"seed", p.seed}};
    } else {
        d["path"] = cfg.dataset.path.string();
    }
    j["dataset"] = d;
    std::vector<std::string> types, methods;
    for (auto k : cfg.noise_types) types.push_back(to_string(k));
    for (auto m : cfg.methods) methods.push_back(to_string(m));
    j["noise_types"] = types;
    j["noise_levels"] = cfg.noise_levels;
    j["methods"] = methods;
    j["seeds"] = cfg.seeds;
    j["base_seed"] = cfg.base_seed;
    j["split"] = {{"train", cfg.split.train}, {"val", cfg.split.val}, {"test", cfg.split.test}};
    j["sigma"] = cfg.sigma;
    j["train"] = {{"hidden_dim", cfg.train.hidden_dim},
                  {"epochs", cfg.train.epochs},
                  {"learning_rate", cfg.train.learning_rate},
                  {"batch_size", cfg.train.batch_size},
                  {"weight_init_scale", cfg.train.weight_init_scale}};
    j["topofilter"] = {{"k_neighbors", cfg.topo.k_neighbors},
                       {"zeta", cfg.topo.zeta},
                       {"first_filter_epoch", cfg.topo.first_filter_epoch},
                       {"filter_interval", cfg.topo.filter_interval}};
    j["aum"] = {{"threshold_percentile", cfg.aum.threshold_percentile}, {"two_run", cfg.aum.two_run}};
    if (cfg.aum.threshold_fraction) j["aum"]["threshold_fraction"] = *cfg.aum.threshold_fraction;
    j["cl"] = {{"folds", cfg.cl_folds}};
    j["workers"] = cfg.workers;
    return j;
}

std::size_t ExperimentReport::failures() const {
    return static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.failed(); }));
}

Dataset prepare_dataset(const ExperimentConfig& cfg) {
    Dataset ds = cfg.dataset.blobs ? make_blobs(*cfg.dataset.blobs) : load_features(cfg.dataset.path);
    return split(ds, cfg.split, derive_seed(cfg.base_seed, "split"));
}

CellContext prepare_context(const Dataset& clean, const ExperimentConfig& cfg, NoiseKind kind, double level,
                            std::uint64_t seed, std::optional<double> clean_ref) {
    CellContext ctx;
    const auto matrix = build_matrix(clean.num_classes, cfg, kind, level, seed);
    ctx.noisy = corrupt(clean, matrix, stage_seed(cfg.base_seed, "corrupt", kind, level, seed));
    for (std::size_t i : ctx.noisy.indices(Split::train))
        ctx.truly_noisy.push_back(ctx.noisy.observed_labels[i] != ctx.noisy.true_labels[i]);

    TrainConfig tc = cfg.train;
    tc.seed = init_seed(cfg.base_seed, seed);
    const auto baseline = train(ctx.noisy, tc, LabelSource::observed, static_cast<std::size_t>(clean.num_classes));
    ctx.acc_noisy = evaluate(baseline.model, ctx.noisy, Split::test);
    ctx.acc_clean_ref = clean_ref ? *clean_ref : clean_reference(clean, cfg, seed);
    return ctx;
}

ReportRow run_method(const CellContext& ctx, const ExperimentConfig& cfg, NoiseKind kind, double level, Method method,
                     std::uint64_t seed) {
    ReportRow row = blank_row(cfg, kind, level, method, seed);
    try {
        TrainConfig tc = cfg.train;
        tc.seed = stage_seed(cfg.base_seed, "method-" + to_string(method), kind, level, seed);

        DetectionResult det;
        switch (method) {
            case Method::none:
                det.method = "none";
                det.rows = ctx.noisy.indices(Split::train);
                det.flagged.assign(det.rows.size(), false);
                det.scores.assign(det.rows.size(), 0.0);
                det.finalize();
                row.acc_cleaned = ctx.acc_noisy;
                break;
            case Method::topofilter: {
                TopoConfig topo = cfg.topo;
                topo.train = tc;
                auto result = run_topofilter(ctx.noisy, topo);
                row.acc_cleaned = evaluate(result.model, ctx.noisy, Split::test);
                det = std::move(result.detection);
                break;
            }
            case Method::aum: {
                AumConfig aum = cfg.aum;
                aum.train = tc;
                det = run_aum(ctx.noisy, aum);
                row.acc_cleaned = retrain_and_evaluate(ctx.noisy, cfg, det, seed);
                break;
            }
            case Method::cl: {
                auto result = run_cl(ctx.noisy, tc, cfg.cl_folds);
                if (cfg.keep_joints) row.details["joint"] = to_json(result.joint);
                row.acc_cleaned = retrain_and_evaluate(ctx.noisy, cfg, result.detection, seed);
                det = std::move(result.detection);
                break;
            }
        }
        row.metrics = filter_metrics(det.flagged, ctx.truly_noisy);
        row.acc_noisy = ctx.acc_noisy;
        row.acc_clean_ref = ctx.acc_clean_ref;
        row.details["diagnostics"] = det.diagnostics;
    } catch (const std::exception& e) {
        mark_failed(row, e.what());
    }
    return row;
}

ReportRow run_cell(const Dataset& clean, const ExperimentConfig& cfg, NoiseKind kind, double level, Method method,
                   std::uint64_t seed) {
    CellContext ctx;
    try {
        ctx = prepare_context(clean, cfg, kind, level, seed);
    } catch (const std::exception& e) {
        ReportRow row = blank_row(cfg, kind, level, method, seed);
        mark_failed(row, e.what());
        return row;
    }
    return run_method(ctx, cfg, kind, level, method, seed);
}

ReportRow aggregate(const std::vector<ReportRow>& rows) {
    if (rows.empty()) throw std::invalid_argument("aggregate: no rows");
    // Summing in seed-value order makes the result independent of the order
    // of the seed list, down to the last bit.
    std::vector<ReportRow> seed_rows = rows;
    std::stable_sort(seed_rows.begin(), seed_rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::stoull(a.seed) < std::stoull(b.seed);
    });
    ReportRow agg = seed_rows.front();
    agg.seed = "agg";
    agg.error.clear();
    agg.details = json::object();

    std::array<double, kNumericFields> sum{}, sum_sq{};
    std::size_t ok = 0;
    for (const auto& r : seed_rows) {
        if (r.failed()) continue;
        ++ok;
        const auto v = numeric_values(r);
        for (std::size_t i = 0; i < kNumericFields; ++i) sum[i] += v[i];
    }
    const auto fields = numeric_fields(agg);
    if (ok == 0) {
        mark_failed(agg, "all seeds failed");
        return agg;
    }
    for (std::size_t i = 0; i < kNumericFields; ++i) *fields[i] = sum[i] / static_cast<double>(ok);
    for (const auto& r : seed_rows) {
        if (r.failed()) continue;
        const auto v = numeric_values(r);
        for (std::size_t i = 0; i < kNumericFields; ++i) {
            const double d = v[i] - *fields[i];
            sum_sq[i] += d * d;
        }
    }
    json std_dev = json::object();
    for (std::size_t i = 0; i < kNumericFields; ++i)
        std_dev[kNumericNames[i]] = ok > 1 ? std::sqrt(sum_sq[i] / static_cast<double>(ok - 1)) : 0.0;
    agg.details["std"] = std_dev;
    agg.details["seeds_ok"] = ok;
    agg.details["seeds_total"] = seed_rows.size();
    agg.metrics.true_noise_level = agg.metrics.predicted_noise_level - agg.metrics.delta_noise;
    return agg;
}

ExperimentReport run_grid(const Dataset& clean, const ExperimentConfig& cfg) {
    cfg.validate(clean.num_classes);
    const auto& seeds = cfg.seeds;
    const int workers = static_cast<int>(cfg.workers);

    // Clean references depend on the seed only.
    std::vector<double> clean_ref(seeds.size(), 0.0);
    std::vector<std::string> clean_err(seeds.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers) if (workers > 1)
    for (std::ptrdiff_t s = 0; s < static_cast<std::ptrdiff_t>(seeds.size()); ++s) {
        const auto si = static_cast<std::size_t>(s);
        try {
            clean_ref[si] = clean_reference(clean, cfg, seeds[si]);
        } catch (const std::exception& e) {
            clean_err[si] = e.what();
        }
    }

    struct ContextKey {
        NoiseKind kind;
        double level;
        std::size_t seed_index;
    };
    std::vector<ContextKey> keys;
    for (auto kind : cfg.noise_types)
        for (double level : cfg.noise_levels)
            for (std::size_t s = 0; s < seeds.size(); ++s) keys.push_back({kind, level, s});
    std::vector<CellContext> contexts(keys.size());
    std::vector<std::string> context_err(keys.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers) if (workers > 1)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(keys.size()); ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const auto& key = keys[ci];
        if (!clean_err[key.seed_index].empty()) {
            context_err[ci] = "clean reference: " + clean_err[key.seed_index];
            continue;
        }
        try {
            contexts[ci] = prepare_context(clean, cfg, key.kind, key.level, seeds[key.seed_index],
                                           clean_ref[key.seed_index]);
        } catch (const std::exception& e) {
            context_err[ci] = e.what();
        }
    }

    // Row order: noise type, level, method, seed.
    struct CellKey {
        std::size_t context;
        Method method;
    };
    std::vector<CellKey> cells;
    const std::size_t per_type = cfg.noise_levels.size() * seeds.size();
    for (std::size_t t = 0; t < cfg.noise_types.size(); ++t)
        for (std::size_t l = 0; l < cfg.noise_levels.size(); ++l)
            for (auto method : cfg.methods)
                for (std::size_t s = 0; s < seeds.size(); ++s)
                    cells.push_back({t * per_type + l * seeds.size() + s, method});

    ExperimentReport report;
    report.rows.resize(cells.size());
#pragma omp parallel for schedule(dynamic, 1) num_threads(workers) if (workers > 1)
    for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(cells.size()); ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const auto& cell = cells[ci];
        const auto& key = keys[cell.context];
        const auto seed = seeds[key.seed_index];
        if (!context_err[cell.context].empty()) {
            ReportRow row = blank_row(cfg, key.kind, key.level, cell.method, seed);
            mark_failed(row, context_err[cell.context]);
            report.rows[ci] = std::move(row);
            continue;
        }
        report.rows[ci] = run_method(contexts[cell.context], cfg, key.kind, key.level, cell.method, seed);
    }

    for (std::size_t start = 0; start < report.rows.size(); start += seeds.size()) {
        std::vector<ReportRow> group(report.rows.begin() + static_cast<std::ptrdiff_t>(start),
                                     report.rows.begin() + static_cast<std::ptrdiff_t>(start + seeds.size()));
        report.aggregates.push_back(aggregate(group));
    }
    return report;
}

ExperimentReport run_grid(const ExperimentConfig& cfg) { return run_grid(prepare_dataset(cfg), cfg); }

namespace {

void write_csv_row(std::ostream& out, const ReportRow& r) {
    out << r.dataset << ',' << to_string(r.noise_type) << ',' << fmt_number(r.noise_level) << ','
        << to_string(r.method) << ',' << r.seed;
    for (double v : numeric_values(r)) out << ',' << fmt_number(v);
    out << '\n';
}

}  // namespace

std::string report_csv_string(const ExperimentReport& rep) {
    std::ostringstream out;
    out << kReportHeader << '\n';
    // Seed rows of one cell are contiguous, one aggregate per cell.
    const std::size_t group = rep.aggregates.empty() ? rep.rows.size() : rep.rows.size() / rep.aggregates.size();
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
        write_csv_row(out, rep.rows[i]);
        if (group > 0 && (i + 1) % group == 0 && (i + 1) / group <= rep.aggregates.size())
            write_csv_row(out, rep.aggregates[(i + 1) / group - 1]);
    }
    return out.str();
}

void report_csv(const ExperimentReport& rep, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write report " + path.string());
    out << report_csv_string(rep);
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

json to_json(const ExperimentReport& rep) {
    auto row_json = [](const ReportRow& r) {
        json j{{"dataset", r.dataset},
               {"noise_type", to_string(r.noise_type)},
               {"noise_level", r.noise_level},
               {"method", to_string(r.method)},
               {"seed", r.seed}};
        const auto v = numeric_values(r);
        for (std::size_t i = 0; i < kNumericFields; ++i)
            j[kNumericNames[i]] = std::isnan(v[i]) ? json(nullptr) : json(v[i]);
        j["true_noise"] = std::isnan(r.metrics.true_noise_level) ? json(nullptr) : json(r.metrics.true_noise_level);
        if (r.failed()) j["error"] = r.error;
        if (!r.details.empty()) j["details"] = r.details;
        return j;
    };
    json rows = json::array(), aggs = json::array();
    for (const auto& r : rep.rows) rows.push_back(row_json(r));
    for (const auto& r : rep.aggregates) aggs.push_back(row_json(r));
    return {{"rows", rows}, {"aggregates", aggs}, {"failures", rep.failures()}};
}

std::vector<bool> load_mask_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    std::getline(in, line);  // header
    std::vector<bool> mask;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        const std::string value = comma == std::string::npos ? line : line.substr(comma + 1);
        if (value == "1" || value == "true")
            mask.push_back(true);
        else if (value == "0" || value == "false")
            mask.push_back(false);
        else
            throw std::invalid_argument(path.string() + ":" + std::to_string(line_no) + ": expected 0/1, got '" +
                                        value + "'");
    }
    return mask;
}

}  // namespace noisegate
