#include "noisegate/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "noisegate/errors.hpp"
#include "noisegate/kernels.hpp"

namespace noisegate {

void TrainConfig::validate() const {
    if (epochs < 1) throw std::invalid_argument("train config: epochs must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be >= 1");
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw std::invalid_argument("train config: learning_rate must be finite and >= 0");
    if (!std::isfinite(weight_init_scale)) throw std::invalid_argument("train config: bad weight_init_scale");
}

Model Model::zeros(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_outputs) {
    Model m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.num_outputs = num_outputs;
    if (hidden_dim > 0) {
        m.w1 = Matrix(hidden_dim, input_dim);
        m.b1.assign(hidden_dim, 0.0);
    }
    m.w2 = Matrix(num_outputs, hidden_dim > 0 ? hidden_dim : input_dim);
    m.b2.assign(num_outputs, 0.0);
    return m;
}

std::vector<std::span<double>> Model::parameters() {
    std::vector<std::span<double>> out;
    if (hidden_dim > 0) {
        out.push_back(w1.values());
        out.push_back(b1);
    }
    out.push_back(w2.values());
    out.push_back(b2);
    return out;
}

Model init_model(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_outputs, double scale,
                 Rng& rng) {
    Model m = Model::zeros(input_dim, hidden_dim, num_outputs);
    auto fill = [&](Matrix& w) {
        const double s = scale / std::sqrt(static_cast<double>(w.cols()));
        for (double& v : w.values()) v = rng.uniform(-s, s);
    };
    if (hidden_dim > 0) fill(m.w1);
    fill(m.w2);
    return m;
}

namespace {

// Per-sample forward/backward scratch, reused across a batch.
struct Workspace {
    std::vector<double> hidden;
    std::vector<double> out;
    std::vector<double> d_out;
    std::vector<double> d_hidden;

    explicit Workspace(const Model& m)
        : hidden(m.hidden_dim), out(m.num_outputs), d_out(m.num_outputs), d_hidden(m.hidden_dim) {}
};

// Cross-entropy of one sample; accumulates its gradient into `grad` when given.
double sample_loss(const Model& m, std::span<const double> x, Label y, Workspace& ws, Model* grad) {
    std::span<const double> last = x;
    if (m.hidden_dim > 0) {
        for (std::size_t h = 0; h < m.hidden_dim; ++h) {
            const auto wr = m.w1.row(h);
            double acc = m.b1[h];
            for (std::size_t c = 0; c < m.input_dim; ++c) acc += wr[c] * x[c];
            ws.hidden[h] = acc > 0.0 ? acc : 0.0;
        }
        last = ws.hidden;
    }
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t o = 0; o < m.num_outputs; ++o) {
        const auto wr = m.w2.row(o);
        double acc = m.b2[o];
        for (std::size_t c = 0; c < last.size(); ++c) acc += wr[c] * last[c];
        ws.out[o] = acc;
        max_logit = std::max(max_logit, acc);
    }
    double sum = 0.0;
    for (std::size_t o = 0; o < m.num_outputs; ++o) sum += std::exp(ws.out[o] - max_logit);
    const double log_sum = max_logit + std::log(sum);
    const auto label = static_cast<std::size_t>(y);
    const double loss = log_sum - ws.out[label];
    if (!grad) return loss;

    for (std::size_t o = 0; o < m.num_outputs; ++o)
        ws.d_out[o] = std::exp(ws.out[o] - log_sum) - (o == label ? 1.0 : 0.0);
    for (std::size_t o = 0; o < m.num_outputs; ++o) {
        auto gr = grad->w2.row(o);
        const double d = ws.d_out[o];
        for (std::size_t c = 0; c < last.size(); ++c) gr[c] += d * last[c];
        grad->b2[o] += d;
    }
    if (m.hidden_dim > 0) {
        std::fill(ws.d_hidden.begin(), ws.d_hidden.end(), 0.0);
        for (std::size_t o = 0; o < m.num_outputs; ++o) {
            const auto wr = m.w2.row(o);
            const double d = ws.d_out[o];
            for (std::size_t h = 0; h < m.hidden_dim; ++h) ws.d_hidden[h] += wr[h] * d;
        }
        for (std::size_t h = 0; h < m.hidden_dim; ++h) {
            if (ws.hidden[h] <= 0.0) continue;  // ReLU gate
            auto gr = grad->w1.row(h);
            const double d = ws.d_hidden[h];
            for (std::size_t c = 0; c < m.input_dim; ++c) gr[c] += d * x[c];
            grad->b1[h] += d;
        }
    }
    return loss;
}

double mean_loss(const Matrix& logits, std::span<const Label> labels, std::span<const std::size_t> rows) {
    if (rows.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t r : rows) {
        const auto z = logits.row(r);
        const double mx = *std::max_element(z.begin(), z.end());
        double sum = 0.0;
        for (double v : z) sum += std::exp(v - mx);
        total += mx + std::log(sum) - z[static_cast<std::size_t>(labels[r])];
    }
    return total / static_cast<double>(rows.size());
}

}  // namespace

double loss_and_gradient(const Model& m, const Matrix& x, std::span<const Label> y, Model* grad) {
    if (x.rows() != y.size()) throw std::invalid_argument("loss_and_gradient: label count mismatch");
    if (grad) *grad = Model::zeros(m.input_dim, m.hidden_dim, m.num_outputs);
    Workspace ws(m);
    double total = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) total += sample_loss(m, x.row(i), y[i], ws, grad);
    const double inv = x.rows() > 0 ? 1.0 / static_cast<double>(x.rows()) : 0.0;
    if (grad)
        for (auto block : grad->parameters())
            for (double& v : block) v *= inv;
    return total * inv;
}

Trainer::Trainer(const Matrix& features, std::span<const Label> labels, std::size_t num_outputs,
                 const TrainConfig& cfg)
    : features_(features), labels_(labels.begin(), labels.end()), cfg_(cfg), rng_(cfg.seed) {
    cfg_.validate();
    if (features.rows() != labels.size()) throw std::invalid_argument("trainer: label count mismatch");
    if (num_outputs < 2) throw std::invalid_argument("trainer: need at least 2 outputs");
    for (Label y : labels)
        if (y < 0 || static_cast<std::size_t>(y) >= num_outputs)
            throw std::invalid_argument("trainer: label outside [0, num_outputs)");
    model_ = init_model(features.cols(), cfg_.hidden_dim, num_outputs, cfg_.weight_init_scale, rng_);
}

double Trainer::run_epoch(std::span<const std::size_t> active) {
    ++epoch_;
    std::vector<std::size_t> order(active.begin(), active.end());
    rng_.shuffle(std::span<std::size_t>(order));

    Workspace ws(model_);
    Model grad = Model::zeros(model_.input_dim, model_.hidden_dim, model_.num_outputs);
    for (std::size_t start = 0; start < order.size(); start += cfg_.batch_size) {
        const std::size_t end = std::min(order.size(), start + cfg_.batch_size);
        for (auto block : grad.parameters()) std::fill(block.begin(), block.end(), 0.0);
        for (std::size_t b = start; b < end; ++b)
            sample_loss(model_, features_.row(order[b]), labels_[order[b]], ws, &grad);
        const double step = cfg_.learning_rate / static_cast<double>(end - start);
        auto params = model_.parameters();
        auto grads = grad.parameters();
        for (std::size_t p = 0; p < params.size(); ++p)
            for (std::size_t i = 0; i < params[p].size(); ++i) params[p][i] -= step * grads[p][i];
    }

    last_logits_ = logits(model_, features_);
    const double loss = mean_loss(last_logits_, labels_, active);
    if (!std::isfinite(loss)) throw NumericFailure(epoch_, "loss became non-finite");
    return loss;
}

TrainResult fit(const Matrix& features, std::span<const Label> labels, std::size_t num_outputs,
                const TrainConfig& cfg) {
    std::vector<std::size_t> active;
    if (cfg.subset) {
        active = *cfg.subset;
        for (std::size_t r : active)
            if (r >= features.rows()) throw std::invalid_argument("fit: subset index out of range");
    } else {
        active.resize(features.rows());
        std::iota(active.begin(), active.end(), std::size_t{0});
    }
    if (active.empty()) throw std::invalid_argument("fit: no training rows");

    Trainer trainer(features, labels, num_outputs, cfg);
    TrainResult result;
    result.trace.rows.resize(features.rows());
    std::iota(result.trace.rows.begin(), result.trace.rows.end(), std::size_t{0});
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        result.trace.loss_per_epoch.push_back(trainer.run_epoch(active));
        if (cfg.record_logits) result.trace.logits_per_epoch.push_back(trainer.last_logits());
    }
    result.model = trainer.model();
    result.trace.embeddings = embed(result.model, features);
    return result;
}

TrainResult train(const Dataset& ds, const TrainConfig& cfg, LabelSource source, std::size_t num_outputs) {
    const auto rows = ds.indices(Split::train);
    if (rows.empty()) throw std::invalid_argument("train: empty train split");
    const Matrix x = ds.features.select_rows(rows);
    std::vector<Label> y(rows.size());
    const auto& src = source == LabelSource::observed ? ds.observed_labels : ds.true_labels;
    for (std::size_t i = 0; i < rows.size(); ++i) y[i] = src[rows[i]];

    TrainConfig local = cfg;
    if (cfg.subset) {
        // dataset row indices -> positions within the train split
        std::vector<std::size_t> position(ds.size(), rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) position[rows[i]] = i;
        std::vector<std::size_t> mapped;
        mapped.reserve(cfg.subset->size());
        for (std::size_t r : *cfg.subset) {
            if (r >= ds.size() || position[r] == rows.size())
                throw std::invalid_argument("train: subset contains a non-train row");
            mapped.push_back(position[r]);
        }
        local.subset = std::move(mapped);
    }
    auto result = fit(x, y, num_outputs, local);
    result.trace.rows = rows;
    return result;
}

Matrix logits(const Model& m, const Matrix& x) {
    if (x.cols() != m.input_dim)
        throw std::invalid_argument("model expects " + std::to_string(m.input_dim) + " features, got " +
                                    std::to_string(x.cols()));
    if (m.hidden_dim == 0) return kernels::affine(x, m.w2, m.b2, false);
    return kernels::affine(kernels::affine(x, m.w1, m.b1, true), m.w2, m.b2, false);
}

Matrix embed(const Model& m, const Matrix& x) {
    if (x.cols() != m.input_dim)
        throw std::invalid_argument("model expects " + std::to_string(m.input_dim) + " features, got " +
                                    std::to_string(x.cols()));
    if (m.hidden_dim == 0) return x;
    return kernels::affine(x, m.w1, m.b1, true);
}

Matrix softmax_rows(Matrix z) {
    for (std::size_t i = 0; i < z.rows(); ++i) {
        auto row = z.row(i);
        const double mx = *std::max_element(row.begin(), row.end());
        double sum = 0.0;
        for (double& v : row) {
            v = std::exp(v - mx);
            sum += v;
        }
        for (double& v : row) v /= sum;
    }
    return z;
}

Matrix predict_proba(const Model& m, const Matrix& x) { return softmax_rows(logits(m, x)); }

std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

double evaluate(const Model& m, const Dataset& ds, Split s) {
    const auto rows = ds.indices(s);
    if (rows.empty()) throw std::invalid_argument(std::string("evaluate: empty ") + to_string(s) + " split");
    const Matrix z = logits(m, ds.features.select_rows(rows));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        if (static_cast<Label>(argmax(z.row(i))) == ds.true_labels[rows[i]]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(rows.size());
}

CVProbabilities cv_predict(const Dataset& ds, const TrainConfig& cfg, std::size_t folds) {
    if (folds < 2) throw std::invalid_argument("cv_predict: need at least 2 folds");
    const auto rows = ds.indices(Split::train);
    if (rows.size() < folds) throw std::invalid_argument("cv_predict: fewer train rows than folds");

    const Matrix x = ds.features.select_rows(rows);
    std::vector<Label> y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) y[i] = ds.observed_labels[rows[i]];

    // Stratified by observed label: within each class a seeded shuffle, then
    // round-robin fold ids. The offset continues across classes so fold sizes
    // stay balanced overall.
    CVProbabilities out;
    out.rows = rows;
    out.fold.assign(rows.size(), 0);
    Rng rng(derive_seed(cfg.seed, "cv-folds"));
    std::size_t next = 0;
    for (int c = 0; c < ds.num_classes; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < rows.size(); ++i)
            if (y[i] == c) members.push_back(i);
        rng.shuffle(std::span<std::size_t>(members));
        for (std::size_t m : members) out.fold[m] = next++ % folds;
    }

    const auto k = static_cast<std::size_t>(ds.num_classes);
    out.probs = Matrix(rows.size(), k);
    std::vector<std::string> errors(folds);
    const auto nfolds = static_cast<std::ptrdiff_t>(folds);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t f = 0; f < nfolds; ++f) {
        const auto fold = static_cast<std::size_t>(f);
        try {
            TrainConfig local = cfg;
            local.seed = derive_seed(cfg.seed, fold + 1);
            local.record_logits = false;
            std::vector<std::size_t> fit_rows, held;
            for (std::size_t i = 0; i < rows.size(); ++i) (out.fold[i] == fold ? held : fit_rows).push_back(i);
            local.subset = std::move(fit_rows);
            const auto result = fit(x, y, k, local);
            const Matrix p = predict_proba(result.model, x.select_rows(held));
            for (std::size_t j = 0; j < held.size(); ++j) {
                const auto src = p.row(j);
                std::copy(src.begin(), src.end(), out.probs.row(held[j]).begin());
            }
        } catch (const std::exception& e) {
            errors[fold] = e.what();
        }
    }
    for (std::size_t f = 0; f < folds; ++f)
        if (!errors[f].empty()) throw std::runtime_error("cv_predict fold " + std::to_string(f) + ": " + errors[f]);
    return out;
}

nlohmann::json to_json(const Model& m) {
    auto dense = [](const Matrix& w) {
        return nlohmann::json{{"shape", {w.rows(), w.cols()}}, {"values", w.data()}};
    };
    nlohmann::json j{{"input_dim", m.input_dim}, {"hidden_dim", m.hidden_dim}, {"num_outputs", m.num_outputs}};
    nlohmann::json layers = nlohmann::json::array();
    if (m.hidden_dim > 0) layers.push_back({{"weights", dense(m.w1)}, {"bias", m.b1}, {"activation", "relu"}});
    layers.push_back({{"weights", dense(m.w2)}, {"bias", m.b2}, {"activation", "identity"}});
    j["layers"] = std::move(layers);
    return j;
}

}  // namespace noisegate
