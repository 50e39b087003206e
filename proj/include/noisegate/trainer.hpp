#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "noisegate/dataset.hpp"
#include "noisegate/matrix.hpp"
#include "noisegate/random.hpp"

namespace noisegate {

struct TrainConfig {
    std::size_t hidden_dim = 32;  ///< 0 = softmax regression on raw features
    std::size_t epochs = 50;
    double learning_rate = 0.05;
    std::size_t batch_size = 32;
    double weight_init_scale = 1.0;
    std::uint64_t seed = 0;
    bool record_logits = false;
    /// Dataset row indices to train on (must be train-split rows); all train
    /// rows when empty.
    std::optional<std::vector<std::size_t>> subset;

    void validate() const;
};

/// affine -> ReLU -> affine, or a single affine layer when hidden_dim == 0.
struct Model {
    std::size_t input_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t num_outputs = 0;
    Matrix w1;  ///< hidden_dim x input_dim (empty without hidden layer)
    std::vector<double> b1;
    Matrix w2;  ///< num_outputs x (hidden_dim or input_dim)
    std::vector<double> b2;

    static Model zeros(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_outputs);

    /// Every trainable parameter, in a fixed order.
    std::vector<std::span<double>> parameters();

    bool operator==(const Model&) const = default;
};

/// Per-epoch record of one training run. Rows follow `rows` (dataset row
/// indices, or row positions of the matrix passed to fit()).
struct TrainingTrace {
    std::vector<std::size_t> rows;
    std::vector<Matrix> logits_per_epoch;  ///< E x (N x C), only with record_logits
    Matrix embeddings;                     ///< N x h at the final epoch
    std::vector<double> loss_per_epoch;

    bool operator==(const TrainingTrace&) const = default;
};

struct TrainResult {
    Model model;
    TrainingTrace trace;
};

/// Out-of-fold class probabilities for the train split.
struct CVProbabilities {
    std::vector<std::size_t> rows;  ///< dataset row indices
    Matrix probs;                   ///< rows.size() x K
    std::vector<std::size_t> fold;  ///< fold id per row
};

enum class LabelSource { observed, truth };

/// Mini-batch gradient descent on mean cross-entropy. The run is driven one
/// epoch at a time so callers can change the active rows between epochs.
class Trainer {
public:
    Trainer(const Matrix& features, std::span<const Label> labels, std::size_t num_outputs,
            const TrainConfig& cfg);

    /// One pass over `active` (positions into the feature matrix) in a freshly
    /// shuffled order. Returns the post-epoch mean loss over `active`; the
    /// post-epoch logits for every row are available from last_logits().
    double run_epoch(std::span<const std::size_t> active);

    const Model& model() const { return model_; }
    const Matrix& last_logits() const { return last_logits_; }
    std::size_t epochs_run() const { return epoch_; }

private:
    Matrix features_;
    std::vector<Label> labels_;
    TrainConfig cfg_;
    Model model_;
    Rng rng_;
    Matrix last_logits_;
    std::size_t epoch_ = 0;
};

Model init_model(std::size_t input_dim, std::size_t hidden_dim, std::size_t num_outputs, double scale,
                 Rng& rng);

/// Train on rows of `features` with explicit labels in [0, num_outputs).
TrainResult fit(const Matrix& features, std::span<const Label> labels, std::size_t num_outputs,
                const TrainConfig& cfg);

/// Train on the train split of `ds`.
TrainResult train(const Dataset& ds, const TrainConfig& cfg, LabelSource labels, std::size_t num_outputs);

Matrix logits(const Model& m, const Matrix& x);
Matrix embed(const Model& m, const Matrix& x);
Matrix predict_proba(const Model& m, const Matrix& x);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(Matrix logits);

std::size_t argmax(std::span<const double> v);

/// Accuracy against TRUE labels on one split.
double evaluate(const Model& m, const Dataset& ds, Split s);

/// Mean cross-entropy over the given rows; also returns the gradient.
double loss_and_gradient(const Model& m, const Matrix& x, std::span<const Label> y, Model* grad);

CVProbabilities cv_predict(const Dataset& ds, const TrainConfig& cfg, std::size_t folds);

nlohmann::json to_json(const Model& m);

}  // namespace noisegate
