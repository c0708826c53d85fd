#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "statefusion/errors.hpp"
#include "statefusion/grid.hpp"

namespace statefusion {

struct MlpConfig {
    std::size_t input_dim = 1;
    std::vector<std::size_t> hidden_dims{64, 64};
    std::size_t output_dim = 2;
    double learning_rate = 1e-3;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 200;
    std::size_t patience = 20;
    std::uint64_t seed = 0;

    /// Throws ValidationError on a zero dimension, non-positive rate, or zero
    /// batch size or patience.
    void validate() const;

    friend bool operator==(const MlpConfig&, const MlpConfig&) = default;
};

/// Fully connected layer: weights are out x in, row-major.
struct DenseLayer {
    Grid weights;
    std::vector<double> bias;

    std::size_t in_dim() const { return weights.cols(); }
    std::size_t out_dim() const { return weights.rows(); }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// ReLU hidden layers followed by a soft-max output layer.
struct MlpModel {
    MlpConfig config;
    std::vector<DenseLayer> layers;

    std::size_t parameter_count() const;

    friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

/// Feature rows with one class label per row.
struct LabeledSet {
    Grid features;
    std::vector<std::size_t> labels;

    std::size_t size() const { return labels.size(); }
};

/// Gradient of the mean batch loss, shaped like the model's layers.
using Gradients = std::vector<DenseLayer>;

struct TrainReport {
    std::size_t epochs_run = 0;
    double final_train_loss = 0.0;
    double best_validation_loss = 0.0;
    std::size_t best_epoch = 0;
    std::vector<double> train_loss_curve;
    std::vector<double> validation_loss_curve;

    friend bool operator==(const TrainReport&, const TrainReport&) = default;
};

class TrainingDiverged : public Error {
public:
    TrainingDiverged(const std::string& what, TrainReport report)
        : Error(what), report_(std::move(report)) {}
    const TrainReport& report() const { return report_; }

private:
    TrainReport report_;
};

/// He-style initialization: weights ~ N(0, 2 / fan_in), biases zero.
MlpModel init_mlp(const MlpConfig& config);

std::vector<double> forward(const MlpModel& model, std::span<const double> features);

/// Soft-max probabilities for every row; uses the OpenMP kernels.
Grid forward_batch(const MlpModel& model, const Grid& features);

/// Cross-entropy of the true class, computed from the logits.
double loss(const MlpModel& model, std::span<const double> features, std::size_t true_index);

/// Mean cross-entropy over the whole set.
double mean_loss(const MlpModel& model, const LabeledSet& set);

/// Backpropagated gradient of the mean loss over the rows listed in `batch`.
Gradients gradient(const MlpModel& model, const LabeledSet& set, std::span<const std::size_t> batch);

/// Mean loss over the rows listed in `batch` (the function `gradient` differentiates).
double batch_loss(const MlpModel& model, const LabeledSet& set, std::span<const std::size_t> batch);

struct TrainResult {
    MlpModel model;
    TrainReport report;
};

/// Mini-batch gradient descent with early stopping on validation loss.
/// Returns the parameters from the epoch with the lowest validation loss.
TrainResult train(const MlpModel& initial, const LabeledSet& train_set, const LabeledSet& validation_set);

struct Prediction {
    std::size_t index = 0;
    std::vector<double> probabilities;
};

Prediction predict(const MlpModel& model, std::span<const double> features);

/// Argmax per row of forward_batch.
std::vector<std::size_t> predict_batch(const MlpModel& model, const Grid& features);

std::string mlp_to_json(const MlpModel& model, std::string_view catalog_fingerprint);
MlpModel mlp_from_json(std::string_view text, std::string* catalog_fingerprint = nullptr);
void save_mlp(const MlpModel& model, std::string_view catalog_fingerprint, const std::filesystem::path& path);
MlpModel load_mlp(const std::filesystem::path& path, std::string* catalog_fingerprint = nullptr);

std::string train_report_to_json(const TrainReport& report);

}  // namespace statefusion
