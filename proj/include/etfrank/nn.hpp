#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "etfrank/features.hpp"

namespace etfrank::nn {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::RowVectorXd;

inline constexpr std::size_t kNumDense = 5;
inline constexpr std::size_t kNumNorm = 4;
/// Output widths of the five dense layers; the input width is 8 * f.
inline constexpr std::array<std::size_t, kNumDense> kLayerWidths = {64, 32, 16, 8, 2};
inline constexpr double kNormEpsilon = 1e-5;
inline constexpr double kProbFloor = 1e-30;

struct DenseLayer {
    Matrix weight;  // n_in x n_out
    RowVector bias;
};

struct BatchNorm {
    RowVector gamma;
    RowVector beta;
    RowVector running_mean;
    RowVector running_var;
};

struct ModelParams {
    std::size_t num_features = 0;
    std::uint64_t seed = 0;
    std::array<DenseLayer, kNumDense> dense;
    std::array<BatchNorm, kNumNorm> norm;

    std::size_t input_dim() const { return kWindowQuarters * num_features; }
    /// Throws ShapeError on any shape mismatch and NumericError on a
    /// non-finite value or a non-positive running variance.
    void validate() const;
};

/// Xavier-uniform weights, zero biases, unit gamma, zero beta, running
/// statistics (0, 1). Deterministic in `seed`.
ModelParams init_params(std::size_t num_features, std::uint64_t seed);

enum class Mode { Train, Inference };

struct HiddenCache {
    Matrix input;       // layer input h_{l-1}
    Matrix normalized;  // x_hat
    Matrix activated;   // gamma * x_hat + beta, before ReLU
    RowVector batch_mean;
    RowVector batch_var;  // biased
    RowVector inv_std;
};

struct ForwardCache {
    Mode mode = Mode::Inference;
    std::array<HiddenCache, kNumNorm> hidden;
    Matrix last_input;
    Matrix probs;
};

/// Rows of the returned `probs` are (p_up, p_down).
ForwardCache forward(const ModelParams& params, const Matrix& batch, Mode mode);

struct LossValue {
    double value = 0.0;
    std::size_t clamped = 0;  // rows whose true-class probability hit kProbFloor
};

/// Mean over rows of -log p(true class).
LossValue nll_loss(const Matrix& probs, std::span<const Label> labels);

struct Gradients {
    std::array<Matrix, kNumDense> weight;
    std::array<RowVector, kNumDense> bias;
    std::array<RowVector, kNumNorm> gamma;
    std::array<RowVector, kNumNorm> beta;
};

/// Exact gradients of the mean NLL, including the batch-statistics terms of
/// batch normalization. Requires a train-mode cache.
Gradients backward(const ModelParams& params, const ForwardCache& cache, std::span<const Label> labels);

/// running = (1 - momentum) * running + momentum * batch statistic, with the
/// unbiased batch variance.
void update_running_stats(ModelParams& params, const ForwardCache& cache, double momentum);

/// Trainable tensors in a fixed order: per layer W, b, then gamma, beta for
/// the normalized layers.
std::vector<std::span<double>> trainable_views(ModelParams& params);
std::vector<std::span<const double>> trainable_views(const ModelParams& params);
std::vector<std::span<const double>> gradient_views(const Gradients& grads);

struct AdamConfig {
    double learning_rate = 0.00025;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
    std::uint64_t step = 0;

    static AdamState zeros_like(const ModelParams& params);
};

/// Bias-corrected Adam update of every trainable tensor. Batch-norm running
/// statistics are not touched.
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, const AdamConfig& cfg);

enum class SelectionMetric { ValidationAccuracy, ValidationLoss };

std::string_view metric_name(SelectionMetric m);
SelectionMetric parse_metric(std::string_view name);

struct TrainConfig {
    std::uint64_t maxiter = 100000;
    std::uint64_t miniter = 50000;
    std::size_t batch_size = 128;
    std::uint64_t save_interval = 1000;
    AdamConfig adam;
    double bn_momentum = 0.1;
    SelectionMetric selection_metric = SelectionMetric::ValidationAccuracy;

    void validate() const;
};

/// Design matrix (one flattened window per row) with labels.
struct Dataset {
    Matrix inputs;
    std::vector<Label> labels;

    static Dataset from_samples(std::span<const LabeledSample> samples);
    std::size_t size() const { return labels.size(); }
};

struct Evaluation {
    double accuracy = 0.0;
    double loss = 0.0;
};

Evaluation evaluate(const ModelParams& params, const Dataset& data);

struct Checkpoint {
    ModelParams params;
    std::uint64_t iteration = 0;
    double metric_value = 0.0;
};

struct EvaluationRecord {
    std::uint64_t iteration = 0;
    double train_loss = 0.0;  // mean batch loss since the previous evaluation
    double val_metric = 0.0;
};

struct TrainResult {
    Checkpoint best;
    std::vector<EvaluationRecord> evaluations;
};

/// Mini-batch training with validation-based checkpoint selection.
/// Iterations are numbered 1..maxiter; the model is evaluated after
/// iteration i when i > miniter and i % save_interval == 0. Ties keep the
/// earlier checkpoint.
TrainResult train(const Dataset& train_data, const Dataset& validation, const TrainConfig& cfg, std::uint64_t seed);

/// Inference-mode forward on one flattened window: (p_up, p_down).
std::array<double, 2> predict(const ModelParams& params, std::span<const double> input);
std::array<double, 2> predict(const ModelParams& params, const FeatureWindow& window);

/// std::mt19937_64 with hand-rolled conversions, so draws do not depend on
/// the standard library's distribution implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    std::uint64_t next() { return engine_(); }
    /// Uniform in [0, 1).
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n);
    /// Standard normal (Box-Muller).
    double normal();

private:
    std::mt19937_64 engine_;
};

}  // namespace etfrank::nn
