#include "etfrank/nn.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <numbers>

#include "etfrank/error.hpp"

namespace etfrank::nn {

namespace {

void require_finite(const Matrix& m, std::string_view what, std::size_t layer) {
    if (!m.allFinite()) {
        throw NumericError("non-finite " + std::string(what) + " in layer " + std::to_string(layer + 1));
    }
}

std::size_t layer_input_width(const ModelParams& p, std::size_t layer) {
    return layer == 0 ? p.input_dim() : kLayerWidths[layer - 1];
}

}  // namespace

// ---------------------------------------------------------------------------
// Rng

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t n) {
    // Multiply-shift; bias is at most n / 2^64.
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// ---------------------------------------------------------------------------
// Parameters

void ModelParams::validate() const {
    if (num_features == 0) throw ShapeError("num_features must be >= 1");
    for (std::size_t l = 0; l < kNumDense; ++l) {
        const auto n_in = static_cast<Eigen::Index>(layer_input_width(*this, l));
        const auto n_out = static_cast<Eigen::Index>(kLayerWidths[l]);
        const auto& d = dense[l];
        if (d.weight.rows() != n_in || d.weight.cols() != n_out || d.bias.size() != n_out) {
            throw ShapeError("layer " + std::to_string(l + 1) + " expects " + std::to_string(n_in) + "x" +
                             std::to_string(n_out) + ", got " + std::to_string(d.weight.rows()) + "x" +
                             std::to_string(d.weight.cols()));
        }
        if (!d.weight.allFinite() || !d.bias.allFinite()) {
            throw NumericError("non-finite parameter in layer " + std::to_string(l + 1));
        }
        if (l < kNumNorm) {
            const auto& n = norm[l];
            if (n.gamma.size() != n_out || n.beta.size() != n_out || n.running_mean.size() != n_out ||
                n.running_var.size() != n_out) {
                throw ShapeError("batch-norm shape mismatch in layer " + std::to_string(l + 1));
            }
            if (!n.gamma.allFinite() || !n.beta.allFinite() || !n.running_mean.allFinite() ||
                !n.running_var.allFinite() || (n.running_var.array() <= 0.0).any()) {
                throw NumericError("invalid batch-norm state in layer " + std::to_string(l + 1));
            }
        }
    }
}

ModelParams init_params(std::size_t num_features, std::uint64_t seed) {
    if (num_features == 0) throw ShapeError("num_features must be >= 1");
    ModelParams p;
    p.num_features = num_features;
    p.seed = seed;
    Rng rng(seed);
    for (std::size_t l = 0; l < kNumDense; ++l) {
        const std::size_t n_in = layer_input_width(p, l);
        const std::size_t n_out = kLayerWidths[l];
        const double bound = std::sqrt(6.0 / static_cast<double>(n_in + n_out));
        auto& d = p.dense[l];
        d.weight.resize(static_cast<Eigen::Index>(n_in), static_cast<Eigen::Index>(n_out));
        for (Eigen::Index i = 0; i < d.weight.size(); ++i) d.weight.data()[i] = rng.uniform(-bound, bound);
        d.bias = RowVector::Zero(static_cast<Eigen::Index>(n_out));
        if (l < kNumNorm) {
            const auto n = static_cast<Eigen::Index>(n_out);
            p.norm[l] = {RowVector::Ones(n), RowVector::Zero(n), RowVector::Zero(n), RowVector::Ones(n)};
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Forward / loss / backward

ForwardCache forward(const ModelParams& params, const Matrix& batch, Mode mode) {
    if (batch.cols() != static_cast<Eigen::Index>(params.input_dim())) {
        throw ShapeError("input width " + std::to_string(batch.cols()) + " does not match 8*f = " +
                         std::to_string(params.input_dim()));
    }
    if (batch.rows() < 1) throw ShapeError("empty batch");
    if (mode == Mode::Train && batch.rows() < 2) throw ShapeError("train-mode forward needs a batch of >= 2 rows");
    if (!batch.allFinite()) throw NumericError("non-finite value in input batch");

    const double B = static_cast<double>(batch.rows());
    ForwardCache cache;
    cache.mode = mode;
    Matrix h = batch;
    for (std::size_t l = 0; l < kNumNorm; ++l) {
        const auto& d = params.dense[l];
        const auto& n = params.norm[l];
        auto& c = cache.hidden[l];
        c.input = std::move(h);
        Matrix a = c.input * d.weight;
        a.rowwise() += d.bias;
        require_finite(a, "affine output", l);

        if (mode == Mode::Train) {
            c.batch_mean = a.colwise().mean();
            Matrix centered = a.rowwise() - c.batch_mean;
            c.batch_var = centered.array().square().colwise().sum() / B;
            c.inv_std = (c.batch_var.array() + kNormEpsilon).rsqrt();
            c.normalized = centered.array().rowwise() * c.inv_std.array();
        } else {
            c.inv_std = (n.running_var.array() + kNormEpsilon).rsqrt();
            c.normalized = (a.rowwise() - n.running_mean).array().rowwise() * c.inv_std.array();
        }
        c.activated = (c.normalized.array().rowwise() * n.gamma.array()).rowwise() + n.beta.array();
        require_finite(c.activated, "batch-norm output", l);
        h = c.activated.cwiseMax(0.0);
    }

    cache.last_input = std::move(h);
    Matrix logits = cache.last_input * params.dense[kNumDense - 1].weight;
    logits.rowwise() += params.dense[kNumDense - 1].bias;
    require_finite(logits, "logits", kNumDense - 1);

    const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    Matrix e = (logits.colwise() - row_max).array().exp();
    const Eigen::VectorXd row_sum = e.rowwise().sum();
    cache.probs = e.array().colwise() / row_sum.array();
    return cache;
}

LossValue nll_loss(const Matrix& probs, std::span<const Label> labels) {
    if (static_cast<std::size_t>(probs.rows()) != labels.size() || probs.cols() != 2) {
        throw ShapeError("nll_loss: probs/labels shape mismatch");
    }
    LossValue out;
    double total = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        double p = probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(labels[i]));
        if (p < kProbFloor) {
            p = kProbFloor;
            ++out.clamped;
        }
        total += -std::log(p);
    }
    out.value = total / static_cast<double>(labels.size());
    return out;
}

Gradients backward(const ModelParams& params, const ForwardCache& cache, std::span<const Label> labels) {
    if (cache.mode != Mode::Train) throw ShapeError("backward needs a train-mode forward cache");
    const auto rows = cache.probs.rows();
    if (static_cast<std::size_t>(rows) != labels.size()) throw ShapeError("backward: label count mismatch");
    const double B = static_cast<double>(rows);

    Gradients g;
    Matrix delta = cache.probs;  // d loss / d logits
    for (Eigen::Index i = 0; i < rows; ++i) delta(i, static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) -= 1.0;
    delta /= B;

    const std::size_t top = kNumDense - 1;
    g.weight[top] = cache.last_input.transpose() * delta;
    g.bias[top] = delta.colwise().sum();
    Matrix dh = delta * params.dense[top].weight.transpose();

    for (std::size_t k = kNumNorm; k-- > 0;) {
        const auto& c = cache.hidden[k];
        const auto& n = params.norm[k];
        const Matrix dy = (c.activated.array() > 0.0).select(dh, 0.0);
        g.gamma[k] = (dy.array() * c.normalized.array()).colwise().sum();
        g.beta[k] = dy.colwise().sum();
        const Matrix dxhat = dy.array().rowwise() * n.gamma.array();
        const RowVector sum_dxhat = dxhat.colwise().sum();
        const RowVector sum_dxhat_xhat = (dxhat.array() * c.normalized.array()).colwise().sum();
        Matrix da = (B * dxhat.array()).rowwise() - sum_dxhat.array();
        da.array() -= c.normalized.array().rowwise() * sum_dxhat_xhat.array();
        da.array().rowwise() *= c.inv_std.array() / B;
        g.weight[k] = c.input.transpose() * da;
        g.bias[k] = da.colwise().sum();
        if (k > 0) dh = da * params.dense[k].weight.transpose();
    }
    return g;
}

void update_running_stats(ModelParams& params, const ForwardCache& cache, double momentum) {
    if (cache.mode != Mode::Train) return;
    const double B = static_cast<double>(cache.probs.rows());
    const double unbias = B / (B - 1.0);
    for (std::size_t l = 0; l < kNumNorm; ++l) {
        auto& n = params.norm[l];
        const auto& c = cache.hidden[l];
        n.running_mean = (1.0 - momentum) * n.running_mean + momentum * c.batch_mean;
        n.running_var = (1.0 - momentum) * n.running_var + (momentum * unbias) * c.batch_var;
    }
}

// ---------------------------------------------------------------------------
// Flat views

namespace {

template <typename T>
std::span<T> view(auto& eigen_obj) {
    return {eigen_obj.data(), static_cast<std::size_t>(eigen_obj.size())};
}

}  // namespace

std::vector<std::span<double>> trainable_views(ModelParams& p) {
    std::vector<std::span<double>> out;
    for (std::size_t l = 0; l < kNumDense; ++l) {
        out.push_back(view<double>(p.dense[l].weight));
        out.push_back(view<double>(p.dense[l].bias));
        if (l < kNumNorm) {
            out.push_back(view<double>(p.norm[l].gamma));
            out.push_back(view<double>(p.norm[l].beta));
        }
    }
    return out;
}

std::vector<std::span<const double>> trainable_views(const ModelParams& p) {
    std::vector<std::span<const double>> out;
    for (std::size_t l = 0; l < kNumDense; ++l) {
        out.push_back(view<const double>(p.dense[l].weight));
        out.push_back(view<const double>(p.dense[l].bias));
        if (l < kNumNorm) {
            out.push_back(view<const double>(p.norm[l].gamma));
            out.push_back(view<const double>(p.norm[l].beta));
        }
    }
    return out;
}

std::vector<std::span<const double>> gradient_views(const Gradients& g) {
    std::vector<std::span<const double>> out;
    for (std::size_t l = 0; l < kNumDense; ++l) {
        out.push_back(view<const double>(g.weight[l]));
        out.push_back(view<const double>(g.bias[l]));
        if (l < kNumNorm) {
            out.push_back(view<const double>(g.gamma[l]));
            out.push_back(view<const double>(g.beta[l]));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Adam

AdamState AdamState::zeros_like(const ModelParams& params) {
    AdamState s;
    for (auto v : trainable_views(params)) {
        s.first_moment.emplace_back(v.size(), 0.0);
        s.second_moment.emplace_back(v.size(), 0.0);
    }
    return s;
}

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, const AdamConfig& cfg) {
    auto ps = trainable_views(params);
    const auto gs = gradient_views(grads);
    if (ps.size() != gs.size() || ps.size() != state.first_moment.size()) {
        throw ShapeError("adam_step: parameter/gradient/state layout mismatch");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(cfg.beta1, t);
    const double c2 = 1.0 - std::pow(cfg.beta2, t);
    for (std::size_t k = 0; k < ps.size(); ++k) {
        auto p = ps[k];
        const auto g = gs[k];
        auto& m = state.first_moment[k];
        auto& v = state.second_moment[k];
        if (g.size() != p.size() || m.size() != p.size()) throw ShapeError("adam_step: tensor size mismatch");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double update = cfg.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + cfg.epsilon);
            if (!std::isfinite(update)) {
                throw NumericError("non-finite Adam update at step " + std::to_string(state.step) + " (tensor " +
                                   std::to_string(k) + ", index " + std::to_string(i) + ")");
            }
            p[i] -= update;
        }
    }
}

// ---------------------------------------------------------------------------
// Training

std::string_view metric_name(SelectionMetric m) {
    return m == SelectionMetric::ValidationAccuracy ? "validation_accuracy" : "validation_loss";
}

SelectionMetric parse_metric(std::string_view name) {
    if (name == "validation_accuracy") return SelectionMetric::ValidationAccuracy;
    if (name == "validation_loss") return SelectionMetric::ValidationLoss;
    throw ConfigError("unknown selection_metric '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
    if (maxiter == 0) throw ConfigError("maxiter must be >= 1");
    if (!(miniter < maxiter)) throw ConfigError("miniter must be < maxiter");
    if (batch_size < 2) throw ConfigError("batch_size must be >= 2");
    if (save_interval == 0) throw ConfigError("save_interval must be >= 1");
    if (!(adam.learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0) || !(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) {
        throw ConfigError("adam betas must lie in [0, 1)");
    }
    if (!(adam.epsilon > 0.0)) throw ConfigError("adam epsilon must be > 0");
    if (!(bn_momentum > 0.0 && bn_momentum <= 1.0)) throw ConfigError("bn_momentum must lie in (0, 1]");
}

Dataset Dataset::from_samples(std::span<const LabeledSample> samples) {
    Dataset d;
    if (samples.empty()) return d;
    const auto width = static_cast<Eigen::Index>(samples.front().window.values.size());
    d.inputs.resize(static_cast<Eigen::Index>(samples.size()), width);
    d.labels.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& v = samples[i].window.values;
        if (static_cast<Eigen::Index>(v.size()) != width) throw ShapeError("inconsistent window widths in dataset");
        d.inputs.row(static_cast<Eigen::Index>(i)) = Eigen::Map<const RowVector>(v.data(), width);
        d.labels.push_back(samples[i].label);
    }
    return d;
}

Evaluation evaluate(const ModelParams& params, const Dataset& data) {
    if (data.size() == 0) throw ConfigError("cannot evaluate on an empty dataset");
    const auto cache = forward(params, data.inputs, Mode::Inference);
    Evaluation e;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        const Label predicted = cache.probs(r, 0) >= cache.probs(r, 1) ? Label::Up : Label::Down;
        if (predicted == data.labels[i]) ++correct;
    }
    e.accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    e.loss = nll_loss(cache.probs, data.labels).value;
    return e;
}

TrainResult train(const Dataset& train_data, const Dataset& validation, const TrainConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (train_data.size() == 0) throw ConfigError("empty training split");
    if (validation.size() == 0) throw ConfigError("empty validation split");
    const auto width = static_cast<std::size_t>(train_data.inputs.cols());
    if (width % kWindowQuarters != 0 || static_cast<std::size_t>(validation.inputs.cols()) != width) {
        throw ShapeError("dataset width is not 8 * f");
    }

    ModelParams params = init_params(width / kWindowQuarters, seed);
    AdamState adam = AdamState::zeros_like(params);
    Rng sampler(seed ^ 0x9e3779b97f4a7c15ULL);

    const bool maximize = cfg.selection_metric == SelectionMetric::ValidationAccuracy;
    TrainResult result;
    bool have_best = false;
    double loss_sum = 0.0;
    std::uint64_t loss_count = 0;

    Matrix batch(static_cast<Eigen::Index>(cfg.batch_size), static_cast<Eigen::Index>(width));
    std::vector<Label> labels(cfg.batch_size);
    for (std::uint64_t iter = 1; iter <= cfg.maxiter; ++iter) {
        for (std::size_t b = 0; b < cfg.batch_size; ++b) {
            const auto idx = static_cast<Eigen::Index>(sampler.below(train_data.size()));
            batch.row(static_cast<Eigen::Index>(b)) = train_data.inputs.row(idx);
            labels[b] = train_data.labels[static_cast<std::size_t>(idx)];
        }
        ForwardCache cache;
        try {
            cache = forward(params, batch, Mode::Train);
        } catch (const NumericError& e) {
            throw NumericError("iteration " + std::to_string(iter) + ": " + e.what());
        }
        const auto loss = nll_loss(cache.probs, labels);
        if (!std::isfinite(loss.value)) {
            throw NumericError("non-finite training loss at iteration " + std::to_string(iter));
        }
        if (loss.clamped) spdlog::debug("iteration {}: {} probabilities clamped before log", iter, loss.clamped);
        const auto grads = backward(params, cache, labels);
        update_running_stats(params, cache, cfg.bn_momentum);
        try {
            adam_step(params, grads, adam, cfg.adam);
        } catch (const NumericError& e) {
            throw NumericError("iteration " + std::to_string(iter) + ": " + e.what());
        }
        loss_sum += loss.value;
        ++loss_count;

        if (iter > cfg.miniter && iter % cfg.save_interval == 0) {
            const auto ev = evaluate(params, validation);
            const double metric = maximize ? ev.accuracy : ev.loss;
            if (!std::isfinite(metric)) {
                throw NumericError("non-finite validation metric at iteration " + std::to_string(iter));
            }
            result.evaluations.push_back({iter, loss_sum / static_cast<double>(loss_count), metric});
            loss_sum = 0.0;
            loss_count = 0;
            const bool better = !have_best || (maximize ? metric > result.best.metric_value
                                                        : metric < result.best.metric_value);
            if (better) {
                result.best = {params, iter, metric};
                have_best = true;
            }
            spdlog::info("iteration {}: train_loss={:.6f} {}={:.6f}", iter, result.evaluations.back().train_loss,
                         metric_name(cfg.selection_metric), metric);
        }
    }
    if (!have_best) {
        throw ConfigError("no evaluation happened: need maxiter >= miniter + save_interval");
    }
    return result;
}

std::array<double, 2> predict(const ModelParams& params, std::span<const double> input) {
    if (input.size() != params.input_dim()) {
        throw ShapeError("predict: input of size " + std::to_string(input.size()) + ", expected " +
                         std::to_string(params.input_dim()));
    }
    Matrix x = Eigen::Map<const Matrix>(input.data(), 1, static_cast<Eigen::Index>(input.size()));
    const auto cache = forward(params, x, Mode::Inference);
    return {cache.probs(0, 0), cache.probs(0, 1)};
}

std::array<double, 2> predict(const ModelParams& params, const FeatureWindow& window) {
    if (window.num_features != params.num_features) {
        throw ShapeError("window has " + std::to_string(window.num_features) + " features, model expects " +
                         std::to_string(params.num_features));
    }
    return predict(params, std::span<const double>(window.values));
}

}  // namespace etfrank::nn
