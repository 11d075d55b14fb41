#pragma once

// conv(F filters, width W) -> activation -> maxpool -> flatten -> dense(1) -> sigmoid,
// trained with binary cross-entropy and Adam.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dnacnn/error.hpp"
#include "dnacnn/kernels.hpp"
#include "dnacnn/pipeline.hpp"
#include "dnacnn/random.hpp"
#include "dnacnn/tensor.hpp"

namespace dnacnn {

enum class Activation { relu, linear };

inline std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "linear"; }

inline Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::relu;
    if (s == "linear") return Activation::linear;
    throw ConfigError("conv_activation must be relu or linear, got '" + std::string(s) + "'");
}

struct ModelConfig {
    std::size_t n_filters = 15;
    std::size_t filter_width = 10;
    std::size_t pool_window = 35;
    std::size_t pool_stride = 35;
    Activation conv_activation = Activation::relu;
    std::size_t seq_length = 1500;

    static constexpr std::size_t channels = 4;

    std::size_t conv_length() const { return kernel::conv_output_length(seq_length, filter_width); }
    std::size_t pooled_length() const { return kernel::pool_output_length(conv_length(), pool_window, pool_stride); }
    std::size_t flat_dim() const { return pooled_length() * n_filters; }
    std::size_t param_count() const {
        return n_filters * filter_width * channels + n_filters + flat_dim() + 1;
    }

    void validate() const {
        if (n_filters == 0 || filter_width == 0 || pool_window == 0 || pool_stride == 0) {
            throw ConfigError("model sizes must all be >= 1");
        }
        if (seq_length < filter_width) {
            throw ConfigError("seq_length " + std::to_string(seq_length) + " is shorter than filter_width " +
                              std::to_string(filter_width));
        }
        if (seq_length - filter_width + 1 < pool_window) {
            throw ConfigError("convolution output length " + std::to_string(seq_length - filter_width + 1) +
                              " is shorter than pool_window " + std::to_string(pool_window));
        }
    }
};

template <typename T>
struct ParameterTensors {
    Tensor<T> conv_filters;   // [F, W, 4]
    Tensor<T> conv_bias;      // [F]
    Tensor<T> dense_weights;  // [D, 1]
    T dense_bias{};

    static ParameterTensors zeros(const ModelConfig& c) {
        return {Tensor<T>({c.n_filters, c.filter_width, ModelConfig::channels}), Tensor<T>({c.n_filters}),
                Tensor<T>({c.flat_dim(), 1}), T{}};
    }

    std::size_t size() const { return conv_filters.size() + conv_bias.size() + dense_weights.size() + 1; }

    friend bool operator==(const ParameterTensors&, const ParameterTensors&) = default;
};

template <typename T>
struct ModelParams : ParameterTensors<T> {};

template <typename T>
struct Gradients : ParameterTensors<T> {};

/// Canonical order: conv_filters, conv_bias, dense_weights, dense_bias; each row-major.
template <typename T>
std::vector<T> flatten(const ParameterTensors<T>& p) {
    std::vector<T> flat;
    flat.reserve(p.size());
    flat.insert(flat.end(), p.conv_filters.storage().begin(), p.conv_filters.storage().end());
    flat.insert(flat.end(), p.conv_bias.storage().begin(), p.conv_bias.storage().end());
    flat.insert(flat.end(), p.dense_weights.storage().begin(), p.dense_weights.storage().end());
    flat.push_back(p.dense_bias);
    return flat;
}

/// Copies a flat vector back into tensors shaped like `into`.
template <typename T>
void unflatten_into(std::span<const T> flat, ParameterTensors<T>& into) {
    if (flat.size() != into.size()) {
        throw DimensionError("flat parameter vector has " + std::to_string(flat.size()) + " elements, expected " +
                             std::to_string(into.size()));
    }
    auto it = flat.begin();
    for (Tensor<T>* t : {&into.conv_filters, &into.conv_bias, &into.dense_weights}) {
        std::copy(it, it + static_cast<std::ptrdiff_t>(t->size()), t->data().begin());
        it += static_cast<std::ptrdiff_t>(t->size());
    }
    into.dense_bias = *it;
}

template <typename T>
ModelParams<T> unflatten_params(const ModelConfig& config, std::span<const T> flat) {
    ModelParams<T> p{ParameterTensors<T>::zeros(config)};
    unflatten_into(flat, p);
    return p;
}

template <typename T>
Gradients<T> unflatten_grads(const ModelConfig& config, std::span<const T> flat) {
    Gradients<T> g{ParameterTensors<T>::zeros(config)};
    unflatten_into(flat, g);
    return g;
}

/// Glorot-uniform weights, zero biases.
template <typename T>
ModelParams<T> init_params(const ModelConfig& config, std::uint64_t seed) {
    config.validate();
    ModelParams<T> p{ParameterTensors<T>::zeros(config)};
    Rng rng(seed);
    auto fill = [&rng](Tensor<T>& t, double fan_in, double fan_out) {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& v : t.data()) v = static_cast<T>(rng.uniform(-bound, bound));
    };
    const auto wc = static_cast<double>(config.filter_width * ModelConfig::channels);
    fill(p.conv_filters, wc, static_cast<double>(config.filter_width * config.n_filters));
    fill(p.dense_weights, static_cast<double>(config.flat_dim()), 1.0);
    return p;
}

template <typename T>
void check_compatible(const ModelConfig& config, const ParameterTensors<T>& p) {
    const auto expected = ParameterTensors<T>::zeros(config);
    auto check = [](const char* name, const Tensor<T>& got, const Tensor<T>& want) {
        if (got.shape() != want.shape()) {
            throw DimensionError(std::string(name) + " has shape " + shape_string(got.shape()) + ", model expects " +
                                 shape_string(want.shape()));
        }
    };
    check("conv_filters", p.conv_filters, expected.conv_filters);
    check("conv_bias", p.conv_bias, expected.conv_bias);
    check("dense_weights", p.dense_weights, expected.dense_weights);
}

/// Activations kept for backward. `inputs` views the forwarded batch, which must outlive the cache.
template <typename T>
struct ForwardCache {
    std::size_t batch_size = 0;
    std::size_t seq_length = 0;
    std::span<const T> inputs;
    std::vector<std::size_t> argmax_rows;  // [B, P*F]
    std::vector<T> preact_at_argmax;      // [B, P*F]
    std::vector<T> pooled;                // [B, D]
    std::vector<T> logits;                // [B]
};

template <typename T>
struct ForwardResult {
    Tensor<T> probs;  // [B]
    ForwardCache<T> cache;
};

template <typename T>
ForwardResult<T> forward(const ModelParams<T>& params, const ModelConfig& config, const Batch<T>& batch) {
    if (batch.inputs.rank() != 3 || batch.inputs.dim(2) != ModelConfig::channels) {
        throw DimensionError("batch inputs must be [B, L, 4], got " + shape_string(batch.inputs.shape()));
    }
    if (batch.inputs.dim(1) != config.seq_length) {
        throw DimensionError("batch sequence length " + std::to_string(batch.inputs.dim(1)) +
                             " does not match model seq_length " + std::to_string(config.seq_length));
    }
    check_compatible(config, params);

    const std::size_t B = batch.size();
    const std::size_t L = config.seq_length;
    const std::size_t F = config.n_filters;
    const std::size_t conv_len = config.conv_length();
    const std::size_t D = config.flat_dim();

    ForwardResult<T> r{Tensor<T>({B}), {}};
    auto& c = r.cache;
    c.batch_size = B;
    c.seq_length = L;
    c.inputs = batch.inputs.data();
    c.argmax_rows.resize(B * D);
    c.preact_at_argmax.resize(B * D);
    c.pooled.resize(B * D);
    c.logits.resize(B);

    std::vector<T> preact(conv_len * F);
    std::vector<T> act(conv_len * F);
    for (std::size_t b = 0; b < B; ++b) {
        kernel::conv1d_forward<T>(batch.sample(b), L, ModelConfig::channels, params.conv_filters.data(),
                                  params.conv_bias.data(), config.filter_width, preact);
        if (config.conv_activation == Activation::relu) {
            for (std::size_t k = 0; k < act.size(); ++k) act[k] = relu(preact[k]);
        } else {
            act = preact;
        }
        const std::span<T> pooled(c.pooled.data() + b * D, D);
        const std::span<std::size_t> rows(c.argmax_rows.data() + b * D, D);
        kernel::maxpool1d_forward<T>(act, conv_len, F, config.pool_window, config.pool_stride, pooled, rows);
        for (std::size_t k = 0; k < D; ++k) c.preact_at_argmax[b * D + k] = preact[rows[k] * F + k % F];
        c.logits[b] = kernel::dot_plus_bias<T>(pooled, params.dense_weights.data(), params.dense_bias);
        r.probs[b] = sigmoid(c.logits[b]);
    }
    return r;
}

inline constexpr double kProbClamp = 1e-7;

namespace detail {

template <typename T>
void check_labels(const Tensor<T>& probs, const Tensor<T>& labels) {
    if (probs.size() != labels.size()) {
        throw DimensionError("have " + std::to_string(probs.size()) + " probabilities but " +
                             std::to_string(labels.size()) + " labels");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != T{0} && labels[i] != T{1}) {
            throw ValidationError("label at index " + std::to_string(i) + " is not 0 or 1");
        }
    }
}

template <typename T>
T clamp_prob(T p) {
    const T lo = static_cast<T>(kProbClamp);
    const T hi = static_cast<T>(1.0 - kProbClamp);
    return p < lo ? lo : (p > hi ? hi : p);
}

}  // namespace detail

/// Mean binary cross-entropy with probabilities clamped to [1e-7, 1-1e-7].
template <typename T>
T bce_loss(const Tensor<T>& probs, const Tensor<T>& labels) {
    detail::check_labels(probs, labels);
    T sum{0};
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const T p = detail::clamp_prob(probs[i]);
        sum += labels[i] == T{1} ? std::log(p) : std::log(T{1} - p);
    }
    return -sum / static_cast<T>(probs.size());
}

/// d(loss)/d(p_i) on clamped probabilities.
template <typename T>
Tensor<T> bce_grad(const Tensor<T>& probs, const Tensor<T>& labels) {
    detail::check_labels(probs, labels);
    Tensor<T> g(probs.shape());
    const auto B = static_cast<T>(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const T p = detail::clamp_prob(probs[i]);
        g[i] = (p - labels[i]) / (p * (T{1} - p)) / B;
    }
    return g;
}

/// Gradients of the mean BCE, using the fused sigmoid+BCE form (p - y) / B at each logit.
template <typename T>
Gradients<T> backward(const ModelParams<T>& params, const ModelConfig& config, const ForwardCache<T>& cache,
                      const Tensor<T>& labels) {
    const std::size_t B = cache.batch_size;
    const std::size_t F = config.n_filters;
    const std::size_t D = config.flat_dim();
    const std::size_t conv_len = config.conv_length();
    if (B == 0 || labels.size() != B || cache.logits.size() != B || cache.pooled.size() != B * D ||
        cache.seq_length != config.seq_length || cache.inputs.size() != B * config.seq_length * ModelConfig::channels) {
        throw InternalError("forward cache does not match this model and label batch");
    }
    check_compatible(config, params);

    Gradients<T> g{ParameterTensors<T>::zeros(config)};
    std::vector<T> grad_conv(conv_len * F, T{0});
    const T inv_b = T{1} / static_cast<T>(B);
    const std::size_t sample_len = config.seq_length * ModelConfig::channels;
    for (std::size_t b = 0; b < B; ++b) {
        if (labels[b] != T{0} && labels[b] != T{1}) {
            throw ValidationError("label at index " + std::to_string(b) + " is not 0 or 1");
        }
        const T dlogit = (sigmoid(cache.logits[b]) - labels[b]) * inv_b;
        g.dense_bias += dlogit;
        const T* pooled = cache.pooled.data() + b * D;
        const std::size_t* rows = cache.argmax_rows.data() + b * D;
        const T* preact = cache.preact_at_argmax.data() + b * D;
        for (std::size_t k = 0; k < D; ++k) {
            g.dense_weights[k] += dlogit * pooled[k];
            T gk = dlogit * params.dense_weights[k];
            if (config.conv_activation == Activation::relu) gk *= relu_derivative(preact[k]);
            if (rows[k] >= conv_len) throw InternalError("argmax row out of range in forward cache");
            grad_conv[rows[k] * F + k % F] += gk;
        }
        kernel::conv1d_backward_accumulate<T>(cache.inputs.subspan(b * sample_len, sample_len), config.seq_length,
                                              ModelConfig::channels, grad_conv, F, config.filter_width,
                                              g.conv_filters.data(), g.conv_bias.data());
        for (std::size_t k = 0; k < D; ++k) grad_conv[rows[k] * F + k % F] = T{0};
    }
    return g;
}

struct AdamHyper {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

template <typename T>
struct AdamState {
    std::vector<T> m;
    std::vector<T> v;
    std::uint64_t t = 0;
    AdamHyper hyper;

    static AdamState fresh(std::size_t n, AdamHyper h = {}) { return {std::vector<T>(n), std::vector<T>(n), 0, h}; }
};

/// One bias-corrected Adam update of `params` in place. Rejects non-finite gradients
/// before touching any state.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, AdamState<T>& state) {
    if (params.size() != grads.size() || state.m.size() != params.size() || state.v.size() != params.size()) {
        throw DimensionError("adam: params " + std::to_string(params.size()) + ", grads " +
                             std::to_string(grads.size()) + ", state " + std::to_string(state.m.size()));
    }
    for (std::size_t i = 0; i < grads.size(); ++i) {
        if (!std::isfinite(grads[i])) throw DivergedError("non-finite gradient at flat index " + std::to_string(i));
    }
    state.t += 1;
    const auto& h = state.hyper;
    const T b1 = static_cast<T>(h.beta1);
    const T b2 = static_cast<T>(h.beta2);
    const T lr = static_cast<T>(h.learning_rate);
    const T eps = static_cast<T>(h.epsilon);
    const T bc1 = static_cast<T>(1.0 - std::pow(h.beta1, static_cast<double>(state.t)));
    const T bc2 = static_cast<T>(1.0 - std::pow(h.beta2, static_cast<double>(state.t)));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const T gi = grads[i];
        state.m[i] = b1 * state.m[i] + (T{1} - b1) * gi;
        state.v[i] = b2 * state.v[i] + (T{1} - b2) * gi * gi;
        const T m_hat = state.m[i] / bc1;
        const T v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
}

template <typename T>
void adam_step(ModelParams<T>& params, const Gradients<T>& grads, AdamState<T>& state) {
    auto flat = flatten(params);
    const auto g = flatten(grads);
    adam_step<T>(std::span<T>(flat), std::span<const T>(g), state);
    unflatten_into<T>(flat, params);
}

}  // namespace dnacnn
