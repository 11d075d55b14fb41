#pragma once

// Reference numeric kernels for the motif CNN. Every reduction accumulates in
// ascending index order so results are bit-reproducible.

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dnacnn/error.hpp"
#include "dnacnn/tensor.hpp"

namespace dnacnn {

/// Argmax rows from a max-pooling pass, laid out [pooled_rows, channels].
struct PoolIndices {
    std::size_t input_rows = 0;
    std::size_t pooled_rows = 0;
    std::size_t channels = 0;
    std::vector<std::size_t> rows;
};

namespace kernel {

inline std::size_t conv_output_length(std::size_t length, std::size_t width) {
    if (width == 0) throw DimensionError("convolution width must be positive");
    if (length < width) {
        throw EmptyOutputError("convolution input length " + std::to_string(length) +
                               " is shorter than filter width " + std::to_string(width));
    }
    return length - width + 1;
}

inline std::size_t pool_output_length(std::size_t rows, std::size_t window, std::size_t stride) {
    if (window == 0 || stride == 0) throw DimensionError("pool window and stride must be >= 1");
    if (rows < window) {
        throw EmptyOutputError("pool input length " + std::to_string(rows) + " is shorter than window " +
                               std::to_string(window));
    }
    return (rows - window) / stride + 1;
}

/// Valid 1-D convolution of an [length, channels] input with [filters, width, channels]
/// weights. Output is [length - width + 1, filters].
template <typename T>
void conv1d_forward(std::span<const T> input, std::size_t length, std::size_t channels,
                    std::span<const T> filters, std::span<const T> bias, std::size_t width,
                    std::span<T> out) {
    const std::size_t n_filters = bias.size();
    const std::size_t out_len = conv_output_length(length, width);
    const std::size_t span_len = width * channels;
    for (std::size_t i = 0; i < out_len; ++i) {
        // Rows i..i+width-1 of a row-major input are one contiguous block.
        const T* window = input.data() + i * channels;
        for (std::size_t f = 0; f < n_filters; ++f) {
            const T* w = filters.data() + f * span_len;
            T acc = bias[f];
            for (std::size_t k = 0; k < span_len; ++k) acc += w[k] * window[k];
            out[i * n_filters + f] = acc;
        }
    }
}

/// Accumulates filter and bias gradients of conv1d_forward into the given buffers.
template <typename T>
void conv1d_backward_accumulate(std::span<const T> input, std::size_t length, std::size_t channels,
                                std::span<const T> grad_out, std::size_t n_filters, std::size_t width,
                                std::span<T> grad_filters, std::span<T> grad_bias) {
    const std::size_t out_len = conv_output_length(length, width);
    const std::size_t span_len = width * channels;
    for (std::size_t i = 0; i < out_len; ++i) {
        const T* window = input.data() + i * channels;
        for (std::size_t f = 0; f < n_filters; ++f) {
            const T g = grad_out[i * n_filters + f];
            grad_bias[f] += g;
            if (g == T{0}) continue;
            T* gf = grad_filters.data() + f * span_len;
            for (std::size_t k = 0; k < span_len; ++k) gf[k] += g * window[k];
        }
    }
}

template <typename T>
void maxpool1d_forward(std::span<const T> input, std::size_t rows, std::size_t channels, std::size_t window,
                       std::size_t stride, std::span<T> out, std::span<std::size_t> argmax_rows) {
    const std::size_t pooled = pool_output_length(rows, window, stride);
    for (std::size_t p = 0; p < pooled; ++p) {
        const std::size_t start = p * stride;
        for (std::size_t c = 0; c < channels; ++c) {
            std::size_t best = start;
            T best_value = input[start * channels + c];
            for (std::size_t r = start + 1; r < start + window; ++r) {
                const T v = input[r * channels + c];
                if (v > best_value) {
                    best_value = v;
                    best = r;
                }
            }
            out[p * channels + c] = best_value;
            argmax_rows[p * channels + c] = best;
        }
    }
}

/// Scatters grad_out onto the argmax rows; grad_input must be zeroed by the caller.
template <typename T>
void maxpool1d_backward_accumulate(std::span<const std::size_t> argmax_rows, std::size_t input_rows,
                                   std::size_t channels, std::span<const T> grad_out,
                                   std::span<T> grad_input) {
    for (std::size_t k = 0; k < grad_out.size(); ++k) {
        const std::size_t row = argmax_rows[k];
        if (row >= input_rows) {
            throw InternalError("maxpool argmax row " + std::to_string(row) + " out of range " +
                                std::to_string(input_rows));
        }
        grad_input[row * channels + k % channels] += grad_out[k];
    }
}

template <typename T>
T dot_plus_bias(std::span<const T> input, std::span<const T> weights, T bias) {
    T acc = bias;
    for (std::size_t d = 0; d < input.size(); ++d) acc += weights[d] * input[d];
    return acc;
}

}  // namespace kernel

template <typename T>
T sigmoid(T x) {
    if (x >= T{0}) return T{1} / (T{1} + std::exp(-x));
    const T e = std::exp(x);
    return e / (T{1} + e);
}

template <typename T>
T sigmoid_derivative(T x) {
    const T s = sigmoid(x);
    return s * (T{1} - s);
}

template <typename T>
T relu(T x) {
    return x > T{0} ? x : T{0};
}

template <typename T>
T relu_derivative(T x) {
    return x > T{0} ? T{1} : T{0};
}

template <typename T, typename F>
Tensor<T> map(const Tensor<T>& x, F&& f) {
    Tensor<T> out = x;
    for (auto& v : out.data()) v = f(v);
    return out;
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
    return map(x, [](T v) { return sigmoid(v); });
}
template <typename T>
Tensor<T> sigmoid_derivative(const Tensor<T>& x) {
    return map(x, [](T v) { return sigmoid_derivative(v); });
}
template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
    return map(x, [](T v) { return relu(v); });
}
template <typename T>
Tensor<T> relu_derivative(const Tensor<T>& x) {
    return map(x, [](T v) { return relu_derivative(v); });
}

template <typename T>
Tensor<T> conv1d_forward(const Tensor<T>& input, const Tensor<T>& filters, const Tensor<T>& bias) {
    if (input.rank() != 2) throw DimensionError("conv input must be rank 2 [length, channels], got " + shape_string(input.shape()));
    if (filters.rank() != 3) throw DimensionError("conv filters must be rank 3 [filters, width, channels], got " + shape_string(filters.shape()));
    if (filters.dim(2) != input.dim(1)) {
        throw DimensionError("conv channel axis mismatch: input axis 1 is " + std::to_string(input.dim(1)) +
                             ", filters axis 2 is " + std::to_string(filters.dim(2)));
    }
    if (bias.rank() != 1 || bias.dim(0) != filters.dim(0)) {
        throw DimensionError("conv bias axis 0 must equal filters axis 0 (" + std::to_string(filters.dim(0)) +
                             "), got " + shape_string(bias.shape()));
    }
    const std::size_t out_len = kernel::conv_output_length(input.dim(0), filters.dim(1));
    Tensor<T> out({out_len, filters.dim(0)});
    kernel::conv1d_forward<T>(input.data(), input.dim(0), input.dim(1), filters.data(), bias.data(), filters.dim(1),
                              out.data());
    return out;
}

template <typename T>
struct ConvGradients {
    Tensor<T> filters;
    Tensor<T> bias;
};

template <typename T>
ConvGradients<T> conv1d_backward(const Tensor<T>& input, const Tensor<T>& filters, const Tensor<T>& grad_out) {
    if (input.rank() != 2 || filters.rank() != 3 || filters.dim(2) != input.dim(1)) {
        throw DimensionError("conv backward: input " + shape_string(input.shape()) + " incompatible with filters " +
                             shape_string(filters.shape()));
    }
    const std::size_t out_len = kernel::conv_output_length(input.dim(0), filters.dim(1));
    if (grad_out.rank() != 2 || grad_out.dim(0) != out_len || grad_out.dim(1) != filters.dim(0)) {
        throw DimensionError("conv backward: grad_out " + shape_string(grad_out.shape()) + " expected " +
                             shape_string({out_len, filters.dim(0)}));
    }
    ConvGradients<T> g{Tensor<T>(filters.shape()), Tensor<T>({filters.dim(0)})};
    kernel::conv1d_backward_accumulate<T>(input.data(), input.dim(0), input.dim(1), grad_out.data(), filters.dim(0),
                                          filters.dim(1), g.filters.data(), g.bias.data());
    return g;
}

template <typename T>
struct PoolResult {
    Tensor<T> output;
    PoolIndices indices;
};

template <typename T>
PoolResult<T> maxpool1d_forward(const Tensor<T>& input, std::size_t window, std::size_t stride) {
    if (input.rank() != 2) throw DimensionError("pool input must be rank 2 [rows, channels], got " + shape_string(input.shape()));
    const std::size_t pooled = kernel::pool_output_length(input.dim(0), window, stride);
    PoolResult<T> r{Tensor<T>({pooled, input.dim(1)}),
                    PoolIndices{input.dim(0), pooled, input.dim(1), std::vector<std::size_t>(pooled * input.dim(1))}};
    kernel::maxpool1d_forward<T>(input.data(), input.dim(0), input.dim(1), window, stride, r.output.data(),
                                 r.indices.rows);
    return r;
}

template <typename T>
Tensor<T> maxpool1d_backward(const PoolIndices& indices, const Tensor<T>& grad_out) {
    if (grad_out.rank() != 2 || grad_out.dim(0) != indices.pooled_rows || grad_out.dim(1) != indices.channels ||
        indices.rows.size() != grad_out.size()) {
        throw InternalError("maxpool backward: grad_out " + shape_string(grad_out.shape()) +
                            " does not match forward indices " + shape_string({indices.pooled_rows, indices.channels}));
    }
    Tensor<T> grad_input({indices.input_rows, indices.channels});
    kernel::maxpool1d_backward_accumulate<T>(indices.rows, indices.input_rows, indices.channels, grad_out.data(),
                                             grad_input.data());
    return grad_input;
}

template <typename T>
T dense_forward(const Tensor<T>& input, const Tensor<T>& weights, T bias) {
    if (weights.rank() != 2 || weights.dim(1) != 1 || weights.dim(0) != input.size()) {
        throw DimensionError("dense: input has " + std::to_string(input.size()) + " features, weights are " +
                             shape_string(weights.shape()));
    }
    return kernel::dot_plus_bias<T>(input.data(), weights.data(), bias);
}

template <typename T>
struct DenseGradients {
    Tensor<T> weights;
    T bias{};
    Tensor<T> input;
};

template <typename T>
DenseGradients<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weights, T grad_out) {
    if (weights.rank() != 2 || weights.dim(1) != 1 || weights.dim(0) != input.size()) {
        throw DimensionError("dense backward: input has " + std::to_string(input.size()) + " features, weights are " +
                             shape_string(weights.shape()));
    }
    DenseGradients<T> g{Tensor<T>(weights.shape()), grad_out, Tensor<T>(input.shape())};
    for (std::size_t d = 0; d < input.size(); ++d) {
        g.weights[d] = grad_out * input[d];
        g.input[d] = grad_out * weights[d];
    }
    return g;
}

}  // namespace dnacnn
