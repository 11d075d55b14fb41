#include <gtest/gtest.h>

#include <random>

#include "dnacnn/kernels.hpp"
#include "oracles.hpp"

using namespace dnacnn;

TEST(Tensor, RejectsMismatchedDataLength) {
    EXPECT_THROW(Tensor<float>({2, 3}, std::vector<float>(5)), DimensionError);
    EXPECT_THROW(Tensor<float>({2, 0}), DimensionError);
    Tensor<double> t({2, 3});
    EXPECT_EQ(t.size(), 6u);
}

TEST(Conv1d, OutputLengthForPaperSizedInput) {
    Tensor<float> input({1500, 4});
    Tensor<float> filters({15, 10, 4});
    Tensor<float> bias({15});
    const auto out = conv1d_forward(input, filters, bias);
    EXPECT_EQ(out.dim(0), 1491u);
    EXPECT_EQ(out.dim(1), 15u);
}

TEST(Conv1d, SingleChannelSlidingDotProduct) {
    Tensor<double> input({4, 1}, {1, 2, 3, 4});
    Tensor<double> filters({1, 3, 1}, {1, 0, -1});
    Tensor<double> bias({1}, {0.0});
    const auto out = conv1d_forward(input, filters, bias);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0], -2.0);
    EXPECT_EQ(out[1], -2.0);
}

TEST(Conv1d, ZeroFiltersGiveBias) {
    Tensor<float> input({20, 4}, 0.7f);
    Tensor<float> filters({3, 5, 4});
    Tensor<float> bias({3}, {0.25f, -1.5f, 3.0f});
    const auto out = conv1d_forward(input, filters, bias);
    for (std::size_t i = 0; i < out.dim(0); ++i)
        for (std::size_t f = 0; f < 3; ++f) EXPECT_EQ(out.at(i, f), bias[f]);
}

TEST(Conv1d, ShapeErrors) {
    Tensor<float> input({10, 4});
    EXPECT_THROW(conv1d_forward(input, Tensor<float>({2, 3, 3}), Tensor<float>({2})), DimensionError);
    EXPECT_THROW(conv1d_forward(input, Tensor<float>({2, 3, 4}), Tensor<float>({3})), DimensionError);
    EXPECT_THROW(conv1d_forward(input, Tensor<float>({2, 11, 4}), Tensor<float>({2})), EmptyOutputError);
}

TEST(Conv1d, MatchesNaiveTripleLoopExactly) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<float> u(-1, 1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t L = 5 + gen() % 30, W = 1 + gen() % 5, F = 1 + gen() % 4, C = 4;
        std::vector<float> in(L * C), fl(F * W * C), b(F);
        for (auto* v : {&in, &fl, &b})
            for (auto& x : *v) x = u(gen);
        const auto out = conv1d_forward(Tensor<float>({L, C}, in), Tensor<float>({F, W, C}, fl), Tensor<float>({F}, b));
        EXPECT_EQ(out.storage(), oracle::naive_conv(in, L, C, fl, b, W));
    }
}

TEST(Conv1dBackward, ZeroUpstreamGivesZeroGradients) {
    Tensor<double> input({8, 4}, 1.0);
    Tensor<double> filters({2, 3, 4}, 0.5);
    const auto g = conv1d_backward(input, filters, Tensor<double>({6, 2}));
    for (double v : g.filters.data()) EXPECT_EQ(v, 0.0);
    for (double v : g.bias.data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv1dBackward, SinglePositionIsOneTermSum) {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> u(-1, 1);
    Tensor<double> input({5, 4});
    for (auto& v : input.data()) v = u(gen);
    Tensor<double> filters({1, 5, 4});
    Tensor<double> grad_out({1, 1}, {2.5});
    const auto g = conv1d_backward(input, filters, grad_out);
    for (std::size_t j = 0; j < 5; ++j)
        for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(g.filters.at(0, j, c), 2.5 * input.at(j, c));
    EXPECT_EQ(g.bias[0], 2.5);
}

TEST(Conv1dBackward, ShapeMismatch) {
    EXPECT_THROW(conv1d_backward(Tensor<double>({8, 4}), Tensor<double>({2, 3, 4}), Tensor<double>({5, 2})),
                 DimensionError);
}

TEST(Conv1dBackward, MatchesFiniteDifferences) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t L = 4 + gen() % 17, W = 1 + gen() % 3, F = 1 + gen() % 3;
        Tensor<double> input({L, 4}), filters({F, W, 4}), bias({F}), upstream({L - W + 1, F});
        for (auto* t : {&input, &filters, &bias, &upstream})
            for (auto& v : t->data()) v = u(gen);
        // Scalar objective: <upstream, conv(input)>
        auto objective = [&] {
            const auto out = conv1d_forward(input, filters, bias);
            double s = 0;
            for (std::size_t k = 0; k < out.size(); ++k) s += out[k] * upstream[k];
            return s;
        };
        const auto g = conv1d_backward(input, filters, upstream);
        for (std::size_t k = 0; k < filters.size(); ++k) {
            const double fd = oracle::central_difference(objective, filters[k], 1e-6);
            EXPECT_LE(oracle::relative_error(fd, g.filters[k]), 1e-4);
        }
        for (std::size_t k = 0; k < bias.size(); ++k) {
            const double fd = oracle::central_difference(objective, bias[k], 1e-6);
            EXPECT_LE(oracle::relative_error(fd, g.bias[k]), 1e-4);
        }
    }
}

TEST(MaxPool, HandEvaluatedColumn) {
    Tensor<double> in({6, 1}, {3, 1, 4, 1, 5, 9});
    const auto r = maxpool1d_forward(in, 2, 2);
    EXPECT_EQ(r.output.storage(), (std::vector<double>{3, 4, 9}));
    EXPECT_EQ(r.indices.rows, (std::vector<std::size_t>{0, 2, 5}));
}

TEST(MaxPool, ConstantInputTiesGoToFirstRow) {
    Tensor<float> in({12, 2}, 1.5f);
    const auto r = maxpool1d_forward(in, 4, 3);
    ASSERT_EQ(r.output.dim(0), 3u);
    for (std::size_t p = 0; p < 3; ++p) {
        for (std::size_t c = 0; c < 2; ++c) {
            EXPECT_EQ(r.output.at(p, c), 1.5f);
            EXPECT_EQ(r.indices.rows[p * 2 + c], p * 3);
        }
    }
}

TEST(MaxPool, PaperPoolingLength) {
    EXPECT_EQ(kernel::pool_output_length(1491, 35, 35), 42u);
    EXPECT_THROW(kernel::pool_output_length(34, 35, 35), EmptyOutputError);
}

TEST(MaxPoolBackward, RoutesToArgmaxAndConservesMass) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> u(-3, 3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t T = 3 + gen() % 20, C = 1 + gen() % 3, win = 1 + gen() % 3, stride = 1 + gen() % 3;
        if (T < win) continue;
        Tensor<double> in({T, C});
        for (auto& v : in.data()) v = u(gen);
        const auto r = maxpool1d_forward(in, win, stride);
        Tensor<double> up(r.output.shape());
        for (auto& v : up.data()) v = u(gen);
        const auto g = maxpool1d_backward(r.indices, up);
        double s_in = 0, s_out = 0;
        for (double v : g.data()) s_in += v;
        for (double v : up.data()) s_out += v;
        EXPECT_NEAR(s_in, s_out, 1e-12);
    }
}

TEST(MaxPoolBackward, OnesGiveOneHitPerWindow) {
    Tensor<float> in({6, 1}, {0.f, 2.f, 1.f, 7.f, 3.f, 4.f});
    const auto r = maxpool1d_forward(in, 3, 3);
    const auto g = maxpool1d_backward(r.indices, Tensor<float>({2, 1}, 1.f));
    EXPECT_EQ(g.storage(), (std::vector<float>{0, 1, 0, 1, 0, 0}));
}

TEST(MaxPoolBackward, OutOfRangeIndexIsInternalError) {
    PoolIndices bad{4, 1, 1, {9}};
    EXPECT_THROW(maxpool1d_backward(bad, Tensor<float>({1, 1}, 1.f)), InternalError);
}

TEST(MaxPoolBackward, MatchesFiniteDifferencesAwayFromTies) {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> u(-1, 1);
    const std::size_t T = 20, C = 3;
    Tensor<double> in({T, C});
    // Distinct values spaced well beyond the FD step keep the argmax fixed.
    std::vector<double> vals(T * C);
    for (std::size_t k = 0; k < vals.size(); ++k) vals[k] = 0.01 * static_cast<double>(k);
    std::shuffle(vals.begin(), vals.end(), gen);
    std::copy(vals.begin(), vals.end(), in.data().begin());
    const auto r = maxpool1d_forward(in, 5, 3);
    Tensor<double> up(r.output.shape());
    for (auto& v : up.data()) v = u(gen);
    auto objective = [&] {
        const auto out = maxpool1d_forward(in, 5, 3).output;
        double s = 0;
        for (std::size_t k = 0; k < out.size(); ++k) s += out[k] * up[k];
        return s;
    };
    const auto g = maxpool1d_backward(r.indices, up);
    for (std::size_t k = 0; k < in.size(); ++k) {
        const double fd = oracle::central_difference(objective, in[k], 1e-6);
        EXPECT_LE(oracle::relative_error(fd, g[k]), 1e-4) << "at " << k;
    }
}

TEST(Dense, ZeroWeightsGiveBias) {
    EXPECT_FLOAT_EQ(dense_forward(Tensor<float>({5}, 3.f), Tensor<float>({5, 1}), 0.7f), 0.7f);
}

TEST(Dense, BasisVectorPicksWeight) {
    Tensor<double> w({4, 1}, {0.1, -0.2, 0.3, 0.4});
    Tensor<double> e({4});
    e[2] = 1.0;
    EXPECT_DOUBLE_EQ(dense_forward(e, w, 0.5), 0.5 + 0.3);
}

TEST(Dense, ShapeMismatch) {
    EXPECT_THROW(dense_forward(Tensor<float>({5}), Tensor<float>({4, 1}), 0.f), DimensionError);
    EXPECT_THROW(dense_backward(Tensor<float>({5}), Tensor<float>({5, 2}), 1.f), DimensionError);
}

TEST(Dense, BackwardMatchesFiniteDifferences) {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> u(-1, 1);
    Tensor<double> x({7}), w({7, 1});
    double b = u(gen);
    for (auto* t : {&x, &w})
        for (auto& v : t->data()) v = u(gen);
    const double upstream = 1.7;
    auto objective = [&] { return upstream * dense_forward(x, w, b); };
    const auto g = dense_backward(x, w, upstream);
    for (std::size_t k = 0; k < 7; ++k) {
        EXPECT_LE(oracle::relative_error(oracle::central_difference(objective, w[k], 1e-6), g.weights[k]), 1e-4);
        EXPECT_LE(oracle::relative_error(oracle::central_difference(objective, x[k], 1e-6), g.input[k]), 1e-4);
    }
    EXPECT_LE(oracle::relative_error(oracle::central_difference(objective, b, 1e-6), g.bias), 1e-4);
}

TEST(Activations, SigmoidAndRelu) {
    EXPECT_EQ(sigmoid(0.0), 0.5);
    std::mt19937_64 gen(29);
    std::uniform_real_distribution<double> u(-30, 30);
    for (int i = 0; i < 1000; ++i) {
        const double x = u(gen);
        EXPECT_NEAR(sigmoid(x) + sigmoid(-x), 1.0, 1e-15);
        EXPECT_GE(sigmoid(x), 0.0);
        EXPECT_LE(sigmoid(x), 1.0);
    }
    EXPECT_EQ(relu(-3.0), 0.0);
    EXPECT_EQ(relu(2.0), 2.0);
    EXPECT_EQ(relu_derivative(-1.0), 0.0);
    EXPECT_EQ(relu_derivative(0.5), 1.0);
    EXPECT_NEAR(sigmoid_derivative(0.3), sigmoid(0.3) * (1 - sigmoid(0.3)), 1e-16);
    // Large magnitudes saturate without NaN.
    EXPECT_EQ(sigmoid(-1000.0), 0.0);
    EXPECT_EQ(sigmoid(1000.0), 1.0);
    const auto t = sigmoid(Tensor<float>({3}, {-1.f, 0.f, 1.f}));
    EXPECT_FLOAT_EQ(t[1], 0.5f);
}

TEST(Kernels, Deterministic) {
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<float> u(-1, 1);
    Tensor<float> in({50, 4}), fl({3, 7, 4}), b({3});
    for (auto* t : {&in, &fl, &b})
        for (auto& v : t->data()) v = u(gen);
    EXPECT_EQ(conv1d_forward(in, fl, b), conv1d_forward(in, fl, b));
}
