#pragma once

// Independent reference computations used only by tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dnacnn/dnacnn.hpp"

namespace oracle {

/// Triple-loop valid convolution with the same accumulation order as the kernel:
/// bias first, then width-major, channel-minor.
template <typename T>
std::vector<T> naive_conv(const std::vector<T>& input, std::size_t L, std::size_t C, const std::vector<T>& filters,
                          const std::vector<T>& bias, std::size_t W) {
    const std::size_t F = bias.size();
    std::vector<T> out((L - W + 1) * F);
    for (std::size_t i = 0; i + W <= L; ++i)
        for (std::size_t f = 0; f < F; ++f) {
            T acc = bias[f];
            for (std::size_t j = 0; j < W; ++j)
                for (std::size_t c = 0; c < C; ++c) acc += filters[(f * W + j) * C + c] * input[(i + j) * C + c];
            out[i * F + f] = acc;
        }
    return out;
}

/// Central difference of a scalar function with respect to x[k].
inline double central_difference(const std::function<double()>& f, double& x, double h) {
    const double saved = x;
    x = saved + h;
    const double up = f();
    x = saved - h;
    const double down = f();
    x = saved;
    return (up - down) / (2 * h);
}

inline double relative_error(double a, double b, double floor = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Pair counting: a positive above a negative scores 1, a tie scores 1/2.
inline double brute_auroc(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0, pairs = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (y[i] != 1) continue;
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (y[j] != 0) continue;
            pairs += 1;
            wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
        }
    }
    return wins / pairs;
}

/// Average precision from the PR curve: for each distinct threshold (descending), the
/// prediction set is {score >= t}; AP = sum (R_k - R_{k-1}) * P_k.
inline double exhaustive_ap(const std::vector<double>& s, const std::vector<int>& y) {
    std::set<double, std::greater<>> thresholds(s.begin(), s.end());
    double positives = 0;
    for (int v : y) positives += v;
    double prev_recall = 0, ap = 0;
    for (double t : thresholds) {
        double tp = 0, predicted = 0;
        for (std::size_t i = 0; i < s.size(); ++i) {
            if (s[i] >= t) {
                predicted += 1;
                tp += y[i];
            }
        }
        const double recall = tp / positives;
        ap += (recall - prev_recall) * (tp / predicted);
        prev_recall = recall;
    }
    return ap;
}

/// Gather everything to one place, sum in rank order, hand the sum back to everyone.
template <typename T>
std::vector<T> gather_sum(const std::vector<std::vector<T>>& inputs) {
    std::vector<T> sum = inputs[0];
    for (std::size_t r = 1; r < inputs.size(); ++r)
        for (std::size_t i = 0; i < sum.size(); ++i) sum[i] += inputs[r][i];
    return sum;
}

inline std::string random_bases(std::size_t n, std::mt19937_64& gen) {
    std::string s(n, 'A');
    for (auto& c : s) c = "ACGT"[gen() % 4];
    return s;
}

}  // namespace oracle
