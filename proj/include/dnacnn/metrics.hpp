#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "dnacnn/error.hpp"

namespace dnacnn {

namespace detail {

inline void check_scores(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) throw DimensionError("scores and labels differ in length");
    for (int y : labels) {
        if (y != 0 && y != 1) throw ValidationError("labels must be 0 or 1");
    }
}

/// Indices sorted by descending score; stable so equal scores keep input order.
inline std::vector<std::size_t> order_descending(std::span<const double> scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return idx;
}

struct TieBlock {
    double positives = 0;
    double negatives = 0;
};

/// Groups equal scores, highest score first.
inline std::vector<TieBlock> tie_blocks(std::span<const double> scores, std::span<const int> labels) {
    const auto order = order_descending(scores);
    std::vector<TieBlock> blocks;
    for (std::size_t i = 0; i < order.size(); ++i) {
        if (i == 0 || scores[order[i]] != scores[order[i - 1]]) blocks.emplace_back();
        (labels[order[i]] == 1 ? blocks.back().positives : blocks.back().negatives) += 1.0;
    }
    return blocks;
}

}  // namespace detail

/// Fraction classified correctly at threshold 0.5; a score of exactly 0.5 counts as negative.
inline double accuracy(std::span<const double> scores, std::span<const int> labels) {
    detail::check_scores(scores, labels);
    if (scores.empty()) throw ValidationError("accuracy of an empty set");
    std::size_t correct = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) correct += (scores[i] > 0.5 ? 1 : 0) == labels[i];
    return static_cast<double>(correct) / static_cast<double>(scores.size());
}

/// Probability that a random positive outranks a random negative, ties counting 1/2
/// (Mann-Whitney). Empty when either class is absent.
inline std::optional<double> auroc(std::span<const double> scores, std::span<const int> labels) {
    detail::check_scores(scores, labels);
    const auto blocks = detail::tie_blocks(scores, labels);
    double n_pos = 0, n_neg = 0;
    for (const auto& b : blocks) {
        n_pos += b.positives;
        n_neg += b.negatives;
    }
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    // Each positive beats every negative in a lower block and ties half of its own block.
    double wins = 0.0;
    double neg_below = n_neg;
    for (const auto& b : blocks) {
        neg_below -= b.negatives;
        wins += b.positives * (neg_below + 0.5 * b.negatives);
    }
    return wins / (n_pos * n_neg);
}

/// Average precision: sum over descending score thresholds of
/// (recall gained) * (precision at that threshold), equal scores taken as one step.
/// Empty when there are no positives.
inline std::optional<double> auprc(std::span<const double> scores, std::span<const int> labels) {
    detail::check_scores(scores, labels);
    const auto blocks = detail::tie_blocks(scores, labels);
    double n_pos = 0;
    for (const auto& b : blocks) n_pos += b.positives;
    if (n_pos == 0) return std::nullopt;
    double tp = 0, fp = 0, ap = 0;
    for (const auto& b : blocks) {
        tp += b.positives;
        fp += b.negatives;
        if (b.positives > 0) ap += (b.positives / n_pos) * (tp / (tp + fp));
    }
    return ap;
}

}  // namespace dnacnn
