#pragma once

// Sequence records -> one-hot batches: split, streaming shuffle, batching, sharding.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dnacnn/error.hpp"
#include "dnacnn/genome_sim.hpp"
#include "dnacnn/random.hpp"
#include "dnacnn/tensor.hpp"

namespace dnacnn {

namespace detail {

template <typename T>
void one_hot_into(std::string_view bases, std::span<T> out) {
    for (std::size_t i = 0; i < bases.size(); ++i) {
        const int idx = base_index(bases[i]);
        if (idx < 0) {
            throw EncodeError(std::string("cannot encode base '") + bases[i] + "' at position " + std::to_string(i), i);
        }
        T* row = out.data() + i * 4;
        row[0] = row[1] = row[2] = row[3] = T{0};
        row[idx] = T{1};
    }
}

}  // namespace detail

/// [L,4] indicator matrix, columns A,C,G,T.
template <typename T = float>
Tensor<T> one_hot(std::string_view bases) {
    if (bases.empty()) throw EncodeError("cannot encode an empty sequence", 0);
    Tensor<T> t({bases.size(), 4});
    detail::one_hot_into<T>(bases, t.data());
    return t;
}

/// Inverse of one_hot; rows must be exact indicators.
template <typename T>
std::string decode_one_hot(const Tensor<T>& t) {
    if (t.rank() != 2 || t.dim(1) != 4) throw DimensionError("one-hot tensor must be [L,4], got " + shape_string(t.shape()));
    std::string s(t.dim(0), 'A');
    for (std::size_t i = 0; i < t.dim(0); ++i) {
        int hot = -1;
        for (std::size_t c = 0; c < 4; ++c) {
            const T v = t.at(i, c);
            if (v == T{1} && hot < 0) {
                hot = static_cast<int>(c);
            } else if (v != T{0}) {
                throw EncodeError("row " + std::to_string(i) + " is not a one-hot row", i);
            }
        }
        if (hot < 0) throw EncodeError("row " + std::to_string(i) + " is all zero", i);
        s[i] = kBases[static_cast<std::size_t>(hot)];
    }
    return s;
}

struct SplitSpec {
    double train_fraction = 0.70;
    double test_fraction = 0.10;
    double validation_fraction = 0.20;
    std::uint64_t seed = 1;

    void validate() const {
        if (train_fraction < 0 || test_fraction < 0 || validation_fraction < 0) {
            throw ConfigError("split fractions must be non-negative");
        }
        if (std::abs(train_fraction + test_fraction + validation_fraction - 1.0) > 1e-9) {
            throw ConfigError("split fractions must sum to 1");
        }
    }
};

struct Splits {
    std::vector<SequenceRecord> train;
    std::vector<SequenceRecord> test;
    std::vector<SequenceRecord> validation;
};

template <typename T>
void shuffle_in_place(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

/// Stratified by label: each class is shuffled and cut by floor(train), floor(test),
/// remainder to validation; each split is then shuffled as a whole.
inline Splits split(const std::vector<SequenceRecord>& records, const SplitSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    std::map<int, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < records.size(); ++i) by_label[records[i].label].push_back(i);

    std::vector<std::size_t> train, test, validation;
    for (auto& [label, idx] : by_label) {
        shuffle_in_place(idx, rng);
        const auto n = static_cast<double>(idx.size());
        const auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * n + 1e-9));
        const auto n_test = std::min(idx.size() - n_train,
                                     static_cast<std::size_t>(std::floor(spec.test_fraction * n + 1e-9)));
        train.insert(train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        test.insert(test.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train),
                    idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
        validation.insert(validation.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train + n_test), idx.end());
    }
    Splits out;
    auto gather = [&](std::vector<std::size_t>& idx, std::vector<SequenceRecord>& dst) {
        shuffle_in_place(idx, rng);
        dst.reserve(idx.size());
        for (std::size_t i : idx) dst.push_back(records[i]);
    };
    gather(train, out.train);
    gather(test, out.test);
    gather(validation, out.validation);
    return out;
}

/// Streaming buffer shuffle: keep up to `buffer_size` pending items and emit a
/// uniformly chosen one each step, refilling from the source.
template <typename T>
class ShuffledStream {
public:
    ShuffledStream(std::vector<T> items, std::size_t buffer_size, std::uint64_t seed)
        : items_(std::move(items)), buffer_size_(buffer_size), rng_(seed) {
        if (buffer_size_ == 0) throw ConfigError("shuffle buffer size must be >= 1");
        while (buffer_.size() < buffer_size_ && next_source_ < items_.size()) buffer_.push_back(next_source_++);
    }

    std::optional<T> next() {
        if (buffer_.empty()) return std::nullopt;
        const std::size_t slot = buffer_.size() == 1 ? 0 : rng_.below(buffer_.size());
        const std::size_t picked = buffer_[slot];
        if (next_source_ < items_.size()) {
            buffer_[slot] = next_source_++;
        } else {
            buffer_[slot] = buffer_.back();
            buffer_.pop_back();
        }
        return items_[picked];
    }

    std::vector<T> drain() {
        std::vector<T> out;
        out.reserve(items_.size());
        while (auto v = next()) out.push_back(std::move(*v));
        return out;
    }

private:
    std::vector<T> items_;
    std::size_t buffer_size_;
    Rng rng_;
    std::vector<std::size_t> buffer_;
    std::size_t next_source_ = 0;
};

template <typename T>
ShuffledStream<T> shuffled_stream(std::vector<T> items, std::size_t shuffle_buffer_size, std::uint64_t seed) {
    return ShuffledStream<T>(std::move(items), shuffle_buffer_size, seed);
}

inline void check_divisible(std::size_t global_batch, std::size_t n_replicas) {
    if (n_replicas == 0) throw ConfigError("number of replicas must be >= 1");
    if (global_batch == 0 || global_batch % n_replicas != 0) {
        throw ConfigError("global batch " + std::to_string(global_batch) + " with " + std::to_string(n_replicas) +
                          " replicas: the batch size must be divisible by the number of replicas");
    }
}

struct PipelineConfig {
    std::size_t buffer_size = 10000;  // read-ahead cap; in-memory datasets ignore it
    std::size_t shuffle_buffer_size = 100;
    std::size_t batch_per_replica = 64;
    std::size_t n_replicas = 1;

    std::size_t global_batch() const { return batch_per_replica * n_replicas; }

    void validate() const {
        if (buffer_size == 0 || shuffle_buffer_size == 0 || batch_per_replica == 0 || n_replicas == 0) {
            throw ConfigError("pipeline sizes must all be >= 1");
        }
    }
};

template <typename T>
struct Batch {
    Tensor<T> inputs;  // [B, L, 4]
    Tensor<T> labels;  // [B]

    std::size_t size() const { return labels.size(); }
    std::size_t seq_length() const { return inputs.dim(1); }
    std::span<const T> sample(std::size_t i) const {
        const std::size_t stride = inputs.dim(1) * inputs.dim(2);
        return inputs.data().subspan(i * stride, stride);
    }
};

/// Encodes the selected records into one batch. All sequences must share a length.
template <typename T>
Batch<T> make_batch(std::span<const SequenceRecord> records, std::span<const std::size_t> indices) {
    if (indices.empty()) throw DimensionError("cannot build an empty batch");
    const std::size_t L = records[indices[0]].bases.size();
    Batch<T> b{Tensor<T>({indices.size(), L, 4}), Tensor<T>({indices.size()})};
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto& rec = records[indices[k]];
        if (rec.bases.size() != L) {
            throw DimensionError("sequence " + rec.id + " has length " + std::to_string(rec.bases.size()) +
                                 ", batch length is " + std::to_string(L));
        }
        detail::one_hot_into<T>(rec.bases, b.inputs.data().subspan(k * L * 4, L * 4));
        b.labels[k] = static_cast<T>(rec.label);
    }
    return b;
}

/// Groups a stream into full global batches; a trailing partial batch is dropped.
template <typename Item>
std::vector<std::vector<Item>> group_batches(ShuffledStream<Item>& stream, std::size_t global_batch,
                                             std::size_t* dropped = nullptr) {
    if (global_batch == 0) throw ConfigError("global batch must be >= 1");
    std::vector<std::vector<Item>> out;
    std::vector<Item> cur;
    while (auto v = stream.next()) {
        cur.push_back(std::move(*v));
        if (cur.size() == global_batch) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (dropped) *dropped = cur.size();
    return out;
}

/// Pulls one-hot batches of `global_batch` records from a shuffled stream of record indices.
template <typename T>
class BatchStream {
public:
    BatchStream(std::span<const SequenceRecord> records, ShuffledStream<std::size_t> order, std::size_t global_batch)
        : records_(records), order_(std::move(order)), global_batch_(global_batch) {
        if (global_batch_ == 0) throw ConfigError("global batch must be >= 1");
    }

    std::optional<Batch<T>> next() {
        std::vector<std::size_t> idx;
        idx.reserve(global_batch_);
        while (idx.size() < global_batch_) {
            auto v = order_.next();
            if (!v) {
                dropped_ += idx.size();
                return std::nullopt;
            }
            idx.push_back(*v);
        }
        return make_batch<T>(records_, idx);
    }

    std::size_t dropped() const { return dropped_; }

private:
    std::span<const SequenceRecord> records_;
    ShuffledStream<std::size_t> order_;
    std::size_t global_batch_;
    std::size_t dropped_ = 0;
};

template <typename T>
BatchStream<T> make_batches(std::span<const SequenceRecord> records, ShuffledStream<std::size_t> order,
                            std::size_t global_batch) {
    return BatchStream<T>(records, std::move(order), global_batch);
}

/// Contiguous equal microbatches, one per replica, in replica order.
template <typename T>
std::vector<Batch<T>> shard(const Batch<T>& batch, std::size_t n_replicas) {
    check_divisible(batch.size(), n_replicas);
    const std::size_t per = batch.size() / n_replicas;
    const std::size_t L = batch.inputs.dim(1);
    std::vector<Batch<T>> out;
    out.reserve(n_replicas);
    for (std::size_t r = 0; r < n_replicas; ++r) {
        const auto in = batch.inputs.data().subspan(r * per * L * 4, per * L * 4);
        const auto lab = batch.labels.data().subspan(r * per, per);
        out.push_back({Tensor<T>({per, L, 4}, std::vector<T>(in.begin(), in.end())),
                       Tensor<T>({per}, std::vector<T>(lab.begin(), lab.end()))});
    }
    return out;
}

}  // namespace dnacnn
