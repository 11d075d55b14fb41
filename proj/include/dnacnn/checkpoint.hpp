#pragma once

// Binary checkpoint, all integers and floats little-endian:
//   "DCNN" | u32 version (=1)
//   then for conv_filters, conv_bias, dense_weights, dense_bias in that order:
//   u16 name length | name bytes | u8 rank | u32 dims[rank] | f32 values
// dense_bias is stored with rank 0.

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "dnacnn/error.hpp"
#include "dnacnn/model.hpp"

namespace dnacnn {

inline constexpr std::array<char, 4> kCheckpointMagic{'D', 'C', 'N', 'N'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

namespace detail {

class ByteWriter {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* c = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), c, c + n);
    }
    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v) { uint_le(v, 2); }
    void u32(std::uint32_t v) { uint_le(v, 4); }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    const std::vector<std::uint8_t>& buffer() const { return buf_; }

private:
    void uint_le(std::uint64_t v, int n) {
        for (int i = 0; i < n; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    std::vector<std::uint8_t> buf_;
};

class ByteReader {
public:
    explicit ByteReader(std::vector<std::uint8_t> data) : data_(std::move(data)) {}

    std::uint64_t uint_le(int n, const std::string& field) {
        need(static_cast<std::size_t>(n), field);
        std::uint64_t v = 0;
        for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * i);
        return v;
    }
    std::string str(std::size_t n, const std::string& field) {
        need(n, field);
        std::string s(data_.begin() + static_cast<std::ptrdiff_t>(pos_), data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return s;
    }
    float f32(const std::string& field) { return std::bit_cast<float>(static_cast<std::uint32_t>(uint_le(4, field))); }
    bool at_end() const { return pos_ == data_.size(); }
    std::size_t remaining() const { return data_.size() - pos_; }

private:
    void need(std::size_t n, const std::string& field) const {
        if (data_.size() - pos_ < n) throw CheckpointError("checkpoint truncated while reading " + field);
    }
    std::vector<std::uint8_t> data_;
    std::size_t pos_ = 0;
};

inline constexpr std::array<const char*, 4> kTensorNames{"conv_filters", "conv_bias", "dense_weights", "dense_bias"};

}  // namespace detail

template <typename T>
std::vector<std::uint8_t> encode_checkpoint(const ParameterTensors<T>& params) {
    detail::ByteWriter w;
    w.bytes(kCheckpointMagic.data(), kCheckpointMagic.size());
    w.u32(kCheckpointVersion);
    auto tensor = [&w](const std::string& name, const Shape& shape, std::span<const T> values) {
        w.u16(static_cast<std::uint16_t>(name.size()));
        w.bytes(name.data(), name.size());
        w.u8(static_cast<std::uint8_t>(shape.size()));
        for (std::size_t d : shape) w.u32(static_cast<std::uint32_t>(d));
        for (T v : values) w.f32(static_cast<float>(v));
    };
    tensor(detail::kTensorNames[0], params.conv_filters.shape(), params.conv_filters.data());
    tensor(detail::kTensorNames[1], params.conv_bias.shape(), params.conv_bias.data());
    tensor(detail::kTensorNames[2], params.dense_weights.shape(), params.dense_weights.data());
    const T bias = params.dense_bias;
    tensor(detail::kTensorNames[3], {}, std::span<const T>(&bias, 1));
    return w.buffer();
}

template <typename T>
ModelParams<T> decode_checkpoint(std::vector<std::uint8_t> bytes) {
    detail::ByteReader r(std::move(bytes));
    if (r.remaining() < 4 || r.str(4, "magic") != std::string(kCheckpointMagic.data(), 4)) {
        throw CheckpointError("not a checkpoint (bad magic bytes)");
    }
    const auto version = r.uint_le(4, "version");
    if (version != kCheckpointVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    std::array<Tensor<T>, 3> tensors;
    T dense_bias{};
    for (std::size_t k = 0; k < detail::kTensorNames.size(); ++k) {
        const std::string expected = detail::kTensorNames[k];
        const auto name_len = r.uint_le(2, expected + " name length");
        const std::string name = r.str(name_len, expected + " name");
        if (name != expected) throw CheckpointError("expected tensor '" + expected + "', found '" + name + "'");
        const auto rank = r.uint_le(1, name + " rank");
        const std::size_t want_rank = k == 0 ? 3 : (k == 1 ? 1 : (k == 2 ? 2 : 0));
        if (rank != want_rank) {
            throw CheckpointError(name + " has rank " + std::to_string(rank) + ", expected " + std::to_string(want_rank));
        }
        Shape shape;
        for (std::size_t d = 0; d < rank; ++d) {
            const auto dim = r.uint_le(4, name + " dims");
            if (dim == 0) throw CheckpointError(name + " has a zero dimension");
            shape.push_back(dim);
        }
        const std::size_t n = element_count(shape);
        if (r.remaining() / 4 < n) throw CheckpointError("checkpoint truncated while reading " + name + " values");
        std::vector<T> values(n);
        for (auto& v : values) v = static_cast<T>(r.f32(name + " values"));
        if (k < 3) {
            tensors[k] = Tensor<T>(shape, std::move(values));
        } else {
            dense_bias = values[0];
        }
    }
    if (!r.at_end()) throw CheckpointError("trailing bytes after dense_bias");

    const auto& filters = tensors[0];
    if (filters.dim(2) != ModelConfig::channels) {
        throw CheckpointError("conv_filters axis 2 is " + std::to_string(filters.dim(2)) + ", expected 4");
    }
    if (tensors[1].dim(0) != filters.dim(0)) throw CheckpointError("conv_bias length does not match conv_filters");
    if (tensors[2].dim(1) != 1 || tensors[2].dim(0) % filters.dim(0) != 0) {
        throw CheckpointError("dense_weights shape " + shape_string(tensors[2].shape()) +
                              " is not [pooled * filters, 1]");
    }
    return ModelParams<T>{{std::move(tensors[0]), std::move(tensors[1]), std::move(tensors[2]), dense_bias}};
}

template <typename T>
void save_checkpoint(const ParameterTensors<T>& params, const std::string& path) {
    const auto bytes = encode_checkpoint(params);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open " + path + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("failed writing " + path);
}

template <typename T = float>
ModelParams<T> load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_checkpoint<T>(std::move(bytes));
}

/// Model hyperparameters recoverable from a checkpoint; pooling and activation come from the caller.
template <typename T>
ModelConfig config_from_checkpoint(const ParameterTensors<T>& params, ModelConfig base) {
    base.n_filters = params.conv_filters.dim(0);
    base.filter_width = params.conv_filters.dim(1);
    return base;
}

}  // namespace dnacnn
