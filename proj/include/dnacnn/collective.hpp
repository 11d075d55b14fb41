#pragma once

// Gradient/parameter aggregation strategies over a Transport: ring all-reduce,
// parameter server, and pairwise gossip averaging.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include "dnacnn/error.hpp"
#include "dnacnn/transport.hpp"

namespace dnacnn {

enum class StrategyKind { ParameterServer, RingAllReduce, Gossip };

inline std::string_view to_string(StrategyKind s) {
    switch (s) {
        case StrategyKind::ParameterServer: return "ps";
        case StrategyKind::RingAllReduce: return "allreduce";
        case StrategyKind::Gossip: return "gossip";
    }
    return "?";
}

inline StrategyKind parse_strategy(std::string_view s) {
    if (s == "allreduce") return StrategyKind::RingAllReduce;
    if (s == "ps") return StrategyKind::ParameterServer;
    if (s == "gossip") return StrategyKind::Gossip;
    throw ConfigError("strategy must be allreduce, ps or gossip, got '" + std::string(s) + "'");
}

/// Chunk `c` of a D-vector split N ways; the first D mod N chunks get one extra element.
struct ChunkRange {
    std::size_t offset = 0;
    std::size_t size = 0;
};

inline ChunkRange ring_chunk(std::size_t length, std::size_t n, std::size_t c) {
    const std::size_t base = length / n;
    const std::size_t rem = length % n;
    return {c * base + std::min(c, rem), base + (c < rem ? 1 : 0)};
}

/// In-place ring all-reduce (sum). Every rank 0..n-1 must call this concurrently with
/// vectors of the same length. Sends exactly 2(n-1) messages per rank.
///
/// Reduce-scatter: at step s rank r sends chunk (r-s) mod n to r+1 and adds the
/// chunk (r-s-1) mod n received from r-1. Afterwards rank r owns the full sum of
/// chunk (r+1) mod n. All-gather: at step s rank r forwards chunk (r+1-s) mod n
/// and overwrites chunk (r-s) mod n with what it receives. Each chunk is summed
/// exactly once, so all ranks end bit-identical.
template <typename T>
void ring_all_reduce_inplace(std::span<T> local, std::size_t rank, std::size_t n, Transport& transport) {
    if (n == 0 || rank >= n) throw ProtocolError("invalid ring rank " + std::to_string(rank) + " of " + std::to_string(n));
    if (n == 1) return;
    const std::size_t D = local.size();
    const std::size_t next = (rank + 1) % n;
    const std::size_t prev = (rank + n - 1) % n;
    auto chunk_span = [&](std::size_t c) {
        const auto r = ring_chunk(D, n, c);
        return local.subspan(r.offset, r.size);
    };
    for (std::size_t s = 0; s + 1 < n; ++s) {
        const std::size_t send_c = (rank + n - s % n) % n;
        const std::size_t recv_c = (rank + 2 * n - s - 1) % n;
        send_values<T>(transport, rank, next, chunk_span(send_c), D);
        auto dst = chunk_span(recv_c);
        const auto incoming = recv_values<T>(transport, rank, prev, D, dst.size());
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += incoming[i];
    }
    for (std::size_t s = 0; s + 1 < n; ++s) {
        const std::size_t send_c = (rank + 1 + n - s) % n;
        const std::size_t recv_c = (rank + n - s) % n;
        send_values<T>(transport, rank, next, chunk_span(send_c), D);
        auto dst = chunk_span(recv_c);
        const auto incoming = recv_values<T>(transport, rank, prev, D, dst.size());
        std::copy(incoming.begin(), incoming.end(), dst.begin());
    }
}

template <typename T>
std::vector<T> ring_all_reduce(std::span<const T> local, std::size_t rank, std::size_t n, Transport& transport) {
    std::vector<T> v(local.begin(), local.end());
    ring_all_reduce_inplace<T>(std::span<T>(v), rank, n, transport);
    return v;
}

// Parameter server: workers 0..n-1 report gradients to endpoint `server` (normally n),
// which averages them in ascending rank order, steps the canonical parameters and
// broadcasts them back. 2n messages per round.

template <typename T>
using OptimizerStep = std::function<void(std::span<T> params, std::span<const T> mean_grad)>;

template <typename T>
void ps_report(std::span<const T> grad, std::size_t rank, std::size_t server, Transport& transport) {
    send_values<T>(transport, rank, server, grad, grad.size());
}

template <typename T>
std::vector<T> ps_await_params(std::size_t rank, std::size_t server, std::size_t length, Transport& transport) {
    return recv_values<T>(transport, rank, server, length, length);
}

/// Server side of one synchronous round. Updates `params` in place.
template <typename T>
void ps_serve_round(std::span<T> params, std::size_t n_workers, std::size_t server, Transport& transport,
                    const OptimizerStep<T>& step) {
    if (n_workers == 0) throw ProtocolError("parameter server needs at least one worker");
    const std::size_t D = params.size();
    std::vector<T> mean(D, T{});
    for (std::size_t r = 0; r < n_workers; ++r) {
        const auto g = recv_values<T>(transport, server, r, D, D);
        if (r == 0) {
            mean = g;
        } else {
            for (std::size_t i = 0; i < D; ++i) mean[i] += g[i];
        }
    }
    const T denom = static_cast<T>(n_workers);
    for (auto& v : mean) v /= denom;
    step(params, mean);
    for (std::size_t r = 0; r < n_workers; ++r) send_values<T>(transport, server, r, std::span<const T>(params), D);
}

/// Runs one whole round from a single context: every worker reports, the server
/// steps, every worker receives. Returns the parameters each worker now holds.
template <typename T>
std::vector<std::vector<T>> parameter_server_round(std::span<T> server_params,
                                                   const std::vector<std::vector<T>>& worker_grads,
                                                   const OptimizerStep<T>& step, Transport& transport) {
    const std::size_t n = worker_grads.size();
    if (transport.endpoints() < n + 1) throw ProtocolError("transport needs n workers + 1 server endpoints");
    for (std::size_t r = 0; r < n; ++r) {
        if (worker_grads[r].size() != server_params.size()) {
            throw ProtocolError("worker " + std::to_string(r) + " gradient length " +
                                std::to_string(worker_grads[r].size()) + " != parameter length " +
                                std::to_string(server_params.size()));
        }
        ps_report<T>(worker_grads[r], r, n, transport);
    }
    ps_serve_round<T>(server_params, n, n, transport, step);
    std::vector<std::vector<T>> out;
    out.reserve(n);
    for (std::size_t r = 0; r < n; ++r) out.push_back(ps_await_params<T>(r, n, server_params.size(), transport));
    return out;
}

// Gossip over the rank ring with a deterministic matching: even rounds pair
// (0,1),(2,3),...; odd rounds pair (1,2),(3,4),... and (n-1,0) when n is even.
// Matched workers both take the elementwise mean, computed lower rank first.

inline std::optional<std::size_t> gossip_partner(std::size_t rank, std::size_t n, std::size_t round) {
    if (n < 2) return std::nullopt;
    const std::size_t offset = round % 2;
    // Position of `rank` relative to the first pair's left member.
    const std::size_t pos = (rank + n - offset) % n;
    const std::size_t pair_left = pos - pos % 2;
    if (pair_left + 1 >= n) return std::nullopt;  // trailing worker of an odd ring
    const std::size_t partner_pos = pos % 2 == 0 ? pos + 1 : pos - 1;
    return (partner_pos + offset) % n;
}

template <typename T>
void gossip_average(std::span<T> local, std::span<const T> other, bool local_is_lower) {
    static_assert(std::is_floating_point_v<T>, "gossip averaging needs a floating-point type");
    for (std::size_t i = 0; i < local.size(); ++i) {
        local[i] = local_is_lower ? (local[i] + other[i]) / T{2} : (other[i] + local[i]) / T{2};
    }
}

/// Worker side of one gossip round.
template <typename T>
void gossip_exchange(std::span<T> local, std::size_t rank, std::size_t n, std::size_t round, Transport& transport) {
    const auto partner = gossip_partner(rank, n, round);
    if (!partner) return;
    send_values<T>(transport, rank, *partner, std::span<const T>(local), local.size());
    const auto other = recv_values<T>(transport, rank, *partner, local.size(), local.size());
    gossip_average<T>(local, other, rank < *partner);
}

/// One gossip round driven from a single context. Without a transport the
/// matched pairs are averaged directly.
template <typename T>
void gossip_round(std::vector<std::vector<T>>& workers, std::size_t round, Transport* transport = nullptr) {
    const std::size_t n = workers.size();
    if (n < 2) return;
    const std::size_t D = workers[0].size();
    for (const auto& w : workers) {
        if (w.size() != D) throw ProtocolError("gossip workers hold vectors of different lengths");
    }
    if (transport) {
        for (std::size_t r = 0; r < n; ++r) {
            if (auto p = gossip_partner(r, n, round)) send_values<T>(*transport, r, *p, std::span<const T>(workers[r]), D);
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (auto p = gossip_partner(r, n, round)) {
                const auto other = recv_values<T>(*transport, r, *p, D, D);
                gossip_average<T>(std::span<T>(workers[r]), other, r < *p);
            }
        }
        return;
    }
    for (std::size_t r = 0; r < n; ++r) {
        const auto p = gossip_partner(r, n, round);
        if (!p || *p < r) continue;
        std::vector<T> mean = workers[r];
        gossip_average<T>(std::span<T>(mean), workers[*p], true);
        workers[r] = mean;
        workers[*p] = std::move(mean);
    }
}

/// Exact global mean (ascending-rank accumulation), installed on every worker.
template <typename T>
std::vector<T> gossip_finalize(std::vector<std::vector<T>>& workers) {
    if (workers.empty()) throw ProtocolError("gossip_finalize needs at least one worker");
    std::vector<T> mean = workers[0];
    for (std::size_t r = 1; r < workers.size(); ++r) {
        if (workers[r].size() != mean.size()) throw ProtocolError("gossip workers hold vectors of different lengths");
        for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += workers[r][i];
    }
    if (workers.size() > 1) {
        const T denom = static_cast<T>(workers.size());
        for (auto& v : mean) v /= denom;
    }
    for (auto& w : workers) w = mean;
    return mean;
}

}  // namespace dnacnn
