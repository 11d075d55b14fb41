#pragma once

// In-process point-to-point message passing between worker contexts.

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "dnacnn/error.hpp"

namespace dnacnn {

struct Message {
    std::uint64_t total_length = 0;  // length of the full vector the payload belongs to
    std::vector<std::byte> payload;
};

/// One FIFO queue per ordered (sender, receiver) pair. Messages are never lost,
/// duplicated or reordered within a link. Counts every message and payload byte.
class Transport {
public:
    explicit Transport(std::size_t endpoints, std::chrono::milliseconds timeout = std::chrono::seconds(120))
        : endpoints_(endpoints), timeout_(timeout) {
        if (endpoints_ == 0) throw ConfigError("transport needs at least one endpoint");
        inboxes_.reserve(endpoints_);
        for (std::size_t i = 0; i < endpoints_; ++i) inboxes_.push_back(std::make_unique<Inbox>(endpoints_));
    }

    Transport(const Transport&) = delete;
    Transport& operator=(const Transport&) = delete;

    std::size_t endpoints() const noexcept { return endpoints_; }

    void send(std::size_t from, std::size_t to, Message msg) {
        check_rank(from);
        check_rank(to);
        messages_.fetch_add(1, std::memory_order_relaxed);
        round_messages_.fetch_add(1, std::memory_order_relaxed);
        bytes_.fetch_add(msg.payload.size(), std::memory_order_relaxed);
        Inbox& box = *inboxes_[to];
        {
            std::lock_guard lock(box.mutex);
            box.queues[from].push_back(std::move(msg));
        }
        box.ready.notify_all();
    }

    /// Blocks until the next message on link from->to arrives. Throws ProtocolError
    /// on timeout or after abort().
    Message recv(std::size_t to, std::size_t from) {
        check_rank(from);
        check_rank(to);
        Inbox& box = *inboxes_[to];
        std::unique_lock lock(box.mutex);
        const bool ok = box.ready.wait_for(lock, timeout_, [&] {
            return aborted_.load(std::memory_order_acquire) || !box.queues[from].empty();
        });
        if (!box.queues[from].empty()) {
            Message m = std::move(box.queues[from].front());
            box.queues[from].pop_front();
            return m;
        }
        if (aborted_.load(std::memory_order_acquire)) throw ProtocolError("transport aborted: " + abort_reason());
        (void)ok;
        throw ProtocolError("timed out waiting for a message from worker " + std::to_string(from) + " at worker " +
                            std::to_string(to));
    }

    /// Wakes every blocked receiver with a ProtocolError.
    void abort(const std::string& reason) {
        {
            std::lock_guard lock(abort_mutex_);
            if (abort_reason_.empty()) abort_reason_ = reason;
        }
        aborted_.store(true, std::memory_order_release);
        for (auto& box : inboxes_) {
            std::lock_guard lock(box->mutex);
            box->ready.notify_all();
        }
    }

    bool aborted() const noexcept { return aborted_.load(std::memory_order_acquire); }

    std::uint64_t messages() const noexcept { return messages_.load(std::memory_order_relaxed); }
    std::uint64_t bytes() const noexcept { return bytes_.load(std::memory_order_relaxed); }

    /// Messages since the last begin_round().
    std::uint64_t round_messages() const noexcept { return round_messages_.load(std::memory_order_relaxed); }
    void begin_round() noexcept { round_messages_.store(0, std::memory_order_relaxed); }

private:
    struct Inbox {
        explicit Inbox(std::size_t senders) : queues(senders) {}
        std::mutex mutex;
        std::condition_variable ready;
        std::vector<std::deque<Message>> queues;
    };

    void check_rank(std::size_t r) const {
        if (r >= endpoints_) {
            throw ProtocolError("rank " + std::to_string(r) + " outside transport of " + std::to_string(endpoints_));
        }
    }

    std::string abort_reason() const {
        std::lock_guard lock(abort_mutex_);
        return abort_reason_;
    }

    std::size_t endpoints_;
    std::chrono::milliseconds timeout_;
    std::vector<std::unique_ptr<Inbox>> inboxes_;
    std::atomic<std::uint64_t> messages_{0};
    std::atomic<std::uint64_t> round_messages_{0};
    std::atomic<std::uint64_t> bytes_{0};
    std::atomic<bool> aborted_{false};
    mutable std::mutex abort_mutex_;
    std::string abort_reason_;
};

template <typename T>
void send_values(Transport& t, std::size_t from, std::size_t to, std::span<const T> values, std::uint64_t total_length) {
    Message m{total_length, std::vector<std::byte>(values.size_bytes())};
    if (!values.empty()) std::memcpy(m.payload.data(), values.data(), values.size_bytes());
    t.send(from, to, std::move(m));
}

/// Receives a vector slice, checking that the sender agrees on the full vector length
/// and on the slice length.
template <typename T>
std::vector<T> recv_values(Transport& t, std::size_t to, std::size_t from, std::uint64_t total_length,
                           std::size_t count) {
    Message m = t.recv(to, from);
    if (m.total_length != total_length) {
        throw ProtocolError("worker " + std::to_string(from) + " contributes a vector of length " +
                            std::to_string(m.total_length) + ", worker " + std::to_string(to) + " has " +
                            std::to_string(total_length));
    }
    if (m.payload.size() != count * sizeof(T)) {
        throw ProtocolError("worker " + std::to_string(to) + " expected " + std::to_string(count) +
                            " elements from worker " + std::to_string(from) + ", got " +
                            std::to_string(m.payload.size() / sizeof(T)));
    }
    std::vector<T> v(count);
    if (count) std::memcpy(v.data(), m.payload.data(), m.payload.size());
    return v;
}

}  // namespace dnacnn
