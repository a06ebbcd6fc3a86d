#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <thread>
#include <utility>

#include "ductwork/duct.hpp"
#include "ductwork/message.hpp"

namespace ductwork {

struct ChannelCounters {
  std::atomic<std::uint64_t> puts_attempted{0};
  std::atomic<std::uint64_t> puts_dropped{0};
  std::atomic<std::uint64_t> reads_fresh{0};
  std::atomic<std::uint64_t> reads_stale{0};
};

namespace detail {

inline void backoff(unsigned iteration) {
  if (iteration < 64) {
    std::this_thread::yield();
  } else {
    std::this_thread::sleep_for(std::chrono::microseconds(50));
  }
}

template <typename T>
struct ChannelState {
  explicit ChannelState(T initial, std::unique_ptr<Duct<T>> duct)
      : duct(std::move(duct)), last_received(initial) {}

  std::unique_ptr<Duct<T>> duct;
  ChannelCounters counters;
  std::atomic<bool> closed{false};

  // Producer-side only.
  std::uint64_t next_seq = 1;

  // Consumer-side only: last-received cache and its sequence number.
  T last_received;
  std::uint64_t last_seq = 0;
};

}  // namespace detail

// Send endpoint. Sole-producer contract: at most one thread uses an Inlet
// at a time.
template <typename T>
class Inlet {
 public:
  PutOutcome try_put(const T& payload) {
    if (state_->closed.load(std::memory_order_relaxed)) return PutOutcome::Closed;
    state_->counters.puts_attempted.fetch_add(1, std::memory_order_relaxed);
    const Message<T> msg{state_->next_seq, payload};
    if (state_->duct->try_push(msg)) {
      ++state_->next_seq;
      return PutOutcome::Accepted;
    }
    state_->counters.puts_dropped.fetch_add(1, std::memory_order_relaxed);
    return PutOutcome::Dropped;
  }

  // Blocks while the buffer is full; never drops. Returns Closed if the
  // channel is closed while waiting.
  PutOutcome put(const T& payload) {
    state_->counters.puts_attempted.fetch_add(1, std::memory_order_relaxed);
    const Message<T> msg{state_->next_seq, payload};
    for (unsigned i = 0;; ++i) {
      if (state_->closed.load(std::memory_order_relaxed)) return PutOutcome::Closed;
      if (state_->duct->try_push(msg)) {
        ++state_->next_seq;
        return PutOutcome::Accepted;
      }
      detail::backoff(i);
    }
  }

 private:
  template <typename>
  friend class Channel;
  explicit Inlet(detail::ChannelState<T>* state) : state_(state) {}
  detail::ChannelState<T>* state_;
};

// Receive endpoint. Sole-consumer contract.
template <typename T>
class Outlet {
 public:
  // Consumes the oldest unread message, if any; otherwise returns the
  // last-received cache with fresh=false.
  ReadResult<T> try_step() {
    if (auto msg = state_->duct->try_pop()) {
      remember(*msg);
      state_->counters.reads_fresh.fetch_add(1, std::memory_order_relaxed);
      return {msg->payload, true, 0};
    }
    state_->counters.reads_stale.fetch_add(1, std::memory_order_relaxed);
    return {state_->last_received, false, 0};
  }

  // Consumes all buffered messages and returns the newest.
  ReadResult<T> jump() {
    std::uint64_t consumed = 0;
    while (auto msg = state_->duct->try_pop()) {
      remember(*msg);
      ++consumed;
    }
    if (consumed == 0) {
      state_->counters.reads_stale.fetch_add(1, std::memory_order_relaxed);
      return {state_->last_received, false, 0};
    }
    state_->counters.reads_fresh.fetch_add(1, std::memory_order_relaxed);
    return {state_->last_received, true, consumed - 1};
  }

  // Blocks until a new message arrives. Empty on channel close.
  std::optional<T> step() {
    for (unsigned i = 0;; ++i) {
      if (auto msg = state_->duct->try_pop()) {
        remember(*msg);
        state_->counters.reads_fresh.fetch_add(1, std::memory_order_relaxed);
        return msg->payload;
      }
      if (state_->closed.load(std::memory_order_relaxed)) return std::nullopt;
      detail::backoff(i);
    }
  }

 private:
  template <typename>
  friend class Channel;
  explicit Outlet(detail::ChannelState<T>* state) : state_(state) {}

  void remember(const Message<T>& msg) {
    state_->last_received = msg.payload;
    state_->last_seq = msg.seq;
  }

  detail::ChannelState<T>* state_;
};

// One directed best-effort channel: an Inlet/Outlet pair bound to a
// swappable Duct backend. Constructed with an explicit initial payload so
// pre-first-message reads are well-defined.
template <typename T>
class Channel {
 public:
  explicit Channel(T initial, std::size_t capacity = kDefaultCapacity,
                   BackendKind kind = BackendKind::IntraThread)
      : state_(std::make_unique<detail::ChannelState<T>>(
            initial, make_local_duct(kind, capacity))) {}

  Channel(T initial, std::unique_ptr<Duct<T>> duct)
      : state_(std::make_unique<detail::ChannelState<T>>(initial, std::move(duct))) {}

  Channel(Channel&&) noexcept = default;
  Channel& operator=(Channel&&) noexcept = default;

  Inlet<T> inlet() { return Inlet<T>(state_.get()); }
  Outlet<T> outlet() { return Outlet<T>(state_.get()); }

  // Replaces the backend. Caller must guarantee no concurrent operations.
  // Counters and the last-received cache are preserved; buffered-but-unread
  // messages are discarded.
  void emplace_duct(BackendKind kind, std::size_t capacity = kDefaultCapacity) {
    state_->duct = make_local_duct(kind, capacity);
  }

  void emplace_duct(std::unique_ptr<Duct<T>> duct) {
    if (!duct) throw std::invalid_argument("emplace_duct: null duct");
    state_->duct = std::move(duct);
  }

  void close() { state_->closed.store(true, std::memory_order_relaxed); }
  bool closed() const { return state_->closed.load(std::memory_order_relaxed); }

  std::size_t capacity() const { return state_->duct->capacity(); }
  BackendKind backend() const { return state_->duct->kind(); }

  std::uint64_t puts_attempted() const {
    return state_->counters.puts_attempted.load(std::memory_order_relaxed);
  }
  std::uint64_t puts_dropped() const {
    return state_->counters.puts_dropped.load(std::memory_order_relaxed);
  }
  std::uint64_t reads_fresh() const {
    return state_->counters.reads_fresh.load(std::memory_order_relaxed);
  }
  std::uint64_t reads_stale() const {
    return state_->counters.reads_stale.load(std::memory_order_relaxed);
  }

 private:
  static std::unique_ptr<Duct<T>> make_local_duct(BackendKind kind,
                                                  std::size_t capacity) {
    switch (kind) {
      case BackendKind::IntraThread:
        return std::make_unique<IntraThreadDuct<T>>(capacity);
      case BackendKind::InterThread:
        return std::make_unique<InterThreadDuct<T>>(capacity);
      case BackendKind::InterProcess:
        throw std::invalid_argument(
            "inter-process ducts require a transport hub; use "
            "TransportHub::make_duct");
    }
    throw std::invalid_argument("unknown backend kind");
  }

  std::unique_ptr<detail::ChannelState<T>> state_;
};

}  // namespace ductwork
