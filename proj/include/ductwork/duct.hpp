#pragma once

#include <atomic>
#include <cstddef>
#include <deque>
#include <optional>
#include <vector>

#include "ductwork/message.hpp"

namespace ductwork {

enum class BackendKind : std::uint8_t {
  IntraThread,
  InterThread,
  InterProcess,
};

inline constexpr std::size_t kDefaultCapacity = 64;

// Backend state binding an inlet to an outlet. One producer, one consumer.
// try_push never blocks; blocking ops are built on top by polling.
template <typename T>
class Duct {
 public:
  virtual ~Duct() = default;

  virtual bool try_push(const Message<T>& msg) = 0;
  virtual std::optional<Message<T>> try_pop() = 0;
  virtual std::size_t capacity() const = 0;
  virtual BackendKind kind() const = 0;
};

// Same-thread bounded queue; no synchronization.
template <typename T>
class IntraThreadDuct final : public Duct<T> {
 public:
  explicit IntraThreadDuct(std::size_t capacity = kDefaultCapacity)
      : capacity_(capacity) {}

  bool try_push(const Message<T>& msg) override {
    if (buffer_.size() >= capacity_) return false;
    buffer_.push_back(msg);
    return true;
  }

  std::optional<Message<T>> try_pop() override {
    if (buffer_.empty()) return std::nullopt;
    Message<T> msg = buffer_.front();
    buffer_.pop_front();
    return msg;
  }

  std::size_t capacity() const override { return capacity_; }
  BackendKind kind() const override { return BackendKind::IntraThread; }

 private:
  std::size_t capacity_;
  std::deque<Message<T>> buffer_;
};

// Cross-thread bounded queue: single-producer single-consumer ring with
// acquire/release indices. Safe for exactly one concurrent producer and
// one concurrent consumer.
template <typename T>
class InterThreadDuct final : public Duct<T> {
 public:
  explicit InterThreadDuct(std::size_t capacity = kDefaultCapacity)
      : capacity_(capacity), ring_(capacity + 1) {}

  bool try_push(const Message<T>& msg) override {
    const std::size_t tail = tail_.load(std::memory_order_relaxed);
    const std::size_t next = advance(tail);
    if (next == head_.load(std::memory_order_acquire)) return false;  // full
    ring_[tail] = msg;
    tail_.store(next, std::memory_order_release);
    return true;
  }

  std::optional<Message<T>> try_pop() override {
    const std::size_t head = head_.load(std::memory_order_relaxed);
    if (head == tail_.load(std::memory_order_acquire)) return std::nullopt;
    Message<T> msg = ring_[head];
    head_.store(advance(head), std::memory_order_release);
    return msg;
  }

  std::size_t capacity() const override { return capacity_; }
  BackendKind kind() const override { return BackendKind::InterThread; }

 private:
  std::size_t advance(std::size_t i) const {
    return i + 1 == ring_.size() ? 0 : i + 1;
  }

  std::size_t capacity_;
  std::vector<Message<T>> ring_;
  std::atomic<std::size_t> head_{0};
  std::atomic<std::size_t> tail_{0};
};

}  // namespace ductwork
