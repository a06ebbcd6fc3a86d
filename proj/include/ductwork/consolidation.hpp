#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ductwork/frame.hpp"
#include "ductwork/hub.hpp"

namespace ductwork {

// Pooling: ships exactly one transport frame per completed epoch. A frame
// is dispatched once every member slot holds a payload; a second put into
// an already-filled slot replaces it (latest wins) and counts the old
// payload as dropped. Internally synchronized so workers on several
// threads can share the per-rank-pair pool.
template <typename T>
class Pool {
 public:
  Pool(TransportHub* hub, int dst_rank, std::uint32_t pool_id,
       std::size_t member_count)
      : hub_(hub), dst_rank_(dst_rank), pool_id_(pool_id),
        slots_(member_count) {}

  std::size_t members() const { return slots_.size(); }
  std::uint64_t epoch() const { return epoch_.load(std::memory_order_relaxed); }
  std::uint64_t slot_drops() const { return slot_drops_.load(std::memory_order_relaxed); }
  std::uint64_t frames_sent() const { return frames_sent_.load(std::memory_order_relaxed); }
  std::uint64_t send_failures() const { return send_failures_.load(std::memory_order_relaxed); }

  // Returns Dropped when the slot was already filled (the old payload is
  // replaced and counted as a drop), Accepted otherwise.
  PutOutcome put(std::size_t member_index, const T& payload) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (member_index >= slots_.size())
      throw std::out_of_range("pool member index out of range");
    const bool replaced = slots_[member_index].has_value();
    if (replaced) {
      slot_drops_.fetch_add(1, std::memory_order_relaxed);
    } else {
      ++filled_;
    }
    slots_[member_index] = payload;
    if (filled_ == slots_.size()) dispatch_locked();
    return replaced ? PutOutcome::Dropped : PutOutcome::Accepted;
  }

 private:
  void dispatch_locked() {
    std::vector<std::vector<std::byte>> payloads;
    payloads.reserve(slots_.size());
    for (auto& slot : slots_) {
      payloads.push_back(to_bytes(*slot));
      slot.reset();
    }
    filled_ = 0;
    epoch_.fetch_add(1, std::memory_order_relaxed);
    const auto frame = frame_encode(pool_id_, payloads);
    if (hub_->send(dst_rank_, frame)) {
      frames_sent_.fetch_add(1, std::memory_order_relaxed);
    } else {
      send_failures_.fetch_add(1, std::memory_order_relaxed);
    }
  }

  TransportHub* hub_;
  int dst_rank_;
  std::uint32_t pool_id_;
  std::mutex mutex_;
  std::vector<std::optional<T>> slots_;
  std::size_t filled_ = 0;
  std::atomic<std::uint64_t> epoch_{0};
  std::atomic<std::uint64_t> slot_drops_{0};
  std::atomic<std::uint64_t> frames_sent_{0};
  std::atomic<std::uint64_t> send_failures_{0};
};

// Receive side of pooling: unpacks a pool frame and delivers payload i to
// member channel i. Member order must match the sending pool exactly.
template <typename T>
class PoolRouter {
 public:
  explicit PoolRouter(std::vector<std::uint32_t> member_channel_ids)
      : members_(std::move(member_channel_ids)) {}

  void route(const Frame& frame, TransportHub::Sink& sink) {
    if (frame.msg_count != members_.size() || frame.payload_len != sizeof(T)) {
      errors_.fetch_add(1, std::memory_order_relaxed);
      return;
    }
    for (std::size_t i = 0; i < members_.size(); ++i) {
      const auto* begin = frame.payloads.data() + i * sizeof(T);
      sink.deliver(members_[i], std::span<const std::byte>(begin, sizeof(T)));
    }
  }

  std::uint64_t errors() const { return errors_.load(std::memory_order_relaxed); }

 private:
  std::vector<std::uint32_t> members_;
  std::atomic<std::uint64_t> errors_{0};
};

template <typename T>
std::shared_ptr<PoolRouter<T>> register_pool_route(
    TransportHub& hub, std::uint32_t pool_id,
    std::vector<std::uint32_t> member_channel_ids) {
  auto router = std::make_shared<PoolRouter<T>>(std::move(member_channel_ids));
  hub.route_frames(pool_id, [router](const Frame& frame, TransportHub::Sink& sink) {
    router->route(frame, sink);
  });
  return router;
}

// Aggregation: members contribute arbitrarily many messages; an explicit
// flush packs everything pending into a single transport frame. Sub-frame
// layout inside the frame's payload region, repeated per member with
// pending messages:
//   member_index u32 LE | count u32 LE | count * sizeof(T) payload bytes
template <typename T>
class Aggregator {
 public:
  Aggregator(TransportHub* hub, int dst_rank, std::uint32_t aggregate_id,
             std::size_t member_count)
      : hub_(hub), dst_rank_(dst_rank), aggregate_id_(aggregate_id),
        pending_(member_count) {}

  std::size_t members() const { return pending_.size(); }

  void push(std::size_t member_index, const T& payload) {
    std::lock_guard<std::mutex> lock(mutex_);
    if (member_index >= pending_.size())
      throw std::out_of_range("aggregator member index out of range");
    pending_[member_index].push_back(payload);
  }

  // Returns the number of transport frames dispatched (0 when nothing was
  // pending or the peer was unreachable; pending is retained on failure).
  std::size_t flush() {
    std::lock_guard<std::mutex> lock(mutex_);
    std::vector<std::byte> blob;
    for (std::size_t i = 0; i < pending_.size(); ++i) {
      if (pending_[i].empty()) continue;
      detail::put_u32le(blob, static_cast<std::uint32_t>(i));
      detail::put_u32le(blob, static_cast<std::uint32_t>(pending_[i].size()));
      for (const T& p : pending_[i]) {
        const auto bytes = to_bytes(p);
        blob.insert(blob.end(), bytes.begin(), bytes.end());
      }
    }
    if (blob.empty()) return 0;
    const auto frame = frame_encode_blob(aggregate_id_, blob);
    if (!hub_->send(dst_rank_, frame)) return 0;
    for (auto& p : pending_) p.clear();
    return 1;
  }

 private:
  TransportHub* hub_;
  int dst_rank_;
  std::uint32_t aggregate_id_;
  std::mutex mutex_;
  std::vector<std::vector<T>> pending_;
};

// Receive side of aggregation; delivers each member's payloads, in order,
// to that member's channel.
template <typename T>
class AggregationRouter {
 public:
  explicit AggregationRouter(std::vector<std::uint32_t> member_channel_ids)
      : members_(std::move(member_channel_ids)) {}

  void route(const Frame& frame, TransportHub::Sink& sink) {
    const auto& blob = frame.payloads;
    std::size_t at = 0;
    while (at < blob.size()) {
      if (blob.size() - at < 8) return fail();
      const std::uint32_t member = detail::get_u32le(blob, at);
      const std::uint32_t count = detail::get_u32le(blob, at + 4);
      at += 8;
      if (member >= members_.size()) return fail();
      const std::size_t bytes = std::size_t{count} * sizeof(T);
      if (blob.size() - at < bytes) return fail();
      for (std::uint32_t i = 0; i < count; ++i) {
        sink.deliver(members_[member],
                     std::span<const std::byte>(blob.data() + at + i * sizeof(T),
                                                sizeof(T)));
      }
      at += bytes;
    }
  }

  std::uint64_t errors() const { return errors_.load(std::memory_order_relaxed); }

 private:
  void fail() { errors_.fetch_add(1, std::memory_order_relaxed); }

  std::vector<std::uint32_t> members_;
  std::atomic<std::uint64_t> errors_{0};
};

template <typename T>
std::shared_ptr<AggregationRouter<T>> register_aggregation_route(
    TransportHub& hub, std::uint32_t aggregate_id,
    std::vector<std::uint32_t> member_channel_ids) {
  auto router = std::make_shared<AggregationRouter<T>>(std::move(member_channel_ids));
  hub.route_frames(aggregate_id,
                   [router](const Frame& frame, TransportHub::Sink& sink) {
                     router->route(frame, sink);
                   });
  return router;
}

}  // namespace ductwork
