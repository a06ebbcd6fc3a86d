#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <thread>
#include <unordered_map>
#include <vector>

#include "ductwork/channel.hpp"
#include "ductwork/duct.hpp"
#include "ductwork/frame.hpp"
#include "ductwork/transport.hpp"

namespace ductwork {

// Channel-id space reserved for control traffic and consolidation routing.
inline constexpr std::uint32_t kCtrlBarrierEnter = 0xF0000001u;
inline constexpr std::uint32_t kCtrlBarrierRelease = 0xF0000002u;
inline constexpr std::uint32_t kCtrlEpoch = 0xF0000003u;
inline constexpr std::uint32_t kCtrlGather = 0xF0000004u;
inline constexpr std::uint32_t kCtrlRecords = 0xF0000005u;

inline constexpr std::uint32_t pool_channel_id(int src_rank, int dst_rank) {
  return 0xE0000000u | (static_cast<std::uint32_t>(src_rank) << 12) |
         static_cast<std::uint32_t>(dst_rank);
}

// Per-process pump for inter-process traffic. Owns the transport adapter,
// drains poll_frames inside receive operations (no background thread), and
// routes decoded frames into per-channel buffers, registered handlers, or
// control mailboxes. All public methods are serialized by one mutex.
class TransportHub {
 public:
  // Handlers run with the hub lock held; they deliver through the sink
  // rather than calling back into the hub.
  struct Sink {
    virtual ~Sink() = default;
    virtual void deliver(std::uint32_t channel_id, std::span<const std::byte> payload) = 0;
  };
  using FrameHandler = std::function<void(const Frame&, Sink&)>;

  TransportHub(std::unique_ptr<TransportAdapter> adapter, int world_size)
      : adapter_(std::move(adapter)), world_size_(world_size) {}

  int rank() const { return adapter_->rank(); }
  int world_size() const { return world_size_; }
  TransportAdapter& adapter() { return *adapter_; }

  bool send(int dst_rank, std::span<const std::byte> frame) {
    std::lock_guard<std::mutex> lock(mutex_);
    return adapter_->send_frame(dst_rank, frame);
  }

  // Sends one control frame carrying an opaque blob to every other rank.
  void broadcast_control(std::uint32_t control_id, std::span<const std::byte> blob) {
    const auto frame = frame_encode_blob(control_id, blob);
    std::lock_guard<std::mutex> lock(mutex_);
    for (int r = 0; r < world_size_; ++r) {
      if (r != adapter_->rank()) adapter_->send_frame(r, frame);
    }
  }

  bool send_control(int dst_rank, std::uint32_t control_id,
                    std::span<const std::byte> blob) {
    const auto frame = frame_encode_blob(control_id, blob);
    return send(dst_rank, frame);
  }

  void pump() {
    std::lock_guard<std::mutex> lock(mutex_);
    pump_locked();
  }

  // Registers the receive side of a data channel.
  void open_receive(std::uint32_t channel_id, std::uint32_t payload_width) {
    std::lock_guard<std::mutex> lock(mutex_);
    receive_[channel_id] = ReceiveBuffer{payload_width, {}};
  }

  void route_frames(std::uint32_t channel_id, FrameHandler handler) {
    std::lock_guard<std::mutex> lock(mutex_);
    handlers_[channel_id] = std::move(handler);
  }

  // Pumps, then pops the oldest pending payload for a data channel.
  std::optional<std::vector<std::byte>> pop_payload(std::uint32_t channel_id) {
    std::lock_guard<std::mutex> lock(mutex_);
    pump_locked();
    auto it = receive_.find(channel_id);
    if (it == receive_.end() || it->second.pending.empty()) return std::nullopt;
    auto payload = std::move(it->second.pending.front());
    it->second.pending.pop_front();
    return payload;
  }

  // Pumps, then pops the oldest control blob for a mailbox, if any.
  std::optional<std::vector<std::byte>> poll_control(std::uint32_t control_id) {
    std::lock_guard<std::mutex> lock(mutex_);
    pump_locked();
    auto it = mailboxes_.find(control_id);
    if (it == mailboxes_.end() || it->second.empty()) return std::nullopt;
    auto blob = std::move(it->second.front());
    it->second.pop_front();
    return blob;
  }

  std::optional<std::vector<std::byte>> wait_control(
      std::uint32_t control_id, std::chrono::steady_clock::time_point deadline) {
    for (unsigned i = 0;; ++i) {
      if (auto blob = poll_control(control_id)) return blob;
      if (std::chrono::steady_clock::now() >= deadline) return std::nullopt;
      detail::backoff(i);
    }
  }

  std::uint64_t routing_errors() const {
    return routing_errors_.load(std::memory_order_relaxed);
  }

  template <typename T>
  std::unique_ptr<Duct<T>> make_duct(std::uint32_t channel_id, int peer_rank,
                                     std::size_t capacity = kDefaultCapacity);

 private:
  template <typename>
  friend class InterProcessDuct;

  struct ReceiveBuffer {
    std::uint32_t payload_width;
    std::deque<std::vector<std::byte>> pending;
  };

  struct LockedSink final : Sink {
    explicit LockedSink(TransportHub* hub) : hub(hub) {}
    void deliver(std::uint32_t channel_id, std::span<const std::byte> payload) override {
      hub->deliver_locked(channel_id, payload);
    }
    TransportHub* hub;
  };

  void pump_locked() {
    for (auto& bytes : adapter_->poll_frames()) {
      Frame frame;
      try {
        frame = frame_decode(bytes);
      } catch (const FrameError&) {
        routing_errors_.fetch_add(1, std::memory_order_relaxed);
        continue;
      }
      if (auto hit = handlers_.find(frame.channel_id); hit != handlers_.end()) {
        LockedSink sink(this);
        hit->second(frame, sink);
        continue;
      }
      if (auto rit = receive_.find(frame.channel_id); rit != receive_.end()) {
        if (frame.payload_len != rit->second.payload_width) {
          routing_errors_.fetch_add(1, std::memory_order_relaxed);
          continue;
        }
        for (std::uint32_t i = 0; i < frame.msg_count; ++i) {
          const auto* begin =
              frame.payloads.data() + std::size_t{i} * frame.payload_len;
          rit->second.pending.emplace_back(begin, begin + frame.payload_len);
        }
        continue;
      }
      mailboxes_[frame.channel_id].emplace_back(std::move(frame.payloads));
    }
  }

  void deliver_locked(std::uint32_t channel_id, std::span<const std::byte> payload) {
    auto it = receive_.find(channel_id);
    if (it == receive_.end() || payload.size() != it->second.payload_width) {
      routing_errors_.fetch_add(1, std::memory_order_relaxed);
      return;
    }
    it->second.pending.emplace_back(payload.begin(), payload.end());
  }

  bool send_locked_from_duct(int dst_rank, std::span<const std::byte> frame) {
    std::lock_guard<std::mutex> lock(mutex_);
    return adapter_->send_frame(dst_rank, frame);
  }

  std::unique_ptr<TransportAdapter> adapter_;
  int world_size_;
  std::mutex mutex_;
  std::unordered_map<std::uint32_t, ReceiveBuffer> receive_;
  std::unordered_map<std::uint32_t, FrameHandler> handlers_;
  std::unordered_map<std::uint32_t, std::deque<std::vector<std::byte>>> mailboxes_;
  std::atomic<std::uint64_t> routing_errors_{0};
};

// Cross-process duct. The send path stages messages in a bounded buffer
// and ships the whole batch as one frame per push; staged messages are
// retained while the peer is unreachable and dropped only once the staging
// buffer fills. The receive path is fed by the hub pump; the capacity
// bound applies to the sender staging buffer, not the receive queue.
template <typename T>
class InterProcessDuct final : public Duct<T> {
 public:
  InterProcessDuct(TransportHub* hub, std::uint32_t channel_id, int peer_rank,
                   std::size_t capacity)
      : hub_(hub), channel_id_(channel_id), peer_rank_(peer_rank),
        capacity_(capacity) {}

  bool try_push(const Message<T>& msg) override {
    if (staging_.size() >= capacity_) flush();
    if (staging_.size() >= capacity_) return false;
    staging_.push_back(msg.payload);
    flush();
    return true;
  }

  std::optional<Message<T>> try_pop() override {
    if (auto payload = hub_->pop_payload(channel_id_)) {
      Message<T> msg;
      msg.seq = ++recv_seq_;
      msg.payload = from_bytes<T>(*payload);
      return msg;
    }
    return std::nullopt;
  }

  std::size_t capacity() const override { return capacity_; }
  BackendKind kind() const override { return BackendKind::InterProcess; }

 private:
  void flush() {
    if (staging_.empty()) return;
    std::vector<std::vector<std::byte>> payloads;
    payloads.reserve(staging_.size());
    for (const T& p : staging_) payloads.push_back(to_bytes(p));
    const auto frame = frame_encode(channel_id_, payloads);
    if (hub_->send_locked_from_duct(peer_rank_, frame)) staging_.clear();
  }

  TransportHub* hub_;
  std::uint32_t channel_id_;
  int peer_rank_;
  std::size_t capacity_;
  std::deque<T> staging_;
  std::uint64_t recv_seq_ = 0;
};

template <typename T>
std::unique_ptr<Duct<T>> TransportHub::make_duct(std::uint32_t channel_id,
                                                 int peer_rank,
                                                 std::size_t capacity) {
  if (peer_rank < 0 || peer_rank >= world_size_ ||
      !adapter_->peer_reachable(peer_rank)) {
    throw std::runtime_error("inter-process duct: peer rank " +
                             std::to_string(peer_rank) + " unreachable");
  }
  open_receive(channel_id, sizeof(T));
  return std::make_unique<InterProcessDuct<T>>(this, channel_id, peer_rank, capacity);
}

}  // namespace ductwork
