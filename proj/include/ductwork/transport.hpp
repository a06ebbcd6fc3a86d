#pragma once

#include <cstddef>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <vector>

namespace ductwork {

// Process-level frame transport. Frames between a fixed (sender, receiver)
// pair are delivered in send order or not at all; no duplication, no
// corruption. poll_frames never blocks.
class TransportAdapter {
 public:
  virtual ~TransportAdapter() = default;

  virtual int rank() const = 0;

  // Returns false on delivery failure (disconnected peer).
  virtual bool send_frame(int dst_rank, std::span<const std::byte> frame) = 0;

  // All frames received since the last poll, in arrival order.
  virtual std::vector<std::vector<std::byte>> poll_frames() = 0;

  virtual bool peer_reachable(int /*rank*/) { return true; }
};

// Shared in-memory registry of per-rank inboxes; adapters for every rank
// hang off one network instance. Used for same-process multi-rank tests.
class LoopbackNetwork {
 public:
  class Adapter final : public TransportAdapter {
   public:
    Adapter(LoopbackNetwork* net, int rank) : net_(net), rank_(rank) {}

    int rank() const override { return rank_; }

    bool send_frame(int dst_rank, std::span<const std::byte> frame) override {
      return net_->deliver(dst_rank, frame);
    }

    std::vector<std::vector<std::byte>> poll_frames() override {
      return net_->drain(rank_);
    }

    bool peer_reachable(int rank) override { return net_->known(rank); }

   private:
    LoopbackNetwork* net_;
    int rank_;
  };

  std::unique_ptr<Adapter> adapter(int rank) {
    {
      std::lock_guard<std::mutex> lock(mutex_);
      inboxes_[rank];  // register the rank
    }
    return std::make_unique<Adapter>(this, rank);
  }

 private:
  bool known(int rank) {
    std::lock_guard<std::mutex> lock(mutex_);
    return inboxes_.count(rank) != 0;
  }

  bool deliver(int dst_rank, std::span<const std::byte> frame) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = inboxes_.find(dst_rank);
    if (it == inboxes_.end()) return false;
    it->second.emplace_back(frame.begin(), frame.end());
    return true;
  }

  std::vector<std::vector<std::byte>> drain(int rank) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto& inbox = inboxes_[rank];
    std::vector<std::vector<std::byte>> out(inbox.begin(), inbox.end());
    inbox.clear();
    return out;
  }

  std::mutex mutex_;
  std::map<int, std::deque<std::vector<std::byte>>> inboxes_;
};

}  // namespace ductwork
