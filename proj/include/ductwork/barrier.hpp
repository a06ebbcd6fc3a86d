#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstring>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "ductwork/hub.hpp"

namespace ductwork {

struct BarrierError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Collective barrier over the threads of one process and, when a hub is
// supplied, all ranks. The cross-rank phase is a rank-0 coordinator
// collect/release over the transport and runs inside the barrier call of
// whichever local thread arrives last.
//
// Each call may carry a vote bit; the returned value is the OR across all
// participants. Run loops use this to agree on stopping.
class BarrierGroup {
 public:
  explicit BarrierGroup(int local_threads, TransportHub* hub = nullptr,
                        std::chrono::milliseconds timeout = std::chrono::seconds(30))
      : local_threads_(local_threads), hub_(hub), timeout_(timeout) {}

  bool barrier(bool vote = false) {
    std::unique_lock<std::mutex> lock(mutex_);
    vote_accum_ = vote_accum_ || vote;
    if (++arrived_ < local_threads_) {
      const std::uint64_t gen = generation_;
      cv_.wait(lock, [&] { return generation_ != gen; });
      if (failed_) throw BarrierError("barrier failed on another participant");
      return released_vote_;
    }
    // Last local arriver: run the cross-rank phase, then release.
    bool result = vote_accum_;
    bool failed = false;
    if (hub_ != nullptr && hub_->world_size() > 1) {
      lock.unlock();
      try {
        result = cross_rank_phase(result);
      } catch (...) {
        failed = true;
      }
      lock.lock();
    }
    arrived_ = 0;
    vote_accum_ = false;
    released_vote_ = result;
    failed_ = failed;
    ++generation_;
    cv_.notify_all();
    if (failed) throw BarrierError("cross-rank barrier timed out");
    return result;
  }

  std::uint64_t barriers_completed() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return generation_;
  }

 private:
  bool cross_rank_phase(bool local_vote) {
    const std::uint64_t gen = cross_gen_++;
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    if (hub_->rank() == 0) {
      bool vote = local_vote;
      int collected = 0;
      const int expected = hub_->world_size() - 1;
      // Consume stashed enters from earlier polls first.
      for (auto it = stashed_enters_.begin(); it != stashed_enters_.end();) {
        if (it->gen == gen) {
          vote = vote || it->vote;
          ++collected;
          it = stashed_enters_.erase(it);
        } else {
          ++it;
        }
      }
      while (collected < expected) {
        auto blob = hub_->wait_control(kCtrlBarrierEnter, deadline);
        if (!blob) throw BarrierError("timed out waiting for barrier entry");
        const Enter enter = parse_enter(*blob);
        if (enter.gen == gen) {
          vote = vote || enter.vote;
          ++collected;
        } else {
          stashed_enters_.push_back(enter);
        }
      }
      std::vector<std::byte> release(9);
      std::memcpy(release.data(), &gen, 8);
      release[8] = static_cast<std::byte>(vote ? 1 : 0);
      hub_->broadcast_control(kCtrlBarrierRelease, release);
      return vote;
    }
    // Non-coordinator: announce entry, await release.
    std::vector<std::byte> enter(13);
    const std::uint32_t self = static_cast<std::uint32_t>(hub_->rank());
    std::memcpy(enter.data(), &self, 4);
    std::memcpy(enter.data() + 4, &gen, 8);
    enter[12] = static_cast<std::byte>(local_vote ? 1 : 0);
    if (!hub_->send_control(0, kCtrlBarrierEnter, enter))
      throw BarrierError("cannot reach barrier coordinator");
    for (;;) {
      auto blob = hub_->wait_control(kCtrlBarrierRelease, deadline);
      if (!blob) throw BarrierError("timed out waiting for barrier release");
      if (blob->size() != 9) continue;
      std::uint64_t rgen;
      std::memcpy(&rgen, blob->data(), 8);
      if (rgen == gen) return std::to_integer<std::uint8_t>((*blob)[8]) != 0;
      // Releases are ordered per stream; a mismatch here is stale traffic.
    }
  }

  struct Enter {
    std::uint32_t rank;
    std::uint64_t gen;
    bool vote;
  };

  static Enter parse_enter(const std::vector<std::byte>& blob) {
    if (blob.size() != 13) throw BarrierError("malformed barrier entry");
    Enter e{};
    std::memcpy(&e.rank, blob.data(), 4);
    std::memcpy(&e.gen, blob.data() + 4, 8);
    e.vote = std::to_integer<std::uint8_t>(blob[12]) != 0;
    return e;
  }

  const int local_threads_;
  TransportHub* hub_;
  std::chrono::milliseconds timeout_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  int arrived_ = 0;
  bool vote_accum_ = false;
  bool released_vote_ = false;
  bool failed_ = false;
  std::uint64_t generation_ = 0;
  std::uint64_t cross_gen_ = 0;  // touched only by last-arriver threads
  std::vector<Enter> stashed_enters_;
};

// Agrees on a common run-start instant: rank 0 reads its clock, adds a
// fixed start delay, and broadcasts the result before the run. All workers
// then derive identical fixed sync points from the shared t0.
inline std::chrono::system_clock::time_point negotiate_start_epoch(
    TransportHub* hub,
    std::chrono::milliseconds start_delay = std::chrono::seconds(1),
    std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
  const auto local_t0 = std::chrono::system_clock::now() + start_delay;
  if (hub == nullptr || hub->world_size() <= 1) return local_t0;
  if (hub->rank() == 0) {
    const std::int64_t nanos =
        std::chrono::duration_cast<std::chrono::nanoseconds>(
            local_t0.time_since_epoch())
            .count();
    std::vector<std::byte> blob(8);
    std::memcpy(blob.data(), &nanos, 8);
    hub->broadcast_control(kCtrlEpoch, blob);
    return local_t0;
  }
  auto blob = hub->wait_control(kCtrlEpoch,
                                std::chrono::steady_clock::now() + timeout);
  if (!blob || blob->size() != 8)
    throw std::runtime_error("start-epoch negotiation timed out");
  std::int64_t nanos;
  std::memcpy(&nanos, blob->data(), 8);
  return std::chrono::system_clock::time_point(
      std::chrono::duration_cast<std::chrono::system_clock::duration>(
          std::chrono::nanoseconds(nanos)));
}

}  // namespace ductwork
