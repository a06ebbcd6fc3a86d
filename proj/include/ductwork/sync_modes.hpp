#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <utility>

#include "ductwork/barrier.hpp"

namespace ductwork {

// The five asynchronicity modes, from most to least synchronized.
enum class AsyncMode : int {
  BarrierEveryUpdate = 0,  // full barrier between computational updates
  RollingBarrier = 1,      // work in fixed-duration chunks, then barrier
  FixedBarrier = 2,        // barrier at predetermined epoch instants
  NoBarrier = 3,           // fully best-effort
  NoComm = 4,              // best-effort with communication disabled
};

inline AsyncMode async_mode_from_int(int mode) {
  if (mode < 0 || mode > 4)
    throw std::invalid_argument("mode must be in 0..4");
  return static_cast<AsyncMode>(mode);
}

struct RunParams {
  double duration_s = 5.0;
  double chunk_ms = 10.0;      // Mode 1 work-chunk duration
  double epoch_period_s = 1.0; // Mode 2 barrier period
  // Shared run-start instant for Mode 2 sync points; when absent each
  // worker falls back to its own clock (reproduces the skewed-epoch race).
  std::optional<std::chrono::system_clock::time_point> t0;
};

struct RunReport {
  std::uint64_t updates_completed = 0;
  double wall_time_s = 0.0;
  std::uint64_t barriers_executed = 0;
  std::uint64_t messages_sent = 0;
  std::uint64_t messages_dropped = 0;
  std::uint64_t clock_reads = 0;
  bool aborted = false;
};

// Executes update_fn under the given asynchronicity mode until `duration_s`
// elapses. update_fn receives comm_enabled=false only in NoComm mode.
// Modes 0 and 1 agree on stopping through a barrier vote; Mode 2 derives an
// identical barrier schedule on every worker from the shared t0, so equal
// barrier counts need no vote. Clock use is one read per loop iteration,
// counted in the report.
inline RunReport run(
    AsyncMode mode, BarrierGroup& group,
    const std::function<void(bool comm_enabled)>& update_fn,
    const RunParams& params,
    const std::function<std::pair<std::uint64_t, std::uint64_t>()>&
        message_counters = {}) {
  using steady = std::chrono::steady_clock;
  using sys = std::chrono::system_clock;

  RunReport report;
  const auto start = steady::now();
  const auto duration = std::chrono::duration_cast<steady::duration>(
      std::chrono::duration<double>(params.duration_s));
  const auto t_end = start + duration;

  auto read_steady = [&] {
    ++report.clock_reads;
    return steady::now();
  };

  try {
    switch (mode) {
      case AsyncMode::BarrierEveryUpdate: {
        for (;;) {
          update_fn(true);
          ++report.updates_completed;
          ++report.barriers_executed;
          if (group.barrier(read_steady() >= t_end)) break;
        }
        break;
      }
      case AsyncMode::RollingBarrier: {
        const auto chunk = std::chrono::duration_cast<steady::duration>(
            std::chrono::duration<double, std::milli>(params.chunk_ms));
        for (;;) {
          const auto chunk_end = read_steady() + chunk;
          do {
            update_fn(true);
            ++report.updates_completed;
          } while (read_steady() < chunk_end);
          ++report.barriers_executed;
          if (group.barrier(steady::now() >= t_end)) break;
        }
        break;
      }
      case AsyncMode::FixedBarrier: {
        const auto period = std::chrono::duration_cast<sys::duration>(
            std::chrono::duration<double>(params.epoch_period_s));
        const sys::time_point t0 = params.t0 ? *params.t0 : sys::now();
        const sys::time_point sys_end =
            t0 + std::chrono::duration_cast<sys::duration>(
                     std::chrono::duration<double>(params.duration_s));
        std::uint64_t k = 1;
        for (;;) {
          ++report.clock_reads;
          const auto now = sys::now();
          // Sync points strictly before the end instant are executed by
          // every worker, so barrier counts match across the group.
          while (t0 + k * period < sys_end && t0 + k * period <= now) {
            ++report.barriers_executed;
            group.barrier();
            ++k;
          }
          if (now >= sys_end) break;
          update_fn(true);
          ++report.updates_completed;
        }
        break;
      }
      case AsyncMode::NoBarrier: {
        do {
          update_fn(true);
          ++report.updates_completed;
        } while (read_steady() < t_end);
        break;
      }
      case AsyncMode::NoComm: {
        do {
          update_fn(false);
          ++report.updates_completed;
        } while (read_steady() < t_end);
        break;
      }
    }
  } catch (const BarrierError&) {
    report.aborted = true;
  }

  report.wall_time_s =
      std::chrono::duration<double>(steady::now() - start).count();
  if (message_counters) {
    const auto [sent, dropped] = message_counters();
    report.messages_sent = sent;
    report.messages_dropped = dropped;
  }
  return report;
}

}  // namespace ductwork
