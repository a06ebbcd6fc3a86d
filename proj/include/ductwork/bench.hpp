#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ductwork/barrier.hpp"
#include "ductwork/coloring.hpp"
#include "ductwork/network.hpp"
#include "ductwork/records.hpp"
#include "ductwork/sync_modes.hpp"
#include "ductwork/topology.hpp"

namespace ductwork {

using Color = std::uint32_t;

struct BenchConfig {
  int mode = 0;
  int num_procs = 1;
  int threads_per_proc = 1;
  NodeId nodes_per_cpu = 2048;
  double duration_s = 5.0;
  int replicates = 5;
  std::uint32_t colors = 3;
  double b = 0.1;
  double chunk_ms = 10.0;
  double epoch_s = 1.0;
  std::uint64_t seed = 1;
  bool skew_epochs = false;
  double inject_delay_ms = 0.0;
  std::size_t capacity = kDefaultCapacity;

  void validate() const {
    if (mode < 0 || mode > 4) throw std::invalid_argument("mode must be in 0..4");
    if (colors < 2) throw std::invalid_argument("need at least 2 colors");
    if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("b must be in (0, 1)");
    if (num_procs < 1 || threads_per_proc < 1 || nodes_per_cpu < 1)
      throw std::invalid_argument("worker and node counts must be positive");
    if (duration_s <= 0 || chunk_ms <= 0 || epoch_s <= 0 || replicates < 1)
      throw std::invalid_argument("durations and replicate count must be positive");
  }
};

// Near-square torus dimensions for a given node count.
inline std::pair<NodeId, NodeId> torus_dims(NodeId total) {
  NodeId best = 0;
  for (NodeId w = 1; static_cast<std::uint64_t>(w) * w <= total; ++w)
    if (total % w == 0) best = w;
  if (best < 3 || total / best < 3)
    throw std::invalid_argument("node count " + std::to_string(total) +
                                " has no torus factorization with sides >= 3");
  return {best, total / best};
}

// Sends local (node, color) pairs to rank 0 and, on rank 0, assembles the
// complete color map. Single-rank runs just pass their colors through.
inline std::optional<std::vector<Color>> gather_colors(
    TransportHub* hub, std::uint32_t replicate_tag,
    const std::vector<std::pair<NodeId, Color>>& local, NodeId node_count,
    std::chrono::milliseconds timeout = std::chrono::seconds(30)) {
  if (hub != nullptr && hub->world_size() > 1 && hub->rank() != 0) {
    std::vector<std::byte> blob(4 + local.size() * 8);
    std::memcpy(blob.data(), &replicate_tag, 4);
    for (std::size_t i = 0; i < local.size(); ++i) {
      std::memcpy(blob.data() + 4 + i * 8, &local[i].first, 4);
      std::memcpy(blob.data() + 8 + i * 8, &local[i].second, 4);
    }
    if (!hub->send_control(0, kCtrlGather, blob))
      throw std::runtime_error("color gather: cannot reach rank 0");
    return std::nullopt;
  }

  std::vector<std::optional<Color>> colors(node_count);
  for (const auto& [id, color] : local) colors[id] = color;
  if (hub != nullptr && hub->world_size() > 1) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (int pending = hub->world_size() - 1; pending > 0;) {
      auto blob = hub->wait_control(kCtrlGather, deadline);
      if (!blob) throw std::runtime_error("color gather timed out");
      if (blob->size() < 4 || (blob->size() - 4) % 8 != 0)
        throw std::runtime_error("malformed color gather blob");
      std::uint32_t tag;
      std::memcpy(&tag, blob->data(), 4);
      if (tag != replicate_tag)
        throw std::runtime_error("color gather replicate mismatch");
      for (std::size_t at = 4; at < blob->size(); at += 8) {
        NodeId id;
        Color color;
        std::memcpy(&id, blob->data() + at, 4);
        std::memcpy(&color, blob->data() + at + 4, 4);
        if (id >= node_count) throw std::runtime_error("gathered node id out of range");
        colors[id] = color;
      }
      --pending;
    }
  }
  std::vector<Color> full;
  full.reserve(node_count);
  for (NodeId id = 0; id < node_count; ++id) {
    if (!colors[id])
      throw std::runtime_error("missing color for node " + std::to_string(id));
    full.push_back(*colors[id]);
  }
  return full;
}

namespace detail {

struct WorkerResult {
  RunReport report;
};

// One worker: updates its own node set for the whole run, then takes part
// in the finalization flush.
struct Worker {
  int thread_index;
  std::vector<NodeId> nodes;
  std::vector<ColoringNode> state;
  ChannelNetwork<Color>* net;
  double b;
  double stall_probability;
  double inject_delay_ms;
  std::mt19937_64 stall_rng;
  std::uint64_t sent = 0;
  std::uint64_t dropped = 0;

  void one_update(bool comm_enabled) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto stats =
          node_update(state[i], net->bundle(nodes[i]), b, comm_enabled);
      sent += stats.sent;
      dropped += stats.dropped;
    }
    if (inject_delay_ms > 0.0) {
      std::uniform_real_distribution<double> u(0.0, 1.0);
      if (u(stall_rng) < stall_probability) {
        std::this_thread::sleep_for(
            std::chrono::duration<double, std::milli>(inject_delay_ms));
      }
    }
  }

  // One synchronous exchange of final colors so peers observe the terminal
  // state even in NoComm mode.
  void finalize_flush(BarrierGroup& group) {
    group.barrier();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      auto& bundle = net->bundle(nodes[i]);
      for (auto& send : bundle.sends) send->try_put(state[i].color);
    }
    group.barrier();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      auto& bundle = net->bundle(nodes[i]);
      for (std::size_t r = 0; r < bundle.recvs.size(); ++r)
        state[i].last_seen[r] =
            static_cast<std::uint32_t>(bundle.recvs[r].jump().payload);
    }
    group.barrier();
  }
};

}  // namespace detail

// Runs the full benchmark on this rank: `replicates` independent runs of
// the coloring workload under the configured asynchronicity mode. Rank 0
// returns every worker's record including those gathered from peer ranks;
// other ranks ship their records to rank 0 and return the local ones.
inline std::vector<BenchmarkRecord> benchmark_run(const BenchConfig& config,
                                                  TransportHub* hub = nullptr) {
  config.validate();
  const int total_cpus = config.num_procs * config.threads_per_proc;
  const int self_rank = hub ? hub->rank() : 0;
  if (hub && hub->world_size() != config.num_procs)
    throw std::invalid_argument("transport world size does not match --procs");
  if (config.num_procs > 1 && hub == nullptr)
    throw std::invalid_argument("multi-process run requires a transport");

  const NodeId total_nodes =
      static_cast<NodeId>(total_cpus) * config.nodes_per_cpu;
  const auto [width, height] = torus_dims(total_nodes);
  const Topology topo = make_toroidal_grid(width, height);
  const Assignment assign = assign_striped(topo, config.num_procs,
                                           config.threads_per_proc,
                                           config.nodes_per_cpu);
  const std::string host = hostname();
  const AsyncMode mode = async_mode_from_int(config.mode);

  std::vector<BenchmarkRecord> records;
  for (int replicate = 0; replicate < config.replicates; ++replicate) {
    const std::uint64_t rep_seed = config.seed + static_cast<std::uint64_t>(replicate);
    auto net = instantiate<Color>(
        topo, assign, self_rank, hub,
        [&](NodeId src) { return initial_color(rep_seed, src, config.colors); },
        config.capacity);

    BarrierGroup group(config.threads_per_proc, hub);
    RunParams params;
    params.duration_s = config.duration_s;
    params.chunk_ms = config.chunk_ms;
    params.epoch_period_s = config.epoch_s;
    if (mode == AsyncMode::FixedBarrier && !config.skew_epochs)
      params.t0 = negotiate_start_epoch(hub);

    std::vector<detail::Worker> workers(config.threads_per_proc);
    for (int t = 0; t < config.threads_per_proc; ++t) {
      auto& w = workers[t];
      w.thread_index = t;
      w.nodes = net.nodes_for_thread(t);
      for (NodeId id : w.nodes)
        w.state.push_back(ColoringNode::make(id, rep_seed, config.colors,
                                             net.bundle(id).in_neighbors));
      w.net = &net;
      w.b = config.b;
      w.inject_delay_ms = config.inject_delay_ms;
      w.stall_probability = total_cpus > 0 ? 1.0 / total_cpus : 0.0;
      w.stall_rng.seed(rep_seed ^ (0x9E3779B97F4A7C15ull *
                                   (static_cast<std::uint64_t>(self_rank) * 64 + t + 1)));
    }

    std::vector<RunReport> reports(config.threads_per_proc);
    std::vector<std::thread> threads;
    for (int t = 0; t < config.threads_per_proc; ++t) {
      threads.emplace_back([&, t] {
        auto& w = workers[t];
        reports[t] = run(
            mode, group, [&w](bool comm) { w.one_update(comm); }, params,
            [&w] { return std::make_pair(w.sent, w.dropped); });
        try {
          if (!reports[t].aborted) w.finalize_flush(group);
        } catch (const BarrierError&) {
          reports[t].aborted = true;
        }
      });
    }
    for (auto& th : threads) th.join();

    const bool aborted = std::any_of(reports.begin(), reports.end(),
                                     [](const RunReport& r) { return r.aborted; });

    std::optional<std::uint64_t> conflicts;
    if (!aborted) {
      std::vector<std::pair<NodeId, Color>> local;
      for (const auto& w : workers)
        for (std::size_t i = 0; i < w.nodes.size(); ++i)
          local.emplace_back(w.nodes[i], w.state[i].color);
      if (auto full = gather_colors(hub, static_cast<std::uint32_t>(replicate),
                                    local, topo.node_count)) {
        conflicts = count_conflicts(topo, *full);
      }
    }

    for (int t = 0; t < config.threads_per_proc; ++t) {
      const auto& rep = reports[t];
      BenchmarkRecord record;
      record.mode = config.mode;
      record.num_procs = config.num_procs;
      record.threads_per_proc = config.threads_per_proc;
      record.replicate = replicate;
      record.rank = self_rank;
      record.thread = t;
      record.updates_completed = rep.updates_completed;
      record.wall_time_s = rep.wall_time_s;
      record.update_rate =
          rep.wall_time_s > 0 ? rep.updates_completed / rep.wall_time_s : 0.0;
      if (self_rank == 0 && t == 0) record.conflicts = conflicts;
      record.messages_sent = rep.messages_sent;
      record.messages_dropped = rep.messages_dropped;
      record.hostname = host;
      record.version = kVersion;
      record.seed = config.seed;
      record.aborted = rep.aborted;
      records.push_back(std::move(record));
    }

    // Quiesce before tearing down this replicate's channels.
    if (hub && hub->world_size() > 1) BarrierGroup(1, hub).barrier();
  }

  // Ship records to rank 0 for unified reporting.
  if (hub && hub->world_size() > 1) {
    if (self_rank != 0) {
      nlohmann::json arr = nlohmann::json::array();
      for (const auto& r : records) arr.push_back(record_to_json(r));
      const std::string text = arr.dump();
      std::vector<std::byte> blob(text.size());
      std::memcpy(blob.data(), text.data(), text.size());
      hub->send_control(0, kCtrlRecords, blob);
    } else {
      const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(30);
      for (int pending = hub->world_size() - 1; pending > 0; --pending) {
        auto blob = hub->wait_control(kCtrlRecords, deadline);
        if (!blob) throw std::runtime_error("record gather timed out");
        const auto arr = nlohmann::json::parse(
            std::string(reinterpret_cast<const char*>(blob->data()), blob->size()));
        for (const auto& j : arr) records.push_back(record_from_json(j));
      }
    }
  }
  return records;
}

}  // namespace ductwork
