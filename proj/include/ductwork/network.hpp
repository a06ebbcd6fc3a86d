#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "ductwork/channel.hpp"
#include "ductwork/consolidation.hpp"
#include "ductwork/hub.hpp"
#include "ductwork/topology.hpp"

namespace ductwork {

// Send endpoint handed to simulation elements: either a plain channel
// inlet or a slot in the per-rank-pair pool, transparently.
template <typename T>
class SendPort {
 public:
  virtual ~SendPort() = default;
  virtual PutOutcome try_put(const T& payload) = 0;
};

template <typename T>
class InletSendPort final : public SendPort<T> {
 public:
  explicit InletSendPort(Inlet<T> inlet) : inlet_(inlet) {}
  PutOutcome try_put(const T& payload) override { return inlet_.try_put(payload); }

 private:
  Inlet<T> inlet_;
};

template <typename T>
class PoolSendPort final : public SendPort<T> {
 public:
  PoolSendPort(Pool<T>* pool, std::size_t member_index)
      : pool_(pool), member_index_(member_index) {}
  PutOutcome try_put(const T& payload) override {
    return pool_->put(member_index_, payload);
  }

 private:
  Pool<T>* pool_;
  std::size_t member_index_;
};

// Everything one simulation element needs: one send port per out-edge and
// one outlet per in-edge, both ordered by ascending neighbor node id.
template <typename T>
struct NodeBundle {
  NodeId id{};
  std::vector<NodeId> out_neighbors;
  std::vector<std::unique_ptr<SendPort<T>>> sends;
  std::vector<NodeId> in_neighbors;
  std::vector<Outlet<T>> recvs;
};

// All channel state instantiated on one rank for a placed topology.
template <typename T>
class ChannelNetwork {
 public:
  NodeBundle<T>& bundle(NodeId node) {
    auto it = bundles_.find(node);
    if (it == bundles_.end())
      throw std::out_of_range("node not placed on this rank");
    return it->second;
  }

  bool local(NodeId node) const { return bundles_.count(node) != 0; }

  std::vector<NodeId> nodes_for_thread(int thread) const {
    std::vector<NodeId> out;
    for (const auto& [id, bundle] : bundles_)
      if (placement_[id].thread == thread) out.push_back(id);
    std::sort(out.begin(), out.end());
    return out;
  }

  // Aggregate best-effort accounting across all locally held channels and
  // outbound pools.
  std::uint64_t total_puts_dropped() const {
    std::uint64_t total = 0;
    for (const auto& ch : channels_) total += ch->puts_dropped();
    for (const auto& [rank, pool] : pools_) total += pool->slot_drops();
    return total;
  }

  const std::map<int, std::unique_ptr<Pool<T>>>& pools() const { return pools_; }

 private:
  template <typename U>
  friend ChannelNetwork<U> instantiate(const Topology&, const Assignment&, int,
                                       TransportHub*,
                                       const std::function<U(NodeId)>&,
                                       std::size_t);

  std::vector<CpuSlot> placement_;
  std::vector<std::unique_ptr<Channel<T>>> channels_;
  std::map<int, std::unique_ptr<Pool<T>>> pools_;  // by destination rank
  std::unordered_map<NodeId, NodeBundle<T>> bundles_;
};

// Instantiates channels for every edge incident to self_rank, choosing the
// backend from the two endpoints' placements: same (rank, thread) ->
// intra-thread; same rank -> inter-thread; cross-rank -> inter-process,
// registered into the per-rank-pair pool. Deterministic: channel_id is the
// edge's index in sorted (src, dst) order, and pool member order follows
// channel_id, so sender and receiver agree without negotiation.
// `initial_payload(src)` supplies each channel's pre-first-message default.
template <typename T>
ChannelNetwork<T> instantiate(const Topology& topo, const Assignment& assign,
                              int self_rank, TransportHub* hub,
                              const std::function<T(NodeId)>& initial_payload,
                              std::size_t capacity = kDefaultCapacity) {
  if (assign.placement.size() != topo.node_count)
    throw std::invalid_argument("assignment does not cover the topology");

  std::vector<std::pair<NodeId, NodeId>> edges = topo.edges;
  std::sort(edges.begin(), edges.end());

  ChannelNetwork<T> net;
  net.placement_ = assign.placement;
  for (NodeId id = 0; id < topo.node_count; ++id) {
    if (assign.placement[id].rank == self_rank) {
      net.bundles_[id].id = id;
    }
  }

  // Cross-rank edge lists per (src, dst) rank pair, in channel_id order.
  std::map<int, std::vector<std::uint32_t>> outbound_members;   // dst rank -> channel ids
  std::map<int, std::vector<std::uint32_t>> inbound_members;    // src rank -> channel ids
  std::map<std::uint32_t, std::size_t> member_index;            // channel id -> slot

  for (std::uint32_t id = 0; id < edges.size(); ++id) {
    const auto [src, dst] = edges[id];
    const CpuSlot ps = assign.placement[src];
    const CpuSlot pd = assign.placement[dst];
    if (ps.rank == self_rank && pd.rank != self_rank) {
      member_index[id] = outbound_members[pd.rank].size();
      outbound_members[pd.rank].push_back(id);
    } else if (ps.rank != self_rank && pd.rank == self_rank) {
      inbound_members[ps.rank].push_back(id);
    }
  }

  if ((!outbound_members.empty() || !inbound_members.empty()) && hub == nullptr)
    throw std::invalid_argument("cross-rank edges require a transport hub");

  for (const auto& [dst_rank, members] : outbound_members) {
    if (!hub->adapter().peer_reachable(dst_rank))
      throw std::runtime_error("peer rank " + std::to_string(dst_rank) +
                               " unreachable");
    net.pools_[dst_rank] = std::make_unique<Pool<T>>(
        hub, dst_rank, pool_channel_id(self_rank, dst_rank), members.size());
  }
  for (const auto& [src_rank, members] : inbound_members) {
    register_pool_route<T>(*hub, pool_channel_id(src_rank, self_rank), members);
  }

  for (std::uint32_t id = 0; id < edges.size(); ++id) {
    const auto [src, dst] = edges[id];
    const CpuSlot ps = assign.placement[src];
    const CpuSlot pd = assign.placement[dst];
    const bool src_local = ps.rank == self_rank;
    const bool dst_local = pd.rank == self_rank;
    if (!src_local && !dst_local) continue;

    if (src_local && dst_local) {
      const BackendKind kind = ps.thread == pd.thread ? BackendKind::IntraThread
                                                      : BackendKind::InterThread;
      auto channel = std::make_unique<Channel<T>>(initial_payload(src), capacity, kind);
      net.bundles_[src].out_neighbors.push_back(dst);
      net.bundles_[src].sends.push_back(
          std::make_unique<InletSendPort<T>>(channel->inlet()));
      net.bundles_[dst].in_neighbors.push_back(src);
      net.bundles_[dst].recvs.push_back(channel->outlet());
      net.channels_.push_back(std::move(channel));
    } else if (src_local) {
      net.bundles_[src].out_neighbors.push_back(dst);
      net.bundles_[src].sends.push_back(std::make_unique<PoolSendPort<T>>(
          net.pools_[pd.rank].get(), member_index[id]));
    } else {
      auto channel = std::make_unique<Channel<T>>(
          initial_payload(src), hub->make_duct<T>(id, ps.rank, capacity));
      net.bundles_[dst].in_neighbors.push_back(src);
      net.bundles_[dst].recvs.push_back(channel->outlet());
      net.channels_.push_back(std::move(channel));
    }
  }

  // Edges were visited in sorted (src, dst) order, so per-bundle neighbor
  // lists are already ascending.
  return net;
}

}  // namespace ductwork
