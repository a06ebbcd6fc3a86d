#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "ductwork/network.hpp"
#include "ductwork/topology.hpp"

namespace ductwork {

// Counter-free deterministic per-node generator: splitmix64 keyed by
// (global seed, node id), so node behavior is independent of placement.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

inline SplitMix64 node_rng(std::uint64_t seed, NodeId node) {
  // One scrambling round separates the per-node streams.
  SplitMix64 mixer(seed ^ (0x517CC1B727220A95ull * (node + 1)));
  return SplitMix64(mixer.next());
}

inline std::uint32_t initial_color(std::uint64_t seed, NodeId node,
                                   std::uint32_t num_colors) {
  auto rng = node_rng(seed, node);
  return static_cast<std::uint32_t>(rng.uniform() * num_colors);
}

// Color-selection update on conflict, after the WLAN channel selection
// rule this benchmark is built on: damp the whole vector by (1 - b) and
// spread the freed mass b evenly over the non-conflicting colors. The
// conflicting entry strictly decreases whenever it is positive.
inline std::vector<double> update_probabilities(std::vector<double> prob,
                                                std::size_t current, double b) {
  if (current >= prob.size())
    throw std::invalid_argument("current color out of range");
  if (prob.size() < 2) throw std::invalid_argument("need at least 2 colors");
  const double spread = b / static_cast<double>(prob.size() - 1);
  for (std::size_t j = 0; j < prob.size(); ++j)
    prob[j] = (1.0 - b) * prob[j] + (j == current ? 0.0 : spread);
  return prob;
}

// Per-node state for the decentralized coloring rule.
struct ColoringNode {
  NodeId id{};
  std::uint32_t color{};
  std::vector<double> prob;            // selection distribution over colors
  SplitMix64 rng{0};
  std::vector<std::uint32_t> last_seen;  // aligned with bundle in_neighbors

  static ColoringNode make(NodeId id, std::uint64_t seed,
                           std::uint32_t num_colors,
                           const std::vector<NodeId>& in_neighbors) {
    ColoringNode node;
    node.id = id;
    node.rng = node_rng(seed, id);
    node.color = static_cast<std::uint32_t>(node.rng.uniform() * num_colors);
    node.prob.assign(num_colors, 1.0 / num_colors);
    node.last_seen.reserve(in_neighbors.size());
    for (NodeId nbr : in_neighbors)
      node.last_seen.push_back(initial_color(seed, nbr, num_colors));
    return node;
  }
};

inline std::uint32_t sample_color(const std::vector<double>& prob,
                                  SplitMix64& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t i = 0; i < prob.size(); ++i) {
    acc += prob[i];
    if (u < acc) return static_cast<std::uint32_t>(i);
  }
  return static_cast<std::uint32_t>(prob.size() - 1);
}

struct NodeUpdateStats {
  std::uint64_t sent = 0;
  std::uint64_t dropped = 0;
};

// One computational update of one node: refresh neighbor colors (latest
// wins), change color only on conflict, then transmit the current color to
// every neighbor regardless. A conflict-free update locks the selection
// distribution onto the surviving color; without that absorption step the
// dynamics never settle. With comm disabled both the refresh and the sends
// are skipped; decisions use the cached last_seen values.
template <typename T>
NodeUpdateStats node_update(ColoringNode& node, NodeBundle<T>& bundle,
                            double b, bool comm_enabled = true) {
  NodeUpdateStats stats;
  if (comm_enabled) {
    for (std::size_t i = 0; i < bundle.recvs.size(); ++i)
      node.last_seen[i] = static_cast<std::uint32_t>(bundle.recvs[i].jump().payload);
  }
  const bool conflict =
      std::any_of(node.last_seen.begin(), node.last_seen.end(),
                  [&](std::uint32_t c) { return c == node.color; });
  if (conflict) {
    node.prob = update_probabilities(node.prob, node.color, b);
    node.color = sample_color(node.prob, node.rng);
  } else {
    std::fill(node.prob.begin(), node.prob.end(), 0.0);
    node.prob[node.color] = 1.0;
  }
  if (comm_enabled) {
    for (auto& send : bundle.sends) {
      ++stats.sent;
      if (send->try_put(static_cast<T>(node.color)) == PutOutcome::Dropped)
        ++stats.dropped;
    }
  }
  return stats;
}

// Number of undirected adjacent pairs sharing a color, each counted once.
inline std::uint64_t count_conflicts(const Topology& topo,
                                     const std::vector<std::uint32_t>& colors) {
  if (colors.size() != topo.node_count)
    throw std::invalid_argument("color map does not cover the topology");
  std::set<std::pair<NodeId, NodeId>> pairs;
  for (const auto& [src, dst] : topo.edges) {
    if (src == dst) continue;
    pairs.emplace(std::min(src, dst), std::max(src, dst));
  }
  std::uint64_t conflicts = 0;
  for (const auto& [a, b] : pairs)
    if (colors[a] == colors[b]) ++conflicts;
  return conflicts;
}

inline std::uint64_t count_conflicts(
    const Topology& topo, const std::vector<std::optional<std::uint32_t>>& colors) {
  std::vector<std::uint32_t> full;
  full.reserve(colors.size());
  for (NodeId id = 0; id < colors.size(); ++id) {
    if (!colors[id])
      throw std::runtime_error("missing color for node " + std::to_string(id));
    full.push_back(*colors[id]);
  }
  return count_conflicts(topo, full);
}

}  // namespace ductwork
