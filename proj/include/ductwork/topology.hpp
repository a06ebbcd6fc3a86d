#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ductwork {

using NodeId = std::uint32_t;

// Directed simulation-element graph: nodes are simulation elements, edges
// are communication channels.
struct Topology {
  NodeId node_count{0};
  std::vector<std::pair<NodeId, NodeId>> edges;  // (src, dst), no duplicates
};

struct CpuSlot {
  int rank{0};
  int thread{0};
  bool operator==(const CpuSlot&) const = default;
  auto operator<=>(const CpuSlot&) const = default;
};

// Total mapping of node id -> (process rank, thread index).
struct Assignment {
  std::vector<CpuSlot> placement;  // indexed by node id
  int num_ranks{1};
  int threads_per_rank{1};
};

// Torus with 4-neighbor (von Neumann) adjacency; node id = y*width + x.
// Directed edges both ways for every adjacent pair.
inline Topology make_toroidal_grid(NodeId width, NodeId height) {
  if (width < 3 || height < 3)
    throw std::invalid_argument("toroidal grid requires width, height >= 3");
  Topology topo;
  topo.node_count = width * height;
  topo.edges.reserve(std::size_t{4} * width * height);
  for (NodeId y = 0; y < height; ++y) {
    for (NodeId x = 0; x < width; ++x) {
      const NodeId id = y * width + x;
      const NodeId right = y * width + (x + 1) % width;
      const NodeId left = y * width + (x + width - 1) % width;
      const NodeId down = ((y + 1) % height) * width + x;
      const NodeId up = ((y + height - 1) % height) * width + x;
      for (NodeId nbr : {left, right, up, down}) topo.edges.emplace_back(id, nbr);
    }
  }
  return topo;
}

inline std::vector<NodeId> out_neighbors(const Topology& topo, NodeId node) {
  std::vector<NodeId> nbrs;
  for (const auto& [src, dst] : topo.edges)
    if (src == node) nbrs.push_back(dst);
  std::sort(nbrs.begin(), nbrs.end());
  return nbrs;
}

// Whitespace-separated `src dst` pairs, one edge per line; `#` comments.
inline Topology load_edge_list(std::istream& in, const std::string& name = "<stream>") {
  Topology topo;
  std::set<std::pair<NodeId, NodeId>> seen;
  std::string line;
  int lineno = 0;
  long long max_id = -1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long long src, dst;
    if (!(ls >> src)) continue;
    if (!(ls >> dst) || src < 0 || dst < 0) {
      throw std::runtime_error(name + ":" + std::to_string(lineno) +
                               ": expected two nonnegative node ids");
    }
    const auto edge = std::make_pair(static_cast<NodeId>(src), static_cast<NodeId>(dst));
    if (seen.insert(edge).second) topo.edges.push_back(edge);
    max_id = std::max({max_id, src, dst});
  }
  topo.node_count = static_cast<NodeId>(max_id + 1);
  return topo;
}

inline Topology load_edge_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open edge list: " + path);
  return load_edge_list(in, path);
}

inline void save_edge_list(const Topology& topo, std::ostream& out) {
  for (const auto& [src, dst] : topo.edges) out << src << ' ' << dst << '\n';
}

inline void save_edge_list(const Topology& topo, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write edge list: " + path);
  save_edge_list(topo, out);
}

// Contiguous blocks of node ids per cpu, row-major over ranks then threads.
inline Assignment assign_striped(const Topology& topo, int num_ranks,
                                 int threads_per_rank, NodeId nodes_per_cpu) {
  if (num_ranks < 1 || threads_per_rank < 1 || nodes_per_cpu < 1)
    throw std::invalid_argument("assign_striped: counts must be positive");
  const std::uint64_t expected =
      std::uint64_t{static_cast<std::uint64_t>(num_ranks)} * threads_per_rank * nodes_per_cpu;
  if (expected != topo.node_count)
    throw std::invalid_argument("assign_striped: node count " +
                                std::to_string(topo.node_count) +
                                " does not equal ranks*threads*nodes_per_cpu");
  Assignment assign;
  assign.num_ranks = num_ranks;
  assign.threads_per_rank = threads_per_rank;
  assign.placement.resize(topo.node_count);
  for (NodeId id = 0; id < topo.node_count; ++id) {
    const NodeId cpu = id / nodes_per_cpu;
    assign.placement[id] = {static_cast<int>(cpu / threads_per_rank),
                            static_cast<int>(cpu % threads_per_rank)};
  }
  return assign;
}

// One `rank thread` pair per node id line.
inline Assignment load_partition(std::istream& in, const Topology& topo,
                                 int num_ranks, int threads_per_rank,
                                 const std::string& name = "<stream>") {
  Assignment assign;
  assign.num_ranks = num_ranks;
  assign.threads_per_rank = threads_per_rank;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    int rank, thread;
    if (!(ls >> rank)) continue;
    if (!(ls >> thread))
      throw std::runtime_error(name + ":" + std::to_string(lineno) +
                               ": expected `rank thread`");
    if (rank < 0 || rank >= num_ranks || thread < 0 || thread >= threads_per_rank)
      throw std::runtime_error(name + ":" + std::to_string(lineno) +
                               ": slot out of range");
    assign.placement.push_back({rank, thread});
  }
  if (assign.placement.size() != topo.node_count)
    throw std::runtime_error(name + ": expected " + std::to_string(topo.node_count) +
                             " placement lines, got " +
                             std::to_string(assign.placement.size()));
  return assign;
}

inline Assignment load_partition(const std::string& path, const Topology& topo,
                                 int num_ranks, int threads_per_rank) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open partition file: " + path);
  return load_partition(in, topo, num_ranks, threads_per_rank, path);
}

}  // namespace ductwork
