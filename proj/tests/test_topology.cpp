#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "ductwork/topology.hpp"

using namespace ductwork;

TEST_CASE("3x3 torus has 9 nodes, 36 directed edges, out-degree 4") {
  const auto topo = make_toroidal_grid(3, 3);
  CHECK(topo.node_count == 9);
  CHECK(topo.edges.size() == 36);
  for (NodeId id = 0; id < topo.node_count; ++id)
    CHECK(out_neighbors(topo, id).size() == 4);
  // No duplicates, no self-loops.
  std::set<std::pair<NodeId, NodeId>> unique(topo.edges.begin(), topo.edges.end());
  CHECK(unique.size() == topo.edges.size());
  for (const auto& [s, d] : topo.edges) CHECK(s != d);
}

TEST_CASE("4x4 torus wraparound neighbors") {
  const auto topo = make_toroidal_grid(4, 4);
  CHECK(out_neighbors(topo, 0) == std::vector<NodeId>{1, 3, 4, 12});
}

TEST_CASE("tori smaller than 3x3 are rejected") {
  CHECK_THROWS_AS(make_toroidal_grid(2, 2), std::invalid_argument);
  CHECK_THROWS_AS(make_toroidal_grid(3, 2), std::invalid_argument);
}

TEST_CASE("edge list import") {
  SECTION("basic pairs") {
    std::istringstream in("0 1\n1 0\n");
    const auto topo = load_edge_list(in);
    CHECK(topo.node_count == 2);
    CHECK(topo.edges.size() == 2);
  }
  SECTION("comments are ignored") {
    std::istringstream in("# a comment\n0 1\n# another\n1 2\n");
    const auto topo = load_edge_list(in);
    CHECK(topo.node_count == 3);
    CHECK(topo.edges.size() == 2);
  }
  SECTION("negative ids fail with a line number") {
    std::istringstream in("0 1\n1 -2\n");
    CHECK_THROWS_WITH(load_edge_list(in), Catch::Matchers::ContainsSubstring(":2"));
  }
  SECTION("generated torus round-trips through save/load") {
    const auto torus = make_toroidal_grid(4, 5);
    std::stringstream buf;
    save_edge_list(torus, buf);
    const auto loaded = load_edge_list(buf);
    CHECK(loaded.node_count == torus.node_count);
    CHECK(std::set<std::pair<NodeId, NodeId>>(loaded.edges.begin(), loaded.edges.end()) ==
          std::set<std::pair<NodeId, NodeId>>(torus.edges.begin(), torus.edges.end()));
  }
}

TEST_CASE("striped assignment") {
  SECTION("8 nodes over 2 procs x 1 thread") {
    Topology eight;
    eight.node_count = 8;
    const auto assign = assign_striped(eight, 2, 1, 4);
    for (NodeId id = 0; id < 4; ++id) CHECK(assign.placement[id] == CpuSlot{0, 0});
    for (NodeId id = 4; id < 8; ++id) CHECK(assign.placement[id] == CpuSlot{1, 0});
  }
  SECTION("2048 nodes on a single cpu") {
    Topology t;
    t.node_count = 2048;
    const auto assign = assign_striped(t, 1, 1, 2048);
    for (NodeId id = 0; id < t.node_count; ++id)
      CHECK(assign.placement[id] == CpuSlot{0, 0});
  }
  SECTION("count mismatch is a configuration error") {
    Topology nine;
    nine.node_count = 9;
    CHECK_THROWS_AS(assign_striped(nine, 2, 1, 4), std::invalid_argument);
  }
}

TEST_CASE("partition file import") {
  Topology topo;
  topo.node_count = 4;

  SECTION("matches the striped layout when written that way") {
    std::istringstream in("0 0\n0 1\n1 0\n1 1\n");
    const auto loaded = load_partition(in, topo, 2, 2);
    const auto striped = assign_striped(topo, 2, 2, 1);
    CHECK(loaded.placement == striped.placement);
  }
  SECTION("missing final line is a load error") {
    std::istringstream in("0 0\n0 0\n0 0\n");
    CHECK_THROWS(load_partition(in, topo, 1, 1));
  }
  SECTION("everything on one cpu is valid") {
    std::istringstream in("0 0\n0 0\n0 0\n0 0\n");
    const auto loaded = load_partition(in, topo, 1, 1);
    for (const auto& slot : loaded.placement) CHECK(slot == CpuSlot{0, 0});
  }
  SECTION("out-of-range slots are rejected") {
    std::istringstream in("0 0\n0 0\n0 0\n3 0\n");
    CHECK_THROWS(load_partition(in, topo, 2, 2));
  }
}
