#include <catch2/catch_amalgamated.hpp>

#include <memory>
#include <random>

#include "ductwork/channel.hpp"
#include "ductwork/consolidation.hpp"
#include "ductwork/hub.hpp"
#include "ductwork/transport.hpp"

using namespace ductwork;

namespace {

struct PairedHubs {
  LoopbackNetwork net;
  TransportHub sender;
  TransportHub receiver;
  PairedHubs()
      : sender(net.adapter(0), 2), receiver(net.adapter(1), 2) {}
};

// Receiver-side member channels fed by a pool route.
struct PoolFixture {
  PairedHubs hubs;
  Pool<std::uint32_t> pool;
  std::vector<std::unique_ptr<Channel<std::uint32_t>>> channels;

  explicit PoolFixture(std::size_t members)
      : pool(&hubs.sender, 1, pool_channel_id(0, 1), members) {
    std::vector<std::uint32_t> ids;
    for (std::size_t i = 0; i < members; ++i) {
      const auto id = static_cast<std::uint32_t>(100 + i);
      ids.push_back(id);
      channels.push_back(std::make_unique<Channel<std::uint32_t>>(
          0, hubs.receiver.make_duct<std::uint32_t>(id, 0)));
    }
    register_pool_route<std::uint32_t>(hubs.receiver, pool_channel_id(0, 1), ids);
  }
};

}  // namespace

TEST_CASE("pool dispatches once every slot is filled") {
  PoolFixture fx(3);
  CHECK(fx.pool.put(0, 10) == PutOutcome::Accepted);
  CHECK(fx.pool.put(1, 11) == PutOutcome::Accepted);
  CHECK(fx.pool.epoch() == 0);
  CHECK(fx.pool.frames_sent() == 0);
  CHECK(fx.pool.put(2, 12) == PutOutcome::Accepted);
  CHECK(fx.pool.epoch() == 1);
  CHECK(fx.pool.frames_sent() == 1);

  for (std::size_t i = 0; i < 3; ++i) {
    const auto r = fx.channels[i]->outlet().try_step();
    REQUIRE(r.fresh);
    CHECK(r.payload == 10 + i);
  }
}

TEST_CASE("a pool of one dispatches on every put") {
  PoolFixture fx(1);
  for (std::uint32_t v = 0; v < 5; ++v) fx.pool.put(0, v);
  CHECK(fx.pool.epoch() == 5);
  CHECK(fx.pool.frames_sent() == 5);
}

TEST_CASE("double-filling a slot ships the newer payload and counts a drop") {
  PoolFixture fx(2);
  CHECK(fx.pool.put(0, 1) == PutOutcome::Accepted);
  CHECK(fx.pool.put(0, 2) == PutOutcome::Dropped);
  CHECK(fx.pool.slot_drops() == 1);
  fx.pool.put(1, 3);
  const auto r = fx.channels[0]->outlet().try_step();
  REQUIRE(r.fresh);
  CHECK(r.payload == 2);
}

TEST_CASE("invalid pool member index is a usage error") {
  PoolFixture fx(2);
  CHECK_THROWS_AS(fx.pool.put(5, 1), std::out_of_range);
}

TEST_CASE("a count-mismatched frame is a routing error, not a delivery") {
  PoolFixture fx(3);
  // Hand-craft a 2-payload frame against the 3-member pool.
  const auto bad = frame_encode(
      pool_channel_id(0, 1),
      {to_bytes<std::uint32_t>(1), to_bytes<std::uint32_t>(2)});
  fx.hubs.sender.send(1, bad);
  fx.hubs.receiver.pump();
  for (auto& ch : fx.channels) CHECK_FALSE(ch->outlet().try_step().fresh);
}

TEST_CASE("randomized pool epochs deliver member-wise") {
  std::mt19937_64 rng(5150);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t members = 1 + rng() % 16;
    PoolFixture fx(members);
    for (int epoch = 0; epoch < 10; ++epoch) {
      std::vector<std::uint32_t> sent(members);
      for (std::size_t m = 0; m < members; ++m) {
        sent[m] = static_cast<std::uint32_t>(rng());
        fx.pool.put(m, sent[m]);
      }
      for (std::size_t m = 0; m < members; ++m) {
        const auto r = fx.channels[m]->outlet().try_step();
        REQUIRE(r.fresh);
        REQUIRE(r.payload == sent[m]);
      }
    }
    REQUIRE(fx.pool.frames_sent() == 10);
  }
}

namespace {

struct AggFixture {
  PairedHubs hubs;
  Aggregator<std::uint32_t> agg;
  std::vector<std::unique_ptr<Channel<std::uint32_t>>> channels;

  explicit AggFixture(std::size_t members)
      : agg(&hubs.sender, 1, 0xE1000000u, members) {
    std::vector<std::uint32_t> ids;
    for (std::size_t i = 0; i < members; ++i) {
      const auto id = static_cast<std::uint32_t>(200 + i);
      ids.push_back(id);
      channels.push_back(std::make_unique<Channel<std::uint32_t>>(
          0, hubs.receiver.make_duct<std::uint32_t>(id, 0)));
    }
    register_aggregation_route<std::uint32_t>(hubs.receiver, 0xE1000000u, ids);
  }
};

}  // namespace

TEST_CASE("aggregation packs all pending members into one frame") {
  AggFixture fx(3);
  fx.agg.push(0, 1);
  fx.agg.push(0, 2);
  for (std::uint32_t v = 10; v < 15; ++v) fx.agg.push(2, v);
  CHECK(fx.agg.flush() == 1);

  std::vector<std::uint32_t> member0, member2;
  for (;;) {
    const auto r = fx.channels[0]->outlet().try_step();
    if (!r.fresh) break;
    member0.push_back(r.payload);
  }
  for (;;) {
    const auto r = fx.channels[2]->outlet().try_step();
    if (!r.fresh) break;
    member2.push_back(r.payload);
  }
  CHECK(member0 == std::vector<std::uint32_t>{1, 2});
  CHECK(member2 == std::vector<std::uint32_t>{10, 11, 12, 13, 14});
  CHECK_FALSE(fx.channels[1]->outlet().try_step().fresh);
}

TEST_CASE("flushing an empty aggregator sends nothing") {
  AggFixture fx(4);
  CHECK(fx.agg.flush() == 0);
}

TEST_CASE("aggregation preserves per-member order and multiplicity") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t members = 1 + rng() % 8;
    AggFixture fx(members);
    std::vector<std::vector<std::uint32_t>> sent(members);
    for (std::size_t m = 0; m < members; ++m) {
      const std::size_t n = rng() % 6;
      for (std::size_t i = 0; i < n; ++i) {
        sent[m].push_back(static_cast<std::uint32_t>(rng()));
        fx.agg.push(m, sent[m].back());
      }
    }
    fx.agg.flush();
    for (std::size_t m = 0; m < members; ++m) {
      std::vector<std::uint32_t> got;
      for (;;) {
        const auto r = fx.channels[m]->outlet().try_step();
        if (!r.fresh) break;
        got.push_back(r.payload);
      }
      REQUIRE(got == sent[m]);
    }
  }
}
