#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

#include "ductwork/frame.hpp"
#include "ductwork/socket_transport.hpp"
#include "ductwork/transport.hpp"
#include "test_util.hpp"

using namespace ductwork;

namespace {

std::vector<std::byte> make_frame(std::uint32_t channel, std::uint32_t value) {
  return frame_encode(channel, {to_bytes(value)});
}

void roundtrip_suite(TransportAdapter& a, TransportAdapter& b) {
  SECTION("send then poll returns the same bytes") {
    const auto frame = make_frame(1, 0xDEADBEEF);
    REQUIRE(a.send_frame(b.rank(), frame));
    std::vector<std::vector<std::byte>> got;
    for (int i = 0; i < 1000 && got.empty(); ++i) got = b.poll_frames();
    REQUIRE(got.size() == 1);
    CHECK(got[0] == frame);
  }

  SECTION("poll with nothing pending is empty and non-blocking") {
    CHECK(b.poll_frames().empty());
  }

  SECTION("1000 frames arrive complete and in order") {
    for (std::uint32_t i = 0; i < 1000; ++i)
      REQUIRE(a.send_frame(b.rank(), make_frame(2, i)));
    std::vector<std::vector<std::byte>> got;
    for (int spins = 0; spins < 100000 && got.size() < 1000; ++spins) {
      auto more = b.poll_frames();
      got.insert(got.end(), more.begin(), more.end());
    }
    REQUIRE(got.size() == 1000);
    for (std::uint32_t i = 0; i < 1000; ++i) {
      const auto frame = frame_decode(got[i]);
      CHECK(from_bytes<std::uint32_t>(frame.payloads) == i);
    }
  }
}

}  // namespace

TEST_CASE("loopback adapters exchange frames") {
  LoopbackNetwork net;
  auto a = net.adapter(0);
  auto b = net.adapter(1);
  roundtrip_suite(*a, *b);
}

TEST_CASE("loopback delivery to an unknown rank fails") {
  LoopbackNetwork net;
  auto a = net.adapter(0);
  CHECK_FALSE(a->send_frame(42, make_frame(1, 1)));
  CHECK_FALSE(a->peer_reachable(42));
  CHECK(a->peer_reachable(0));
}

TEST_CASE("socket adapters exchange frames") {
  std::ostringstream manifest_text;
  manifest_text << "0 127.0.0.1:" << testutil::free_port() << "\n"
                << "1 127.0.0.1:" << testutil::free_port() << "\n";
  std::istringstream in(manifest_text.str());
  const auto manifest = RankManifest::parse(in);

  SocketTransport a(manifest, 0);
  SocketTransport b(manifest, 1);
  REQUIRE(a.connect_all());
  REQUIRE(b.connect_all());
  roundtrip_suite(a, b);
}

TEST_CASE("socket send to an unreachable peer reports failure") {
  std::ostringstream manifest_text;
  manifest_text << "0 127.0.0.1:" << testutil::free_port() << "\n"
                << "1 127.0.0.1:" << testutil::free_port() << "\n";
  std::istringstream in(manifest_text.str());
  const auto manifest = RankManifest::parse(in);

  SocketTransport a(manifest, 0);  // rank 1 never starts
  CHECK_FALSE(a.send_frame(1, make_frame(1, 1)));
  CHECK_FALSE(a.peer_reachable(1));
}

TEST_CASE("manifest parsing validates its input") {
  SECTION("comments and blank lines are ignored") {
    std::istringstream in("# hello\n0 localhost:9000\n\n1 localhost:9001\n");
    const auto m = RankManifest::parse(in);
    REQUIRE(m.size() == 2);
    CHECK(m.endpoints[1].port == 9001);
  }
  SECTION("ranks must be dense from zero") {
    std::istringstream in("0 a:1\n2 b:2\n");
    CHECK_THROWS(RankManifest::parse(in));
  }
  SECTION("missing port is an error") {
    std::istringstream in("0 justahost\n");
    CHECK_THROWS(RankManifest::parse(in));
  }
}
