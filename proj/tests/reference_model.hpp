#pragma once

#include <cstdint>
#include <vector>

#include "ductwork/message.hpp"

namespace testutil {

// Single-threaded reference semantics for one channel: an unbounded list
// of accepted payloads, a read cursor, and a capacity check. Independent
// of the duct implementations under test.
struct ModelChannel {
  std::size_t capacity;
  std::uint64_t last;
  std::vector<std::uint64_t> accepted;
  std::size_t cursor = 0;
  std::uint64_t puts_attempted = 0;
  std::uint64_t puts_dropped = 0;
  std::uint64_t reads_fresh = 0;
  std::uint64_t reads_stale = 0;

  ModelChannel(std::size_t capacity, std::uint64_t initial)
      : capacity(capacity), last(initial) {}

  std::size_t backlog() const { return accepted.size() - cursor; }

  ductwork::PutOutcome try_put(std::uint64_t payload) {
    ++puts_attempted;
    if (backlog() >= capacity) {
      ++puts_dropped;
      return ductwork::PutOutcome::Dropped;
    }
    accepted.push_back(payload);
    return ductwork::PutOutcome::Accepted;
  }

  ductwork::ReadResult<std::uint64_t> try_step() {
    if (cursor < accepted.size()) {
      last = accepted[cursor++];
      ++reads_fresh;
      return {last, true, 0};
    }
    ++reads_stale;
    return {last, false, 0};
  }

  ductwork::ReadResult<std::uint64_t> jump() {
    const std::size_t pending = backlog();
    if (pending == 0) {
      ++reads_stale;
      return {last, false, 0};
    }
    last = accepted.back();
    cursor = accepted.size();
    ++reads_fresh;
    return {last, true, pending - 1};
  }
};

}  // namespace testutil
