#pragma once

#include <cstdint>
#include <type_traits>

namespace ductwork {

// Outcome of a send attempt. Drops are legal under best-effort semantics
// and are always counted.
enum class PutOutcome : std::uint8_t {
  Accepted,
  Dropped,
  Closed,
};

template <typename T>
struct Message {
  static_assert(std::is_trivially_copyable_v<T>,
                "channel payloads must be trivially copyable");
  std::uint64_t seq{};
  T payload{};
};

// Result of a non-blocking read. When fresh is false the payload is the
// last-received value (or the channel's initial default) and skipped is 0.
template <typename T>
struct ReadResult {
  T payload{};
  bool fresh{false};
  std::uint64_t skipped{0};
};

}  // namespace ductwork
