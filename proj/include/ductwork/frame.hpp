#pragma once

#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ductwork {

// Wire layout, all integers little-endian:
//   channel_id  u32
//   msg_count   u32   (>= 1)
//   payload_len u32   (bytes per message; fixed schema per channel)
//   payloads    msg_count * payload_len bytes
inline constexpr std::size_t kFrameHeaderBytes = 12;

struct Frame {
  std::uint32_t channel_id{};
  std::uint32_t msg_count{};
  std::uint32_t payload_len{};
  std::vector<std::byte> payloads;  // msg_count * payload_len bytes
};

struct FrameError : std::runtime_error {
  FrameError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (offset " + std::to_string(offset) + ")"),
        offset(offset) {}
  std::size_t offset;
};

namespace detail {

inline void put_u32le(std::vector<std::byte>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i)
    out.push_back(static_cast<std::byte>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32le(std::span<const std::byte> in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(in[at + i]))
         << (8 * i);
  return v;
}

}  // namespace detail

inline std::vector<std::byte> frame_encode(
    std::uint32_t channel_id, const std::vector<std::vector<std::byte>>& payloads) {
  if (payloads.empty()) throw FrameError("frame requires at least one payload", 0);
  const std::size_t width = payloads.front().size();
  for (const auto& p : payloads) {
    if (p.size() != width)
      throw FrameError("heterogeneous payload widths", kFrameHeaderBytes);
  }
  std::vector<std::byte> out;
  out.reserve(kFrameHeaderBytes + payloads.size() * width);
  detail::put_u32le(out, channel_id);
  detail::put_u32le(out, static_cast<std::uint32_t>(payloads.size()));
  detail::put_u32le(out, static_cast<std::uint32_t>(width));
  for (const auto& p : payloads) out.insert(out.end(), p.begin(), p.end());
  return out;
}

inline std::vector<std::byte> frame_encode_blob(std::uint32_t channel_id,
                                                std::span<const std::byte> blob) {
  std::vector<std::byte> out;
  out.reserve(kFrameHeaderBytes + blob.size());
  detail::put_u32le(out, channel_id);
  detail::put_u32le(out, 1);
  detail::put_u32le(out, static_cast<std::uint32_t>(blob.size()));
  out.insert(out.end(), blob.begin(), blob.end());
  return out;
}

inline Frame frame_decode(std::span<const std::byte> bytes) {
  if (bytes.size() < kFrameHeaderBytes)
    throw FrameError("header incomplete", bytes.size());
  Frame frame;
  frame.channel_id = detail::get_u32le(bytes, 0);
  frame.msg_count = detail::get_u32le(bytes, 4);
  frame.payload_len = detail::get_u32le(bytes, 8);
  if (frame.msg_count == 0) throw FrameError("msg_count must be >= 1", 4);
  const std::uint64_t body =
      std::uint64_t{frame.msg_count} * frame.payload_len;
  if (bytes.size() != kFrameHeaderBytes + body)
    throw FrameError("length mismatch", kFrameHeaderBytes);
  frame.payloads.assign(bytes.begin() + kFrameHeaderBytes, bytes.end());
  return frame;
}

// Splits a decoded frame's payload region back into individual messages.
inline std::vector<std::vector<std::byte>> frame_payload_list(const Frame& frame) {
  std::vector<std::vector<std::byte>> out;
  out.reserve(frame.msg_count);
  for (std::uint32_t i = 0; i < frame.msg_count; ++i) {
    const auto* begin = frame.payloads.data() +
                        static_cast<std::size_t>(i) * frame.payload_len;
    out.emplace_back(begin, begin + frame.payload_len);
  }
  return out;
}

// Fixed-width payload helpers for trivially copyable message types.
template <typename T>
std::vector<std::byte> to_bytes(const T& value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::vector<std::byte> out(sizeof(T));
  std::memcpy(out.data(), &value, sizeof(T));
  return out;
}

template <typename T>
T from_bytes(std::span<const std::byte> bytes) {
  static_assert(std::is_trivially_copyable_v<T>);
  if (bytes.size() != sizeof(T))
    throw FrameError("payload width does not match message type", 0);
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace ductwork
