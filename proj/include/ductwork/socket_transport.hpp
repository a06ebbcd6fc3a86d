#pragma once

#include <arpa/inet.h>
#include <fcntl.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "ductwork/transport.hpp"

namespace ductwork {

// Rank manifest: one line per process, `<rank> <host>:<port>`, ranks dense
// from 0. `#` starts a comment.
struct RankManifest {
  struct Endpoint {
    std::string host;
    std::uint16_t port;
  };
  std::vector<Endpoint> endpoints;

  int size() const { return static_cast<int>(endpoints.size()); }

  static RankManifest parse(std::istream& in) {
    std::map<int, Endpoint> seen;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      int rank;
      std::string addr;
      if (!(ls >> rank)) continue;  // blank line
      if (!(ls >> addr)) throw std::runtime_error("manifest line " + std::to_string(lineno) + ": missing address");
      const auto colon = addr.rfind(':');
      if (colon == std::string::npos)
        throw std::runtime_error("manifest line " + std::to_string(lineno) + ": expected host:port");
      const int port = std::stoi(addr.substr(colon + 1));
      if (rank < 0 || port <= 0 || port > 65535)
        throw std::runtime_error("manifest line " + std::to_string(lineno) + ": bad rank or port");
      seen[rank] = {addr.substr(0, colon), static_cast<std::uint16_t>(port)};
    }
    RankManifest m;
    for (int r = 0; r < static_cast<int>(seen.size()); ++r) {
      auto it = seen.find(r);
      if (it == seen.end())
        throw std::runtime_error("manifest ranks must be dense from 0; missing rank " + std::to_string(r));
      m.endpoints.push_back(it->second);
    }
    if (m.endpoints.empty()) throw std::runtime_error("empty manifest");
    return m;
  }

  static RankManifest load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open manifest: " + path);
    return parse(in);
  }
};

// Length-prefixed frames over TCP streams: u32 LE frame length, then the
// frame bytes. One stream per ordered (sender, receiver) pair, established
// lazily by the sender. Not internally synchronized; callers serialize.
class SocketTransport final : public TransportAdapter {
 public:
  SocketTransport(RankManifest manifest, int self_rank)
      : manifest_(std::move(manifest)), rank_(self_rank) {
    if (rank_ < 0 || rank_ >= manifest_.size())
      throw std::runtime_error("self rank out of manifest range");
    out_.assign(manifest_.size(), -1);
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    if (listen_fd_ < 0) throw std::runtime_error("socket() failed");
    int one = 1;
    ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_ANY);
    addr.sin_port = htons(manifest_.endpoints[rank_].port);
    if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0)
      throw std::runtime_error("bind failed on port " +
                               std::to_string(manifest_.endpoints[rank_].port));
    if (::listen(listen_fd_, 64) != 0) throw std::runtime_error("listen failed");
    set_nonblocking(listen_fd_);
  }

  ~SocketTransport() override {
    for (int fd : out_)
      if (fd >= 0) ::close(fd);
    for (auto& conn : in_) ::close(conn.fd);
    if (listen_fd_ >= 0) ::close(listen_fd_);
  }

  SocketTransport(const SocketTransport&) = delete;
  SocketTransport& operator=(const SocketTransport&) = delete;

  int rank() const override { return rank_; }
  int world_size() const { return manifest_.size(); }

  // Establishes outgoing streams to all peers, retrying until the deadline.
  // Returns false if any peer stayed unreachable.
  bool connect_all(std::chrono::milliseconds timeout = std::chrono::seconds(10)) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (int peer = 0; peer < manifest_.size(); ++peer) {
      if (peer == rank_) continue;
      while (!ensure_connected(peer)) {
        if (std::chrono::steady_clock::now() >= deadline) return false;
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
      }
    }
    return true;
  }

  bool peer_reachable(int peer) override {
    if (peer == rank_) return true;
    if (peer < 0 || peer >= manifest_.size()) return false;
    return ensure_connected(peer);
  }

  bool send_frame(int dst_rank, std::span<const std::byte> frame) override {
    if (dst_rank == rank_) return false;
    if (!ensure_connected(dst_rank)) return false;
    std::vector<std::byte> wire;
    wire.reserve(4 + frame.size());
    const std::uint32_t len = static_cast<std::uint32_t>(frame.size());
    for (int i = 0; i < 4; ++i)
      wire.push_back(static_cast<std::byte>((len >> (8 * i)) & 0xFF));
    wire.insert(wire.end(), frame.begin(), frame.end());
    if (!send_all(out_[dst_rank], wire)) {
      ::close(out_[dst_rank]);
      out_[dst_rank] = -1;
      return false;
    }
    return true;
  }

  std::vector<std::vector<std::byte>> poll_frames() override {
    accept_pending();
    std::vector<std::vector<std::byte>> frames;
    for (auto it = in_.begin(); it != in_.end();) {
      if (!read_available(*it)) {
        ::close(it->fd);
        it = in_.erase(it);
        continue;
      }
      extract_frames(it->buffer, frames);
      ++it;
    }
    return frames;
  }

 private:
  struct Connection {
    int fd;
    std::vector<std::byte> buffer;
  };

  static void set_nonblocking(int fd) {
    ::fcntl(fd, F_SETFL, ::fcntl(fd, F_GETFL, 0) | O_NONBLOCK);
  }

  bool ensure_connected(int peer) {
    if (out_[peer] >= 0) return true;
    const auto& ep = manifest_.endpoints[peer];
    addrinfo hints{};
    hints.ai_family = AF_INET;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (::getaddrinfo(ep.host.c_str(), std::to_string(ep.port).c_str(), &hints, &res) != 0)
      return false;
    int fd = -1;
    for (addrinfo* ai = res; ai; ai = ai->ai_next) {
      fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, ai->ai_addr, ai->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) return false;
    int one = 1;
    ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    out_[peer] = fd;
    return true;
  }

  static bool send_all(int fd, const std::vector<std::byte>& bytes) {
    std::size_t sent = 0;
    while (sent < bytes.size()) {
      const ssize_t n =
          ::send(fd, bytes.data() + sent, bytes.size() - sent, MSG_NOSIGNAL);
      if (n < 0) {
        if (errno == EINTR) continue;
        return false;
      }
      sent += static_cast<std::size_t>(n);
    }
    return true;
  }

  void accept_pending() {
    for (;;) {
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) break;
      set_nonblocking(fd);
      in_.push_back({fd, {}});
    }
  }

  // Returns false when the peer closed the connection.
  static bool read_available(Connection& conn) {
    std::byte chunk[4096];
    for (;;) {
      const ssize_t n = ::recv(conn.fd, chunk, sizeof(chunk), 0);
      if (n > 0) {
        conn.buffer.insert(conn.buffer.end(), chunk, chunk + n);
        continue;
      }
      if (n == 0) return !conn.buffer.empty();  // keep draining a closed peer
      if (errno == EAGAIN || errno == EWOULDBLOCK || errno == EINTR) return true;
      return false;
    }
  }

  static void extract_frames(std::vector<std::byte>& buffer,
                             std::vector<std::vector<std::byte>>& frames) {
    std::size_t at = 0;
    while (buffer.size() - at >= 4) {
      std::uint32_t len = 0;
      for (int i = 0; i < 4; ++i)
        len |= static_cast<std::uint32_t>(std::to_integer<std::uint8_t>(buffer[at + i]))
               << (8 * i);
      if (len > kMaxFrameBytes) {  // corrupt stream; drop the rest
        at = buffer.size();
        break;
      }
      if (buffer.size() - at - 4 < len) break;
      frames.emplace_back(buffer.begin() + at + 4, buffer.begin() + at + 4 + len);
      at += 4 + len;
    }
    buffer.erase(buffer.begin(), buffer.begin() + at);
  }

  static constexpr std::uint32_t kMaxFrameBytes = 64u << 20;

  RankManifest manifest_;
  int rank_;
  int listen_fd_{-1};
  std::vector<int> out_;         // indexed by peer rank
  std::vector<Connection> in_;   // accepted inbound streams
};

}  // namespace ductwork
