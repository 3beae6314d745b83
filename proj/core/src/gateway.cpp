// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#include "vitalwire/gateway.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/evp.h>
#include <openssl/rand.h>

#include <array>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <sstream>

namespace vitalwire::gateway {
namespace {

constexpr std::uint32_t kMinDebounceMs = 900;

class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket() { reset(); }
  Socket(Socket&& other) noexcept : fd_(other.fd_) { other.fd_ = -1; }
  Socket& operator=(Socket&& other) noexcept {
    if (this != &other) {
      reset();
      fd_ = other.fd_;
      other.fd_ = -1;
    }
    return *this;
  }
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int fd = fd_;
    fd_ = -1;
    return fd;
  }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

sockaddr_in make_addr(const std::string& host, std::uint16_t port) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(port);
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    throw Error("not an IPv4 address: " + host);
  }
  return addr;
}

bool send_all(int fd, std::span<const std::uint8_t> data) {
  std::size_t sent = 0;
  while (sent < data.size()) {
    const ssize_t n =
        ::send(fd, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
    if (n <= 0) return false;
    sent += static_cast<std::size_t>(n);
  }
  return true;
}

std::string to_hex(std::span<const unsigned char> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (unsigned char b : bytes) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

std::string random_salt() {
  std::array<unsigned char, 16> salt;
  if (RAND_bytes(salt.data(), salt.size()) != 1) {
    throw Error("random generator failure");
  }
  return to_hex(salt);
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(line);
  while (std::getline(in, part, delim)) parts.push_back(part);
  if (!line.empty() && line.back() == delim) parts.emplace_back();
  return parts;
}

}  // namespace

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest;
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(),
                 nullptr) != 1) {
    throw Error("sha256 failure");
  }
  return to_hex({digest.data(), len});
}

Chunker::Chunker(std::size_t chunk_size) : chunk_size_(chunk_size) {
  if (chunk_size_ < 1) throw std::invalid_argument("chunk_size must be >= 1");
}

std::vector<std::vector<std::uint8_t>> Chunker::push(
    std::span<const std::uint8_t> data) {
  std::vector<std::vector<std::uint8_t>> chunks;
  pending_.insert(pending_.end(), data.begin(), data.end());
  std::size_t offset = 0;
  while (pending_.size() - offset >= chunk_size_) {
    chunks.emplace_back(pending_.begin() + offset,
                        pending_.begin() + offset + chunk_size_);
    offset += chunk_size_;
  }
  pending_.erase(pending_.begin(), pending_.begin() + offset);
  return chunks;
}

std::optional<std::vector<std::uint8_t>> Chunker::finish() {
  if (pending_.empty()) return std::nullopt;
  std::vector<std::uint8_t> rest;
  rest.swap(pending_);
  return rest;
}

ForwarderStats forward_buffer(
    std::span<const std::uint8_t> data, std::size_t chunk_size,
    const std::function<void(std::span<const std::uint8_t>)>& sink) {
  Chunker chunker(chunk_size);
  ForwarderStats stats;
  stats.bytes_in = data.size();
  for (const auto& chunk : chunker.push(data)) {
    if (sink) sink(chunk);
    ++stats.full_chunks;
  }
  if (auto rest = chunker.finish()) {
    if (sink) sink(*rest);
    stats.partial_chunk_bytes = rest->size();
  }
  return stats;
}

ChunkForwarder::ChunkForwarder(const ForwarderConfig& config)
    : config_(config) {
  if (config_.chunk_size < 1) {
    throw std::invalid_argument("chunk_size must be >= 1");
  }
  Socket sock(::socket(AF_INET, SOCK_STREAM, 0));
  if (!sock.valid()) throw BindError("socket: " + std::string(strerror(errno)));
  const int one = 1;
  ::setsockopt(sock.fd(), SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr = make_addr(config_.listen_host, config_.listen_port);
  if (::bind(sock.fd(), reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) !=
      0) {
    throw BindError("bind " + config_.listen_host + ":" +
                    std::to_string(config_.listen_port) + ": " +
                    strerror(errno));
  }
  if (::listen(sock.fd(), 1) != 0) {
    throw BindError("listen: " + std::string(strerror(errno)));
  }
  socklen_t len = sizeof(addr);
  ::getsockname(sock.fd(), reinterpret_cast<sockaddr*>(&addr), &len);
  listen_port_ = ntohs(addr.sin_port);
  listen_fd_ = sock.release();
}

ChunkForwarder::~ChunkForwarder() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

ForwarderStats ChunkForwarder::run_once() {
  Socket upstream(::accept(listen_fd_, nullptr, nullptr));
  if (!upstream.valid()) {
    throw Error("accept: " + std::string(strerror(errno)));
  }

  Socket downstream(::socket(AF_INET, SOCK_STREAM, 0));
  if (!downstream.valid()) {
    throw DownstreamUnreachable("socket: " + std::string(strerror(errno)));
  }
  sockaddr_in addr =
      make_addr(config_.downstream_host, config_.downstream_port);
  if (::connect(downstream.fd(), reinterpret_cast<sockaddr*>(&addr),
                sizeof(addr)) != 0) {
    throw DownstreamUnreachable("connect " + config_.downstream_host + ":" +
                                std::to_string(config_.downstream_port) +
                                ": " + strerror(errno));
  }

  ForwarderStats stats;
  Chunker chunker(config_.chunk_size);
  std::array<std::uint8_t, 4096> buf;
  for (;;) {
    const ssize_t n = ::recv(upstream.fd(), buf.data(), buf.size(), 0);
    if (n == 0) break;  // clean end of stream
    if (n < 0) {
      stats.midstream_disconnect = true;  // flush what we have and stop
      break;
    }
    stats.bytes_in += static_cast<std::uint64_t>(n);
    for (const auto& chunk :
         chunker.push({buf.data(), static_cast<std::size_t>(n)})) {
      if (!send_all(downstream.fd(), chunk)) {
        throw MidStreamDisconnect("downstream went away mid-stream");
      }
      ++stats.full_chunks;
    }
  }
  if (auto rest = chunker.finish()) {
    if (!send_all(downstream.fd(), *rest)) {
      throw MidStreamDisconnect("downstream went away at flush");
    }
    stats.partial_chunk_bytes = rest->size();
  }
  return stats;
}

std::string_view to_string(AccessAction action) {
  switch (action) {
    case AccessAction::Unlock:
      return "Unlock";
    case AccessAction::PromptPassword:
      return "PromptPassword";
    case AccessAction::Lock:
      return "Lock";
    case AccessAction::Ignore:
      return "Ignore";
    case AccessAction::Deny:
      return "Deny";
  }
  return "?";
}

std::string_view to_string(SessionState state) {
  switch (state) {
    case SessionState::Locked:
      return "Locked";
    case SessionState::AwaitingPassword:
      return "AwaitingPassword";
    case SessionState::Unlocked:
      return "Unlocked";
  }
  return "?";
}

AccessSession::AccessSession(std::uint32_t debounce_ms)
    : debounce_ms_(std::max(debounce_ms, kMinDebounceMs)) {}

void AccessSession::enroll(const std::string& badge_id, AccessMode mode,
                           std::string_view password) {
  if (badge_id.empty() || badge_id.find('|') != std::string::npos) {
    throw std::invalid_argument("badge id must be non-empty without '|'");
  }
  EnrolledBadge badge;
  badge.mode = mode;
  if (mode == AccessMode::Strong) {
    if (password.empty()) {
      throw std::invalid_argument("strong enrollment needs a password");
    }
    badge.salt = random_salt();
    badge.password_hash = sha256_hex(badge.salt + std::string(password));
  }
  enrolled_[badge_id] = std::move(badge);
}

bool AccessSession::password_matches(const EnrolledBadge& badge,
                                     std::string_view password) const {
  return sha256_hex(badge.salt + std::string(password)) ==
         badge.password_hash;
}

AccessAction AccessSession::handle_badge(const std::string& badge_id,
                                         std::uint64_t now_ms) {
  // ValidDataTime debounce: the reader holds a badge's data after a read,
  // anchored at the last non-ignored read of that badge.
  if (last_read_ && last_read_->first == badge_id &&
      now_ms - last_read_->second < debounce_ms_) {
    return AccessAction::Ignore;
  }

  AccessAction action = AccessAction::Ignore;
  const auto it = enrolled_.find(badge_id);
  switch (state_) {
    case SessionState::Locked:
      if (it == enrolled_.end()) {
        action = AccessAction::Deny;
      } else if (it->second.mode == AccessMode::Simple) {
        state_ = SessionState::Unlocked;
        current_user_ = badge_id;
        action = AccessAction::Unlock;
      } else {
        state_ = SessionState::AwaitingPassword;
        pending_badge_ = badge_id;
        action = AccessAction::PromptPassword;
      }
      break;
    case SessionState::AwaitingPassword:
      // The prompt must be resolved by a password; badge reads are ignored.
      action = AccessAction::Ignore;
      break;
    case SessionState::Unlocked:
      if (current_user_ && *current_user_ == badge_id) {
        // Second read of the current user's badge simulates walking away.
        state_ = SessionState::Locked;
        current_user_.reset();
        action = AccessAction::Lock;
      } else {
        action = AccessAction::Ignore;
      }
      break;
  }

  if (action != AccessAction::Ignore) last_read_ = {badge_id, now_ms};
  return action;
}

AccessAction AccessSession::handle_password(const std::string& badge_id,
                                            std::string_view password) {
  if (state_ != SessionState::AwaitingPassword || !pending_badge_ ||
      *pending_badge_ != badge_id) {
    throw OutOfOrder("no password prompt pending for " + badge_id);
  }
  const EnrolledBadge& badge = enrolled_.at(badge_id);
  pending_badge_.reset();
  if (password_matches(badge, password)) {
    state_ = SessionState::Unlocked;
    current_user_ = badge_id;
    return AccessAction::Unlock;
  }
  state_ = SessionState::Locked;
  return AccessAction::Deny;
}

void AccessSession::save_db(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write access db: " + path.string());
  for (const auto& [id, badge] : enrolled_) {
    out << id << '|' << badge.salt << '|' << badge.password_hash << '|'
        << (badge.mode == AccessMode::Strong ? "strong" : "simple") << '\n';
  }
}

void AccessSession::load_db(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read access db: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> parts = split(line, '|');
    if (parts.size() != 4 || parts[0].empty() ||
        (parts[3] != "simple" && parts[3] != "strong")) {
      throw Error("access db: bad record at line " + std::to_string(lineno));
    }
    EnrolledBadge badge;
    badge.mode =
        parts[3] == "strong" ? AccessMode::Strong : AccessMode::Simple;
    badge.salt = parts[1];
    badge.password_hash = parts[2];
    if (badge.mode == AccessMode::Strong &&
        (badge.salt.empty() || badge.password_hash.empty())) {
      throw Error("access db: strong badge without hash at line " +
                  std::to_string(lineno));
    }
    enrolled_[parts[0]] = std::move(badge);
  }
}

}  // namespace vitalwire::gateway
