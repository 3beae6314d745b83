// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vitalwire/error.hpp"

// Stream transport glue (fixed-size chunk forwarding over TCP) and the
// badge-driven lock/unlock session state machine.

namespace vitalwire::gateway {

struct BindError final : Error {
  using Error::Error;
};
struct DownstreamUnreachable final : Error {
  using Error::Error;
};
struct MidStreamDisconnect final : Error {
  using Error::Error;
};
struct OutOfOrder final : Error {
  using Error::Error;
};

/// Regroups an arbitrary byte stream into fixed-size chunks. The
/// concatenation of all emitted chunks plus the finish() remainder always
/// equals the input, whatever the push() boundaries were.
class Chunker {
 public:
  explicit Chunker(std::size_t chunk_size);

  std::vector<std::vector<std::uint8_t>> push(
      std::span<const std::uint8_t> data);

  /// Remaining partial chunk at end of stream, if any.
  std::optional<std::vector<std::uint8_t>> finish();

  std::size_t chunk_size() const { return chunk_size_; }

 private:
  std::size_t chunk_size_;
  std::vector<std::uint8_t> pending_;
};

struct ForwarderConfig {
  std::string listen_host = "127.0.0.1";
  std::uint16_t listen_port = 0;  // 0 = pick an ephemeral port
  std::string downstream_host = "127.0.0.1";
  std::uint16_t downstream_port = 9999;
  std::size_t chunk_size = 143;
};

struct ForwarderStats {
  std::uint64_t bytes_in = 0;
  std::uint64_t full_chunks = 0;
  std::uint64_t partial_chunk_bytes = 0;  // flushed on EOF, 0 on a boundary
  bool midstream_disconnect = false;
};

/// Accepts one upstream TCP connection at a time and forwards its bytes
/// downstream in chunk_size units; the final partial chunk is flushed when
/// the upstream closes. One instance per listening port.
class ChunkForwarder {
 public:
  explicit ChunkForwarder(const ForwarderConfig& config);  // binds, BindError
  ~ChunkForwarder();

  ChunkForwarder(const ChunkForwarder&) = delete;
  ChunkForwarder& operator=(const ChunkForwarder&) = delete;

  std::uint16_t listen_port() const { return listen_port_; }

  /// Serves exactly one upstream connection to completion.
  /// DownstreamUnreachable when the downstream endpoint cannot be reached;
  /// an upstream reset mid-stream flushes the partial chunk and is reported
  /// in the stats rather than thrown.
  ForwarderStats run_once();

 private:
  ForwarderConfig config_;
  int listen_fd_ = -1;
  std::uint16_t listen_port_ = 0;
};

/// Chunks a pre-recorded stream through a sink callback; the socket-free
/// core of the forwarder, also used by the CLI dry-run path.
ForwarderStats forward_buffer(
    std::span<const std::uint8_t> data, std::size_t chunk_size,
    const std::function<void(std::span<const std::uint8_t>)>& sink);

enum class AccessMode : std::uint8_t { Simple, Strong };
enum class AccessAction : std::uint8_t {
  Unlock,
  PromptPassword,
  Lock,
  Ignore,
  Deny,
};
enum class SessionState : std::uint8_t { Locked, AwaitingPassword, Unlocked };

std::string_view to_string(AccessAction action);
std::string_view to_string(SessionState state);

/// Badge-driven lock/unlock state machine.
///
/// Reads of the same badge within the debounce window of its last
/// non-ignored read are ignored (the reader's ValidDataTime behavior,
/// minimum 900 ms). A Simple badge unlocks directly; a Strong badge prompts
/// for its password first. Re-presenting the current user's badge while
/// unlocked locks instantly (the proximity-loss simulation); any other
/// badge is ignored while unlocked. Passwords are stored as salted SHA-256
/// hashes, never in clear. Event-serialized, single-threaded.
class AccessSession {
 public:
  explicit AccessSession(std::uint32_t debounce_ms = 900);

  /// Registers a badge. Strong mode requires a non-empty password.
  void enroll(const std::string& badge_id, AccessMode mode,
              std::string_view password = {});

  AccessAction handle_badge(const std::string& badge_id, std::uint64_t now_ms);

  /// Resolves a pending password prompt. Throws OutOfOrder when no prompt
  /// is pending for this badge.
  AccessAction handle_password(const std::string& badge_id,
                               std::string_view password);

  SessionState state() const { return state_; }
  const std::optional<std::string>& current_user() const {
    return current_user_;
  }
  bool is_enrolled(const std::string& badge_id) const {
    return enrolled_.count(badge_id) != 0;
  }
  std::uint32_t debounce_ms() const { return debounce_ms_; }

  /// Enrollment file, one `badge_id|salt|hash|mode` line per badge.
  void save_db(const std::filesystem::path& path) const;
  void load_db(const std::filesystem::path& path);

 private:
  struct EnrolledBadge {
    AccessMode mode = AccessMode::Simple;
    std::string salt;           // hex, empty for Simple
    std::string password_hash;  // hex sha256(salt || password)
  };

  bool password_matches(const EnrolledBadge& badge,
                        std::string_view password) const;

  std::uint32_t debounce_ms_;
  SessionState state_ = SessionState::Locked;
  std::map<std::string, EnrolledBadge> enrolled_;
  std::optional<std::string> current_user_;
  std::optional<std::string> pending_badge_;
  std::optional<std::pair<std::string, std::uint64_t>> last_read_;
};

/// Hex-encoded SHA-256, exposed for the enrollment tooling.
std::string sha256_hex(std::string_view data);

}  // namespace vitalwire::gateway
