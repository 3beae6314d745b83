// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vitalwire/error.hpp"

// Alive Heart Monitor wire protocol: bit-exact packet codec and a
// resynchronizing stream parser. Byte layout is documented in
// docs/wire-format.md and pinned by the fixtures under fixtures/wire/.

namespace vitalwire::wire {

inline constexpr std::uint8_t kSync0 = 0x00;
inline constexpr std::uint8_t kSync1 = 0xFE;
inline constexpr std::uint8_t kEcgBlockId = 0xAA;
inline constexpr std::uint8_t kAccBlockId = 0x56;

inline constexpr std::size_t kPacketHeaderSize = 6;
inline constexpr std::size_t kBlockHeaderSize = 5;
// Header + two block headers + checksum; a frame is 17 + m + n bytes total.
inline constexpr std::size_t kMinFrameSize = 17;

inline constexpr std::uint16_t kSequenceModulus = 4096;  // 12-bit counter
inline constexpr std::uint8_t kBatteryRawMax = 200;      // 200 = 100 %

struct BadSync final : Error {
  using Error::Error;
};
struct Truncated final : Error {
  using Error::Error;
};
struct UnknownBlockId final : Error {
  using Error::Error;
};
struct BadFormatCode final : Error {
  using Error::Error;
};
struct Overflow final : Error {
  using Error::Error;
};

enum class EcgFormat : std::uint8_t {
  F150 = 0x01,  // 150 samples/s
  F300 = 0x02,  // 300 samples/s
};

enum class AccFormat : std::uint8_t {
  F75 = 0x00,  // 75 samples/s per axis, interleaved X,Y,Z
};

double sample_rate_hz(EcgFormat format);
double sample_rate_hz(AccFormat format);

struct PacketHeader {
  std::uint8_t battery_raw = 0;      // 0..200, 200 = 100 %
  std::uint16_t sequence = 0;        // 12-bit, wraps 4095 -> 0
  bool event_flag = false;           // status bit 12
  std::uint8_t reserved_status = 0;  // status bits 13-15, kept verbatim
  std::uint8_t num_blocks = 2;

  double battery_percent() const { return battery_raw / 2.0; }

  bool operator==(const PacketHeader&) const = default;
};

struct EcgBlock {
  EcgFormat format = EcgFormat::F300;
  std::vector<std::uint8_t> samples;

  bool operator==(const EcgBlock&) const = default;
};

struct AccBlock {
  AccFormat format = AccFormat::F75;
  std::vector<std::uint8_t> samples;  // interleaved X1 Y1 Z1 X2 Y2 Z2 ...

  bool operator==(const AccBlock&) const = default;
};

struct AlivePacket {
  PacketHeader header;
  EcgBlock ecg;
  AccBlock acc;
  bool checksum_ok = true;

  std::size_t encoded_size() const {
    return kMinFrameSize + ecg.samples.size() + acc.samples.size();
  }

  bool operator==(const AlivePacket&) const = default;
};

/// Serializes a packet into a (17 + m + n)-byte frame with a valid checksum.
/// Throws Overflow when a block length field would exceed 16 bits and
/// std::invalid_argument when a field invariant is violated.
std::vector<std::uint8_t> encode_packet(const AlivePacket& packet);

/// Decodes one frame starting at bytes[0]; trailing bytes are ignored.
/// checksum_ok reflects verification, it is never an error by itself.
AlivePacket decode_packet(std::span<const std::uint8_t> bytes);

/// True iff the sum of all bytes except the last, mod 256, equals the last
/// byte. Throws Truncated for frames shorter than two bytes.
bool verify_checksum(std::span<const std::uint8_t> frame);

struct ParserStats {
  std::uint64_t packets_ok = 0;
  std::uint64_t checksum_failures = 0;
  std::uint64_t resyncs = 0;
  std::uint64_t sequence_gaps = 0;

  bool operator==(const ParserStats&) const = default;
};

/// Incremental frame parser. Bytes may arrive split at arbitrary points;
/// the emitted packets and counters do not depend on the chunking.
/// Garbage is skipped by scanning to the next 0x00,0xFE pair (one resync
/// per contiguous garbage run). Single-threaded per stream.
class StreamParser {
 public:
  struct Options {
    // When false, frames are accepted without checksum verification
    // (checksum_ok is reported true), so captures from devices with a
    // different checksum convention can still be decoded.
    bool verify_checksum = true;
  };

  StreamParser() = default;
  explicit StreamParser(Options options) : options_(options) {}

  std::vector<AlivePacket> feed(std::span<const std::uint8_t> chunk);

  const ParserStats& stats() const { return stats_; }
  std::size_t buffered_bytes() const { return buffer_.size() - head_; }

 private:
  void discard(std::size_t new_head, bool garbage);
  void compact();

  Options options_;
  ParserStats stats_;
  std::vector<std::uint8_t> buffer_;
  std::size_t head_ = 0;
  std::optional<std::uint16_t> last_sequence_;
  bool in_resync_ = false;
};

}  // namespace vitalwire::wire
