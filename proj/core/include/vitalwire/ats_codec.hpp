// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "vitalwire/error.hpp"

// Reader/writer for ATS recording files: a 128-byte main header, one 32-byte
// description per channel, then fixed-size data blocks holding one packet per
// channel in channel order. Multi-byte fields are little-endian; see
// docs/wire-format.md.

namespace vitalwire::ats {

inline constexpr std::array<std::uint8_t, 5> kMagic = {0x41, 0x54, 0x53, 0x46,
                                                       0x00};  // "ATSF\0"
inline constexpr std::size_t kMainHeaderSize = 128;
inline constexpr std::size_t kChannelDescSize = 32;

struct BadMagic final : Error {
  using Error::Error;
};
struct BadHeader final : Error {
  using Error::Error;
};
struct BadChannelType final : Error {
  using Error::Error;
};
struct TruncatedBlock final : Error {
  using Error::Error;
};
struct InvalidDate final : Error {
  using Error::Error;
};
struct BlockSizeMismatch final : Error {
  using Error::Error;
};
struct BadChannelIndex final : Error {
  using Error::Error;
};

enum class ChannelType : std::uint8_t {
  Status = 0x11,
  Ecg = 0xAA,
  Acc2 = 0x55,
  Acc3 = 0x56,
};

struct AtsDate {
  std::uint16_t year = 2005;
  std::uint8_t month = 1;  // 1-12
  std::uint8_t day = 1;    // 1-31

  bool operator==(const AtsDate&) const = default;
};

struct AtsTime {
  std::uint8_t hour = 0;    // 0-23
  std::uint8_t minute = 0;  // 0-59
  std::uint8_t second = 0;  // 0-59

  bool operator==(const AtsTime&) const = default;
};

struct AtsMainHeader {
  std::uint16_t header_len = kMainHeaderSize;
  std::uint8_t channels = 1;
  std::uint32_t num_data_blocks = 0;  // 0 = unknown, read blocks until EOF
  std::uint16_t block_len = 0;
  AtsDate date;
  AtsTime time;

  bool operator==(const AtsMainHeader&) const = default;
};

struct ChannelDescription {
  ChannelType data_type = ChannelType::Ecg;
  std::uint8_t data_format = 0x02;
  std::uint16_t packet_len = 0;  // bytes per channel data packet

  bool operator==(const ChannelDescription&) const = default;

  static ChannelDescription status();  // 2-byte packets: status bits, battery
  static ChannelDescription ecg_150(std::uint16_t packet_len);
  static ChannelDescription ecg_300(std::uint16_t packet_len);
  static ChannelDescription acc2(std::uint16_t packet_len);
  static ChannelDescription acc3(std::uint16_t packet_len);
};

/// Nominal sampling rate of a channel per its (type, format) pair.
/// Status channels carry one record per block, so they have no rate.
std::optional<double> sample_rate_hz(const ChannelDescription& desc);

/// One data block: exactly one packet per channel, in channel order.
struct DataBlock {
  std::vector<std::vector<std::uint8_t>> channel_packets;

  bool operator==(const DataBlock&) const = default;
};

struct AtsFile {
  AtsMainHeader header;
  std::vector<ChannelDescription> channel_descs;
  std::vector<DataBlock> blocks;
  // Bytes left over after the last whole block: a truncated trailing block
  // is reported here rather than silently dropped.
  std::size_t trailing_partial_bytes = 0;

  bool operator==(const AtsFile&) const = default;
};

AtsFile decode_ats(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> encode_ats(const AtsFile& file);

/// Concatenates one channel's packets across blocks, in block order.
std::vector<std::uint8_t> samples(const AtsFile& file, std::size_t channel);

/// samples() grouped into X,Y,Z triplets; only valid for Acc3 channels.
std::vector<std::array<std::uint8_t, 3>> acc_triplets(const AtsFile& file,
                                                      std::size_t channel);

}  // namespace vitalwire::ats
