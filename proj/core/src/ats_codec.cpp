// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#include "vitalwire/ats_codec.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace vitalwire::ats {
namespace {

std::uint16_t read_u16le(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

std::uint32_t read_u32le(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

void put_u16le(std::uint8_t* p, std::uint16_t v) {
  p[0] = static_cast<std::uint8_t>(v & 0xFF);
  p[1] = static_cast<std::uint8_t>(v >> 8);
}

void put_u32le(std::uint8_t* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

bool valid_pair(ChannelType type, std::uint8_t format) {
  switch (type) {
    case ChannelType::Status:
      return format == 0x00;
    case ChannelType::Ecg:
      return format == 0x01 || format == 0x02;
    case ChannelType::Acc2:
      return format == 0x00;
    case ChannelType::Acc3:
      return format == 0x00;
  }
  return false;
}

void check_date_time(const AtsDate& d, const AtsTime& t, bool encoding) {
  const bool ok = d.month >= 1 && d.month <= 12 && d.day >= 1 && d.day <= 31 &&
                  t.hour <= 23 && t.minute <= 59 && t.second <= 59;
  if (ok) return;
  if (encoding) throw InvalidDate("date/time field out of range");
  throw BadHeader("date/time field out of range");
}

void check_channel_desc(const ChannelDescription& desc, std::size_t index) {
  const auto tag = static_cast<std::uint8_t>(desc.data_type);
  if (tag != 0x11 && tag != 0xAA && tag != 0x55 && tag != 0x56) {
    throw BadChannelType("channel " + std::to_string(index) +
                         ": unknown data type");
  }
  if (!valid_pair(desc.data_type, desc.data_format)) {
    throw BadChannelType("channel " + std::to_string(index) +
                         ": invalid data format for type");
  }
  if (desc.data_type == ChannelType::Status && desc.packet_len != 2) {
    throw BadChannelType("channel " + std::to_string(index) +
                         ": status packets are 2 bytes");
  }
}

std::size_t block_len_of(const std::vector<ChannelDescription>& descs) {
  return std::accumulate(descs.begin(), descs.end(), std::size_t{0},
                         [](std::size_t acc, const ChannelDescription& d) {
                           return acc + d.packet_len;
                         });
}

}  // namespace

ChannelDescription ChannelDescription::status() {
  return {ChannelType::Status, 0x00, 2};
}
ChannelDescription ChannelDescription::ecg_150(std::uint16_t packet_len) {
  return {ChannelType::Ecg, 0x01, packet_len};
}
ChannelDescription ChannelDescription::ecg_300(std::uint16_t packet_len) {
  return {ChannelType::Ecg, 0x02, packet_len};
}
ChannelDescription ChannelDescription::acc2(std::uint16_t packet_len) {
  return {ChannelType::Acc2, 0x00, packet_len};
}
ChannelDescription ChannelDescription::acc3(std::uint16_t packet_len) {
  return {ChannelType::Acc3, 0x00, packet_len};
}

std::optional<double> sample_rate_hz(const ChannelDescription& desc) {
  switch (desc.data_type) {
    case ChannelType::Status:
      return std::nullopt;
    case ChannelType::Ecg:
      return desc.data_format == 0x01 ? 150.0 : 300.0;
    case ChannelType::Acc2:
    case ChannelType::Acc3:
      return 75.0;
  }
  return std::nullopt;
}

AtsFile decode_ats(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kMagic.size() ||
      !std::equal(kMagic.begin(), kMagic.end(), bytes.begin())) {
    throw BadMagic("not an ATS file");
  }
  if (bytes.size() < kMainHeaderSize) {
    throw BadHeader("file shorter than the 128-byte main header");
  }

  AtsFile file;
  auto& h = file.header;
  h.header_len = read_u16le(&bytes[5]);
  h.channels = bytes[7];
  h.num_data_blocks = read_u32le(&bytes[8]);
  h.block_len = read_u16le(&bytes[12]);
  h.date.year = read_u16le(&bytes[14]);
  h.date.month = bytes[16];
  h.date.day = bytes[17];
  h.time.hour = bytes[18];
  h.time.minute = bytes[19];
  h.time.second = bytes[20];

  if (h.header_len < kMainHeaderSize) {
    throw BadHeader("header length below 128");
  }
  if (h.channels == 0) throw BadHeader("channel count is zero");
  check_date_time(h.date, h.time, /*encoding=*/false);

  // header_len larger than 128 is honored: the excess is skipped.
  std::size_t off = h.header_len;
  if (bytes.size() < off + h.channels * kChannelDescSize) {
    throw BadHeader("file shorter than declared channel descriptions");
  }
  for (std::size_t c = 0; c < h.channels; ++c) {
    const std::uint8_t* p = &bytes[off + c * kChannelDescSize];
    ChannelDescription desc;
    desc.data_type = static_cast<ChannelType>(p[0]);
    desc.data_format = p[1];
    desc.packet_len = read_u16le(p + 2);
    check_channel_desc(desc, c);
    file.channel_descs.push_back(desc);
  }
  off += h.channels * kChannelDescSize;

  if (block_len_of(file.channel_descs) != h.block_len) {
    throw BadHeader("channel packet lengths do not sum to block length");
  }

  const std::size_t remaining = bytes.size() - off;
  std::size_t whole_blocks;
  if (h.block_len == 0) {
    whole_blocks = h.num_data_blocks;  // zero-length blocks carry no bytes
  } else {
    whole_blocks = remaining / h.block_len;
    if (h.num_data_blocks != 0) {
      if (whole_blocks < h.num_data_blocks) {
        throw TruncatedBlock("file ends inside a declared data block");
      }
      whole_blocks = h.num_data_blocks;
    }
  }

  for (std::size_t b = 0; b < whole_blocks; ++b) {
    DataBlock block;
    for (const auto& desc : file.channel_descs) {
      block.channel_packets.emplace_back(bytes.begin() + off,
                                         bytes.begin() + off + desc.packet_len);
      off += desc.packet_len;
    }
    file.blocks.push_back(std::move(block));
  }
  file.trailing_partial_bytes = bytes.size() - off;
  return file;
}

std::vector<std::uint8_t> encode_ats(const AtsFile& file) {
  const auto& h = file.header;
  check_date_time(h.date, h.time, /*encoding=*/true);
  if (file.channel_descs.empty() ||
      file.channel_descs.size() != h.channels) {
    throw BadHeader("channel count does not match descriptions");
  }
  for (std::size_t c = 0; c < file.channel_descs.size(); ++c) {
    check_channel_desc(file.channel_descs[c], c);
  }
  const std::size_t block_len = block_len_of(file.channel_descs);
  if (block_len != h.block_len) {
    throw BlockSizeMismatch("channel packet lengths do not sum to block_len");
  }

  std::vector<std::uint8_t> out(kMainHeaderSize +
                                file.channel_descs.size() * kChannelDescSize);
  std::copy(kMagic.begin(), kMagic.end(), out.begin());
  put_u16le(&out[5], kMainHeaderSize);  // fixed main header, reserved zeroed
  out[7] = h.channels;
  put_u32le(&out[8], h.num_data_blocks);
  put_u16le(&out[12], h.block_len);
  put_u16le(&out[14], h.date.year);
  out[16] = h.date.month;
  out[17] = h.date.day;
  out[18] = h.time.hour;
  out[19] = h.time.minute;
  out[20] = h.time.second;

  for (std::size_t c = 0; c < file.channel_descs.size(); ++c) {
    std::uint8_t* p = &out[kMainHeaderSize + c * kChannelDescSize];
    const auto& desc = file.channel_descs[c];
    p[0] = static_cast<std::uint8_t>(desc.data_type);
    p[1] = desc.data_format;
    put_u16le(p + 2, desc.packet_len);
  }

  for (std::size_t b = 0; b < file.blocks.size(); ++b) {
    const auto& block = file.blocks[b];
    if (block.channel_packets.size() != file.channel_descs.size()) {
      throw BlockSizeMismatch("block " + std::to_string(b) +
                              ": packet count does not match channels");
    }
    for (std::size_t c = 0; c < block.channel_packets.size(); ++c) {
      if (block.channel_packets[c].size() != file.channel_descs[c].packet_len) {
        throw BlockSizeMismatch("block " + std::to_string(b) + " channel " +
                                std::to_string(c) + ": packet size mismatch");
      }
      out.insert(out.end(), block.channel_packets[c].begin(),
                 block.channel_packets[c].end());
    }
  }
  return out;
}

std::vector<std::uint8_t> samples(const AtsFile& file, std::size_t channel) {
  if (channel >= file.channel_descs.size()) {
    throw BadChannelIndex("channel index out of range");
  }
  std::vector<std::uint8_t> out;
  for (const auto& block : file.blocks) {
    const auto& packet = block.channel_packets[channel];
    out.insert(out.end(), packet.begin(), packet.end());
  }
  return out;
}

std::vector<std::array<std::uint8_t, 3>> acc_triplets(const AtsFile& file,
                                                      std::size_t channel) {
  if (channel >= file.channel_descs.size()) {
    throw BadChannelIndex("channel index out of range");
  }
  if (file.channel_descs[channel].data_type != ChannelType::Acc3) {
    throw BadChannelType("channel is not a 3-axis accelerometer");
  }
  const std::vector<std::uint8_t> raw = samples(file, channel);
  std::vector<std::array<std::uint8_t, 3>> out;
  out.reserve(raw.size() / 3);
  for (std::size_t i = 0; i + 2 < raw.size(); i += 3) {
    out.push_back({raw[i], raw[i + 1], raw[i + 2]});
  }
  return out;
}

}  // namespace vitalwire::ats
