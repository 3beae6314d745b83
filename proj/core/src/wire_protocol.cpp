// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#include "vitalwire/wire_protocol.hpp"

#include <algorithm>
#include <stdexcept>

namespace vitalwire::wire {
namespace {

constexpr std::size_t kMaxBlockData = 0xFFFF - kBlockHeaderSize;

std::uint8_t checksum_of(std::span<const std::uint8_t> body) {
  unsigned sum = 0;
  for (std::uint8_t b : body) sum += b;
  return static_cast<std::uint8_t>(sum & 0xFF);
}

std::uint16_t read_u16le(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void write_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

enum class Probe { Ok, NeedMore, Malformed };

// Structural check of the frame at bytes[0] without copying sample data.
// On Ok, frame_size holds the full 17+m+n size.
Probe probe_frame(std::span<const std::uint8_t> bytes, std::size_t& frame_size) {
  if (bytes.size() < 2) return Probe::NeedMore;
  if (bytes[0] != kSync0 || bytes[1] != kSync1) return Probe::Malformed;
  if (bytes.size() < kPacketHeaderSize + 3) return Probe::NeedMore;

  const std::size_t ecg_off = kPacketHeaderSize;
  if (bytes[ecg_off] != kEcgBlockId) return Probe::Malformed;
  const std::uint16_t ecg_len = read_u16le(&bytes[ecg_off + 1]);
  if (ecg_len < kBlockHeaderSize) return Probe::Malformed;
  if (bytes.size() < ecg_off + 4) return Probe::NeedMore;
  const std::uint8_t ecg_fmt = bytes[ecg_off + 3];
  if (ecg_fmt != static_cast<std::uint8_t>(EcgFormat::F150) &&
      ecg_fmt != static_cast<std::uint8_t>(EcgFormat::F300)) {
    return Probe::Malformed;
  }

  const std::size_t acc_off = ecg_off + ecg_len;
  if (bytes.size() < acc_off + 4) return Probe::NeedMore;
  if (bytes[acc_off] != kAccBlockId) return Probe::Malformed;
  const std::uint16_t acc_len = read_u16le(&bytes[acc_off + 1]);
  if (acc_len < kBlockHeaderSize) return Probe::Malformed;
  if (bytes[acc_off + 3] != static_cast<std::uint8_t>(AccFormat::F75)) {
    return Probe::Malformed;
  }
  if ((acc_len - kBlockHeaderSize) % 3 != 0) return Probe::Malformed;

  frame_size = acc_off + acc_len + 1;  // + checksum byte
  if (bytes.size() < frame_size) return Probe::NeedMore;
  return Probe::Ok;
}

// Field extraction for a frame already validated by probe_frame.
AlivePacket parse_frame(std::span<const std::uint8_t> frame, bool verify) {
  AlivePacket packet;
  packet.header.battery_raw = frame[2];
  const std::uint16_t seq_status = read_u16le(&frame[3]);
  packet.header.sequence = seq_status & 0x0FFF;
  packet.header.event_flag = (seq_status >> 12) & 0x1;
  packet.header.reserved_status = static_cast<std::uint8_t>(seq_status >> 13);
  packet.header.num_blocks = frame[5];

  const std::size_t ecg_off = kPacketHeaderSize;
  const std::uint16_t ecg_len = read_u16le(&frame[ecg_off + 1]);
  packet.ecg.format = static_cast<EcgFormat>(frame[ecg_off + 3]);
  packet.ecg.samples.assign(frame.begin() + ecg_off + kBlockHeaderSize,
                            frame.begin() + ecg_off + ecg_len);

  const std::size_t acc_off = ecg_off + ecg_len;
  const std::uint16_t acc_len = read_u16le(&frame[acc_off + 1]);
  packet.acc.format = static_cast<AccFormat>(frame[acc_off + 3]);
  packet.acc.samples.assign(frame.begin() + acc_off + kBlockHeaderSize,
                            frame.begin() + acc_off + acc_len);

  packet.checksum_ok =
      !verify || checksum_of(frame.first(frame.size() - 1)) == frame.back();
  return packet;
}

}  // namespace

double sample_rate_hz(EcgFormat format) {
  return format == EcgFormat::F150 ? 150.0 : 300.0;
}

double sample_rate_hz(AccFormat format) {
  (void)format;
  return 75.0;
}

std::vector<std::uint8_t> encode_packet(const AlivePacket& packet) {
  if (packet.header.battery_raw > kBatteryRawMax) {
    throw std::invalid_argument("battery_raw exceeds 200");
  }
  if (packet.header.sequence >= kSequenceModulus) {
    throw std::invalid_argument("sequence exceeds 12 bits");
  }
  if (packet.header.reserved_status > 0x7) {
    throw std::invalid_argument("reserved status exceeds 3 bits");
  }
  if (packet.acc.samples.size() % 3 != 0) {
    throw std::invalid_argument("acc sample count not a multiple of 3");
  }
  if (packet.ecg.samples.size() > kMaxBlockData) {
    throw Overflow("ecg block length exceeds 16 bits");
  }
  if (packet.acc.samples.size() > kMaxBlockData) {
    throw Overflow("acc block length exceeds 16 bits");
  }

  std::vector<std::uint8_t> out;
  out.reserve(packet.encoded_size());
  out.push_back(kSync0);
  out.push_back(kSync1);
  out.push_back(packet.header.battery_raw);
  const std::uint16_t seq_status = static_cast<std::uint16_t>(
      packet.header.sequence | (packet.header.event_flag ? 1u << 12 : 0u) |
      (static_cast<unsigned>(packet.header.reserved_status) << 13));
  write_u16le(out, seq_status);
  out.push_back(packet.header.num_blocks);

  out.push_back(kEcgBlockId);
  write_u16le(out, static_cast<std::uint16_t>(kBlockHeaderSize +
                                              packet.ecg.samples.size()));
  out.push_back(static_cast<std::uint8_t>(packet.ecg.format));
  out.push_back(0x00);  // reserved
  out.insert(out.end(), packet.ecg.samples.begin(), packet.ecg.samples.end());

  out.push_back(kAccBlockId);
  write_u16le(out, static_cast<std::uint16_t>(kBlockHeaderSize +
                                              packet.acc.samples.size()));
  out.push_back(static_cast<std::uint8_t>(packet.acc.format));
  out.push_back(0x00);  // reserved
  out.insert(out.end(), packet.acc.samples.begin(), packet.acc.samples.end());

  out.push_back(checksum_of(out));
  return out;
}

AlivePacket decode_packet(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 2 && (bytes[0] != kSync0 || bytes[1] != kSync1)) {
    throw BadSync("frame does not start with 0x00,0xFE");
  }
  std::size_t frame_size = 0;
  switch (probe_frame(bytes, frame_size)) {
    case Probe::NeedMore:
      throw Truncated("frame shorter than declared length");
    case Probe::Malformed: {
      // Classify for the caller: sync was fine, so a block is at fault.
      const std::size_t ecg_off = kPacketHeaderSize;
      if (bytes[ecg_off] != kEcgBlockId) {
        throw UnknownBlockId("expected ECG block id 0xAA");
      }
      const std::uint16_t ecg_len = read_u16le(&bytes[ecg_off + 1]);
      if (ecg_len < kBlockHeaderSize) {
        throw Truncated("ecg length field shorter than block header");
      }
      const std::uint8_t ecg_fmt = bytes[ecg_off + 3];
      if (ecg_fmt != static_cast<std::uint8_t>(EcgFormat::F150) &&
          ecg_fmt != static_cast<std::uint8_t>(EcgFormat::F300)) {
        throw BadFormatCode("unknown ecg data format");
      }
      const std::size_t acc_off = ecg_off + ecg_len;
      if (bytes[acc_off] != kAccBlockId) {
        throw UnknownBlockId("expected ACC block id 0x56");
      }
      const std::uint16_t acc_len = read_u16le(&bytes[acc_off + 1]);
      if (acc_len < kBlockHeaderSize) {
        throw Truncated("acc length field shorter than block header");
      }
      if (bytes[acc_off + 3] != static_cast<std::uint8_t>(AccFormat::F75)) {
        throw BadFormatCode("unknown acc data format");
      }
      throw BadFormatCode("acc data length not a multiple of 3");
    }
    case Probe::Ok:
      break;
  }
  return parse_frame(bytes.first(frame_size), /*verify=*/true);
}

bool verify_checksum(std::span<const std::uint8_t> frame) {
  if (frame.size() < 2) throw Truncated("frame shorter than two bytes");
  return checksum_of(frame.first(frame.size() - 1)) == frame.back();
}

void StreamParser::discard(std::size_t new_head, bool garbage) {
  if (garbage && new_head > head_ && !in_resync_) {
    ++stats_.resyncs;
    in_resync_ = true;
  }
  head_ = new_head;
}

void StreamParser::compact() {
  if (head_ > 4096 && head_ * 2 > buffer_.size()) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + head_);
    head_ = 0;
  }
}

std::vector<AlivePacket> StreamParser::feed(
    std::span<const std::uint8_t> chunk) {
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
  std::vector<AlivePacket> out;

  for (;;) {
    // Locate the next sync pair at or after head_.
    std::size_t sync = buffer_.size();
    for (std::size_t i = head_; i + 1 < buffer_.size(); ++i) {
      if (buffer_[i] == kSync0 && buffer_[i + 1] == kSync1) {
        sync = i;
        break;
      }
    }
    if (sync == buffer_.size()) {
      // No pair in the buffer. Keep a trailing 0x00, it may pair with the
      // first byte of the next chunk.
      std::size_t keep = buffer_.size();
      if (keep > head_ && buffer_.back() == kSync0) --keep;
      discard(keep, keep > head_);
      break;
    }
    discard(sync, sync > head_);

    std::span<const std::uint8_t> view(buffer_.data() + head_,
                                       buffer_.size() - head_);
    std::size_t frame_size = 0;
    const Probe result = probe_frame(view, frame_size);
    if (result == Probe::NeedMore) break;
    if (result == Probe::Malformed) {
      // False sync: drop one byte and rescan.
      discard(head_ + 1, true);
      continue;
    }

    AlivePacket packet =
        parse_frame(view.first(frame_size), options_.verify_checksum);
    head_ += frame_size;
    in_resync_ = false;

    if (packet.checksum_ok) {
      ++stats_.packets_ok;
    } else {
      ++stats_.checksum_failures;
    }
    if (last_sequence_ &&
        ((*last_sequence_ + 1) % kSequenceModulus) != packet.header.sequence) {
      ++stats_.sequence_gaps;
    }
    last_sequence_ = packet.header.sequence;
    out.push_back(std::move(packet));
  }

  compact();
  return out;
}

}  // namespace vitalwire::wire
