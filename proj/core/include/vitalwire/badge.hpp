// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "vitalwire/error.hpp"

// RFID badge bit formats (26-bit standard, 37-bit unique, user-defined
// patterns over P/F/I) and the pcProx reader configuration semantics.

namespace vitalwire::badge {

struct InvalidFormat final : Error {
  using Error::Error;
};
struct LengthMismatch final : Error {
  using Error::Error;
};
struct ParityError final : Error {
  using Error::Error;
};
struct FieldOverflow final : Error {
  using Error::Error;
};

/// A bit layout: pattern characters give each in-pattern position a role
/// (P parity, F facility code, I card id). leading_parity/trailing_parity
/// count extra parity bits outside the pattern that are stripped before
/// mapping, mirroring the reader's LeadingParity/TrailingParity fields.
struct BadgeFormat {
  std::string name = "custom";
  std::string pattern;
  unsigned leading_parity = 0;
  unsigned trailing_parity = 0;

  std::size_t total_bits() const {
    return pattern.size() + leading_parity + trailing_parity;
  }
  std::size_t facility_bits() const;
  std::size_t id_bits() const;

  /// Parity is validated only when the pattern's P positions are exactly one
  /// leading and one trailing bit: even parity over the first half, odd over
  /// the last half (overlapping middle bit for odd payloads). This is the
  /// scheme of both built-ins; other custom patterns carry no parity rule.
  bool end_parity_checked() const;
};

/// Builds a format from a pattern string. Every character must be P, F or I
/// and the pattern must contain at least one I, otherwise InvalidFormat.
BadgeFormat parse_format(std::string pattern, unsigned leading_parity = 0,
                         unsigned trailing_parity = 0,
                         std::string name = "custom");

/// 26-bit standard: P FFFFFFFF IIIIIIIIIIIIIIII P (H10301 layout).
const BadgeFormat& standard26();
/// 37-bit unique: P + 35 id bits + P, no facility code (H10302 layout).
const BadgeFormat& unique37();

using BitVector = std::vector<std::uint8_t>;  // one bit per entry, MSB first

struct Credential {
  std::uint64_t facility_code = 0;
  std::uint64_t card_id = 0;
  std::size_t bit_count = 0;
  BitVector raw_bits;
};

/// bits.size() must equal format.total_bits() (LengthMismatch). Validates
/// parity for end-parity formats (ParityError).
Credential decode_bits(const BitVector& bits, const BadgeFormat& format);

/// Inverse of decode_bits. Parity bits are computed for end-parity formats
/// and zeroed where no rule applies. FieldOverflow when a value does not
/// fit its field width.
BitVector encode_bits(std::uint64_t facility, std::uint64_t id,
                      const BadgeFormat& format);

// Fast paths for the 26-bit standard layout, word in the low 26 bits,
// MSB first.
std::uint32_t encode_standard26(std::uint32_t facility, std::uint32_t id);
Credential decode_standard26(std::uint32_t word);

BitVector bits_from_word(std::uint64_t word, std::size_t bit_count);
std::uint64_t word_from_bits(const BitVector& bits);
BitVector bits_from_hex(std::string_view hex, std::size_t bit_count);
std::string bits_to_hex(const BitVector& bits);

struct ReaderConfig {
  enum class Led : std::uint8_t { Default, Red, Green, BothColors };
  enum class Accept : std::uint8_t { Any, Standard26, Unique37 };

  bool beep = true;
  Led led = Led::Default;
  Accept accept = Accept::Any;
  unsigned valid_data_time_ms = 900;  // never below 900
  unsigned leading_parity = 0;
  unsigned trailing_parity = 0;
  std::string lead_chars;   // at most 3
  std::string trail_chars;  // lead + trail at most 3, lead has priority
  bool hide_id = false;
  bool send_facility = false;
  std::string delimiter = ":";
};

/// Clamps to the reader's 900 ms minimum, mirroring the instant-snap
/// behavior of the ValidDataTime property.
ReaderConfig set_valid_data_time(ReaderConfig config, unsigned ms);

/// Lead characters are capped at 3; the trail is truncated so that
/// lead + trail stays within 3, lead keeps priority.
ReaderConfig set_lead_chars(ReaderConfig config, std::string chars);
ReaderConfig set_trail_chars(ReaderConfig config, std::string chars);

/// True when the configured card filter admits a read of bit_count bits.
bool accepts(const ReaderConfig& config, std::size_t bit_count);

/// lead_chars + [facility + delimiter] + id + trail_chars; the id (and
/// facility) are omitted when hide_id is set.
std::string render_output(const Credential& credential,
                          const ReaderConfig& config);

/// Named formats, preloaded with std26 and unique37. The registry file has
/// one `name pattern lead trail` entry per line; # starts a comment.
class FormatRegistry {
 public:
  static FormatRegistry with_builtins();

  void add(BadgeFormat format);
  const BadgeFormat* find(std::string_view name) const;
  void load_file(const std::filesystem::path& path);
  const std::map<std::string, BadgeFormat, std::less<>>& formats() const {
    return formats_;
  }

 private:
  std::map<std::string, BadgeFormat, std::less<>> formats_;
};

}  // namespace vitalwire::badge
