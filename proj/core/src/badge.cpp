// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#include "vitalwire/badge.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <fstream>
#include <sstream>

namespace vitalwire::badge {
namespace {

std::size_t count_role(const std::string& pattern, char role) {
  return static_cast<std::size_t>(
      std::count(pattern.begin(), pattern.end(), role));
}

// Even parity over bits[0..half], odd parity over the last half+1 bits,
// parity bits at the ends. half = ceil(payload / 2); the two regions
// overlap on the middle bit when the payload size is odd. Instantiates to
// H10301 for 26 bits and H10302 for 37 bits.
struct EndParityRegions {
  std::size_t half;
  explicit EndParityRegions(std::size_t core_bits)
      : half((core_bits - 2 + 1) / 2) {}
};

bool check_end_parity(const BitVector& core) {
  const EndParityRegions regions(core.size());
  unsigned even = 0;
  for (std::size_t i = 0; i <= regions.half; ++i) even += core[i];
  unsigned odd = 0;
  for (std::size_t i = core.size() - 1 - regions.half; i < core.size(); ++i) {
    odd += core[i];
  }
  return (even % 2 == 0) && (odd % 2 == 1);
}

void apply_end_parity(BitVector& core) {
  const EndParityRegions regions(core.size());
  unsigned even = 0;
  for (std::size_t i = 1; i <= regions.half; ++i) even += core[i];
  core[0] = even % 2;
  unsigned odd = 0;
  for (std::size_t i = core.size() - 1 - regions.half; i + 1 < core.size();
       ++i) {
    odd += core[i];
  }
  core[core.size() - 1] = odd % 2 == 0 ? 1 : 0;
}

}  // namespace

std::size_t BadgeFormat::facility_bits() const {
  return count_role(pattern, 'F');
}

std::size_t BadgeFormat::id_bits() const { return count_role(pattern, 'I'); }

bool BadgeFormat::end_parity_checked() const {
  if (pattern.size() < 3) return false;
  if (pattern.front() != 'P' || pattern.back() != 'P') return false;
  return count_role(pattern, 'P') == 2;
}

BadgeFormat parse_format(std::string pattern, unsigned leading_parity,
                         unsigned trailing_parity, std::string name) {
  if (pattern.empty()) throw InvalidFormat("empty format pattern");
  for (char c : pattern) {
    if (c != 'P' && c != 'F' && c != 'I') {
      throw InvalidFormat(std::string("invalid format character '") + c +
                          "': only P, F and I are allowed");
    }
  }
  if (pattern.find('I') == std::string::npos) {
    throw InvalidFormat("format carries no id bits");
  }
  return {std::move(name), std::move(pattern), leading_parity,
          trailing_parity};
}

const BadgeFormat& standard26() {
  static const BadgeFormat fmt =
      parse_format("PFFFFFFFFIIIIIIIIIIIIIIIIP", 0, 0, "std26");
  return fmt;
}

const BadgeFormat& unique37() {
  static const BadgeFormat fmt = parse_format(
      "P" + std::string(35, 'I') + "P", 0, 0, "unique37");
  return fmt;
}

Credential decode_bits(const BitVector& bits, const BadgeFormat& format) {
  if (bits.size() != format.total_bits()) {
    throw LengthMismatch("got " + std::to_string(bits.size()) +
                         " bits, format needs " +
                         std::to_string(format.total_bits()));
  }
  const BitVector core(bits.begin() + format.leading_parity,
                       bits.end() - format.trailing_parity);
  if (format.end_parity_checked() && !check_end_parity(core)) {
    throw ParityError("parity check failed for format " + format.name);
  }

  Credential cred;
  cred.bit_count = bits.size();
  cred.raw_bits = bits;
  for (std::size_t k = 0; k < format.pattern.size(); ++k) {
    const std::uint64_t bit = core[k];
    switch (format.pattern[k]) {
      case 'F':
        cred.facility_code = (cred.facility_code << 1) | bit;
        break;
      case 'I':
        cred.card_id = (cred.card_id << 1) | bit;
        break;
      default:
        break;
    }
  }
  return cred;
}

BitVector encode_bits(std::uint64_t facility, std::uint64_t id,
                      const BadgeFormat& format) {
  const std::size_t f_bits = format.facility_bits();
  const std::size_t i_bits = format.id_bits();
  if (f_bits < 64 && facility >= (std::uint64_t{1} << f_bits)) {
    throw FieldOverflow("facility code does not fit " +
                        std::to_string(f_bits) + " bits");
  }
  if (i_bits < 64 && id >= (std::uint64_t{1} << i_bits)) {
    throw FieldOverflow("card id does not fit " + std::to_string(i_bits) +
                        " bits");
  }

  BitVector core(format.pattern.size(), 0);
  std::size_t f_seen = 0, i_seen = 0;
  for (std::size_t k = 0; k < format.pattern.size(); ++k) {
    switch (format.pattern[k]) {
      case 'F':
        core[k] = (facility >> (f_bits - ++f_seen)) & 1;
        break;
      case 'I':
        core[k] = (id >> (i_bits - ++i_seen)) & 1;
        break;
      default:
        break;
    }
  }
  if (format.end_parity_checked()) apply_end_parity(core);

  BitVector bits(format.leading_parity, 0);  // stripped bits have no rule
  bits.insert(bits.end(), core.begin(), core.end());
  bits.insert(bits.end(), format.trailing_parity, 0);
  return bits;
}

std::uint32_t encode_standard26(std::uint32_t facility, std::uint32_t id) {
  if (facility > 0xFF) throw FieldOverflow("facility code exceeds 8 bits");
  if (id > 0xFFFF) throw FieldOverflow("card id exceeds 16 bits");
  std::uint32_t word = (facility << 17) | (id << 1);
  if (std::popcount((word >> 13) & 0xFFFu) % 2 == 1) word |= 1u << 25;
  if (std::popcount((word >> 1) & 0xFFFu) % 2 == 0) word |= 1u;
  return word;
}

Credential decode_standard26(std::uint32_t word) {
  if (word >> 26) throw LengthMismatch("word wider than 26 bits");
  if (std::popcount((word >> 13) & 0x1FFFu) % 2 != 0) {
    throw ParityError("even parity check failed");
  }
  if (std::popcount(word & 0x1FFFu) % 2 != 1) {
    throw ParityError("odd parity check failed");
  }
  Credential cred;
  cred.facility_code = (word >> 17) & 0xFF;
  cred.card_id = (word >> 1) & 0xFFFF;
  cred.bit_count = 26;
  cred.raw_bits = bits_from_word(word, 26);
  return cred;
}

BitVector bits_from_word(std::uint64_t word, std::size_t bit_count) {
  BitVector bits(bit_count);
  for (std::size_t k = 0; k < bit_count; ++k) {
    bits[k] = (word >> (bit_count - 1 - k)) & 1;
  }
  return bits;
}

std::uint64_t word_from_bits(const BitVector& bits) {
  if (bits.size() > 64) throw LengthMismatch("more than 64 bits");
  std::uint64_t word = 0;
  for (std::uint8_t bit : bits) word = (word << 1) | (bit & 1);
  return word;
}

BitVector bits_from_hex(std::string_view hex, std::size_t bit_count) {
  if (hex.starts_with("0x") || hex.starts_with("0X")) hex.remove_prefix(2);
  std::uint64_t word = 0;
  if (hex.empty() || hex.size() > 16) {
    throw LengthMismatch("hex word must be 1..16 digits");
  }
  for (char c : hex) {
    if (!std::isxdigit(static_cast<unsigned char>(c))) {
      throw LengthMismatch("not a hex digit: " + std::string(1, c));
    }
    word = (word << 4) |
           static_cast<std::uint64_t>(
               std::isdigit(static_cast<unsigned char>(c))
                   ? c - '0'
                   : std::tolower(static_cast<unsigned char>(c)) - 'a' + 10);
  }
  if (bit_count < 64 && (word >> bit_count) != 0) {
    throw LengthMismatch("hex word wider than " + std::to_string(bit_count) +
                         " bits");
  }
  return bits_from_word(word, bit_count);
}

std::string bits_to_hex(const BitVector& bits) {
  const std::uint64_t word = word_from_bits(bits);
  std::ostringstream out;
  out << std::hex << word;
  return out.str();
}

ReaderConfig set_valid_data_time(ReaderConfig config, unsigned ms) {
  config.valid_data_time_ms = std::max(ms, 900u);
  return config;
}

ReaderConfig set_lead_chars(ReaderConfig config, std::string chars) {
  config.lead_chars = chars.substr(0, 3);
  config.trail_chars =
      config.trail_chars.substr(0, 3 - config.lead_chars.size());
  return config;
}

ReaderConfig set_trail_chars(ReaderConfig config, std::string chars) {
  config.trail_chars = chars.substr(0, 3 - std::min<std::size_t>(
                                              3, config.lead_chars.size()));
  return config;
}

bool accepts(const ReaderConfig& config, std::size_t bit_count) {
  switch (config.accept) {
    case ReaderConfig::Accept::Any:
      return true;
    case ReaderConfig::Accept::Standard26:
      return bit_count == 26;
    case ReaderConfig::Accept::Unique37:
      return bit_count == 37;
  }
  return false;
}

std::string render_output(const Credential& credential,
                          const ReaderConfig& config) {
  std::string out = config.lead_chars;
  if (!config.hide_id) {
    if (config.send_facility) {
      out += std::to_string(credential.facility_code);
      out += config.delimiter;
    }
    out += std::to_string(credential.card_id);
  }
  out += config.trail_chars;
  return out;
}

FormatRegistry FormatRegistry::with_builtins() {
  FormatRegistry registry;
  registry.add(standard26());
  registry.add(unique37());
  return registry;
}

void FormatRegistry::add(BadgeFormat format) {
  formats_[format.name] = std::move(format);
}

const BadgeFormat* FormatRegistry::find(std::string_view name) const {
  const auto it = formats_.find(name);
  return it == formats_.end() ? nullptr : &it->second;
}

void FormatRegistry::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read format registry: " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    std::string name, pattern;
    unsigned lead = 0, trail = 0;
    if (!(fields >> name >> pattern)) {
      throw InvalidFormat("registry line " + std::to_string(lineno) +
                          ": expected `name pattern [lead trail]`");
    }
    fields >> lead >> trail;
    add(parse_format(std::move(pattern), lead, trail, std::move(name)));
  }
}

}  // namespace vitalwire::badge
