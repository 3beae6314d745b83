// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vitalwire/error.hpp"

// RC4 stream cipher (KSA + PRGA) and the "Structure" archive: a directory
// tree serialized as a plaintext record header followed by the RC4-encrypted
// concatenation of all file contents.
//
// RC4 stays the cipher for compatibility with the deployed format; it is
// not a modern cipher and the archive carries no integrity check, so a
// wrong key decrypts to garbage without any error. Do not use this for
// data that needs real protection.

namespace vitalwire::archive {

struct EmptyKey final : Error {
  using Error::Error;
};
struct IoError final : Error {
  using Error::Error;
};
struct MissingStructureFile final : Error {
  using Error::Error;
};
struct CorruptHeader final : Error {
  using Error::Error;
};
struct SizeMismatch final : Error {
  using Error::Error;
};

/// RC4 keystream generator. The state table S stays a permutation of
/// 0..255 through every KSA and PRGA step.
class Rc4Stream {
 public:
  explicit Rc4Stream(std::span<const std::uint8_t> key);
  explicit Rc4Stream(std::string_view key);

  std::uint8_t next();
  void apply(std::span<std::uint8_t> data);  // XOR keystream in place

  const std::array<std::uint8_t, 256>& state() const { return s_; }
  std::uint8_t i() const { return i_; }
  std::uint8_t j() const { return j_; }

 private:
  std::array<std::uint8_t, 256> s_{};
  std::uint8_t i_ = 0;
  std::uint8_t j_ = 0;
};

/// One-shot encrypt/decrypt; applying twice with the same key is identity.
std::vector<std::uint8_t> rc4_apply(std::string_view key,
                                    std::span<const std::uint8_t> data);

struct ArchiveRecord {
  enum class Kind : char { Directory = 'D', File = 'F' };

  Kind kind = Kind::Directory;
  std::uint16_t depth = 0;  // 0 = direct child of the archive root
  std::string name;
  std::uint64_t size = 0;  // files only

  bool operator==(const ArchiveRecord&) const = default;
};

struct StructureArchive {
  std::vector<ArchiveRecord> records;
  std::vector<std::uint8_t> payload;  // encrypted file contents, record order
};

inline constexpr std::array<std::uint8_t, 4> kArchiveMagic = {'S', 'H', 'S',
                                                              'A'};
inline constexpr std::uint8_t kArchiveVersion = 0x01;
inline constexpr const char* kDefaultArchiveName = "Structure";

/// Depth-first walk of root's contents, entries sorted by name. The root
/// itself is not recorded; its direct children sit at depth 0.
std::vector<ArchiveRecord> scan_tree(const std::filesystem::path& root);

std::vector<std::uint8_t> encode_header(
    const std::vector<ArchiveRecord>& records);

/// Parses the record header at the front of `bytes`; returns the records
/// and the header size in bytes. Throws CorruptHeader on bad magic, bad
/// record grammar, or unsafe names.
std::pair<std::vector<ArchiveRecord>, std::size_t> decode_header(
    std::span<const std::uint8_t> bytes);

struct CryptOptions {
  std::filesystem::path archive = kDefaultArchiveName;
  bool remove_sources = false;  // delete the original tree after archiving
};

/// Archives root's contents into the Structure file: plaintext header plus
/// the RC4(key) payload. With remove_sources the original tree is deleted
/// after a successful write.
void crypt_data(const std::filesystem::path& root, std::string_view key,
                const CryptOptions& options = {});

/// RC4-encrypts (or, applied again, decrypts) the whole Structure file in
/// place with key2, which may differ from the data key.
void crypt_file_structure(std::string_view key2,
                          const std::filesystem::path& archive =
                              kDefaultArchiveName);

struct RestoreOptions {
  std::filesystem::path archive = kDefaultArchiveName;
  std::filesystem::path out_root = ".";
};

/// Rebuilds the tree from a decrypted Structure file, decrypting payload
/// slices by the recorded sizes, then deletes the archive file. A wrong key
/// is not detectable: it silently restores garbage contents.
void restore_data(std::string_view key, const RestoreOptions& options = {});

}  // namespace vitalwire::archive
