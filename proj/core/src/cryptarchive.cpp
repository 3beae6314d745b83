// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#include "vitalwire/cryptarchive.hpp"

#include <sys/file.h>
#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <fstream>
#include <utility>

namespace vitalwire::archive {

namespace fs = std::filesystem;

namespace {

// Advisory exclusive lock on the archive path for the duration of an
// operation (single-writer contract on the Structure file).
class ScopedPathLock {
 public:
  explicit ScopedPathLock(const fs::path& path)
      : fd_(::open(path.c_str(), O_RDWR | O_CREAT, 0644)) {
    if (fd_ >= 0) ::flock(fd_, LOCK_EX);
  }
  ~ScopedPathLock() {
    if (fd_ >= 0) {
      ::flock(fd_, LOCK_UN);
      ::close(fd_);
    }
  }
  ScopedPathLock(const ScopedPathLock&) = delete;
  ScopedPathLock& operator=(const ScopedPathLock&) = delete;

 private:
  int fd_;
};

void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void put_u64le(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint16_t u16le() {
    need(2);
    const std::uint16_t v =
        static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32le() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 3; k >= 0; --k) v = (v << 8) | bytes_[pos_ + k];
    pos_ += 4;
    return v;
  }
  std::uint64_t u64le() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 7; k >= 0; --k) v = (v << 8) | bytes_[pos_ + k];
    pos_ += 8;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) {
      throw CorruptHeader("archive header ends unexpectedly");
    }
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void check_record_name(const std::string& name) {
  if (name.empty() || name == "." || name == "..") {
    throw CorruptHeader("unsafe record name");
  }
  if (name.find('/') != std::string::npos ||
      name.find('\\') != std::string::npos ||
      name.find('\0') != std::string::npos) {
    throw CorruptHeader("record name contains a path separator");
  }
}

std::span<const std::uint8_t> key_bytes(std::string_view key) {
  return {reinterpret_cast<const std::uint8_t*>(key.data()), key.size()};
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

void scan_dir(const fs::path& dir, std::uint16_t depth,
              std::vector<ArchiveRecord>& records) {
  std::vector<fs::directory_entry> entries;
  for (const auto& entry : fs::directory_iterator(dir)) {
    entries.push_back(entry);
  }
  std::sort(entries.begin(), entries.end(),
            [](const fs::directory_entry& a, const fs::directory_entry& b) {
              return a.path().filename() < b.path().filename();
            });
  for (const auto& entry : entries) {
    const std::string name = entry.path().filename().string();
    const fs::file_status st = entry.symlink_status();
    if (fs::is_directory(st)) {
      records.push_back({ArchiveRecord::Kind::Directory, depth, name, 0});
      scan_dir(entry.path(), static_cast<std::uint16_t>(depth + 1), records);
    } else if (fs::is_regular_file(st)) {
      records.push_back({ArchiveRecord::Kind::File, depth, name,
                         static_cast<std::uint64_t>(fs::file_size(entry))});
    }
    // other kinds (symlinks, fifos, ...) are not archived
  }
}

}  // namespace

Rc4Stream::Rc4Stream(std::span<const std::uint8_t> key) {
  if (key.empty()) throw EmptyKey("rc4 key must not be empty");
  if (key.size() > 256) {
    throw std::invalid_argument("rc4 key longer than 256 bytes");
  }
  for (unsigned k = 0; k < 256; ++k) s_[k] = static_cast<std::uint8_t>(k);
  std::uint8_t j = 0;
  for (unsigned k = 0; k < 256; ++k) {
    j = static_cast<std::uint8_t>(j + s_[k] + key[k % key.size()]);
    std::swap(s_[k], s_[j]);
  }
}

Rc4Stream::Rc4Stream(std::string_view key) : Rc4Stream(key_bytes(key)) {}

std::uint8_t Rc4Stream::next() {
  i_ = static_cast<std::uint8_t>(i_ + 1);
  j_ = static_cast<std::uint8_t>(j_ + s_[i_]);
  std::swap(s_[i_], s_[j_]);
  return s_[static_cast<std::uint8_t>(s_[i_] + s_[j_])];
}

void Rc4Stream::apply(std::span<std::uint8_t> data) {
  for (std::uint8_t& b : data) b ^= next();
}

std::vector<std::uint8_t> rc4_apply(std::string_view key,
                                    std::span<const std::uint8_t> data) {
  std::vector<std::uint8_t> out(data.begin(), data.end());
  Rc4Stream(key).apply(out);
  return out;
}

std::vector<ArchiveRecord> scan_tree(const fs::path& root) {
  if (!fs::is_directory(root)) {
    throw IoError("not a readable directory: " + root.string());
  }
  std::vector<ArchiveRecord> records;
  scan_dir(root, 0, records);
  return records;
}

std::vector<std::uint8_t> encode_header(
    const std::vector<ArchiveRecord>& records) {
  std::vector<std::uint8_t> out(kArchiveMagic.begin(), kArchiveMagic.end());
  out.push_back(kArchiveVersion);
  put_u32le(out, static_cast<std::uint32_t>(records.size()));
  for (const ArchiveRecord& rec : records) {
    out.push_back(static_cast<std::uint8_t>(rec.kind));
    put_u16le(out, rec.depth);
    put_u16le(out, static_cast<std::uint16_t>(rec.name.size()));
    out.insert(out.end(), rec.name.begin(), rec.name.end());
    if (rec.kind == ArchiveRecord::Kind::File) put_u64le(out, rec.size);
  }
  return out;
}

std::pair<std::vector<ArchiveRecord>, std::size_t> decode_header(
    std::span<const std::uint8_t> bytes) {
  ByteReader in(bytes);
  for (std::uint8_t expected : kArchiveMagic) {
    if (in.u8() != expected) throw CorruptHeader("bad archive magic");
  }
  if (in.u8() != kArchiveVersion) {
    throw CorruptHeader("unsupported archive version");
  }
  const std::uint32_t count = in.u32le();
  std::vector<ArchiveRecord> records;
  records.reserve(count);
  std::size_t dir_stack = 0;  // depth of the directory currently open
  for (std::uint32_t k = 0; k < count; ++k) {
    ArchiveRecord rec;
    const std::uint8_t kind = in.u8();
    if (kind != 'D' && kind != 'F') {
      throw CorruptHeader("unknown record kind");
    }
    rec.kind = static_cast<ArchiveRecord::Kind>(kind);
    rec.depth = in.u16le();
    const std::uint16_t name_len = in.u16le();
    if (name_len == 0) throw CorruptHeader("empty record name");
    rec.name = in.str(name_len);
    check_record_name(rec.name);
    if (rec.kind == ArchiveRecord::Kind::File) rec.size = in.u64le();
    // Valid tree walk: a record may sit at most one level below the last
    // opened directory.
    if (rec.depth > dir_stack) {
      throw CorruptHeader("record depth jumps past its parent");
    }
    dir_stack =
        rec.kind == ArchiveRecord::Kind::Directory ? rec.depth + 1 : rec.depth;
    records.push_back(std::move(rec));
  }
  return {std::move(records), in.pos()};
}

void crypt_data(const fs::path& root, std::string_view key,
                const CryptOptions& options) {
  if (key.empty()) throw EmptyKey("rc4 key must not be empty");
  const std::vector<ArchiveRecord> records = scan_tree(root);

  ScopedPathLock lock(options.archive);
  std::ofstream out(options.archive, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + options.archive.string());

  const std::vector<std::uint8_t> header = encode_header(records);
  out.write(reinterpret_cast<const char*>(header.data()),
            static_cast<std::streamsize>(header.size()));

  // One continuous keystream across all files, in record order.
  Rc4Stream cipher(key);
  std::vector<fs::path> stack;
  for (const ArchiveRecord& rec : records) {
    stack.resize(rec.depth);
    if (rec.kind == ArchiveRecord::Kind::Directory) {
      stack.push_back(rec.name);
      continue;
    }
    fs::path file = root;
    for (const auto& part : stack) file /= part;
    file /= rec.name;
    std::vector<std::uint8_t> data = read_file(file);
    if (data.size() != rec.size) {
      throw IoError("file changed while archiving: " + file.string());
    }
    cipher.apply(data);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
  }
  out.close();
  if (!out) throw IoError("short write to " + options.archive.string());

  if (options.remove_sources) fs::remove_all(root);
}

void crypt_file_structure(std::string_view key2, const fs::path& archive) {
  if (key2.empty()) throw EmptyKey("rc4 key must not be empty");
  if (!fs::is_regular_file(archive)) {
    throw MissingStructureFile("no Structure file at " + archive.string());
  }
  ScopedPathLock lock(archive);
  std::vector<std::uint8_t> data = read_file(archive);
  Rc4Stream(key2).apply(data);
  write_file(archive, data);
}

void restore_data(std::string_view key, const RestoreOptions& options) {
  if (key.empty()) throw EmptyKey("rc4 key must not be empty");
  if (!fs::is_regular_file(options.archive)) {
    throw MissingStructureFile("no Structure file at " +
                               options.archive.string());
  }
  ScopedPathLock lock(options.archive);
  const std::vector<std::uint8_t> bytes = read_file(options.archive);
  auto [records, header_size] = decode_header(bytes);
  std::span<const std::uint8_t> payload(bytes.data() + header_size,
                                        bytes.size() - header_size);

  std::uint64_t total = 0;
  for (const ArchiveRecord& rec : records) {
    if (rec.kind == ArchiveRecord::Kind::File) total += rec.size;
  }
  if (payload.size() < total) {
    throw SizeMismatch("payload holds " + std::to_string(payload.size()) +
                       " bytes, records need " + std::to_string(total));
  }

  fs::create_directories(options.out_root);
  Rc4Stream cipher(key);
  std::vector<fs::path> stack;
  std::size_t offset = 0;
  for (const ArchiveRecord& rec : records) {
    if (rec.depth > stack.size()) {
      throw CorruptHeader("record depth jumps past its parent");
    }
    stack.resize(rec.depth);
    fs::path target = options.out_root;
    for (const auto& part : stack) target /= part;
    target /= rec.name;
    if (rec.kind == ArchiveRecord::Kind::Directory) {
      fs::create_directories(target);
      stack.push_back(rec.name);
    } else {
      std::vector<std::uint8_t> data(payload.begin() + offset,
                                     payload.begin() + offset + rec.size);
      offset += rec.size;
      cipher.apply(data);
      write_file(target, data);
    }
  }
  fs::remove(options.archive);
}

}  // namespace vitalwire::archive
