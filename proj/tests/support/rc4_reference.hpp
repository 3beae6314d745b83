#pragma once

// Independent RC4 reference, written directly from the KSA/PRGA pseudocode
// and kept separate from the library implementation on purpose: tests
// compare the two byte-for-byte.

#include <cstdint>
#include <string_view>
#include <vector>

namespace testsupport {

inline std::vector<std::uint8_t> rc4_reference_keystream(
    std::string_view key, std::size_t length) {
  // KSA
  unsigned char S[256];
  for (int i = 0; i < 256; ++i) S[i] = static_cast<unsigned char>(i);
  {
    int j = 0;
    for (int i = 0; i < 256; ++i) {
      j = (j + S[i] + static_cast<unsigned char>(key[i % key.size()])) % 256;
      unsigned char tmp = S[i];
      S[i] = S[j];
      S[j] = tmp;
    }
  }
  // PRGA
  std::vector<std::uint8_t> out;
  out.reserve(length);
  int i = 0, j = 0;
  while (out.size() < length) {
    i = (i + 1) % 256;
    j = (j + S[i]) % 256;
    unsigned char tmp = S[i];
    S[i] = S[j];
    S[j] = tmp;
    out.push_back(S[(S[i] + S[j]) % 256]);
  }
  return out;
}

inline std::vector<std::uint8_t> rc4_reference_apply(
    std::string_view key, const std::vector<std::uint8_t>& data) {
  const std::vector<std::uint8_t> ks =
      rc4_reference_keystream(key, data.size());
  std::vector<std::uint8_t> out(data.size());
  for (std::size_t k = 0; k < data.size(); ++k) out[k] = data[k] ^ ks[k];
  return out;
}

}  // namespace testsupport
