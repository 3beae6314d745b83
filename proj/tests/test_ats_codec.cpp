#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "vitalwire/ats_codec.hpp"

using namespace vitalwire;
using namespace vitalwire::ats;

namespace {

AtsFile two_channel_file(std::size_t blocks) {
  AtsFile file;
  file.header.channels = 2;
  file.header.block_len = 2 + 6;
  file.header.num_data_blocks = static_cast<std::uint32_t>(blocks);
  file.header.date = {2005, 1, 31};
  file.header.time = {12, 34, 56};
  file.channel_descs = {ChannelDescription::status(),
                        ChannelDescription::acc3(6)};
  for (std::size_t b = 0; b < blocks; ++b) {
    DataBlock block;
    block.channel_packets.push_back(
        {static_cast<std::uint8_t>(b), 200});  // status bits + battery
    block.channel_packets.push_back({10, 20, 30, 40, 50, 60});
    file.blocks.push_back(std::move(block));
  }
  return file;
}

}  // namespace

TEST_CASE("minimal file is 128 + 32 bytes") {
  AtsFile file;
  file.header.channels = 1;
  file.header.block_len = 2;
  file.header.num_data_blocks = 0;
  file.channel_descs = {ChannelDescription::status()};
  const auto bytes = encode_ats(file);
  CHECK(bytes.size() == 160);
  CHECK(bytes[0] == 0x41);
  CHECK(bytes[1] == 0x54);
  CHECK(bytes[2] == 0x53);
  CHECK(bytes[3] == 0x46);
  CHECK(bytes[4] == 0x00);
}

TEST_CASE("round-trip: decode(encode(f)) == f, byte-exact re-encode") {
  const AtsFile file = two_channel_file(3);
  const auto bytes = encode_ats(file);
  const AtsFile back = decode_ats(bytes);
  CHECK(back == file);
  CHECK(encode_ats(back) == bytes);
}

TEST_CASE("date 2005-01-31 encodes and round-trips") {
  const AtsFile file = two_channel_file(0);
  const AtsFile back = decode_ats(encode_ats(file));
  CHECK(back.header.date == AtsDate{2005, 1, 31});
  CHECK(back.header.time == AtsTime{12, 34, 56});
}

TEST_CASE("header validation") {
  SUBCASE("month 0 is rejected at encode") {
    AtsFile file = two_channel_file(0);
    file.header.date.month = 0;
    CHECK_THROWS_AS(encode_ats(file), InvalidDate);
  }
  SUBCASE("month 13 is rejected at decode") {
    AtsFile file = two_channel_file(0);
    auto bytes = encode_ats(file);
    bytes[16] = 13;
    CHECK_THROWS_AS(decode_ats(bytes), BadHeader);
  }
  SUBCASE("wrong magic") {
    auto bytes = encode_ats(two_channel_file(0));
    bytes[3] = 'G';  // "ATSG"
    CHECK_THROWS_AS(decode_ats(bytes), BadMagic);
  }
  SUBCASE("unknown channel type") {
    auto bytes = encode_ats(two_channel_file(0));
    bytes[128] = 0x99;
    CHECK_THROWS_AS(decode_ats(bytes), BadChannelType);
  }
  SUBCASE("bad (type, format) pair") {
    auto bytes = encode_ats(two_channel_file(0));
    bytes[128 + 32 + 1] = 0x07;  // acc3 with format 7
    CHECK_THROWS_AS(decode_ats(bytes), BadChannelType);
  }
  SUBCASE("packet lengths must sum to block_len") {
    AtsFile file = two_channel_file(1);
    file.header.block_len = 9;
    CHECK_THROWS_AS(encode_ats(file), BlockSizeMismatch);
  }
}

TEST_CASE("declared block count must be present") {
  AtsFile file = two_channel_file(2);
  auto bytes = encode_ats(file);
  bytes.resize(bytes.size() - 3);  // cut into the second block
  CHECK_THROWS_AS(decode_ats(bytes), TruncatedBlock);
}

TEST_CASE("unknown block count reads until EOF and reports the partial tail") {
  AtsFile file = two_channel_file(2);
  file.header.num_data_blocks = 0;
  auto bytes = encode_ats(file);
  bytes.resize(bytes.size() - 3);
  const AtsFile back = decode_ats(bytes);
  CHECK(back.blocks.size() == 1);
  CHECK(back.trailing_partial_bytes == 8 - 3);
}

TEST_CASE("oversized header_len is honored by skipping the excess") {
  const AtsFile file = two_channel_file(1);
  auto bytes = encode_ats(file);
  // grow the main header by 16 reserved bytes
  std::vector<std::uint8_t> grown(bytes.begin(), bytes.begin() + 128);
  grown.insert(grown.end(), 16, 0);
  grown.insert(grown.end(), bytes.begin() + 128, bytes.end());
  grown[5] = 128 + 16;
  const AtsFile back = decode_ats(grown);
  CHECK(back.blocks == file.blocks);
}

TEST_CASE("samples concatenate packets across blocks in order") {
  AtsFile file;
  file.header.channels = 1;
  file.header.block_len = 4;
  file.header.num_data_blocks = 2;
  file.channel_descs = {ChannelDescription::ecg_300(4)};
  file.blocks.push_back({{{1, 2, 3, 4}}});
  file.blocks.push_back({{{5, 6, 7, 8}}});

  CHECK(samples(file, 0) == std::vector<std::uint8_t>{1, 2, 3, 4, 5, 6, 7, 8});
  CHECK_THROWS_AS(samples(file, 1), BadChannelIndex);

  AtsFile none = file;
  none.blocks.clear();
  none.header.num_data_blocks = 0;
  CHECK(samples(none, 0).empty());
}

TEST_CASE("acc3 channels group into XYZ triplets") {
  const AtsFile file = two_channel_file(1);
  const auto triplets = acc_triplets(file, 1);
  REQUIRE(triplets.size() == 2);
  CHECK(triplets[0] == std::array<std::uint8_t, 3>{10, 20, 30});
  CHECK(triplets[1] == std::array<std::uint8_t, 3>{40, 50, 60});
  CHECK_THROWS_AS(acc_triplets(file, 0), BadChannelType);
}

TEST_CASE("channel sampling rates follow the (type, format) table") {
  CHECK(sample_rate_hz(ChannelDescription::ecg_300(100)) == 300.0);
  CHECK(sample_rate_hz(ChannelDescription::ecg_150(100)) == 150.0);
  CHECK(sample_rate_hz(ChannelDescription::acc3(9)) == 75.0);
  CHECK(sample_rate_hz(ChannelDescription::acc2(6)) == 75.0);
  CHECK_FALSE(sample_rate_hz(ChannelDescription::status()).has_value());
}

TEST_CASE("status packets are pinned to 2 bytes") {
  AtsFile file = two_channel_file(0);
  file.channel_descs[0].packet_len = 3;
  file.header.block_len = 3 + 6;
  CHECK_THROWS_AS(encode_ats(file), BadChannelType);
}

TEST_CASE("randomized files round-trip") {
  std::mt19937_64 rng(21);
  for (int iter = 0; iter < 50; ++iter) {
    AtsFile file;
    const std::size_t channels = 1 + rng() % 4;
    std::uint16_t block_len = 0;
    for (std::size_t c = 0; c < channels; ++c) {
      switch (rng() % 4) {
        case 0:
          file.channel_descs.push_back(ChannelDescription::status());
          break;
        case 1:
          file.channel_descs.push_back(
              ChannelDescription::ecg_150(1 + rng() % 32));
          break;
        case 2:
          file.channel_descs.push_back(
              ChannelDescription::ecg_300(1 + rng() % 32));
          break;
        default:
          file.channel_descs.push_back(
              ChannelDescription::acc3(3 * (1 + rng() % 8)));
          break;
      }
      block_len = static_cast<std::uint16_t>(
          block_len + file.channel_descs.back().packet_len);
    }
    file.header.channels = static_cast<std::uint8_t>(channels);
    file.header.block_len = block_len;
    const std::size_t blocks = rng() % 5;
    file.header.num_data_blocks = static_cast<std::uint32_t>(blocks);
    file.header.date = {static_cast<std::uint16_t>(1990 + rng() % 40),
                        static_cast<std::uint8_t>(1 + rng() % 12),
                        static_cast<std::uint8_t>(1 + rng() % 31)};
    file.header.time = {static_cast<std::uint8_t>(rng() % 24),
                        static_cast<std::uint8_t>(rng() % 60),
                        static_cast<std::uint8_t>(rng() % 60)};
    for (std::size_t b = 0; b < blocks; ++b) {
      DataBlock block;
      for (const auto& desc : file.channel_descs) {
        std::vector<std::uint8_t> packet(desc.packet_len);
        for (auto& byte : packet) byte = static_cast<std::uint8_t>(rng());
        block.channel_packets.push_back(std::move(packet));
      }
      file.blocks.push_back(std::move(block));
    }
    const auto bytes = encode_ats(file);
    const AtsFile back = decode_ats(bytes);
    REQUIRE(back == file);
    REQUIRE(encode_ats(back) == bytes);
  }
}
