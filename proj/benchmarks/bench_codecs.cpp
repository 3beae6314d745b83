#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "vitalwire/badge.hpp"
#include "vitalwire/cryptarchive.hpp"
#include "vitalwire/ecg_id.hpp"
#include "vitalwire/wire_protocol.hpp"

namespace {

vitalwire::wire::AlivePacket make_packet(std::size_t m, std::size_t n) {
  vitalwire::wire::AlivePacket p;
  p.ecg.samples.resize(m, 0x42);
  p.acc.samples.resize(n - n % 3, 0x7F);
  return p;
}

void BM_EncodePacket(benchmark::State& state) {
  const auto packet = make_packet(72, 54);
  for (auto _ : state) {
    benchmark::DoNotOptimize(vitalwire::wire::encode_packet(packet));
  }
  state.SetBytesProcessed(state.iterations() * 143);
}
BENCHMARK(BM_EncodePacket);

void BM_StreamParserFeed(benchmark::State& state) {
  std::vector<std::uint8_t> stream;
  for (int k = 0; k < 64; ++k) {
    const auto bytes = vitalwire::wire::encode_packet(make_packet(72, 54));
    stream.insert(stream.end(), bytes.begin(), bytes.end());
  }
  for (auto _ : state) {
    vitalwire::wire::StreamParser parser;
    benchmark::DoNotOptimize(parser.feed(stream));
  }
  state.SetBytesProcessed(state.iterations() * stream.size());
}
BENCHMARK(BM_StreamParserFeed);

void BM_Rc4Throughput(benchmark::State& state) {
  std::vector<std::uint8_t> data(state.range(0), 0x55);
  for (auto _ : state) {
    vitalwire::archive::Rc4Stream cipher{std::string_view("bench-key")};
    cipher.apply(data);
    benchmark::DoNotOptimize(data.data());
  }
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Rc4Throughput)->Arg(1 << 10)->Arg(1 << 16)->Arg(1 << 20);

void BM_Standard26RoundTrip(benchmark::State& state) {
  std::uint32_t id = 1;
  for (auto _ : state) {
    const std::uint32_t word = vitalwire::badge::encode_standard26(
        id & 0xFF, id & 0xFFFF);
    benchmark::DoNotOptimize(vitalwire::badge::decode_standard26(word));
    id = id % 65535 + 1;
  }
}
BENCHMARK(BM_Standard26RoundTrip);

void BM_Mahalanobis(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> x(vitalwire::ecg::kFeatureCount);
  std::vector<double> mean(vitalwire::ecg::kFeatureCount);
  std::vector<double> var(vitalwire::ecg::kFeatureCount, 2.0);
  for (auto& v : x) v = dist(rng);
  for (auto& v : mean) v = dist(rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(vitalwire::ecg::mahalanobis(x, mean, var));
  }
}
BENCHMARK(BM_Mahalanobis);

}  // namespace

BENCHMARK_MAIN();
