#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>

#include "support/synthetic_ecg.hpp"
#include "vitalwire/ecg_id.hpp"
#include "vitalwire/telemetry.hpp"

using namespace vitalwire;
using namespace vitalwire::ecg;
using testsupport::BeatShape;

namespace {

constexpr double kFs = 300.0;
constexpr double kSamplePeriodMs = 1000.0 / kFs;

std::vector<std::vector<double>> gaussian_beats(std::mt19937_64& rng,
                                                const std::vector<double>& mu,
                                                double sigma, std::size_t n) {
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<std::vector<double>> beats;
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> beat(mu);
    for (double& v : beat) v += noise(rng);
    beats.push_back(std::move(beat));
  }
  return beats;
}

}  // namespace

TEST_CASE("ten templates give ten segments") {
  const auto ecg = testsupport::synth_ecg(BeatShape{}, 10, kFs);
  CHECK(segment_beats(ecg, kFs).size() == 10);
}

TEST_CASE("segmentation error cases") {
  CHECK_THROWS_AS(segment_beats(std::vector<double>(300, 0.0), kFs), TooShort);
  CHECK_THROWS_AS(segment_beats(std::vector<double>(1200, 0.42), kFs),
                  NoBeatsFound);
}

TEST_CASE("fiducial durations match the generator to one sample period") {
  BeatShape shape;
  const auto ecg = testsupport::synth_ecg(shape, 6, kFs);
  const auto segments = segment_beats(ecg, kFs);
  REQUIRE(segments.size() == 6);
  // tolerance = one sample period
  for (const auto& seg : segments) {
    CHECK(std::abs(seg.p_duration_ms() - shape.p_dur_ms) <= kSamplePeriodMs);
    CHECK(std::abs(seg.qrs_duration_ms() - shape.qrs_ms()) <= kSamplePeriodMs);
    CHECK(std::abs(seg.ms_between(seg.p_onset, seg.qrs_onset) - shape.pq_ms) <=
          kSamplePeriodMs);
    CHECK(std::abs(seg.ms_between(seg.qrs_onset, seg.t_offset) -
                   shape.qt_ms()) <= kSamplePeriodMs);
    CHECK(seg.rr_ms == doctest::Approx(shape.rr_ms).epsilon(0.01));
  }
}

TEST_CASE("noise gate") {
  SUBCASE("the default template (P=100ms, QRS=80ms) is accepted") {
    const auto ecg = testsupport::synth_ecg(BeatShape{}, 4, kFs);
    for (const auto& seg : segment_beats(ecg, kFs)) {
      CHECK_FALSE(reject_noisy(seg));
    }
  }
  SUBCASE("QRS of 90 ms is accepted") {
    BeatShape shape;
    shape.q_dur_ms = 20;
    shape.r_dur_ms = 50;
    shape.s_dur_ms = 20;
    const auto ecg = testsupport::synth_ecg(shape, 4, kFs);
    for (const auto& seg : segment_beats(ecg, kFs)) {
      CHECK_FALSE(reject_noisy(seg));
    }
  }
  SUBCASE("QRS of 400 ms is rejected") {
    BeatShape shape;
    shape.q_dur_ms = 100;
    shape.r_dur_ms = 200;
    shape.s_dur_ms = 100;
    shape.st_ms = 60;
    const auto ecg = testsupport::synth_ecg(shape, 4, kFs);
    const auto segments = segment_beats(ecg, kFs);
    REQUIRE(!segments.empty());
    for (const auto& seg : segments) CHECK(reject_noisy(seg));
  }
  SUBCASE("rail-clipped beats are rejected") {
    BeatShape shape;
    shape.r_dur_ms = 80;
    shape.r_amp_mv = 6.0;  // clips at +2.66 for a dozen samples
    auto ecg = testsupport::synth_ecg(shape, 4, kFs);
    for (double& v : ecg) {
      v = std::clamp(v, telemetry::kEcgMinMv, telemetry::kEcgMaxMv);
    }
    const auto segments = segment_beats(ecg, kFs);
    REQUIRE(!segments.empty());
    for (const auto& seg : segments) {
      CHECK(seg.saturated_samples > 10);
      CHECK(reject_noisy(seg));
    }
  }
}

TEST_CASE("feature extraction") {
  BeatShape shape;
  const auto ecg = testsupport::synth_ecg(shape, 5, kFs);
  const auto segments = segment_beats(ecg, kFs);
  REQUIRE(segments.size() == 5);
  const auto features = extract_features(segments[2]);
  REQUIRE(features.size() == kFeatureCount);

  SUBCASE("durations and amplitudes match the template") {
    CHECK(std::abs(features[0] - shape.p_dur_ms) <= kSamplePeriodMs);
    CHECK(std::abs(features[1] - shape.pq_ms) <= kSamplePeriodMs);
    CHECK(std::abs(features[2] - shape.qrs_ms()) <= kSamplePeriodMs);
    CHECK(std::abs(features[3] - shape.qt_ms()) <= kSamplePeriodMs);
    CHECK(features[7] == doctest::Approx(shape.rr_ms).epsilon(0.01));
    CHECK(features[8] == doctest::Approx(shape.p_amp_mv).epsilon(0.05));
    CHECK(features[10] == doctest::Approx(shape.r_amp_mv).epsilon(0.05));
    CHECK(features[12] == doctest::Approx(shape.t_amp_mv).epsilon(0.05));
  }
  SUBCASE("the same segment always yields the identical vector") {
    CHECK(extract_features(segments[2]) == features);
  }
  SUBCASE("a time-shifted copy yields the identical vector") {
    std::vector<double> shifted(150, shape.baseline_mv);
    shifted.insert(shifted.end(), ecg.begin(), ecg.end());
    const auto shifted_segments = segment_beats(shifted, kFs);
    REQUIRE(shifted_segments.size() == 5);
    CHECK(extract_features(shifted_segments[2]) == features);
  }
  SUBCASE("amplitude doubling leaves every duration untouched") {
    std::vector<double> doubled(ecg);
    for (double& v : doubled) v *= 2.0;
    const auto doubled_segments = segment_beats(doubled, kFs);
    REQUIRE(doubled_segments.size() == 5);
    const auto doubled_features = extract_features(doubled_segments[2]);
    for (std::size_t k : {0, 1, 2, 3, 4, 5, 6, 7}) {
      CHECK(doubled_features[k] == features[k]);
    }
    // amplitude ratios are scale-free as well
    for (std::size_t k : {19, 20, 21, 22, 23}) {
      CHECK(doubled_features[k] == doctest::Approx(features[k]));
    }
  }
}

TEST_CASE("kyoso feature pairs") {
  std::vector<double> features(kFeatureCount, 0.0);
  features[0] = 100;  // P
  features[1] = 160;  // PQ
  features[2] = 90;   // QRS
  features[3] = 340;  // QT
  const auto pairs = feature_pair_subsets(features);
  REQUIRE(pairs.size() == 6);
  CHECK(pairs[0].name == "P-QRS");
  CHECK(pairs[0].values == std::array<double, 2>{100, 90});
  CHECK(pairs[1].name == "P-PQ");
  CHECK(pairs[1].values == std::array<double, 2>{100, 160});
  CHECK(pairs[2].name == "P-QT");
  CHECK(pairs[3].name == "QRS-PQ");
  CHECK(pairs[4].name == "QRS-QT");
  CHECK(pairs[5].name == "PQ-QT");
  // projections agree with the full vector
  for (const auto& pair : pairs) {
    for (double v : pair.values) {
      CHECK((v == 100 || v == 160 || v == 90 || v == 340));
    }
  }
}

TEST_CASE("mahalanobis distance") {
  SUBCASE("zero displacement is exactly zero") {
    EcgProfile p;
    p.mean = {1.5, -2.0, 3.25};
    p.variance = {0.5, 2.0, 9.0};
    CHECK(mahalanobis(p.mean, p) == 0.0);
  }
  SUBCASE("unit variance reduces to Euclidean") {
    std::vector<double> mean(kFeatureCount, 0.0);
    std::vector<double> var(kFeatureCount, 1.0);
    std::vector<double> x(kFeatureCount, 0.0);
    x[0] = 3.0;
    x[1] = 4.0;
    CHECK(mahalanobis(x, mean, var) == doctest::Approx(5.0).epsilon(1e-12));
  }
  SUBCASE("hand-computed 2-feature case") {
    const std::vector<double> mean = {0.0, 0.0};
    const std::vector<double> var = {4.0, 1.0};
    const std::vector<double> x = {2.0, 3.0};
    CHECK(std::abs(mahalanobis(x, mean, var) - std::sqrt(10.0)) < 1e-12);
  }
  SUBCASE("dimension mismatch") {
    const std::vector<double> a = {1.0, 2.0};
    const std::vector<double> b = {1.0, 2.0, 3.0};
    CHECK_THROWS_AS(mahalanobis(a, b, b), DimensionMismatch);
  }
  SUBCASE("euclidean equality on random vectors") {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> dist(0.0, 10.0);
    for (int iter = 0; iter < 100; ++iter) {
      std::vector<double> x(kFeatureCount), mean(kFeatureCount);
      for (auto& v : x) v = dist(rng);
      for (auto& v : mean) v = dist(rng);
      const std::vector<double> unit(kFeatureCount, 1.0);
      double euclid = 0.0;
      for (std::size_t k = 0; k < kFeatureCount; ++k) {
        euclid += (x[k] - mean[k]) * (x[k] - mean[k]);
      }
      euclid = std::sqrt(euclid);
      CHECK(std::abs(mahalanobis(x, mean, unit) - euclid) < 1e-9);
    }
  }
}

TEST_CASE("enrollment statistics") {
  ProfileStore store;
  SUBCASE("identical beats floor the variance") {
    const std::vector<double> beat = {1.0, 2.0, 3.0};
    const auto& p = store.enroll("a", {beat, beat, beat});
    for (double v : p.variance) CHECK(v == kVarianceFloor);
    CHECK(p.mean == beat);
    CHECK(p.beat_count == 3);
  }
  SUBCASE("v and -v average to zero") {
    const std::vector<double> v = {1.0, -2.0, 5.0};
    std::vector<double> neg(v);
    for (double& x : neg) x = -x;
    const auto& p = store.enroll("b", {v, neg});
    for (double m : p.mean) CHECK(m == 0.0);
  }
  SUBCASE("100 draws land within 3 sigma / 10 of the true mean") {
    std::mt19937_64 rng(42);
    std::vector<double> mu(kFeatureCount);
    for (std::size_t k = 0; k < mu.size(); ++k) mu[k] = 10.0 * k;
    const double sigma = 2.0;
    const auto beats = gaussian_beats(rng, mu, sigma, 100);
    const auto& p = store.enroll("g", beats);
    for (std::size_t k = 0; k < mu.size(); ++k) {
      CHECK(std::abs(p.mean[k] - mu[k]) < 3.0 * sigma / 10.0);
    }
  }
  SUBCASE("too few beats") {
    CHECK_THROWS_AS(store.enroll("x", {{1.0}}), TooFewBeats);
  }
  SUBCASE("duplicate ids need the replace flag") {
    store.enroll("dup", {{1.0}, {2.0}});
    CHECK_THROWS_AS(store.enroll("dup", {{1.0}, {2.0}}), DuplicateId);
    CHECK_NOTHROW(store.enroll("dup", {{5.0}, {7.0}}, /*replace=*/true));
    CHECK(store.profile("dup").mean[0] == 6.0);
  }
}

TEST_CASE("identification") {
  ProfileStore store;
  std::mt19937_64 rng(9);
  const std::vector<double> mu_a(kFeatureCount, 0.0);
  std::vector<double> mu_b(kFeatureCount, 0.0);
  mu_b[0] = 50.0;
  store.enroll("a", gaussian_beats(rng, mu_a, 1.0, 30));
  store.enroll("b", gaussian_beats(rng, mu_b, 1.0, 30));

  SUBCASE("exact mean gives distance zero") {
    const auto [id, d] = store.identify({store.profile("a").mean});
    CHECK(id == "a");
    CHECK(d == 0.0);
  }
  SUBCASE("queries near b resolve to b, and closer than to a") {
    auto query = gaussian_beats(rng, mu_b, 1.0, 5);
    const auto [id, d] = store.identify(query);
    CHECK(id == "b");
    CHECK(d < mahalanobis(mean_vector(query), store.profile("a")));
  }
  SUBCASE("singleton store always answers with its only profile") {
    ProfileStore one;
    one.enroll("only", gaussian_beats(rng, mu_a, 1.0, 5));
    const auto [id, d] = one.identify({mu_b});
    CHECK(id == "only");
    CHECK(d > 0.0);
  }
  SUBCASE("ties break to the lexicographically smaller id") {
    ProfileStore dup;
    const std::vector<double> beat1(kFeatureCount, 1.0);
    const std::vector<double> beat2(kFeatureCount, 3.0);
    dup.enroll("zeta", {beat1, beat2});
    dup.enroll("alpha", {beat1, beat2});
    CHECK(dup.identify({beat1}).first == "alpha");
  }
  SUBCASE("per-beat voting agrees on well-separated data") {
    auto query = gaussian_beats(rng, mu_b, 1.0, 9);
    CHECK(store.identify(query, /*vote_per_beat=*/true).first == "b");
  }
  SUBCASE("empty store") {
    ProfileStore empty;
    CHECK_THROWS_AS(empty.identify({mu_a}), EmptyStore);
  }
}

TEST_CASE("identify is invariant under global affine rescaling") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> offset(0.0, 5.0);
  std::uniform_real_distribution<double> gain(0.5, 2.0);

  ProfileStore store;
  std::vector<std::vector<double>> queries;
  for (int p = 0; p < 6; ++p) {
    std::vector<double> mu(kFeatureCount);
    for (auto& v : mu) v = offset(rng) * 10.0;
    store.enroll("p" + std::to_string(p), gaussian_beats(rng, mu, 1.0, 20));
    queries.push_back(gaussian_beats(rng, mu, 1.0, 1)[0]);
  }

  std::vector<double> a(kFeatureCount), b(kFeatureCount);
  for (auto& v : a) v = gain(rng);
  for (auto& v : b) v = offset(rng);

  // Rebuild each profile with mean' = a*mean + b and var' = a^2 * var by
  // enrolling the two beats mean' +- sqrt(var'/2), which reproduce both
  // statistics exactly.
  ProfileStore scaled;
  for (const auto& [id, profile] : store.profiles()) {
    std::vector<double> hi(kFeatureCount), lo(kFeatureCount);
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      const double mean = a[k] * profile.mean[k] + b[k];
      const double spread =
          std::sqrt(a[k] * a[k] * profile.variance[k] / 2.0);
      hi[k] = mean + spread;
      lo[k] = mean - spread;
    }
    scaled.enroll(id, {hi, lo});
  }

  for (const auto& query : queries) {
    std::vector<double> scaled_query(kFeatureCount);
    for (std::size_t k = 0; k < kFeatureCount; ++k) {
      scaled_query[k] = a[k] * query[k] + b[k];
    }
    CHECK(store.identify({query}).first ==
          scaled.identify({scaled_query}).first);
  }
}

TEST_CASE("verification") {
  ProfileStore store;
  std::mt19937_64 rng(5);
  const std::vector<double> mu(kFeatureCount, 7.0);
  store.enroll("v", gaussian_beats(rng, mu, 1.0, 40));

  CHECK(store.verify("v", {store.profile("v").mean}, 0.001));
  CHECK_FALSE(store.verify("v", {std::vector<double>(kFeatureCount, 9.0)},
                           0.0));
  CHECK_THROWS_AS(store.verify("nobody", {mu}, 1.0), UnknownId);
}

TEST_CASE("the chi-squared 99th percentile threshold accepts same-profile "
          "draws") {
  // sqrt(42.98) for 24 degrees of freedom; a genuine draw should pass the
  // verification at this distance at least 95% of the time
  const double threshold = std::sqrt(42.98);
  ProfileStore store;
  std::mt19937_64 rng(1234);
  std::vector<double> mu(kFeatureCount);
  for (std::size_t k = 0; k < mu.size(); ++k) {
    mu[k] = 3.0 * static_cast<double>(k) - 20.0;
  }
  store.enroll("mc", gaussian_beats(rng, mu, 1.5, 200));

  std::size_t accepted = 0;
  constexpr std::size_t kTrials = 1000;
  for (std::size_t t = 0; t < kTrials; ++t) {
    accepted += store.verify("mc", gaussian_beats(rng, mu, 1.5, 1), threshold);
  }
  CHECK(accepted >= kTrials * 95 / 100);
}

TEST_CASE("profile store persists exactly") {
  ProfileStore store;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> dist(0.0, 3.0);
  for (int p = 0; p < 3; ++p) {
    std::vector<double> mu(kFeatureCount);
    for (auto& v : mu) v = dist(rng);
    store.enroll("person" + std::to_string(p),
                 gaussian_beats(rng, mu, 0.5, 10));
  }

  const auto path =
      std::filesystem::temp_directory_path() / "vitalwire_store_test.txt";
  store.save(path);
  const ProfileStore loaded = ProfileStore::load(path);
  REQUIRE(loaded.size() == store.size());
  for (const auto& [id, profile] : store.profiles()) {
    const EcgProfile& other = loaded.profile(id);
    CHECK(other.mean == profile.mean);
    CHECK(other.variance == profile.variance);
    CHECK(other.beat_count == profile.beat_count);
  }
  std::filesystem::remove(path);
}

TEST_CASE("closed loop: enroll from ECG, identify the enrollment mean") {
  ProfileStore store;
  std::vector<BeatShape> shapes(3);
  shapes[0] = {};
  shapes[1].pq_ms = 200;
  shapes[1].r_amp_mv = 0.9;
  shapes[1].rr_ms = 700;
  shapes[2].p_dur_ms = 80;
  shapes[2].t_dur_ms = 200;
  shapes[2].t_amp_mv = 0.45;

  for (std::size_t p = 0; p < shapes.size(); ++p) {
    const auto ecg =
        testsupport::synth_ecg(shapes[p], 12, kFs, 0.004, 100 + p);
    const auto beats = extract_accepted_features(ecg, kFs);
    REQUIRE(beats.size() >= 8);
    store.enroll("person" + std::to_string(p), beats);
  }

  for (std::size_t p = 0; p < shapes.size(); ++p) {
    const std::string expected = "person" + std::to_string(p);
    // the enrollment mean itself
    CHECK(store.identify({store.profile(expected).mean}).first == expected);
    // and a fresh recording of the same person
    const auto ecg =
        testsupport::synth_ecg(shapes[p], 6, kFs, 0.004, 200 + p);
    const auto beats = extract_accepted_features(ecg, kFs);
    REQUIRE(!beats.empty());
    CHECK(store.identify(beats).first == expected);
  }
}
