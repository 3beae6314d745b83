#include "fall_sim.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>

namespace testsupport {
namespace {

constexpr double kPi = 3.14159265358979323846;

class TraceBuilder {
 public:
  TraceBuilder(std::uint64_t seed, double sample_rate_hz)
      : rng_(seed), rate_(sample_rate_hz) {}

  std::mt19937_64& rng() { return rng_; }
  double rate() const { return rate_; }

  void set_posture(double x, double y, double z) { cur_ = {x, y, z}; }

  void emit(double x, double y, double z) {
    std::uniform_int_distribution<int> noise(-2, 2);
    auto put = [&](double v) {
      const long q = std::lround(v) + noise(rng_);
      xyz_.push_back(static_cast<std::uint8_t>(std::clamp(q, 0L, 255L)));
    };
    put(x);
    put(y);
    put(z);
    cur_ = {x, y, z};
  }

  void emit_cur() { emit(cur_[0], cur_[1], cur_[2]); }

  void hold(double seconds) {
    const auto n = static_cast<std::size_t>(std::lround(seconds * rate_));
    for (std::size_t k = 0; k < n; ++k) emit_cur();
  }

  void ramp_to(const std::array<double, 3>& target, std::size_t samples) {
    const std::array<double, 3> from = cur_;
    for (std::size_t k = 1; k <= samples; ++k) {
      const double u = static_cast<double>(k) / samples;
      emit(from[0] + (target[0] - from[0]) * u,
           from[1] + (target[1] - from[1]) * u,
           from[2] + (target[2] - from[2]) * u);
    }
  }

  std::vector<std::uint8_t> take() { return std::move(xyz_); }

 private:
  std::mt19937_64 rng_;
  double rate_;
  std::array<double, 3> cur_ = {127, 127, 175};
  std::vector<std::uint8_t> xyz_;
};

double pick_rest(std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(0, 1)(rng) ? 175.0 : 80.0;
}

}  // namespace

AccTrace make_fall_trace(std::uint64_t seed, double sample_rate_hz,
                         double hold_seconds) {
  TraceBuilder b(seed, sample_rate_hz);
  auto& rng = b.rng();
  std::uniform_real_distribution<double> rest_s(3.0, 5.0);
  std::uniform_int_distribution<std::size_t> trans_n(4, 8);
  std::uniform_real_distribution<double> slack_s(1.2, 2.0);

  const double z0 = pick_rest(rng);
  b.set_posture(127, 127, z0);
  b.hold(rest_s(rng));

  std::array<double, 3> target{};
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0:  // flip: gravity axis reverses
      target = {127, 127, z0 == 175.0 ? 80.0 : 175.0};
      break;
    case 1:  // roll onto X
      target = {pick_rest(rng), 127, 127};
      break;
    default:  // roll onto Y
      target = {127, pick_rest(rng), 127};
      break;
  }
  b.ramp_to(target, trans_n(rng));
  b.hold(hold_seconds + slack_s(rng));

  return {b.take(), true};
}

AccTrace make_non_fall_trace(NonFallKind kind, std::uint64_t seed,
                             double sample_rate_hz, double hold_seconds) {
  TraceBuilder b(seed, sample_rate_hz);
  auto& rng = b.rng();
  const double z0 = pick_rest(rng);

  switch (kind) {
    case NonFallKind::WalkingNoise: {
      // gentle oscillation, well below the variation trigger
      const double seconds =
          std::uniform_real_distribution<double>(12.0, 16.0)(rng);
      const double step_hz =
          std::uniform_real_distribution<double>(1.2, 1.8)(rng);
      const auto n =
          static_cast<std::size_t>(std::lround(seconds * sample_rate_hz));
      for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) / sample_rate_hz;
        b.emit(127 + 4.0 * std::sin(2 * kPi * step_hz * t + 1.0),
               127 + 4.0 * std::cos(2 * kPi * step_hz * t),
               z0 + 6.0 * std::sin(2 * kPi * step_hz * t));
      }
      break;
    }
    case NonFallKind::Bounce: {
      // hard but symmetric knock: the window mean stays on the other side
      // of the baseline from the extremum
      b.set_posture(127, 127, z0);
      b.hold(std::uniform_real_distribution<double>(3.0, 4.0)(rng));
      const double away = z0 == 175.0 ? 1.0 : -1.0;  // opposite of a fall
      for (int k = 0; k < 3; ++k) b.emit(127, 127, z0 + away * 45.0);
      for (int k = 0; k < 2; ++k) b.emit(127, 127, z0 - away * 35.0);
      b.set_posture(127, 127, z0);
      b.hold(hold_seconds + 1.5);
      break;
    }
    case NonFallKind::SlowPostureChange: {
      // turning over: the same flat-to-flat move a fall makes, but slow
      b.set_posture(127, 127, z0);
      b.hold(std::uniform_real_distribution<double>(3.0, 4.0)(rng));
      b.ramp_to({127, 127, z0 == 175.0 ? 80.0 : 175.0}, 95);
      b.hold(hold_seconds + 2.0);
      break;
    }
    case NonFallKind::ShortLie: {
      // a stumble: fall-like swing, but the person gets up slowly well
      // before the hold time passes
      b.set_posture(127, 127, z0);
      b.hold(std::uniform_real_distribution<double>(3.0, 4.0)(rng));
      const double g = pick_rest(rng);
      b.ramp_to({g, 127, 127}, std::uniform_int_distribution<std::size_t>(
                                   4, 8)(rng));
      b.hold(std::uniform_real_distribution<double>(1.5, 2.5)(rng));
      b.ramp_to({127, 127, z0}, 120);  // slow recovery, below the trigger
      b.hold(4.0);
      break;
    }
  }
  return {b.take(), false};
}

std::vector<AccTrace> make_corpus(std::size_t falls, std::size_t non_falls,
                                  std::uint64_t seed) {
  std::vector<AccTrace> corpus;
  corpus.reserve(falls + non_falls);
  for (std::size_t k = 0; k < falls; ++k) {
    corpus.push_back(make_fall_trace(seed * 7919 + k));
  }
  constexpr NonFallKind kinds[] = {
      NonFallKind::WalkingNoise,
      NonFallKind::Bounce,
      NonFallKind::SlowPostureChange,
      NonFallKind::ShortLie,
  };
  for (std::size_t k = 0; k < non_falls; ++k) {
    corpus.push_back(
        make_non_fall_trace(kinds[k % 4], seed * 104729 + k));
  }
  return corpus;
}

}  // namespace testsupport
