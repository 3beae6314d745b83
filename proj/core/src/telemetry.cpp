// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#include "vitalwire/telemetry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace vitalwire::telemetry {
namespace {

constexpr int kRestHigh = 175;  // +1 g on the gravity axis
constexpr int kRestLow = 80;    // -1 g
constexpr int kRestMid = 127;   // 0 g
constexpr int kPostureTolerance = 16;
constexpr std::size_t kBaselineSamples = 8;

double median(std::vector<double> values) {
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double hi = values[mid];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(values.begin(), values.begin() + mid);
  return (lo + hi) / 2.0;
}

int gravity_score(double value) {
  return static_cast<int>(
      std::min(std::abs(value - kRestHigh), std::abs(value - kRestLow)));
}

}  // namespace

double raw_to_mv(int raw) {
  if (raw < 0 || raw > 255) throw OutOfRange("ecg raw sample outside 0..255");
  const double t = raw / 255.0;
  return kEcgMinMv * (1.0 - t) + kEcgMaxMv * t;
}

double raw_to_g(int raw) {
  if (raw < 0 || raw > 255) throw OutOfRange("acc raw sample outside 0..255");
  const double t = raw / 255.0;
  return kAccMinG * (1.0 - t) + kAccMaxG * t;
}

std::vector<std::size_t> detect_r_peaks(std::span<const double> ecg_mv,
                                        double sample_rate_hz) {
  if (sample_rate_hz <= 0) throw BadSampleRate("sample rate must be positive");
  const std::size_t n = ecg_mv.size();
  if (n < 3) return {};

  std::vector<double> s(ecg_mv.begin(), ecg_mv.end());
  const double base = median(s);
  for (double& v : s) v -= base;

  // Max over a 2 s window centered on each sample, via a monotonic deque.
  const std::size_t win =
      std::max<std::size_t>(1, static_cast<std::size_t>(2.0 * sample_rate_hz));
  const std::size_t refractory = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::lround(0.2 * sample_rate_hz)));

  std::vector<std::size_t> peaks;
  std::deque<std::size_t> window_max;  // indices, values decreasing
  std::size_t filled = 0;              // indices already pushed into the deque
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= win ? i - win : 0;
    const std::size_t hi = std::min(n, i + win + 1);
    for (; filled < hi; ++filled) {
      while (!window_max.empty() && s[window_max.back()] <= s[filled]) {
        window_max.pop_back();
      }
      window_max.push_back(filled);
    }
    while (window_max.front() < lo) window_max.pop_front();

    const double rolling_max = s[window_max.front()];
    if (rolling_max <= 0.0) continue;
    const double threshold = 0.6 * rolling_max;

    const bool local_max =
        i > 0 && i + 1 < n && s[i] >= s[i - 1] && s[i] > s[i + 1];
    if (!local_max || s[i] < threshold) continue;

    if (!peaks.empty() && i - peaks.back() < refractory) {
      if (s[i] > s[peaks.back()]) peaks.back() = i;  // keep the taller peak
    } else {
      peaks.push_back(i);
    }
  }
  return peaks;
}

std::vector<double> heart_rate(std::span<const double> ecg_mv,
                               double sample_rate_hz) {
  if (sample_rate_hz != 150.0 && sample_rate_hz != 300.0) {
    throw BadSampleRate("ecg sample rate must be 150 or 300 Hz");
  }
  const std::vector<std::size_t> peaks = detect_r_peaks(ecg_mv, sample_rate_hz);
  if (peaks.size() < 2) return {};
  std::vector<double> bpm;
  bpm.reserve(peaks.size() - 1);
  for (std::size_t k = 1; k < peaks.size(); ++k) {
    bpm.push_back(60.0 * sample_rate_hz /
                  static_cast<double>(peaks[k] - peaks[k - 1]));
  }
  return bpm;
}

FallDetector::FallDetector(FallDetectorConfig config) : config_(config) {
  if (config_.window < 1) throw std::invalid_argument("window must be >= 1");
  if (config_.delta_threshold <= 0) {
    throw std::invalid_argument("delta_threshold must be positive");
  }
  if (config_.hold_seconds <= 0 || config_.sample_rate_hz <= 0) {
    throw std::invalid_argument("hold_seconds and sample_rate_hz must be positive");
  }
}

double FallDetector::baseline_median(Axis axis) const {
  std::vector<double> vals;
  vals.reserve(recent_.size());
  for (const auto& t : recent_) {
    vals.push_back(t[static_cast<std::size_t>(axis)]);
  }
  return median(std::move(vals));
}

Axis FallDetector::pick_tracked_axis() const {
  Axis best = Axis::X;
  int best_score = gravity_score(baseline_median(Axis::X));
  for (Axis axis : {Axis::Y, Axis::Z}) {
    const int score = gravity_score(baseline_median(axis));
    if (score <= best_score) {  // prefer Z on ties, the canonical rest axis
      best_score = score;
      best = axis;
    }
  }
  return best;
}

bool FallDetector::horizontal(const std::array<std::uint8_t, 3>& v) const {
  for (std::size_t g = 0; g < 3; ++g) {
    if (gravity_score(v[g]) >= kPostureTolerance) continue;
    bool others_flat = true;
    for (std::size_t b = 0; b < 3; ++b) {
      if (b != g && std::abs(v[b] - kRestMid) >= kPostureTolerance) {
        others_flat = false;
        break;
      }
    }
    if (others_flat) return true;
  }
  return false;
}

void FallDetector::finalize_pending(bool confirmed) {
  events_.back().confirmed = confirmed;
  pending_ = false;
  phase_ = Phase::Idle;
}

void FallDetector::push(std::uint8_t x, std::uint8_t y, std::uint8_t z) {
  const std::array<std::uint8_t, 3> v = {x, y, z};

  auto append_window = [&] {
    window_.push_back(v[static_cast<std::size_t>(tracked_)]);
    if (window_.size() < config_.window) return;

    const bool rest_low =
        std::abs(baseline_ - kRestLow) < std::abs(baseline_ - kRestHigh);
    const int extremum =
        rest_low ? *std::max_element(window_.begin(), window_.end())
                 : *std::min_element(window_.begin(), window_.end());
    const double mean =
        std::accumulate(window_.begin(), window_.end(), 0.0) /
        static_cast<double>(window_.size());

    const bool big_enough =
        std::abs(extremum - baseline_) >= config_.delta_threshold;
    const bool mean_follows = (mean > baseline_ && extremum > baseline_) ||
                              (mean < baseline_ && extremum < baseline_);
    if (big_enough && mean_follows) {
      events_.push_back({tracked_, static_cast<int>(std::lround(baseline_)),
                         extremum, mean, trigger_index_, false});
      pending_ = true;
      hold_needed_ = std::max<std::size_t>(
          1, static_cast<std::size_t>(
                 std::lround(config_.hold_seconds * config_.sample_rate_hz)));
      hold_count_ = 0;
      settle_left_ = hold_needed_;
      settled_ = false;
      phase_ = Phase::Confirming;
    } else {
      phase_ = Phase::Idle;
    }
  };

  switch (phase_) {
    case Phase::Seeding:
      break;
    case Phase::Idle: {
      tracked_ = pick_tracked_axis();
      baseline_ = baseline_median(tracked_);
      const double sample = v[static_cast<std::size_t>(tracked_)];
      if (std::abs(sample - baseline_) > config_.delta_threshold / 2.0) {
        window_.clear();
        trigger_index_ = index_;
        phase_ = Phase::Windowing;
        append_window();
      }
      break;
    }
    case Phase::Windowing:
      append_window();
      break;
    case Phase::Confirming: {
      const bool flat = horizontal(v);
      if (!settled_) {
        if (flat) {
          settled_ = true;
          hold_count_ = 1;
          if (hold_count_ >= hold_needed_) finalize_pending(true);
        } else if (--settle_left_ == 0) {
          finalize_pending(false);
        }
      } else if (flat) {
        if (++hold_count_ >= hold_needed_) finalize_pending(true);
      } else {
        finalize_pending(false);
      }
      break;
    }
  }

  recent_.push_back(v);
  if (recent_.size() > kBaselineSamples) recent_.pop_front();
  if (phase_ == Phase::Seeding && recent_.size() == kBaselineSamples) {
    phase_ = Phase::Idle;
  }
  ++index_;
}

std::vector<FallEvent> FallDetector::finish() {
  if (pending_) finalize_pending(false);  // stream ended before the hold
  if (phase_ == Phase::Windowing) phase_ = Phase::Idle;
  return events_;
}

std::vector<FallEvent> detect_falls(std::span<const std::uint8_t> xyz,
                                    const FallDetectorConfig& config) {
  if (xyz.size() % 3 != 0) {
    throw IncompleteTriplet("sample count not a multiple of 3");
  }
  FallDetector detector(config);
  for (std::size_t i = 0; i < xyz.size(); i += 3) {
    detector.push(xyz[i], xyz[i + 1], xyz[i + 2]);
  }
  return detector.finish();
}

}  // namespace vitalwire::telemetry
