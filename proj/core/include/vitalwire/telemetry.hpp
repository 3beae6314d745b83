// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "vitalwire/error.hpp"

namespace vitalwire::telemetry {

struct OutOfRange final : Error {
  using Error::Error;
};
struct BadSampleRate final : Error {
  using Error::Error;
};
struct IncompleteTriplet final : Error {
  using Error::Error;
};

inline constexpr double kEcgMinMv = -2.66;
inline constexpr double kEcgMaxMv = 2.66;
inline constexpr double kAccMinG = -2.7;
inline constexpr double kAccMaxG = 2.7;

/// Affine map of a raw ECG sample: 0 -> -2.66 mV, 255 -> +2.66 mV.
double raw_to_mv(int raw);

/// Affine map of a raw accelerometer sample: 0 -> -2.7 g, 255 -> +2.7 g.
double raw_to_g(int raw);

/// R-peak indices: local maxima above 0.6x the maximum of the
/// baseline-removed signal over the 2 s window around each sample, with a
/// 200 ms refractory period. Invariant under uniform amplitude scaling.
std::vector<std::size_t> detect_r_peaks(std::span<const double> ecg_mv,
                                        double sample_rate_hz);

/// Instantaneous beats-per-minute series, one value per R-R interval.
/// Empty when fewer than two peaks are found. sample_rate_hz must be 150
/// or 300 (the two rates the monitor emits).
std::vector<double> heart_rate(std::span<const double> ecg_mv,
                               double sample_rate_hz);

enum class Axis : std::uint8_t { X = 0, Y = 1, Z = 2 };

struct FallDetectorConfig {
  std::size_t window = 23;    // samples buffered after a variation
  int delta_threshold = 30;   // raw counts; ~0.64 g
  double hold_seconds = 8.0;  // horizontal hold needed to confirm
  double sample_rate_hz = 75.0;
};

struct FallEvent {
  Axis trigger_axis = Axis::Z;
  int baseline_raw = 0;   // median of the 8 samples before the variation
  int extremum_raw = 0;   // window extremum in the orientation's direction
  double window_mean = 0.0;
  std::size_t sample_index = 0;  // triplet index of the triggering sample
  bool confirmed = false;        // posture stayed horizontal for hold_seconds
};

/// Stateful fall detector over an interleaved X,Y,Z raw stream.
///
/// Tracks the axis whose raw value sits nearest the gravity rest points
/// (175 or 80). A variation beyond delta_threshold/2 from the 8-sample
/// median baseline opens a window; the window extremum is taken downward
/// when the axis rests near 175 and upward when it rests near 80. An event
/// is emitted when |extremum - baseline| >= delta_threshold and the window
/// mean moved to the extremum's side of the baseline; it is confirmed when
/// the posture then stays flat (one axis near 175/80, the others near 127)
/// for hold_seconds.
///
/// One instance per stream; instances are independent.
class FallDetector {
 public:
  explicit FallDetector(FallDetectorConfig config = {});

  void push(std::uint8_t x, std::uint8_t y, std::uint8_t z);

  /// Resolves any pending confirmation against end-of-stream and returns
  /// every event seen so far.
  std::vector<FallEvent> finish();

  const std::vector<FallEvent>& events() const { return events_; }

 private:
  enum class Phase { Seeding, Idle, Windowing, Confirming };

  double baseline_median(Axis axis) const;
  Axis pick_tracked_axis() const;
  bool horizontal(const std::array<std::uint8_t, 3>& v) const;
  void finalize_pending(bool confirmed);

  FallDetectorConfig config_;
  Phase phase_ = Phase::Seeding;
  std::deque<std::array<std::uint8_t, 3>> recent_;  // last 8 triplets
  std::size_t index_ = 0;

  Axis tracked_ = Axis::Z;
  double baseline_ = 0.0;
  std::vector<std::uint8_t> window_;
  std::size_t trigger_index_ = 0;

  std::size_t hold_needed_ = 0;
  std::size_t hold_count_ = 0;
  std::size_t settle_left_ = 0;
  bool settled_ = false;

  std::vector<FallEvent> events_;
  bool pending_ = false;
};

/// Runs a FallDetector over a whole interleaved stream. Throws
/// IncompleteTriplet when the sample count is not a multiple of 3.
std::vector<FallEvent> detect_falls(std::span<const std::uint8_t> xyz,
                                    const FallDetectorConfig& config = {});

}  // namespace vitalwire::telemetry
