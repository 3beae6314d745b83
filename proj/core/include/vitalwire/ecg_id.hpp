// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vitalwire/error.hpp"

// Per-beat interval/amplitude feature extraction and person identification
// via Mahalanobis distance over per-person (mean, variance) profiles.
// The 24-component feature vector is enumerated in docs/features.md.

namespace vitalwire::ecg {

inline constexpr std::size_t kFeatureCount = 24;
extern const std::array<std::string_view, kFeatureCount> kFeatureNames;

/// Variance floor applied at enrollment so constant features never divide
/// by zero.
inline constexpr double kVarianceFloor = 1e-6;

struct TooShort final : Error {
  using Error::Error;
};
struct NoBeatsFound final : Error {
  using Error::Error;
};
struct MissingFiducial final : Error {
  using Error::Error;
};
struct TooFewBeats final : Error {
  using Error::Error;
};
struct DuplicateId final : Error {
  using Error::Error;
};
struct UnknownId final : Error {
  using Error::Error;
};
struct EmptyStore final : Error {
  using Error::Error;
};
struct DimensionMismatch final : Error {
  using Error::Error;
};

inline constexpr std::size_t kNoFiducial = static_cast<std::size_t>(-1);

/// One beat with its fiducial points. Indices are absolute positions in the
/// series that was segmented; `samples` holds a copy of the beat window
/// [window_begin, window_end).
struct BeatSegment {
  double sample_rate_hz = 300.0;
  std::size_t window_begin = 0;
  std::size_t window_end = 0;
  std::vector<double> samples;
  double baseline_mv = 0.0;

  std::size_t r_peak = kNoFiducial;
  std::size_t p_onset = kNoFiducial;
  std::size_t p_peak = kNoFiducial;
  std::size_t p_offset = kNoFiducial;
  std::size_t qrs_onset = kNoFiducial;
  std::size_t q_trough = kNoFiducial;
  std::size_t s_trough = kNoFiducial;
  std::size_t qrs_offset = kNoFiducial;
  std::size_t t_onset = kNoFiducial;
  std::size_t t_peak = kNoFiducial;
  std::size_t t_offset = kNoFiducial;

  double rr_ms = 0.0;
  std::size_t saturated_samples = 0;

  double ms_between(std::size_t a, std::size_t b) const {
    return (static_cast<double>(b) - static_cast<double>(a)) * 1000.0 /
           sample_rate_hz;
  }
  double p_duration_ms() const { return ms_between(p_onset, p_offset); }
  double qrs_duration_ms() const { return ms_between(qrs_onset, qrs_offset); }
};

/// Splits an ECG series (millivolts) into per-beat segments with located
/// fiducials. Throws TooShort below 2 s of data and NoBeatsFound when fewer
/// than two R-peaks are detected.
std::vector<BeatSegment> segment_beats(std::span<const double> ecg_mv,
                                       double sample_rate_hz);

struct NoiseGate {
  double slack = 0.5;  // widens the physiologic bounds by +-50 %
  std::size_t max_saturated = 10;
};

/// True when the segment should be discarded: a P or QRS duration outside
/// the slacked physiologic bounds (P < 120 ms, QRS within 70..110 ms), a
/// missing wave, or more than max_saturated rail-clipped samples.
bool reject_noisy(const BeatSegment& segment, const NoiseGate& gate = {});

/// Deterministic 24-component feature vector for an accepted segment.
std::vector<double> extract_features(const BeatSegment& segment);

/// segment_beats + reject_noisy + extract_features in one pass.
std::vector<std::vector<double>> extract_accepted_features(
    std::span<const double> ecg_mv, double sample_rate_hz,
    const NoiseGate& gate = {});

struct EcgProfile {
  std::string person_id;
  std::vector<double> mean;
  std::vector<double> variance;  // diagonal covariance, floored
  std::uint64_t beat_count = 0;
};

/// Mahalanobis distance with a diagonal covariance:
/// sqrt(sum_k (x_k - mean_k)^2 / variance_k).
double mahalanobis(std::span<const double> x, std::span<const double> mean,
                   std::span<const double> variance);
double mahalanobis(std::span<const double> x, const EcgProfile& profile);

/// Component-wise mean of a non-empty set of equally-sized vectors.
std::vector<double> mean_vector(const std::vector<std::vector<double>>& beats);

/// The six Kyoso interval pairs (P, PQ, QRS, QT combinations) projected out
/// of a full feature vector, for reduced-profile experiments.
struct FeaturePair {
  std::string_view name;
  std::array<double, 2> values;
};
std::vector<FeaturePair> feature_pair_subsets(std::span<const double> features);

/// In-memory profile database with a versioned text-file representation,
/// one profile per line: v1|person_id|m1,..,mN|s1,..,sN|count
/// Single-writer, many-reader contract.
class ProfileStore {
 public:
  /// Computes component-wise mean and (unbiased, floored) variance.
  /// Throws TooFewBeats below two beats and DuplicateId when the id exists
  /// and replace is false.
  const EcgProfile& enroll(const std::string& person_id,
                           const std::vector<std::vector<double>>& beats,
                           bool replace = false);

  /// Averages the query beats and returns the profile with the smallest
  /// Mahalanobis distance plus that distance; ties break to the
  /// lexicographically smallest id. With vote_per_beat each beat votes for
  /// its own nearest profile and the majority wins.
  std::pair<std::string, double> identify(
      const std::vector<std::vector<double>>& beats,
      bool vote_per_beat = false) const;

  /// True iff the distance between the averaged beats and the enrolled
  /// profile is within threshold.
  bool verify(const std::string& person_id,
              const std::vector<std::vector<double>>& beats,
              double threshold) const;

  const EcgProfile& profile(const std::string& person_id) const;
  bool contains(const std::string& person_id) const;
  std::size_t size() const { return profiles_.size(); }
  bool empty() const { return profiles_.empty(); }
  const std::map<std::string, EcgProfile>& profiles() const {
    return profiles_;
  }

  void save(const std::filesystem::path& path) const;
  static ProfileStore load(const std::filesystem::path& path);

 private:
  std::map<std::string, EcgProfile> profiles_;
};

}  // namespace vitalwire::ecg
