// Copyright (c) 2026 The Vitalwire Authors
// SPDX-License-Identifier: Apache-2.0

#include "vitalwire/ecg_id.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "vitalwire/telemetry.hpp"

namespace vitalwire::ecg {

const std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "p_duration_ms",   "pq_interval_ms",  "qrs_duration_ms", "qt_interval_ms",
    "pr_segment_ms",   "st_segment_ms",   "t_duration_ms",   "rr_interval_ms",
    "p_amplitude_mv",  "q_amplitude_mv",  "r_amplitude_mv",  "s_amplitude_mv",
    "t_amplitude_mv",  "p_up_slope",      "p_down_slope",    "qrs_up_slope",
    "qrs_down_slope",  "t_up_slope",      "t_down_slope",    "p_over_r",
    "q_over_r",        "s_over_r",        "t_over_r",        "qrs_over_qt",
};

namespace {

constexpr double kWaveEdgeFraction = 0.02;  // of the wave's peak deviation
constexpr double kWaveEdgeFloorMv = 1e-4;
constexpr double kMinWaveAmplitudeMv = 0.04;

double median(std::vector<double> values) {
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  double hi = values[mid];
  if (n % 2 == 1) return hi;
  double lo = *std::max_element(values.begin(), values.begin() + mid);
  return (lo + hi) / 2.0;
}

// First index at or left of `from` whose |deviation| drops to eps or below.
std::size_t walk_left(const std::vector<double>& s, double baseline,
                      std::size_t from, std::size_t lo, double eps) {
  std::size_t i = from;
  while (i > lo && std::abs(s[i] - baseline) > eps) --i;
  return i;
}

std::size_t walk_right(const std::vector<double>& s, double baseline,
                       std::size_t from, std::size_t hi, double eps) {
  std::size_t i = from;
  while (i + 1 < hi && std::abs(s[i] - baseline) > eps) ++i;
  return i;
}

double wave_eps(double peak_deviation) {
  return std::max(kWaveEdgeFraction * peak_deviation, kWaveEdgeFloorMv);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line, char delim) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(line);
  while (std::getline(in, part, delim)) parts.push_back(part);
  if (!line.empty() && line.back() == delim) parts.emplace_back();
  return parts;
}

std::vector<double> parse_vector(const std::string& text) {
  std::vector<double> out;
  for (const std::string& item : split(text, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw Error("profile store: malformed number");
  }
  return out;
}

}  // namespace

std::vector<BeatSegment> segment_beats(std::span<const double> ecg_mv,
                                       double sample_rate_hz) {
  if (sample_rate_hz <= 0) throw Error("sample rate must be positive");
  if (static_cast<double>(ecg_mv.size()) < 2.0 * sample_rate_hz) {
    throw TooShort("need at least 2 s of ECG");
  }
  const std::vector<std::size_t> peaks =
      telemetry::detect_r_peaks(ecg_mv, sample_rate_hz);
  if (peaks.size() < 2) throw NoBeatsFound("fewer than two R-peaks detected");

  const auto samples_for = [&](double seconds) {
    return static_cast<std::size_t>(std::lround(seconds * sample_rate_hz));
  };
  const std::size_t back_span = samples_for(0.40);
  const std::size_t fwd_span = samples_for(0.55);
  const std::size_t qrs_span = samples_for(0.10);
  const std::size_t p_span = samples_for(0.30);
  const std::size_t t_span = samples_for(0.45);

  // Half an 8-bit quantization step away from the rail counts as clipped.
  const double rail_eps = (telemetry::kEcgMaxMv - telemetry::kEcgMinMv) / 510.0;

  std::vector<BeatSegment> segments;
  segments.reserve(peaks.size());

  for (std::size_t k = 0; k < peaks.size(); ++k) {
    const std::size_t r = peaks[k];
    BeatSegment seg;
    seg.sample_rate_hz = sample_rate_hz;

    std::size_t begin = r >= back_span ? r - back_span : 0;
    if (k > 0) begin = std::max(begin, (peaks[k - 1] + r) / 2);
    std::size_t end = std::min(ecg_mv.size(), r + fwd_span);
    if (k + 1 < peaks.size()) end = std::min(end, (r + peaks[k + 1]) / 2);

    seg.window_begin = begin;
    seg.window_end = end;
    seg.samples.assign(ecg_mv.begin() + begin, ecg_mv.begin() + end);
    seg.baseline_mv = median(seg.samples);
    seg.r_peak = r;
    seg.rr_ms = 1000.0 *
                (k + 1 < peaks.size()
                     ? static_cast<double>(peaks[k + 1] - r)
                     : static_cast<double>(r - peaks[k - 1])) /
                sample_rate_hz;

    const std::vector<double>& s = seg.samples;
    const double base = seg.baseline_mv;
    const auto dev = [&](std::size_t i) { return std::abs(s[i] - base); };
    const std::size_t r_loc = r - begin;

    for (double v : s) {
      if (v >= telemetry::kEcgMaxMv - rail_eps ||
          v <= telemetry::kEcgMinMv + rail_eps) {
        ++seg.saturated_samples;
      }
    }

    // Q and S troughs bracket the R peak.
    std::size_t q = r_loc;
    for (std::size_t i = r_loc >= qrs_span ? r_loc - qrs_span : 0; i < r_loc;
         ++i) {
      if (s[i] < s[q] || q == r_loc) q = i;
    }
    std::size_t sw = r_loc;
    for (std::size_t i = r_loc + 1;
         i < std::min(s.size(), r_loc + qrs_span + 1); ++i) {
      if (sw == r_loc || s[i] < s[sw]) sw = i;
    }

    const double r_dev = dev(r_loc);
    std::size_t qrs_on, qrs_off;
    if (q != r_loc && s[q] < base && dev(q) > wave_eps(r_dev)) {
      seg.q_trough = begin + q;
      qrs_on = walk_left(s, base, q, 0, wave_eps(dev(q)));
    } else {
      seg.q_trough = kNoFiducial;
      qrs_on = walk_left(s, base, r_loc, 0, wave_eps(r_dev));
    }
    if (sw != r_loc && s[sw] < base && dev(sw) > wave_eps(r_dev)) {
      seg.s_trough = begin + sw;
      qrs_off = walk_right(s, base, sw, s.size(), wave_eps(dev(sw)));
    } else {
      seg.s_trough = kNoFiducial;
      qrs_off = walk_right(s, base, r_loc, s.size(), wave_eps(r_dev));
    }
    seg.qrs_onset = begin + qrs_on;
    seg.qrs_offset = begin + qrs_off;

    // P wave: the largest positive deviation shortly before QRS onset.
    const std::size_t p_lo = qrs_on >= p_span ? qrs_on - p_span : 0;
    std::size_t p = kNoFiducial;
    for (std::size_t i = p_lo; i + 1 < qrs_on; ++i) {
      if (s[i] > base && (p == kNoFiducial || s[i] > s[p])) p = i;
    }
    if (p != kNoFiducial && dev(p) >= kMinWaveAmplitudeMv) {
      seg.p_peak = begin + p;
      seg.p_onset = begin + walk_left(s, base, p, 0, wave_eps(dev(p)));
      seg.p_offset =
          begin + walk_right(s, base, p, qrs_on + 1, wave_eps(dev(p)));
    }

    // T wave: the largest positive deviation after QRS offset.
    const std::size_t t_hi = std::min(s.size(), qrs_off + t_span);
    std::size_t t = kNoFiducial;
    for (std::size_t i = qrs_off + 1; i < t_hi; ++i) {
      if (s[i] > base && (t == kNoFiducial || s[i] > s[t])) t = i;
    }
    if (t != kNoFiducial && dev(t) >= kMinWaveAmplitudeMv) {
      seg.t_peak = begin + t;
      seg.t_onset = begin + walk_left(s, base, t, qrs_off, wave_eps(dev(t)));
      seg.t_offset =
          begin + walk_right(s, base, t, s.size(), wave_eps(dev(t)));
    }

    segments.push_back(std::move(seg));
  }
  return segments;
}

bool reject_noisy(const BeatSegment& segment, const NoiseGate& gate) {
  if (segment.saturated_samples > gate.max_saturated) return true;
  if (segment.p_onset == kNoFiducial || segment.p_offset == kNoFiducial ||
      segment.qrs_onset == kNoFiducial || segment.qrs_offset == kNoFiducial ||
      segment.t_offset == kNoFiducial) {
    return true;
  }
  const double p_max = 120.0 * (1.0 + gate.slack);
  const double qrs_min = 70.0 * (1.0 - gate.slack);
  const double qrs_max = 110.0 * (1.0 + gate.slack);
  const double p = segment.p_duration_ms();
  const double qrs = segment.qrs_duration_ms();
  if (p <= 0.0 || p >= p_max) return true;
  if (qrs < qrs_min || qrs > qrs_max) return true;
  return false;
}

std::vector<double> extract_features(const BeatSegment& seg) {
  const std::array<std::size_t, 9> required = {
      seg.r_peak,  seg.p_onset,   seg.p_peak,     seg.p_offset, seg.qrs_onset,
      seg.qrs_offset, seg.t_onset, seg.t_peak,    seg.t_offset};
  for (std::size_t idx : required) {
    if (idx == kNoFiducial) throw MissingFiducial("fiducial not located");
  }

  const auto local = [&](std::size_t abs_idx) {
    return abs_idx - seg.window_begin;
  };
  const auto value = [&](std::size_t abs_idx) {
    return seg.samples[local(abs_idx)] - seg.baseline_mv;
  };
  const auto seconds = [&](std::size_t a, std::size_t b) {
    return seg.ms_between(a, b) / 1000.0;
  };

  const double p_dur = seg.ms_between(seg.p_onset, seg.p_offset);
  const double pq = seg.ms_between(seg.p_onset, seg.qrs_onset);
  const double qrs = seg.ms_between(seg.qrs_onset, seg.qrs_offset);
  const double qt = seg.ms_between(seg.qrs_onset, seg.t_offset);
  const double pr_seg = seg.ms_between(seg.p_offset, seg.qrs_onset);
  const double st_seg = seg.ms_between(seg.qrs_offset, seg.t_onset);
  const double t_dur = seg.ms_between(seg.t_onset, seg.t_offset);

  const double p_amp = value(seg.p_peak);
  const double q_amp = seg.q_trough == kNoFiducial ? 0.0 : value(seg.q_trough);
  const double r_amp = value(seg.r_peak);
  const double s_amp = seg.s_trough == kNoFiducial ? 0.0 : value(seg.s_trough);
  const double t_amp = value(seg.t_peak);

  const std::size_t q_ref = seg.q_trough == kNoFiducial ? seg.qrs_onset
                                                        : seg.q_trough;
  const std::size_t s_ref = seg.s_trough == kNoFiducial ? seg.qrs_offset
                                                        : seg.s_trough;

  const std::array<std::pair<std::size_t, std::size_t>, 6> spans = {{
      {seg.p_onset, seg.p_peak},
      {seg.p_peak, seg.p_offset},
      {q_ref, seg.r_peak},
      {seg.r_peak, s_ref},
      {seg.t_onset, seg.t_peak},
      {seg.t_peak, seg.t_offset},
  }};
  for (const auto& [a, b] : spans) {
    if (b <= a) throw MissingFiducial("degenerate wave span");
  }
  if (qt <= 0.0 || std::abs(r_amp) < 1e-9) {
    throw MissingFiducial("degenerate beat geometry");
  }

  return {
      p_dur,
      pq,
      qrs,
      qt,
      pr_seg,
      st_seg,
      t_dur,
      seg.rr_ms,
      p_amp,
      q_amp,
      r_amp,
      s_amp,
      t_amp,
      p_amp / seconds(seg.p_onset, seg.p_peak),
      -p_amp / seconds(seg.p_peak, seg.p_offset),
      (r_amp - q_amp) / seconds(q_ref, seg.r_peak),
      (s_amp - r_amp) / seconds(seg.r_peak, s_ref),
      t_amp / seconds(seg.t_onset, seg.t_peak),
      -t_amp / seconds(seg.t_peak, seg.t_offset),
      p_amp / r_amp,
      q_amp / r_amp,
      s_amp / r_amp,
      t_amp / r_amp,
      qrs / qt,
  };
}

std::vector<std::vector<double>> extract_accepted_features(
    std::span<const double> ecg_mv, double sample_rate_hz,
    const NoiseGate& gate) {
  std::vector<std::vector<double>> out;
  for (const BeatSegment& seg : segment_beats(ecg_mv, sample_rate_hz)) {
    if (reject_noisy(seg, gate)) continue;
    out.push_back(extract_features(seg));
  }
  return out;
}

double mahalanobis(std::span<const double> x, std::span<const double> mean,
                   std::span<const double> variance) {
  if (x.size() != mean.size() || x.size() != variance.size()) {
    throw DimensionMismatch("vector dimensions differ");
  }
  double sum = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (variance[k] <= 0.0) {
      throw Error("variance components must be positive");
    }
    const double d = x[k] - mean[k];
    sum += d * d / variance[k];
  }
  return std::sqrt(sum);
}

double mahalanobis(std::span<const double> x, const EcgProfile& profile) {
  return mahalanobis(x, profile.mean, profile.variance);
}

std::vector<double> mean_vector(
    const std::vector<std::vector<double>>& beats) {
  if (beats.empty()) throw TooFewBeats("no beats supplied");
  const std::size_t dim = beats.front().size();
  std::vector<double> mean(dim, 0.0);
  for (const auto& beat : beats) {
    if (beat.size() != dim) throw DimensionMismatch("beat dimensions differ");
    for (std::size_t k = 0; k < dim; ++k) mean[k] += beat[k];
  }
  for (double& m : mean) m /= static_cast<double>(beats.size());
  return mean;
}

std::vector<FeaturePair> feature_pair_subsets(
    std::span<const double> features) {
  if (features.size() < 4) {
    throw DimensionMismatch("need at least the four Kyoso intervals");
  }
  const double p = features[0], pq = features[1], qrs = features[2],
               qt = features[3];
  return {
      {"P-QRS", {p, qrs}},  {"P-PQ", {p, pq}},     {"P-QT", {p, qt}},
      {"QRS-PQ", {qrs, pq}}, {"QRS-QT", {qrs, qt}}, {"PQ-QT", {pq, qt}},
  };
}

const EcgProfile& ProfileStore::enroll(
    const std::string& person_id,
    const std::vector<std::vector<double>>& beats, bool replace) {
  if (person_id.empty() || person_id.find('|') != std::string::npos ||
      person_id.find('\n') != std::string::npos) {
    throw std::invalid_argument("person_id must be non-empty without '|'");
  }
  if (beats.size() < 2) throw TooFewBeats("enrollment needs at least 2 beats");
  if (profiles_.count(person_id) && !replace) {
    throw DuplicateId("profile exists: " + person_id);
  }

  EcgProfile profile;
  profile.person_id = person_id;
  profile.mean = mean_vector(beats);
  profile.beat_count = beats.size();
  profile.variance.assign(profile.mean.size(), 0.0);
  for (const auto& beat : beats) {
    for (std::size_t k = 0; k < profile.mean.size(); ++k) {
      const double d = beat[k] - profile.mean[k];
      profile.variance[k] += d * d;
    }
  }
  for (double& v : profile.variance) {
    v = std::max(v / static_cast<double>(beats.size() - 1), kVarianceFloor);
  }
  return profiles_[person_id] = std::move(profile);
}

std::pair<std::string, double> ProfileStore::identify(
    const std::vector<std::vector<double>>& beats, bool vote_per_beat) const {
  if (profiles_.empty()) throw EmptyStore("no enrolled profiles");
  if (beats.empty()) throw TooFewBeats("identification needs beats");

  const auto nearest = [&](std::span<const double> x) {
    const EcgProfile* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& [id, profile] : profiles_) {  // map order = lexicographic
      const double d = mahalanobis(x, profile);
      if (d < best_d) {
        best_d = d;
        best = &profile;
      }
    }
    return std::pair<const EcgProfile*, double>(best, best_d);
  };

  const std::vector<double> query = mean_vector(beats);
  if (!vote_per_beat) {
    auto [profile, d] = nearest(query);
    return {profile->person_id, d};
  }

  std::map<std::string, std::size_t> votes;
  for (const auto& beat : beats) ++votes[nearest(beat).first->person_id];
  const auto winner =
      std::max_element(votes.begin(), votes.end(),
                       [](const auto& a, const auto& b) {
                         return a.second < b.second;  // tie keeps smaller id
                       });
  return {winner->first, mahalanobis(query, profiles_.at(winner->first))};
}

bool ProfileStore::verify(const std::string& person_id,
                          const std::vector<std::vector<double>>& beats,
                          double threshold) const {
  return mahalanobis(mean_vector(beats), profile(person_id)) <= threshold;
}

const EcgProfile& ProfileStore::profile(const std::string& person_id) const {
  const auto it = profiles_.find(person_id);
  if (it == profiles_.end()) throw UnknownId("not enrolled: " + person_id);
  return it->second;
}

bool ProfileStore::contains(const std::string& person_id) const {
  return profiles_.count(person_id) != 0;
}

void ProfileStore::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write profile store: " + path.string());
  for (const auto& [id, profile] : profiles_) {
    out << "v1|" << id << '|';
    for (std::size_t k = 0; k < profile.mean.size(); ++k) {
      out << (k ? "," : "") << format_double(profile.mean[k]);
    }
    out << '|';
    for (std::size_t k = 0; k < profile.variance.size(); ++k) {
      out << (k ? "," : "") << format_double(profile.variance[k]);
    }
    out << '|' << profile.beat_count << '\n';
  }
}

ProfileStore ProfileStore::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read profile store: " + path.string());
  ProfileStore store;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::vector<std::string> parts = split(line, '|');
    if (parts.size() != 5 || parts[0] != "v1") {
      throw Error("profile store: bad record at line " +
                  std::to_string(lineno));
    }
    EcgProfile profile;
    profile.person_id = parts[1];
    profile.mean = parse_vector(parts[2]);
    profile.variance = parse_vector(parts[3]);
    profile.beat_count = std::stoull(parts[4]);
    if (profile.person_id.empty() ||
        profile.mean.size() != profile.variance.size()) {
      throw Error("profile store: inconsistent record at line " +
                  std::to_string(lineno));
    }
    store.profiles_[profile.person_id] = std::move(profile);
  }
  return store;
}

}  // namespace vitalwire::ecg
