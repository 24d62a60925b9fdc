#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <vector>

#include "voxkit/errors.hpp"
#include "voxkit/fft.hpp"
#include "voxkit/pitch.hpp"
#include "voxkit/signal.hpp"

namespace voxkit {

// Pitch in semitones: p = 69 + 12 log2(f0 / 440).
inline double semitone(double f0_hz) {
  if (!(f0_hz > 0.0)) throw InvalidArgumentError("semitone: f0 must be positive");
  return 69.0 + 12.0 * std::log2(f0_hz / 440.0);
}

// Population standard deviation of the semitone contour over voiced frames.
inline double semitone_sd(const PitchContour& contour) {
  std::vector<double> p;
  for (const auto& f : contour.frames)
    if (f.voiced) p.push_back(semitone(*f.f0_hz));
  if (p.size() < 2)
    throw DegenerateInputError("semitone_sd: needs >= 2 voiced frames");
  double mean = 0.0;
  for (double v : p) mean += v;
  mean /= static_cast<double>(p.size());
  double var = 0.0;
  for (double v : p) var += (v - mean) * (v - mean);
  var /= static_cast<double>(p.size());
  return std::sqrt(var);
}

// Maps digital full scale to an assumed sound pressure level, since the
// recording chain's absolute gain is unknown.
struct CalibrationSpec {
  double dbfs_to_spl = 94.0;  // SPL of a full-scale sine
};

// Specific loudness N'(z) on a fixed critical-band-rate grid, with its
// trapezoidal integral N (sone) and loudness level (phon).
struct SpecificLoudness {
  static constexpr double kBarkStep = 0.1;
  static constexpr std::size_t kGridSize = 241;  // z = 0..24 Bark

  std::array<double, kGridSize> values{};  // sone/Bark
  double total_sone = 0.0;
  double phon = 0.0;

  static double bark_at(std::size_t i) { return kBarkStep * static_cast<double>(i); }
};

namespace psycho_detail {

// 28 third-octave bands, 25 Hz .. 12.5 kHz.
inline constexpr std::array<double, 28> kBandCenters = {
    25.0,    31.5,   40.0,   50.0,   63.0,   80.0,   100.0,  125.0,
    160.0,   200.0,  250.0,  315.0,  400.0,  500.0,  630.0,  800.0,
    1000.0,  1250.0, 1600.0, 2000.0, 2500.0, 3150.0, 4000.0, 5000.0,
    6300.0,  8000.0, 10000.0, 12500.0};

inline double bark_of_hz(double f) {
  return 13.0 * std::atan(0.00076 * f) + 3.5 * std::atan((f / 7500.0) * (f / 7500.0));
}

inline double hz_of_bark(double z) {
  double lo = 1.0, hi = 20000.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (bark_of_hz(mid) < z ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Threshold in quiet (Terhardt's analytic fit), dB SPL.
inline double threshold_quiet_db(double f) {
  const double khz = std::max(f, 20.0) / 1000.0;
  return 3.64 * std::pow(khz, -0.8) -
         6.5 * std::exp(-0.6 * (khz - 3.3) * (khz - 3.3)) +
         1e-3 * khz * khz * khz * khz;
}

// Excitation-pattern slopes, dB/Bark. The lower flank is fixed; the upper
// flank flattens with level, which is what makes loudness grow faster
// than E^0.23 (about a doubling per 10 dB at 1 kHz).
inline constexpr double kLowerSlope = 31.0;
inline double upper_slope(double level_db) {
  return std::max(4.0, 18.5 - 0.045 * level_db);
}

struct BandGeometry {
  std::array<double, 28> bark;           // band centers in Bark
  std::array<double, kBandCenters.size()> lo_hz;
  std::array<double, kBandCenters.size()> hi_hz;
  std::array<double, SpecificLoudness::kGridSize> grid_hz;
  std::array<double, SpecificLoudness::kGridSize> threshold_excitation;

  BandGeometry() {
    constexpr double kEdge = 1.0594630943592953;  // 2^(1/6)
    for (std::size_t b = 0; b < kBandCenters.size(); ++b) {
      bark[b] = bark_of_hz(kBandCenters[b]);
      lo_hz[b] = kBandCenters[b] / kEdge;
      hi_hz[b] = kBandCenters[b] * kEdge;
    }
    for (std::size_t i = 0; i < SpecificLoudness::kGridSize; ++i) {
      grid_hz[i] = hz_of_bark(SpecificLoudness::bark_at(i));
      threshold_excitation[i] =
          std::pow(10.0, threshold_quiet_db(grid_hz[i]) / 10.0);
    }
  }
};

inline const BandGeometry& band_geometry() {
  static const BandGeometry geometry;
  return geometry;
}

// Specific loudness of a set of third-octave band levels (dB SPL), before
// the model's 1-sone anchor gain is applied.
inline std::array<double, SpecificLoudness::kGridSize> raw_specific_loudness(
    const std::array<double, 28>& band_levels_db) {
  const BandGeometry& geo = band_geometry();
  std::array<double, SpecificLoudness::kGridSize> result{};
  constexpr double kSilentBand = -200.0;

  for (std::size_t i = 0; i < SpecificLoudness::kGridSize; ++i) {
    const double z = SpecificLoudness::bark_at(i);
    double excitation = 0.0;
    for (std::size_t b = 0; b < kBandCenters.size(); ++b) {
      const double level = band_levels_db[b];
      if (level <= kSilentBand) continue;
      const double dz = z - geo.bark[b];
      const double effective =
          dz < 0.0 ? level + kLowerSlope * dz : level - upper_slope(level) * dz;
      if (effective < -100.0) continue;
      excitation += std::pow(10.0, effective / 10.0);
    }
    const double etq = geo.threshold_excitation[i];
    const double n = 0.08 * std::pow(etq, 0.23) *
                     (std::pow(0.5 + 0.5 * excitation / etq, 0.23) - 1.0);
    result[i] = std::max(n, 0.0);
  }
  return result;
}

inline double trapezoid(const std::array<double, SpecificLoudness::kGridSize>& v) {
  double acc = 0.5 * (v.front() + v.back());
  for (std::size_t i = 1; i + 1 < v.size(); ++i) acc += v[i];
  return acc * SpecificLoudness::kBarkStep;
}

// The sone scale is defined by its anchor: a 1 kHz tone at 40 dB SPL is
// 1 sone. The model gain pins the raw pattern of exactly that stimulus
// to 1.
inline double model_gain() {
  static const double gain = [] {
    std::array<double, 28> levels;
    levels.fill(-300.0);
    levels[16] = 40.0;  // the 1 kHz band
    return 1.0 / trapezoid(raw_specific_loudness(levels));
  }();
  return gain;
}

inline double phon_of_sone(double sone) {
  if (sone <= 0.0) return 0.0;
  if (sone >= 1.0) return 40.0 + 10.0 * std::log2(sone);
  return 40.0 * std::pow(sone + 0.0005, 0.35);
}

inline SpecificLoudness specific_loudness_of_levels(
    const std::array<double, 28>& band_levels_db) {
  SpecificLoudness spec;
  spec.values = raw_specific_loudness(band_levels_db);
  const double gain = model_gain();
  for (auto& v : spec.values) v *= gain;
  spec.total_sone = trapezoid(spec.values);
  spec.phon = phon_of_sone(spec.total_sone);
  return spec;
}

}  // namespace psycho_detail

struct LoudnessBlock {
  double time_s = 0.0;  // block center
  double sone = 0.0;
  double phon = 0.0;
};

struct LoudnessResult {
  std::vector<LoudnessBlock> blocks;
  double mean_phon = 0.0;       // over blocks with N > 0
  bool silence = false;         // no block reached N > 0
  SpecificLoudness long_term;   // of the average spectrum, feeds sharpness
  double calibration_dbfs_spl = 94.0;

  void contour_to_csv(std::ostream& out) const {
    out << "block_time_s,sone,phon\n";
    out.precision(10);
    for (const auto& b : blocks)
      out << b.time_s << ',' << b.sone << ',' << b.phon << '\n';
  }
};

// Block-wise Zwicker-style loudness of a calibrated signal: per block the
// power spectrum is folded into third-octave bands, spread into a
// critical-band excitation pattern, and converted to specific loudness.
// The phon contour is summarized by its arithmetic mean over audible
// blocks.
inline LoudnessResult loudness(const MonoSignal& signal,
                               const CalibrationSpec& calib = {},
                               std::size_t block_size = 2048) {
  if (!(calib.dbfs_to_spl > 0.0) || !std::isfinite(calib.dbfs_to_spl))
    throw InvalidArgumentError("loudness: calibration must be positive");
  if (signal.samples.size() < block_size)
    throw InvalidArgumentError("loudness: signal shorter than one analysis block");
  if (signal.sample_rate <= 0)
    throw InvalidArgumentError("loudness: bad sample rate");

  const std::size_t hop = block_size / 2;
  const std::size_t block_count = (signal.samples.size() - block_size) / hop + 1;
  const std::vector<double> window = hann_window(block_size);
  double window_energy = 0.0;
  for (double w : window) window_energy += w * w;
  // One-sided power normalization: a full-scale sine integrates to 0.5.
  const double spectrum_scale =
      2.0 / (static_cast<double>(block_size) * window_energy);

  const auto& geo = psycho_detail::band_geometry();
  const double bin_hz =
      static_cast<double>(signal.sample_rate) / static_cast<double>(block_size);

  // Bin ranges per band, clipped to the spectrum.
  std::array<std::pair<std::size_t, std::size_t>, 28> band_bins;
  for (std::size_t b = 0; b < psycho_detail::kBandCenters.size(); ++b) {
    const auto lo = static_cast<std::size_t>(std::ceil(geo.lo_hz[b] / bin_hz));
    const auto hi = std::min(static_cast<std::size_t>(std::ceil(geo.hi_hz[b] / bin_hz)),
                             block_size / 2 + 1);
    band_bins[b] = {std::max<std::size_t>(lo, 1), hi};
  }

  LoudnessResult result;
  result.calibration_dbfs_spl = calib.dbfs_to_spl;
  result.blocks.reserve(block_count);

  std::array<double, 28> mean_band_power{};
  std::vector<double> frame(block_size);
  double phon_sum = 0.0;
  std::size_t audible = 0;

  for (std::size_t m = 0; m < block_count; ++m) {
    const std::size_t start = m * hop;
    for (std::size_t i = 0; i < block_size; ++i)
      frame[i] = signal.samples[start + i] * window[i];
    const auto bins = rfft(frame);

    std::array<double, 28> band_power{};
    for (std::size_t b = 0; b < band_bins.size(); ++b) {
      double acc = 0.0;
      for (std::size_t k = band_bins[b].first; k < band_bins[b].second; ++k)
        acc += std::norm(bins[k]) * spectrum_scale;
      band_power[b] = acc;
      mean_band_power[b] += acc;
    }

    std::array<double, 28> levels;
    for (std::size_t b = 0; b < levels.size(); ++b)
      levels[b] = band_power[b] > 0.0
                      ? calib.dbfs_to_spl + 10.0 * std::log10(band_power[b] / 0.5)
                      : -300.0;
    const auto spec = psycho_detail::specific_loudness_of_levels(levels);

    LoudnessBlock block;
    block.time_s = (static_cast<double>(start) + block_size / 2.0) / signal.sample_rate;
    block.sone = spec.total_sone;
    block.phon = spec.total_sone > 0.0 ? spec.phon : 0.0;
    result.blocks.push_back(block);
    if (spec.total_sone > 0.0) {
      phon_sum += block.phon;
      ++audible;
    }
  }

  result.silence = audible == 0;
  result.mean_phon = audible ? phon_sum / static_cast<double>(audible) : 0.0;

  std::array<double, 28> levels;
  for (std::size_t b = 0; b < levels.size(); ++b) {
    const double power = mean_band_power[b] / static_cast<double>(block_count);
    levels[b] =
        power > 0.0 ? calib.dbfs_to_spl + 10.0 * std::log10(power / 0.5) : -300.0;
  }
  result.long_term = psycho_detail::specific_loudness_of_levels(levels);
  return result;
}

// Sharpness in acum: the g(z)-weighted first moment of the specific
// loudness, S = 0.11 * Int N'(z) g(z) z dz / Int N'(z) dz, with g = 1 up
// to 15.8 Bark and rising exponentially above.
inline double sharpness(const SpecificLoudness& spec) {
  if (spec.total_sone <= 0.0)
    throw DegenerateInputError("sharpness: zero total loudness");
  std::array<double, SpecificLoudness::kGridSize> weighted{};
  for (std::size_t i = 0; i < spec.values.size(); ++i) {
    const double z = SpecificLoudness::bark_at(i);
    const double g =
        z <= 15.8 ? 1.0 : 0.15 * std::exp(0.42 * (z - 15.8)) + 0.85;
    weighted[i] = spec.values[i] * g * z;
  }
  return 0.11 * psycho_detail::trapezoid(weighted) /
         psycho_detail::trapezoid(spec.values);
}

}  // namespace voxkit
