#pragma once

// Shared generators and reference math for the test suites. Everything
// here is independent of the library implementation paths it is used to
// check (plain loops, textbook formulas).

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "voxkit/fft.hpp"
#include "voxkit/signal.hpp"

namespace testutil {

inline voxkit::MonoSignal sine(double freq_hz, double seconds, int rate,
                               double amplitude = 1.0, double phase = 0.0) {
  voxkit::MonoSignal s;
  s.sample_rate = rate;
  const std::size_t n = static_cast<std::size_t>(std::llround(seconds * rate));
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    s.samples[i] =
        amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * i / rate + phase);
  return s;
}

inline voxkit::MonoSignal white_noise(double seconds, int rate, double stddev,
                                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist(0.0, stddev);
  voxkit::MonoSignal s;
  s.sample_rate = rate;
  const std::size_t n = static_cast<std::size_t>(std::llround(seconds * rate));
  s.samples.resize(n);
  for (auto& v : s.samples) v = dist(rng);
  return s;
}

// Amplitude-modulated sawtooth; a deterministic stand-in for a speech-like
// (non-Gaussian, time-varying) source.
inline voxkit::MonoSignal am_sawtooth(double freq_hz, double am_hz,
                                      double seconds, int rate,
                                      double amplitude = 1.0) {
  voxkit::MonoSignal s;
  s.sample_rate = rate;
  const std::size_t n = static_cast<std::size_t>(std::llround(seconds * rate));
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double saw = 2.0 * (freq_hz * t - std::floor(freq_hz * t)) - 1.0;
    const double am = 0.55 + 0.45 * std::sin(2.0 * std::numbers::pi * am_hz * t);
    s.samples[i] = amplitude * am * saw;
  }
  return s;
}

inline voxkit::MonoSignal swept_sine(double f_start, double f_end, double seconds,
                                     int rate, double amplitude = 0.7) {
  voxkit::MonoSignal s;
  s.sample_rate = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / rate;
    const double phase =
        2.0 * std::numbers::pi *
        (f_start * t + 0.5 * (f_end - f_start) / seconds * t * t);
    s.samples[i] = amplitude * std::sin(phase);
  }
  return s;
}

// Sine whose level is expressed in dB SPL under the default calibration
// (full scale = 94 dB).
inline voxkit::MonoSignal tone_at_spl(double freq, double spl, double seconds,
                                      int rate) {
  return sine(freq, seconds, rate, std::pow(10.0, (spl - 94.0) / 20.0));
}

// Band-limited noise built in the frequency domain and scaled so its mean
// square corresponds to the requested SPL under the default calibration.
inline voxkit::MonoSignal band_noise(double lo_hz, double hi_hz, double spl,
                                     double seconds, int rate,
                                     std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(seconds * rate);
  std::size_t size = 1;
  while (size < n) size <<= 1;
  std::vector<std::complex<double>> bins(size, 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  for (std::size_t k = 1; k < size / 2; ++k) {
    const double f = static_cast<double>(k) * rate / size;
    if (f < lo_hz || f > hi_hz) continue;
    bins[k] = std::polar(1.0, phase(rng));
    bins[size - k] = std::conj(bins[k]);
  }
  voxkit::ifft(bins);
  voxkit::MonoSignal s;
  s.sample_rate = rate;
  s.samples.resize(n);
  double ms = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s.samples[i] = bins[i].real();
    ms += s.samples[i] * s.samples[i];
  }
  ms /= static_cast<double>(n);
  const double target_ms = 0.5 * std::pow(10.0, (spl - 94.0) / 10.0);
  const double gain = std::sqrt(target_ms / ms);
  for (auto& v : s.samples) v *= gain;
  return s;
}

inline double mean(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x;
  return v.empty() ? 0.0 : acc / v.size();
}

inline double pearson_r(const std::vector<double>& a,
                        const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

inline double rms_diff(const std::vector<double>& a,
                       const std::vector<double>& b, std::size_t begin,
                       std::size_t end) {
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc / static_cast<double>(end - begin));
}

// Frame-averaged SNR in dB against a clean reference, each frame clamped
// to [-10, 35] dB as usual for segmental SNR.
inline double segmental_snr_db(const std::vector<double>& clean,
                               const std::vector<double>& processed,
                               std::size_t begin, std::size_t end,
                               std::size_t frame = 1024) {
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t start = begin; start + frame <= end; start += frame) {
    double sig = 0.0, err = 0.0;
    for (std::size_t i = start; i < start + frame; ++i) {
      sig += clean[i] * clean[i];
      const double d = processed[i] - clean[i];
      err += d * d;
    }
    if (sig <= 0.0) continue;
    double snr = 10.0 * std::log10(sig / (err > 0.0 ? err : 1e-300));
    snr = std::min(35.0, std::max(-10.0, snr));
    total += snr;
    ++count;
  }
  return count ? total / count : 0.0;
}

}  // namespace testutil
