#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <vector>

#include "voxkit/errors.hpp"

namespace voxkit {

// Sampled mono waveform. Samples are dimensionless amplitudes with a
// nominal range of [-1, 1]; sample_rate is in Hz.
struct MonoSignal {
  std::vector<double> samples;
  int sample_rate = 44100;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

inline void validate(const MonoSignal& s) {
  if (s.sample_rate <= 0)
    throw InvalidArgumentError("MonoSignal: sample_rate must be positive");
  for (double v : s.samples)
    if (!std::isfinite(v))
      throw InvalidArgumentError("MonoSignal: samples must be finite");
}

// Overlapping fixed-length windows of a signal. The final frame is
// zero-padded so every frame holds exactly frame_length samples.
struct FrameSequence {
  std::vector<std::vector<double>> frames;
  std::size_t frame_length = 0;
  std::size_t hop = 0;
  int sample_rate = 44100;

  std::size_t size() const { return frames.size(); }
  // Center of frame m, in seconds.
  double center_time(std::size_t m) const {
    return (static_cast<double>(m) * hop + frame_length / 2.0) / sample_rate;
  }
};

// Symmetric Hann window: w[k] = 0.5 - 0.5 cos(2*pi*k/(n-1)).
// Endpoints are exactly zero for n >= 2; w = {1} for n == 1.
inline std::vector<double> hann_window(std::size_t n) {
  if (n == 0) throw InvalidArgumentError("hann_window: n must be >= 1");
  std::vector<double> w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  const double denom = static_cast<double>(n - 1);
  for (std::size_t k = 0; k < n; ++k)
    w[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * k / denom);
  // Enforce exact symmetry; cos() rounding can differ between mirrored
  // arguments.
  for (std::size_t k = 0; k < n / 2; ++k) w[n - 1 - k] = w[k];
  return w;
}

// Splits a signal into overlapping frames. frame_length and hop are
// round(duration_ms * rate / 1000); for a signal of N >= 1 samples the
// frame count is ceil(max(0, N - frame_length) / hop) + 1.
inline FrameSequence frame_signal(const MonoSignal& signal, double frame_ms,
                                  double hop_ms) {
  if (!(frame_ms > 0.0) || !(hop_ms > 0.0))
    throw InvalidArgumentError("frame_signal: durations must be positive");
  if (hop_ms > frame_ms)
    throw InvalidArgumentError("frame_signal: hop_ms must not exceed frame_ms");

  FrameSequence seq;
  seq.sample_rate = signal.sample_rate;
  seq.frame_length = static_cast<std::size_t>(
      std::llround(frame_ms * signal.sample_rate / 1000.0));
  seq.hop = static_cast<std::size_t>(
      std::llround(hop_ms * signal.sample_rate / 1000.0));
  if (seq.frame_length == 0)
    throw InvalidArgumentError("frame_signal: frame shorter than one sample");
  seq.hop = std::max<std::size_t>(seq.hop, 1);

  const std::size_t n = signal.samples.size();
  if (n == 0) return seq;

  const std::size_t count =
      n <= seq.frame_length
          ? 1
          : (n - seq.frame_length + seq.hop - 1) / seq.hop + 1;
  seq.frames.reserve(count);
  for (std::size_t m = 0; m < count; ++m) {
    std::vector<double> frame(seq.frame_length, 0.0);
    const std::size_t start = m * seq.hop;
    const std::size_t avail = start < n ? std::min(seq.frame_length, n - start) : 0;
    std::copy_n(signal.samples.begin() + start, avail, frame.begin());
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

inline double rms(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc / v.size());
}

inline double rms(const MonoSignal& s) { return rms(s.samples); }

}  // namespace voxkit
