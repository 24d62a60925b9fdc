#pragma once

#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include "voxkit/errors.hpp"
#include "voxkit/fft.hpp"
#include "voxkit/signal.hpp"

namespace voxkit {

// Short-time spectrum of a signal: one vector of fft_size/2 + 1 complex
// bins per frame. Frames start at multiples of hop; the analysis window
// is applied before the transform.
struct Spectrogram {
  std::vector<std::vector<std::complex<double>>> frames;
  std::size_t fft_size = 0;
  std::size_t hop = 0;
  int sample_rate = 44100;
  std::string window = "hann";
  std::size_t signal_length = 0;  // original sample count, for resynthesis

  std::size_t bins() const { return fft_size / 2 + 1; }
  std::size_t size() const { return frames.size(); }
  // Center of frame m in samples.
  double frame_center(std::size_t m) const {
    return static_cast<double>(m) * hop + fft_size / 2.0;
  }
};

inline void check_stft_params(std::size_t fft_size, std::size_t hop) {
  if (!is_power_of_two(fft_size) || fft_size < 64)
    throw InvalidArgumentError("stft: fft_size must be a power of two >= 64");
  if (hop != fft_size / 2)
    throw InvalidArgumentError("stft: hop must be fft_size/2 (50% overlap)");
}

inline Spectrogram stft(const MonoSignal& signal, std::size_t fft_size,
                        std::size_t hop) {
  check_stft_params(fft_size, hop);
  Spectrogram spec;
  spec.fft_size = fft_size;
  spec.hop = hop;
  spec.sample_rate = signal.sample_rate;
  spec.signal_length = signal.samples.size();

  const std::size_t n = signal.samples.size();
  if (n == 0) return spec;
  const std::size_t count = (n + hop - 1) / hop;
  const std::vector<double> window = hann_window(fft_size);

  std::vector<double> frame(fft_size);
  spec.frames.reserve(count);
  for (std::size_t m = 0; m < count; ++m) {
    const std::size_t start = m * hop;
    const std::size_t avail = start < n ? std::min(fft_size, n - start) : 0;
    for (std::size_t k = 0; k < fft_size; ++k)
      frame[k] = k < avail ? signal.samples[start + k] * window[k] : 0.0;
    spec.frames.push_back(rfft(frame));
  }
  return spec;
}

// Overlap-add resynthesis with window-sum normalization. Because the
// analysis window is divided back out, istft(stft(x)) == x wherever the
// accumulated window weight is non-negligible; the half-window edges of
// the signal cannot be recovered exactly.
inline MonoSignal istft(const Spectrogram& spec) {
  check_stft_params(spec.fft_size, spec.hop);
  MonoSignal out;
  out.sample_rate = spec.sample_rate;
  out.samples.assign(spec.signal_length, 0.0);
  if (spec.frames.empty() || spec.signal_length == 0) return out;

  const std::vector<double> window = hann_window(spec.fft_size);
  std::vector<double> wsum(spec.signal_length, 0.0);

  for (std::size_t m = 0; m < spec.frames.size(); ++m) {
    if (spec.frames[m].size() != spec.bins())
      throw InvalidArgumentError("istft: frame has wrong bin count");
    const std::vector<double> frame = irfft(spec.frames[m], spec.fft_size);
    const std::size_t start = m * spec.hop;
    for (std::size_t k = 0; k < spec.fft_size; ++k) {
      const std::size_t idx = start + k;
      if (idx >= spec.signal_length) break;
      out.samples[idx] += frame[k];
      wsum[idx] += window[k];
    }
  }
  constexpr double kMinWeight = 1e-8;
  for (std::size_t i = 0; i < out.samples.size(); ++i)
    out.samples[i] = wsum[i] > kMinWeight ? out.samples[i] / wsum[i] : 0.0;
  return out;
}

}  // namespace voxkit
