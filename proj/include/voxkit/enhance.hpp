#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "voxkit/errors.hpp"
#include "voxkit/signal.hpp"
#include "voxkit/stft.hpp"

namespace voxkit {

// Per-frame pause/speech decision with the framing it was made on, so a
// later analysis at different frame settings can look decisions up by
// sample position.
struct PauseMask {
  std::vector<bool> pause;  // true = noise-only frame
  std::size_t frame_length = 0;
  std::size_t hop = 0;
  int sample_rate = 44100;

  std::size_t size() const { return pause.size(); }

  bool pause_at_sample(double sample_index) const {
    if (pause.empty()) return false;
    // Frame whose center is nearest to the sample position.
    const double centered = (sample_index - frame_length / 2.0) / hop;
    const auto idx = static_cast<long>(std::llround(centered));
    const auto clamped = std::clamp<long>(idx, 0, static_cast<long>(pause.size()) - 1);
    return pause[static_cast<std::size_t>(clamped)];
  }
};

// Mean magnitude spectrum of the noise, estimated over pause frames.
struct NoiseProfile {
  std::vector<double> magnitude;  // linear amplitude per bin
  std::size_t frames_used = 0;
  std::size_t fft_size = 0;
  int sample_rate = 44100;
};

// Marks frames whose RMS falls below theta times the median frame RMS.
// If nothing qualifies (steady signals), the quietest 10% of frames are
// marked instead so a noise profile always exists.
inline PauseMask detect_pauses(const MonoSignal& signal, double frame_ms = 32.0,
                               double hop_ms = 16.0, double theta = 0.25) {
  if (signal.samples.empty())
    throw InvalidArgumentError("detect_pauses: empty signal");
  const FrameSequence frames = frame_signal(signal, frame_ms, hop_ms);

  PauseMask mask;
  mask.frame_length = frames.frame_length;
  mask.hop = frames.hop;
  mask.sample_rate = signal.sample_rate;
  mask.pause.assign(frames.size(), false);

  std::vector<double> frame_rms(frames.size());
  for (std::size_t m = 0; m < frames.size(); ++m) frame_rms[m] = rms(frames.frames[m]);

  std::vector<double> sorted = frame_rms;
  std::sort(sorted.begin(), sorted.end());
  const double median = sorted[sorted.size() / 2];

  std::size_t marked = 0;
  for (std::size_t m = 0; m < frames.size(); ++m) {
    // Digital-silence frames are pauses even when the median itself is 0.
    if (frame_rms[m] < theta * median || frame_rms[m] == 0.0) {
      mask.pause[m] = true;
      ++marked;
    }
  }
  if (marked == 0) {
    const std::size_t quota =
        std::max<std::size_t>(1, (frames.size() + 9) / 10);  // quietest 10%
    const double cutoff = sorted[quota - 1];
    for (std::size_t m = 0; m < frames.size() && marked < quota; ++m) {
      if (frame_rms[m] <= cutoff) {
        mask.pause[m] = true;
        ++marked;
      }
    }
  }
  return mask;
}

// Per-bin mean of the magnitude spectra over frames whose centers land in
// pause regions of the mask.
inline NoiseProfile estimate_noise_profile(const MonoSignal& signal,
                                           const PauseMask& mask,
                                           std::size_t fft_size = 2048) {
  if (std::none_of(mask.pause.begin(), mask.pause.end(), [](bool b) { return b; }))
    throw InvalidArgumentError("estimate_noise_profile: mask has no pause frames");
  const Spectrogram spec = stft(signal, fft_size, fft_size / 2);
  if (spec.frames.empty())
    throw InvalidArgumentError("estimate_noise_profile: signal shorter than one frame");

  NoiseProfile profile;
  profile.fft_size = fft_size;
  profile.sample_rate = signal.sample_rate;
  profile.magnitude.assign(spec.bins(), 0.0);

  for (std::size_t m = 0; m < spec.size(); ++m) {
    if (!mask.pause_at_sample(spec.frame_center(m))) continue;
    for (std::size_t k = 0; k < spec.bins(); ++k)
      profile.magnitude[k] += std::abs(spec.frames[m][k]);
    ++profile.frames_used;
  }
  if (profile.frames_used == 0) {
    // Pause regions exist but no analysis frame centers in one; fall back
    // to the lowest-energy analysis frame.
    std::size_t quietest = 0;
    double best = std::numeric_limits<double>::max();
    for (std::size_t m = 0; m < spec.size(); ++m) {
      double energy = 0.0;
      for (const auto& bin : spec.frames[m]) energy += std::norm(bin);
      if (energy < best) {
        best = energy;
        quietest = m;
      }
    }
    for (std::size_t k = 0; k < spec.bins(); ++k)
      profile.magnitude[k] = std::abs(spec.frames[quietest][k]);
    profile.frames_used = 1;
    return profile;
  }
  for (auto& v : profile.magnitude) v /= static_cast<double>(profile.frames_used);
  return profile;
}

// The per-bin magnitude rule: over-subtract alpha times the noise
// estimate, but never drop below the spectral floor beta|X| (and never
// above |X|). alpha = 1, beta = 0 gives plain magnitude subtraction.
inline double subtracted_magnitude(double noisy_mag, double noise_mag,
                                   double alpha, double beta) {
  return std::max(noisy_mag - alpha * noise_mag, beta * noisy_mag);
}

// Magnitude-domain spectral subtraction; the noisy phase is kept and the
// signal is resynthesized by inverse transform with overlap-add.
inline MonoSignal spectral_subtract(const MonoSignal& noisy,
                                    const NoiseProfile& profile,
                                    double alpha = 2.0, double beta = 0.02) {
  if (alpha < 0.0) throw InvalidArgumentError("spectral_subtract: alpha must be >= 0");
  if (beta < 0.0 || beta >= 1.0)
    throw InvalidArgumentError("spectral_subtract: beta must be in [0, 1)");
  if (profile.sample_rate != noisy.sample_rate)
    throw InvalidArgumentError("spectral_subtract: profile sample rate mismatch");

  Spectrogram spec = stft(noisy, profile.fft_size, profile.fft_size / 2);
  if (profile.magnitude.size() != spec.bins())
    throw InvalidArgumentError("spectral_subtract: profile bin count mismatch");

  for (auto& frame : spec.frames) {
    for (std::size_t k = 0; k < frame.size(); ++k) {
      const double mag = std::abs(frame[k]);
      if (mag <= 0.0) {
        frame[k] = 0.0;
        continue;
      }
      const double kept = subtracted_magnitude(mag, profile.magnitude[k], alpha, beta);
      frame[k] *= kept / mag;  // keep the noisy phase
    }
  }
  return istft(spec);
}

struct EnhanceOptions {
  double alpha = 2.0;
  double beta = 0.02;
  double pause_theta = 0.25;
  double pause_frame_ms = 32.0;
  double pause_hop_ms = 16.0;
  std::size_t fft_size = 2048;
};

// Full chain: pause detection, noise profiling, subtraction.
inline MonoSignal enhance_signal(const MonoSignal& noisy,
                                 const EnhanceOptions& options = {}) {
  const PauseMask mask = detect_pauses(noisy, options.pause_frame_ms,
                                       options.pause_hop_ms, options.pause_theta);
  const NoiseProfile profile = estimate_noise_profile(noisy, mask, options.fft_size);
  return spectral_subtract(noisy, profile, options.alpha, options.beta);
}

}  // namespace voxkit
