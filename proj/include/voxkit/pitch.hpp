#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <ostream>
#include <vector>

#include "voxkit/errors.hpp"
#include "voxkit/fft.hpp"
#include "voxkit/signal.hpp"

namespace voxkit {

struct PitchFrame {
  double time_s = 0.0;             // frame center
  std::optional<double> f0_hz;     // present only when voiced
  bool voiced = false;
  double peak_r = 0.0;             // normalized autocorrelation peak, [0, 1]
};

struct PitchContour {
  std::vector<PitchFrame> frames;
  double fmin_hz = 60.0;
  double fmax_hz = 400.0;
  double frame_ms = 40.0;
  double hop_ms = 10.0;
  int sample_rate = 44100;

  std::size_t voiced_count() const {
    std::size_t n = 0;
    for (const auto& f : frames) n += f.voiced ? 1 : 0;
    return n;
  }

  void to_csv(std::ostream& out) const {
    out << "time_s,f0_hz,voiced,peak_r\n";
    out.precision(10);
    for (const auto& f : frames) {
      out << f.time_s << ',';
      if (f.f0_hz) out << *f.f0_hz;
      out << ',' << (f.voiced ? 1 : 0) << ',' << f.peak_r << '\n';
    }
  }
};

struct PitchOptions {
  double fmin_hz = 60.0;
  double fmax_hz = 400.0;
  double frame_ms = 40.0;
  double hop_ms = 10.0;
  double voicing_threshold = 0.45;
  // Sub-sample lag refinement of the autocorrelation peak. Disable for the
  // plain integer-lag rule (sampling rate divided by peak spacing).
  bool parabolic = true;
};

namespace detail {

// Linear autocorrelation r(0..max_lag) of a frame, via an FFT of at least
// twice the frame length.
inline std::vector<double> autocorrelation(const std::vector<double>& frame,
                                           std::size_t max_lag) {
  std::size_t size = 1;
  while (size < 2 * frame.size()) size <<= 1;
  std::vector<std::complex<double>> buf(size, 0.0);
  for (std::size_t i = 0; i < frame.size(); ++i) buf[i] = frame[i];
  fft(buf);
  for (auto& v : buf) v = std::norm(v);
  ifft(buf);
  std::vector<double> r(max_lag + 1);
  for (std::size_t tau = 0; tau <= max_lag; ++tau) r[tau] = buf[tau].real();
  return r;
}

}  // namespace detail

// Frame-wise F0 by normalized autocorrelation: each frame is mean-
// subtracted, Hann-windowed, and its autocorrelation divided by the
// window's own autocorrelation; the peak over lags in
// [rate/fmax, rate/fmin] decides voicing and pitch.
inline PitchContour estimate_f0_contour(const MonoSignal& signal,
                                        const PitchOptions& options = {}) {
  if (signal.samples.empty())
    throw InvalidArgumentError("estimate_f0_contour: empty signal");
  if (options.frame_ms < 40.0 || options.frame_ms > 80.0)
    throw InvalidArgumentError("estimate_f0_contour: frame_ms must be in [40, 80]");
  if (!(options.fmin_hz > 0.0) || options.fmin_hz >= options.fmax_hz ||
      options.fmax_hz >= signal.sample_rate / 2.0)
    throw InvalidArgumentError(
        "estimate_f0_contour: need 0 < fmin < fmax < sample_rate/2");

  const double rate = signal.sample_rate;
  const FrameSequence frames = frame_signal(signal, options.frame_ms, options.hop_ms);
  const std::size_t frame_len = frames.frame_length;
  if (static_cast<double>(frame_len) < 2.0 * rate / options.fmin_hz)
    throw InvalidArgumentError(
        "estimate_f0_contour: frame shorter than two periods at fmin");

  const double lag_lo = rate / options.fmax_hz;
  const double lag_hi = rate / options.fmin_hz;
  const auto lag_min = static_cast<std::size_t>(std::ceil(lag_lo));
  const auto lag_max = static_cast<std::size_t>(std::floor(lag_hi));
  const std::size_t lag_top = lag_max + 1;  // one spare lag for peak tests

  const std::vector<double> window = hann_window(frame_len);
  const std::vector<double> window_acf = detail::autocorrelation(window, lag_top);
  const double w0 = window_acf[0];
  // Lags where the window autocorrelation is too small are excluded; the
  // normalization would blow up there.
  constexpr double kWindowFloor = 0.1;

  PitchContour contour;
  contour.fmin_hz = options.fmin_hz;
  contour.fmax_hz = options.fmax_hz;
  contour.frame_ms = options.frame_ms;
  contour.hop_ms = options.hop_ms;
  contour.sample_rate = signal.sample_rate;
  contour.frames.reserve(frames.size());

  std::vector<double> work(frame_len);
  for (std::size_t m = 0; m < frames.size(); ++m) {
    PitchFrame result;
    result.time_s = frames.center_time(m);

    const auto& raw = frames.frames[m];
    double mean = 0.0;
    for (double v : raw) mean += v;
    mean /= static_cast<double>(frame_len);
    for (std::size_t i = 0; i < frame_len; ++i) work[i] = (raw[i] - mean) * window[i];

    const std::vector<double> acf = detail::autocorrelation(work, lag_top);
    if (acf[0] <= 0.0) {  // silent frame
      contour.frames.push_back(result);
      continue;
    }

    // Normalized r(tau) = (r_x/r_x(0)) / (r_w/r_w(0)).
    auto normalized = [&](std::size_t tau) {
      return (acf[tau] / acf[0]) / (window_acf[tau] / w0);
    };
    auto usable = [&](std::size_t tau) {
      return window_acf[tau] >= kWindowFloor * w0;
    };

    std::size_t best_lag = 0;
    double best_r = -std::numeric_limits<double>::infinity();
    for (std::size_t tau = lag_min; tau <= lag_max; ++tau) {
      if (!usable(tau)) continue;
      const double r = normalized(tau);
      if (r > best_r) {
        best_r = r;
        best_lag = tau;
      }
    }
    if (best_lag == 0) {
      contour.frames.push_back(result);
      continue;
    }

    // On periodic signals every multiple of the true period scores ~1 and
    // rounding decides the winner. Among local maxima nearly tied with the
    // global peak, take the shortest lag so period multiples never win.
    constexpr double kTieTolerance = 0.02;
    for (std::size_t tau = lag_min; tau < best_lag; ++tau) {
      if (!usable(tau) || tau == 0) continue;
      const double r = normalized(tau);
      if (r < best_r - kTieTolerance) continue;
      const double left = usable(tau - 1) ? normalized(tau - 1) : -1e30;
      const double right = usable(tau + 1) ? normalized(tau + 1) : -1e30;
      if (r >= left && r >= right) {
        best_lag = tau;
        best_r = r;
        break;
      }
    }

    result.peak_r = std::clamp(best_r, 0.0, 1.0);
    if (result.peak_r >= options.voicing_threshold) {
      double lag = static_cast<double>(best_lag);
      if (options.parabolic && best_lag > lag_min && best_lag < lag_max &&
          window_acf[best_lag - 1] >= kWindowFloor * w0 &&
          window_acf[best_lag + 1] >= kWindowFloor * w0) {
        const double rl = normalized(best_lag - 1);
        const double rc = normalized(best_lag);
        const double rr = normalized(best_lag + 1);
        const double denom = rl - 2.0 * rc + rr;
        if (denom < 0.0) {
          const double delta = std::clamp(0.5 * (rl - rr) / denom, -0.5, 0.5);
          lag += delta;
        }
      }
      lag = std::clamp(lag, lag_lo, lag_hi);
      result.voiced = true;
      result.f0_hz = rate / lag;
    }
    contour.frames.push_back(result);
  }
  return contour;
}

}  // namespace voxkit
