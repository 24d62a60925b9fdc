#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "voxkit/errors.hpp"
#include "voxkit/pitch.hpp"
#include "voxkit/signal.hpp"

namespace voxkit {

struct Cycle {
  double period_s = 0.0;    // spacing to the next cycle boundary
  double amplitude = 0.0;   // peak |sample| within the cycle
};

// Glottal cycles grouped by voiced run; features never pair cycles from
// different runs.
struct CycleSequence {
  std::vector<std::vector<Cycle>> runs;

  std::size_t total_cycles() const {
    std::size_t n = 0;
    for (const auto& run : runs) n += run.size();
    return n;
  }
  std::vector<std::vector<double>> period_runs() const {
    std::vector<std::vector<double>> out;
    for (const auto& run : runs) {
      out.emplace_back();
      for (const auto& c : run) out.back().push_back(c.period_s);
    }
    return out;
  }
  std::vector<std::vector<double>> amplitude_runs() const {
    std::vector<std::vector<double>> out;
    for (const auto& run : runs) {
      out.emplace_back();
      for (const auto& c : run) out.back().push_back(c.amplitude);
    }
    return out;
  }
};

// Mean absolute difference of successive contour values,
// (1/(N-1)) sum |v[i+1] - v[i]|. The caller guarantees the contour has no
// run breaks inside it.
inline double mad_successive(const std::vector<double>& values) {
  if (values.size() < 2)
    throw InvalidArgumentError("mad_successive: needs >= 2 values");
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    acc += std::abs(values[i + 1] - values[i]);
  return acc / static_cast<double>(values.size() - 1);
}

// Same, as a percentage of the contour mean.
inline double mad_successive_percent(const std::vector<double>& values) {
  const double mad = mad_successive(values);
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (mean == 0.0)
    throw DegenerateInputError("mad_successive_percent: zero contour mean");
  return mad / mean * 100.0;
}

// Classical Schoentgen perturbation quotient of order K: the mean
// deviation of each value from the K-point moving average centered on it,
// as a percentage of the contour mean.
inline double pq_schoentgen(const std::vector<double>& values, std::size_t K = 5) {
  if (K < 3 || K % 2 == 0)
    throw InvalidArgumentError("pq_schoentgen: K must be odd and >= 3");
  if (values.size() < K)
    throw InvalidArgumentError("pq_schoentgen: needs >= K values");
  const std::size_t windows = values.size() - K + 1;
  double acc = 0.0;
  for (std::size_t i = 0; i < windows; ++i) {
    double wsum = 0.0;
    for (std::size_t j = 0; j < K; ++j) wsum += values[i + j];
    acc += std::abs(values[i + (K - 1) / 2] - wsum / static_cast<double>(K));
  }
  const double deviation = acc / static_cast<double>(windows);
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (mean == 0.0) throw DegenerateInputError("pq_schoentgen: zero contour mean");
  return deviation / mean * 100.0;
}

namespace detail {

// Aggregated forms over voiced runs: sum the per-run numerators, divide
// by the total pair/window count, normalize by the global contour mean.
inline double runs_mean(const std::vector<std::vector<double>>& runs) {
  double acc = 0.0;
  std::size_t n = 0;
  for (const auto& run : runs)
    for (double v : run) {
      acc += v;
      ++n;
    }
  return n ? acc / static_cast<double>(n) : 0.0;
}

inline double runs_mad(const std::vector<std::vector<double>>& runs) {
  double acc = 0.0;
  std::size_t pairs = 0;
  for (const auto& run : runs) {
    for (std::size_t i = 0; i + 1 < run.size(); ++i)
      acc += std::abs(run[i + 1] - run[i]);
    if (run.size() >= 2) pairs += run.size() - 1;
  }
  if (pairs == 0) throw InvalidArgumentError("perturbation: no successive pairs");
  return acc / static_cast<double>(pairs);
}

inline double runs_pq_percent(const std::vector<std::vector<double>>& runs,
                              std::size_t K) {
  double acc = 0.0;
  std::size_t windows = 0;
  for (const auto& run : runs) {
    if (run.size() < K) continue;
    for (std::size_t i = 0; i + K <= run.size(); ++i) {
      double wsum = 0.0;
      for (std::size_t j = 0; j < K; ++j) wsum += run[i + j];
      acc += std::abs(run[i + (K - 1) / 2] - wsum / static_cast<double>(K));
    }
    windows += run.size() - K + 1;
  }
  if (windows == 0)
    throw InvalidArgumentError("perturbation: no window of K cycles in any run");
  const double mean = runs_mean(runs);
  if (mean == 0.0) throw DegenerateInputError("perturbation: zero contour mean");
  return (acc / static_cast<double>(windows)) / mean * 100.0;
}

}  // namespace detail

// Locates cycle boundaries inside each maximal voiced run of the contour:
// marching by the local period, each boundary snaps to the nearest
// positive-going zero crossing. Runs shorter than 3 cycles are dropped.
inline CycleSequence extract_cycles(const MonoSignal& signal,
                                    const PitchContour& contour) {
  if (contour.voiced_count() == 0)
    throw DegenerateInputError("extract_cycles: fully unvoiced signal");

  const double rate = signal.sample_rate;
  const auto& frames = contour.frames;

  // Nearest positive-going zero crossing to `target` (sample units) within
  // +-search; sub-sample position by linear interpolation. Returns -1 when
  // none is found.
  auto nearest_crossing = [&](double target, double search) -> double {
    const auto lo = static_cast<long>(std::floor(target - search));
    const auto hi = static_cast<long>(std::ceil(target + search));
    double best = -1.0, best_dist = 1e300;
    for (long i = std::max<long>(lo, 0);
         i < std::min<long>(hi, static_cast<long>(signal.samples.size()) - 1); ++i) {
      const double a = signal.samples[static_cast<std::size_t>(i)];
      const double b = signal.samples[static_cast<std::size_t>(i) + 1];
      if (!(a <= 0.0 && b > 0.0)) continue;
      const double frac = (b - a) != 0.0 ? -a / (b - a) : 0.0;
      const double pos = static_cast<double>(i) + frac;
      const double dist = std::abs(pos - target);
      if (dist < best_dist) {
        best_dist = dist;
        best = pos;
      }
    }
    return best;
  };

  // Local period from the contour at an absolute sample position: the f0
  // of the nearest voiced frame of the current run.
  CycleSequence cycles;
  std::size_t m = 0;
  while (m < frames.size()) {
    if (!frames[m].voiced) {
      ++m;
      continue;
    }
    std::size_t run_end = m;
    while (run_end + 1 < frames.size() && frames[run_end + 1].voiced) ++run_end;

    const double t_start = frames[m].time_s * rate;
    const double t_end = frames[run_end].time_s * rate;

    auto local_period = [&](double sample_pos) {
      std::size_t nearest = m;
      double best = 1e300;
      for (std::size_t f = m; f <= run_end; ++f) {
        const double d = std::abs(frames[f].time_s * rate - sample_pos);
        if (d < best) {
          best = d;
          nearest = f;
        }
      }
      return rate / *frames[nearest].f0_hz;
    };

    std::vector<double> boundaries;
    double period = local_period(t_start);
    double boundary = nearest_crossing(t_start, period / 2.0);
    while (boundary >= 0.0 && boundary <= t_end + period) {
      boundaries.push_back(boundary);
      period = local_period(boundary);
      const double next = nearest_crossing(boundary + period, period / 2.0);
      if (next <= boundary) break;
      boundary = next;
    }

    if (boundaries.size() >= 4) {  // 3 cycles need 4 boundaries
      std::vector<Cycle> run;
      for (std::size_t b = 0; b + 1 < boundaries.size(); ++b) {
        Cycle c;
        c.period_s = (boundaries[b + 1] - boundaries[b]) / rate;
        const auto from = static_cast<std::size_t>(std::ceil(boundaries[b]));
        const auto to = std::min(static_cast<std::size_t>(std::ceil(boundaries[b + 1])),
                                 signal.samples.size());
        for (std::size_t i = from; i < to; ++i)
          c.amplitude = std::max(c.amplitude, std::abs(signal.samples[i]));
        run.push_back(c);
      }
      cycles.runs.push_back(std::move(run));
    }
    m = run_end + 1;
  }

  if (cycles.runs.empty())
    throw DegenerateInputError("extract_cycles: no voiced run of 3 or more cycles");
  return cycles;
}

// The canonical jitter and shimmer subset. Percent features are
// normalized by the mean of their own contour; keys are namespaced so
// later additions do not collide.
inline std::map<std::string, double> classical_set(const CycleSequence& cycles) {
  const std::size_t n = cycles.total_cycles();
  if (n < 5)
    throw DegenerateInputError("classical_set: needs >= 5 cycles");

  const auto periods = cycles.period_runs();
  const auto amplitudes = cycles.amplitude_runs();
  const double period_mean = detail::runs_mean(periods);
  const double amp_mean = detail::runs_mean(amplitudes);
  if (period_mean == 0.0 || amp_mean == 0.0)
    throw DegenerateInputError("classical_set: zero contour mean");

  std::map<std::string, double> features;
  const double jitter_mad = detail::runs_mad(periods);
  features["jitter.mad_seconds"] = jitter_mad;
  features["jitter.local_percent"] = jitter_mad / period_mean * 100.0;
  features["jitter.rap_percent"] = detail::runs_pq_percent(periods, 3);
  features["jitter.ppq5_percent"] = detail::runs_pq_percent(periods, 5);

  const double shimmer_mad = detail::runs_mad(amplitudes);
  features["shimmer.mad"] = shimmer_mad;
  features["shimmer.local_percent"] = shimmer_mad / amp_mean * 100.0;
  features["shimmer.apq3_percent"] = detail::runs_pq_percent(amplitudes, 3);
  features["shimmer.apq5_percent"] = detail::runs_pq_percent(amplitudes, 5);

  // dB shimmer: mean |20 log10(A[i+1]/A[i])| over within-run pairs.
  double acc = 0.0;
  std::size_t pairs = 0;
  for (const auto& run : amplitudes) {
    for (std::size_t i = 0; i + 1 < run.size(); ++i) {
      if (run[i] <= 0.0 || run[i + 1] <= 0.0)
        throw DegenerateInputError("classical_set: zero-amplitude cycle in dB shimmer");
      acc += std::abs(20.0 * std::log10(run[i + 1] / run[i]));
    }
    if (run.size() >= 2) pairs += run.size() - 1;
  }
  features["shimmer.db"] = acc / static_cast<double>(pairs);
  return features;
}

}  // namespace voxkit
