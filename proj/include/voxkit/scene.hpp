#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "voxkit/errors.hpp"
#include "voxkit/rng.hpp"
#include "voxkit/signal.hpp"

namespace voxkit {

// Instantaneous mixing weights; rows are sensors, columns are sources.
struct MixingMatrix {
  Eigen::MatrixXd weights;

  Eigen::Index sensors() const { return weights.rows(); }
  Eigen::Index sources() const { return weights.cols(); }

  double condition_number() const {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(weights);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) <= 0.0)
      return std::numeric_limits<double>::infinity();
    return sv(0) / sv(sv.size() - 1);
  }
};

inline MixingMatrix identity_mixing(Eigen::Index n) {
  return {Eigen::MatrixXd::Identity(n, n)};
}

// Well-conditioned default whose off-diagonal weights decay with the
// sensor/source index distance, standing in for attenuation with distance.
// The 3x3 case is pinned so demo runs are directly comparable.
inline MixingMatrix demo_mixing(Eigen::Index n) {
  if (n == 3) {
    Eigen::MatrixXd m(3, 3);
    m << 1.0, 0.5, 0.3,
         0.4, 1.0, 0.5,
         0.3, 0.4, 1.0;
    return {m};
  }
  Eigen::MatrixXd m(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double decay = 1.0 / (1.0 + std::abs(static_cast<double>(i - j)));
      m(i, j) = j < i ? 0.9 * decay : decay;
    }
  return {m};
}

// One row per sensor, comma-separated weights.
inline void write_mixing_csv(const MixingMatrix& mixing, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FileWriteError("write_mixing_csv: cannot open '" + path + "'");
  out.precision(17);
  for (Eigen::Index i = 0; i < mixing.sensors(); ++i) {
    for (Eigen::Index j = 0; j < mixing.sources(); ++j) {
      if (j) out << ',';
      out << mixing.weights(i, j);
    }
    out << '\n';
  }
}

inline MixingMatrix read_mixing_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FileNotFoundError("read_mixing_csv: cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidArgumentError("read_mixing_csv: bad number '" + cell + "'");
      }
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InvalidArgumentError("read_mixing_csv: ragged rows");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InvalidArgumentError("read_mixing_csv: empty matrix");
  MixingMatrix m;
  m.weights.resize(static_cast<Eigen::Index>(rows.size()),
                   static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j)
      m.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return m;
}

// Ground-truth description of a simulated group recording.
struct Scene {
  std::vector<MonoSignal> sources;  // equal length, equal rate
  MixingMatrix mixing;
  std::optional<double> noise_snr_db;
  std::uint64_t seed = 1;
};

inline void validate(const Scene& scene) {
  if (scene.sources.empty())
    throw InvalidArgumentError("Scene: needs at least one source");
  if (scene.mixing.sources() != static_cast<Eigen::Index>(scene.sources.size()))
    throw InvalidArgumentError("Scene: mixing columns must match source count");
  const std::size_t n = scene.sources.front().samples.size();
  const int rate = scene.sources.front().sample_rate;
  for (const auto& s : scene.sources) {
    if (s.samples.size() != n)
      throw InvalidArgumentError("Scene: sources of unequal length");
    if (s.sample_rate != rate)
      throw InvalidArgumentError("Scene: sources of unequal sample rate");
  }
}

// x_i[n] = sum_j a_ij s_j[n], plus white Gaussian noise scaled so each
// sensor reaches noise_snr_db (10 log10 of signal power over noise power).
// Deterministic for a given seed.
inline std::vector<MonoSignal> mix(const Scene& scene) {
  validate(scene);
  const std::size_t n = scene.sources.front().samples.size();
  const int rate = scene.sources.front().sample_rate;

  std::vector<MonoSignal> sensors(scene.mixing.sensors());
  for (Eigen::Index i = 0; i < scene.mixing.sensors(); ++i) {
    auto& x = sensors[static_cast<std::size_t>(i)];
    x.sample_rate = rate;
    x.samples.assign(n, 0.0);
    for (Eigen::Index j = 0; j < scene.mixing.sources(); ++j) {
      const double a = scene.mixing.weights(i, j);
      const auto& s = scene.sources[static_cast<std::size_t>(j)].samples;
      for (std::size_t k = 0; k < n; ++k) x.samples[k] += a * s[k];
    }
  }

  if (scene.noise_snr_db) {
    GaussianRng rng(scene.seed);
    for (auto& x : sensors) {
      double power = 0.0;
      for (double v : x.samples) power += v * v;
      power /= std::max<std::size_t>(n, 1);
      const double noise_std =
          std::sqrt(power * std::pow(10.0, -*scene.noise_snr_db / 10.0));
      for (auto& v : x.samples) v += noise_std * rng.normal();
    }
  }
  return sensors;
}

// Scale-invariant signal-to-distortion ratio in dB, capped at +100 for
// (near-)exact matches.
inline double si_sdr(const MonoSignal& estimate, const MonoSignal& reference) {
  if (estimate.samples.size() != reference.samples.size())
    throw InvalidArgumentError("si_sdr: length mismatch");
  if (reference.samples.size() < 2)
    throw InvalidArgumentError("si_sdr: needs at least 2 samples");
  double er = 0.0, rr = 0.0;
  for (std::size_t i = 0; i < reference.samples.size(); ++i) {
    er += estimate.samples[i] * reference.samples[i];
    rr += reference.samples[i] * reference.samples[i];
  }
  if (rr <= 0.0) throw DegenerateInputError("si_sdr: all-zero reference");
  const double scale = er / rr;
  double target = 0.0, residual = 0.0;
  for (std::size_t i = 0; i < reference.samples.size(); ++i) {
    const double t = scale * reference.samples[i];
    const double d = estimate.samples[i] - t;
    target += t * t;
    residual += d * d;
  }
  constexpr double kCapDb = 100.0;
  if (residual <= 0.0) return kCapDb;
  return std::min(kCapDb, 10.0 * std::log10(target / residual));
}

// How well a set of estimates matches known references, under the best
// assignment: estimates[permutation[j]] corresponds to references[j].
struct SeparationScore {
  std::vector<std::size_t> permutation;
  std::vector<double> per_source_abs_r;     // |Pearson r| in [0, 1]
  std::vector<double> per_source_si_sdr_db;

  double mean_abs_r() const {
    return std::accumulate(per_source_abs_r.begin(), per_source_abs_r.end(), 0.0) /
           per_source_abs_r.size();
  }
  double mean_si_sdr_db() const {
    return std::accumulate(per_source_si_sdr_db.begin(),
                           per_source_si_sdr_db.end(), 0.0) /
           per_source_si_sdr_db.size();
  }
};

namespace detail {

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= a.size();
  mb /= b.size();
  double sab = 0.0, saa = 0.0, sbb = 0.0, ssq_a = 0.0, ssq_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
    ssq_a += a[i] * a[i];
    ssq_b += b[i] * b[i];
  }
  // Relative check: a nominally constant signal accumulates rounding noise.
  if (saa <= 1e-24 * ssq_a || sbb <= 1e-24 * ssq_b)
    throw DegenerateInputError("pearson: zero-variance signal");
  return sab / std::sqrt(saa * sbb);
}

}  // namespace detail

// Exhaustive search over assignments (guarded to <= 5 signals) maximizing
// the mean |Pearson r|; sign and scale of the estimates do not matter.
inline SeparationScore best_permutation(const std::vector<MonoSignal>& estimates,
                                        const std::vector<MonoSignal>& references) {
  if (estimates.size() != references.size())
    throw InvalidArgumentError("best_permutation: count mismatch");
  if (estimates.empty())
    throw InvalidArgumentError("best_permutation: empty input");
  if (estimates.size() > 5)
    throw InvalidArgumentError("best_permutation: more than 5 signals");
  const std::size_t count = estimates.size();
  for (std::size_t i = 0; i < count; ++i)
    if (estimates[i].samples.size() != references[i].samples.size())
      throw InvalidArgumentError("best_permutation: length mismatch");

  // |r| for every estimate/reference pair.
  std::vector<std::vector<double>> r(count, std::vector<double>(count));
  for (std::size_t e = 0; e < count; ++e)
    for (std::size_t j = 0; j < count; ++j)
      r[e][j] = std::abs(detail::pearson(estimates[e].samples, references[j].samples));

  std::vector<std::size_t> perm(count);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::size_t> best = perm;
  double best_sum = -1.0;
  do {
    double sum = 0.0;
    for (std::size_t j = 0; j < count; ++j) sum += r[perm[j]][j];
    if (sum > best_sum) {
      best_sum = sum;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  SeparationScore score;
  score.permutation = best;
  score.per_source_abs_r.resize(count);
  score.per_source_si_sdr_db.resize(count);
  for (std::size_t j = 0; j < count; ++j) {
    score.per_source_abs_r[j] = r[best[j]][j];
    score.per_source_si_sdr_db[j] = si_sdr(estimates[best[j]], references[j]);
  }
  return score;
}

}  // namespace voxkit
