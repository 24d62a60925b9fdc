#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "voxkit/errors.hpp"
#include "voxkit/rng.hpp"
#include "voxkit/scene.hpp"
#include "voxkit/signal.hpp"

namespace voxkit {

// Non-quadratic contrast used by the neg-entropy approximation
// J(y) = [E G(y) - E G(nu)]^2 and its derivative g in the fixed-point
// update. LogCosh: G(u) = log cosh u, g = tanh. Gauss: G(u) = -e^{-u^2/2},
// g(u) = u e^{-u^2/2}.
enum class Contrast { LogCosh, Gauss };

inline Contrast contrast_from_string(const std::string& name) {
  if (name == "logcosh" || name == "tanh") return Contrast::LogCosh;
  if (name == "gauss") return Contrast::Gauss;
  throw InvalidArgumentError("unknown contrast function '" + name + "'");
}

inline std::string to_string(Contrast g) {
  return g == Contrast::LogCosh ? "logcosh" : "gauss";
}

namespace detail {

// E[G(nu)] for standard Gaussian nu, by Simpson quadrature on [-12, 12].
// Beyond |u| = 12 the integrand is below 1e-30. Evaluated once per
// contrast and cached.
inline double gaussian_contrast_mean(Contrast g) {
  auto compute = [](Contrast c) {
    const double lo = -12.0, hi = 12.0;
    const int n = 24000;  // even
    const double h = (hi - lo) / n;
    auto f = [c](double u) {
      const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
      const double G = c == Contrast::LogCosh ? std::log(std::cosh(u))
                                              : -std::exp(-0.5 * u * u);
      return G * pdf;
    };
    double acc = f(lo) + f(hi);
    for (int i = 1; i < n; ++i) acc += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
  };
  static const double logcosh_mean = compute(Contrast::LogCosh);
  static const double gauss_mean = compute(Contrast::Gauss);
  return g == Contrast::LogCosh ? logcosh_mean : gauss_mean;
}

inline Eigen::VectorXd standardize(const std::vector<double>& y,
                                   const char* caller) {
  if (y.size() < 2)
    throw InvalidArgumentError(std::string(caller) + ": too few samples");
  Eigen::Map<const Eigen::VectorXd> v(y.data(), static_cast<Eigen::Index>(y.size()));
  const double mean = v.mean();
  Eigen::VectorXd centered = v.array() - mean;
  const double variance = centered.squaredNorm() / centered.size();  // biased
  if (variance <= 1e-24 * (v.squaredNorm() / v.size() + 1e-300))
    throw DegenerateInputError(std::string(caller) + ": zero variance");
  return centered / std::sqrt(variance);
}

}  // namespace detail

// Excess kurtosis E(y^4) - 3 after internally standardizing y to zero
// mean and unit variance (biased 1/N moments). Zero for Gaussian data.
inline double kurtosis(const std::vector<double>& y) {
  if (y.size() < 4) throw InvalidArgumentError("kurtosis: needs >= 4 samples");
  const Eigen::VectorXd z = detail::standardize(y, "kurtosis");
  return z.array().square().square().mean() - 3.0;
}

// Neg-entropy approximation J(y) = [E G(y) - E G(nu)]^2 (k = 1) on the
// standardized sample. Non-negative by construction; near zero for
// Gaussian input.
inline double negentropy_approx(const std::vector<double>& y, Contrast g) {
  const Eigen::VectorXd z = detail::standardize(y, "negentropy_approx");
  double mean_G;
  if (g == Contrast::LogCosh) {
    mean_G = z.array().cosh().log().mean();
  } else {
    mean_G = (-(z.array().square() * -0.5).exp()).mean();
  }
  const double diff = mean_G - detail::gaussian_contrast_mean(g);
  return diff * diff;
}

// Removes the per-channel mean. X has one row per channel.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXd> center(const Eigen::MatrixXd& X) {
  if (X.rows() == 0 || X.cols() < 2)
    throw InvalidArgumentError("center: needs >= 2 samples per channel");
  const Eigen::VectorXd means = X.rowwise().mean();
  return {X.colwise() - means, means};
}

// Whitening derived from the eigendecomposition of the sample covariance
// E(XX^t) = P D P^t. For a full-size transform V = P D^{-1/2} P^t; when
// fewer components are requested V keeps only the leading eigenvector
// directions.
struct WhiteningTransform {
  Eigen::VectorXd means;       // channel means removed before whitening
  Eigen::MatrixXd eigvecs;     // P, columns sorted by descending eigenvalue
  Eigen::VectorXd eigvals;     // D diagonal, descending
  Eigen::MatrixXd whitener;    // V, n_components x channels
};

inline std::pair<Eigen::MatrixXd, WhiteningTransform> whiten(
    const Eigen::MatrixXd& centered, Eigen::Index n_components = -1) {
  const Eigen::Index channels = centered.rows();
  const Eigen::Index samples = centered.cols();
  if (channels == 0 || samples < 2)
    throw InvalidArgumentError("whiten: needs >= 2 samples");
  if (n_components < 0) n_components = channels;
  if (n_components == 0 || n_components > channels)
    throw InvalidArgumentError("whiten: bad component count");

  const Eigen::MatrixXd cov =
      centered * centered.transpose() / static_cast<double>(samples);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success)
    throw DegenerateInputError("whiten: eigendecomposition failed");

  // Eigen returns ascending order; flip to descending.
  Eigen::VectorXd eigvals = solver.eigenvalues().reverse();
  Eigen::MatrixXd eigvecs = solver.eigenvectors().rowwise().reverse();

  if (eigvals(channels - 1) < 1e-10 * eigvals(0) || eigvals(0) <= 0.0)
    throw DegenerateInputError("whiten: covariance is (near) rank deficient");

  WhiteningTransform transform;
  transform.means = Eigen::VectorXd::Zero(channels);
  transform.eigvecs = eigvecs;
  transform.eigvals = eigvals;
  const Eigen::VectorXd inv_sqrt = eigvals.array().rsqrt();
  if (n_components == channels) {
    transform.whitener =
        eigvecs * inv_sqrt.asDiagonal() * eigvecs.transpose();
  } else {
    transform.whitener = inv_sqrt.head(n_components).asDiagonal() *
                         eigvecs.leftCols(n_components).transpose();
  }
  return {transform.whitener * centered, transform};
}

// Divides by the (biased) standard deviation so the output has unit
// variance; the waveform shape is preserved up to the positive scale.
inline MonoSignal normalize_unit_variance(const MonoSignal& signal) {
  if (signal.samples.size() < 2)
    throw InvalidArgumentError("normalize_unit_variance: too few samples");
  Eigen::Map<const Eigen::VectorXd> v(signal.samples.data(),
                                      static_cast<Eigen::Index>(signal.samples.size()));
  const double mean = v.mean();
  const double variance = (v.array() - mean).square().mean();
  if (variance <= 1e-24 * (v.squaredNorm() / v.size() + 1e-300))
    throw DegenerateInputError("normalize_unit_variance: zero variance");
  MonoSignal out;
  out.sample_rate = signal.sample_rate;
  const double scale = 1.0 / std::sqrt(variance);
  out.samples.resize(signal.samples.size());
  for (std::size_t i = 0; i < signal.samples.size(); ++i)
    out.samples[i] = signal.samples[i] * scale;
  return out;
}

struct FastIcaOptions {
  int n_components = 0;  // 0 = one per input channel
  Contrast contrast = Contrast::LogCosh;
  double tol = 1e-6;
  int max_iter = 200;
  int restarts = 3;  // fresh seeded inits after a non-converged attempt
  std::uint64_t seed = 1;
  // Optional ground-truth references; when given, output order and sign
  // follow the best-permutation match instead of extraction order.
  const std::vector<MonoSignal>* refs = nullptr;
};

struct SeparationResult {
  std::vector<MonoSignal> sources;   // unit variance each
  WhiteningTransform whitening;
  Eigen::MatrixXd unmixing;          // rows w_k in whitened space
  Eigen::MatrixXd unmixing_original; // rows mapping centered input to raw y_k
  Eigen::MatrixXd mixing_estimate;   // columns reconstruct centered input
  std::vector<int> iterations;
  std::vector<bool> converged;
  // Present when refs were supplied.
  std::optional<SeparationScore> score;
};

namespace detail {

inline void apply_contrast(Contrast g, const Eigen::VectorXd& y,
                           Eigen::VectorXd& gy, double& mean_gprime) {
  if (g == Contrast::LogCosh) {
    gy = y.array().tanh();
    mean_gprime = (1.0 - gy.array().square()).mean();
  } else {
    const Eigen::ArrayXd e = (y.array().square() * -0.5).exp();
    gy = y.array() * e;
    mean_gprime = ((1.0 - y.array().square()) * e).mean();
  }
}

inline Eigen::VectorXd random_unit_vector(GaussianRng& rng, Eigen::Index dim) {
  Eigen::VectorXd w(dim);
  do {
    for (Eigen::Index i = 0; i < dim; ++i) w(i) = rng.normal();
  } while (w.norm() < 1e-12);
  return w / w.norm();
}

}  // namespace detail

// FastICA by deflation: center, whiten, then for each component run the
// fixed-point update w+ = E{x g(w^t x)} - E{g'(w^t x)} w, Gram-Schmidt
// orthogonalization against the components already found, and
// renormalization, until |<w_new, w_old>| > 1 - tol. Non-converged
// components are flagged, not fatal. Every separated signal is normalized
// to unit variance.
inline SeparationResult fastica(const std::vector<MonoSignal>& channels,
                                const FastIcaOptions& options = {}) {
  if (channels.empty()) throw InvalidArgumentError("fastica: no input channels");
  const std::size_t n = channels.front().samples.size();
  const int rate = channels.front().sample_rate;
  for (const auto& c : channels) {
    if (c.samples.size() != n)
      throw InvalidArgumentError("fastica: channels of unequal length");
    if (c.sample_rate != rate)
      throw InvalidArgumentError("fastica: channels of unequal sample rate");
  }
  const auto n_channels = static_cast<Eigen::Index>(channels.size());
  const Eigen::Index n_comp =
      options.n_components > 0 ? options.n_components : n_channels;
  if (n_comp > n_channels)
    throw InvalidArgumentError("fastica: more components than channels");
  if (n < 2) throw InvalidArgumentError("fastica: too few samples");

  Eigen::MatrixXd X(n_channels, static_cast<Eigen::Index>(n));
  for (Eigen::Index c = 0; c < n_channels; ++c)
    X.row(c) = Eigen::Map<const Eigen::RowVectorXd>(
        channels[static_cast<std::size_t>(c)].samples.data(),
        static_cast<Eigen::Index>(n));

  auto [centered, means] = center(X);
  auto [white, transform] = whiten(centered, n_comp);
  transform.means = means;

  SeparationResult result;
  result.whitening = transform;
  result.unmixing = Eigen::MatrixXd::Zero(n_comp, n_comp);
  result.iterations.assign(static_cast<std::size_t>(n_comp), 0);
  result.converged.assign(static_cast<std::size_t>(n_comp), false);

  GaussianRng rng(options.seed);
  const double target = 1.0 - options.tol;

  for (Eigen::Index k = 0; k < n_comp; ++k) {
    Eigen::VectorXd w;
    bool converged = false;
    int iterations_used = 0;
    for (int attempt = 0; attempt <= options.restarts && !converged; ++attempt) {
      w = detail::random_unit_vector(rng, n_comp);
      // Start inside the subspace orthogonal to previous components.
      for (Eigen::Index j = 0; j < k; ++j)
        w -= result.unmixing.row(j).dot(w) * result.unmixing.row(j).transpose();
      if (w.norm() < 1e-12) continue;
      w.normalize();

      for (int iter = 0; iter < options.max_iter; ++iter) {
        ++iterations_used;
        const Eigen::VectorXd y = white.transpose() * w;
        Eigen::VectorXd gy;
        double mean_gprime = 0.0;
        detail::apply_contrast(options.contrast, y, gy, mean_gprime);
        Eigen::VectorXd w_new =
            white * gy / static_cast<double>(n) - mean_gprime * w;
        for (Eigen::Index j = 0; j < k; ++j)
          w_new -= result.unmixing.row(j).dot(w_new) *
                   result.unmixing.row(j).transpose();
        const double norm = w_new.norm();
        if (norm < 1e-12) break;  // collapsed into the found subspace
        w_new /= norm;
        const double agreement = std::abs(w_new.dot(w));
        w = w_new;
        if (agreement > target) {
          converged = true;
          break;
        }
      }
    }
    result.unmixing.row(k) = w.transpose();
    result.iterations[static_cast<std::size_t>(k)] = iterations_used;
    result.converged[static_cast<std::size_t>(k)] = converged;
  }

  // Back to the original coordinates: y = W V (x - means).
  result.unmixing_original = result.unmixing * transform.whitener;

  // Sign convention: make the dominant unmixing weight of each component
  // positive so repeated runs and trivial inputs are reproducible.
  for (Eigen::Index k = 0; k < n_comp; ++k) {
    Eigen::Index arg = 0;
    result.unmixing_original.row(k).cwiseAbs().maxCoeff(&arg);
    if (result.unmixing_original(k, arg) < 0.0) {
      result.unmixing_original.row(k) = -result.unmixing_original.row(k);
      result.unmixing.row(k) = -result.unmixing.row(k);
    }
  }

  Eigen::MatrixXd raw = result.unmixing_original * centered;
  // Unit-variance outputs, with the scale folded into the mixing estimate.
  Eigen::VectorXd stddevs(n_comp);
  for (Eigen::Index k = 0; k < n_comp; ++k) {
    const double var =
        (raw.row(k).array() - raw.row(k).mean()).square().mean();
    if (var <= 0.0)
      throw DegenerateInputError("fastica: extracted component has zero variance");
    stddevs(k) = std::sqrt(var);
  }

  const Eigen::MatrixXd pinv =
      result.unmixing_original.completeOrthogonalDecomposition().pseudoInverse();
  result.mixing_estimate = pinv * stddevs.asDiagonal();

  result.sources.resize(static_cast<std::size_t>(n_comp));
  for (Eigen::Index k = 0; k < n_comp; ++k) {
    auto& s = result.sources[static_cast<std::size_t>(k)];
    s.sample_rate = rate;
    s.samples.resize(n);
    const double inv = 1.0 / stddevs(k);
    for (std::size_t i = 0; i < n; ++i)
      s.samples[i] = raw(k, static_cast<Eigen::Index>(i)) * inv;
  }

  if (options.refs) {
    if (options.refs->size() != result.sources.size())
      throw InvalidArgumentError("fastica: reference count mismatch");
    SeparationScore score = best_permutation(result.sources, *options.refs);
    SeparationResult reordered = result;
    for (std::size_t j = 0; j < score.permutation.size(); ++j) {
      const std::size_t e = score.permutation[j];
      const auto je = static_cast<Eigen::Index>(e);
      const auto jj = static_cast<Eigen::Index>(j);
      reordered.sources[j] = result.sources[e];
      reordered.unmixing.row(jj) = result.unmixing.row(je);
      reordered.unmixing_original.row(jj) = result.unmixing_original.row(je);
      reordered.mixing_estimate.col(jj) = result.mixing_estimate.col(je);
      reordered.iterations[j] = result.iterations[e];
      reordered.converged[j] = result.converged[e];
      // Align sign with the reference.
      const double r = detail::pearson(reordered.sources[j].samples,
                                       (*options.refs)[j].samples);
      if (r < 0.0) {
        for (auto& v : reordered.sources[j].samples) v = -v;
        reordered.unmixing.row(jj) = -reordered.unmixing.row(jj);
        reordered.unmixing_original.row(jj) = -reordered.unmixing_original.row(jj);
        reordered.mixing_estimate.col(jj) = -reordered.mixing_estimate.col(jj);
      }
    }
    reordered.score = best_permutation(reordered.sources, *options.refs);
    return reordered;
  }
  return result;
}

}  // namespace voxkit
