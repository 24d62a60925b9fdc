#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

#include "voxkit/errors.hpp"

namespace voxkit {

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace detail {

// In-place iterative radix-2 FFT. inverse=true computes the unscaled
// inverse transform; the caller divides by n.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (!is_power_of_two(n))
    throw InvalidArgumentError("fft: size must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang =
        (inverse ? 2.0 : -2.0) * std::numbers::pi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

}  // namespace detail

inline void fft(std::vector<std::complex<double>>& a) {
  detail::fft_radix2(a, false);
}

inline void ifft(std::vector<std::complex<double>>& a) {
  detail::fft_radix2(a, true);
  const double inv = 1.0 / static_cast<double>(a.size());
  for (auto& x : a) x *= inv;
}

// Forward transform of a real frame; returns the n/2 + 1 non-redundant bins.
inline std::vector<std::complex<double>> rfft(const std::vector<double>& frame) {
  std::vector<std::complex<double>> buf(frame.begin(), frame.end());
  fft(buf);
  buf.resize(frame.size() / 2 + 1);
  return buf;
}

// Inverse of rfft; n is the original (power-of-two) frame length.
inline std::vector<double> irfft(const std::vector<std::complex<double>>& bins,
                                 std::size_t n) {
  if (bins.size() != n / 2 + 1)
    throw InvalidArgumentError("irfft: bin count must be n/2 + 1");
  std::vector<std::complex<double>> buf(n);
  for (std::size_t k = 0; k <= n / 2; ++k) buf[k] = bins[k];
  for (std::size_t k = n / 2 + 1; k < n; ++k) buf[k] = std::conj(bins[n - k]);
  ifft(buf);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = buf[i].real();
  return out;
}

}  // namespace voxkit
