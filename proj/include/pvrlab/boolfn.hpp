#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

// Real-valued functions on the Boolean cube {-1,+1}^n and their Fourier
// expansions.
//
// Encoding, used everywhere in this library:
//   * point masks: bit i of the mask corresponds to coordinate x_{i+1};
//     bit set means x_{i+1} = -1, bit clear means x_{i+1} = +1, so mask 0
//     is the all-(+1) point and mask 2^n - 1 the all-(-1) point;
//   * subset masks: bit i set means coordinate i+1 is in the subset T, so
//     the character chi_T at point x is (-1)^popcount(t & x);
//   * f_hat(T) = 2^-n sum_x f(x) chi_T(x), and f = sum_T f_hat(T) chi_T.
// Truth tables are dense vectors of length 2^n; n is capped at 24.

namespace pvrlab {

inline constexpr int kMaxDim = 24;

inline void check_dim(int n) {
  if (n < 1 || n > kMaxDim)
    throw std::invalid_argument("dimension n = " + std::to_string(n) +
                                " out of range [1, " + std::to_string(kMaxDim) + "]");
}

struct BooleanFunction {
  int n = 0;
  std::vector<double> values;  // size 2^n, indexed by point mask

  double at(std::uint32_t mask) const { return values[mask]; }
};

struct FourierSpectrum {
  int n = 0;
  std::vector<double> coeffs;  // size 2^n, indexed by subset mask

  double at(std::uint32_t mask) const { return coeffs[mask]; }
};

inline void check_table(const BooleanFunction& f) {
  check_dim(f.n);
  if (f.values.size() != (std::size_t{1} << f.n))
    throw std::invalid_argument("truth table size does not match dimension");
}

inline void check_spectrum(const FourierSpectrum& s) {
  check_dim(s.n);
  if (s.coeffs.size() != (std::size_t{1} << s.n))
    throw std::invalid_argument("spectrum size does not match dimension");
}

inline void check_coordinate(int n, int k) {
  if (k < 1 || k > n) throw std::invalid_argument("coordinate k out of range");
}

inline double chi(std::uint32_t subset, std::uint32_t point) {
  return (std::popcount(subset & point) & 1) ? -1.0 : 1.0;
}

// Expands a point mask into signs: out[i] = x_{i+1} in {-1.0, +1.0}.
inline void decode_point(std::uint32_t mask, int n, double* out) {
  for (int i = 0; i < n; ++i) out[i] = (mask >> i) & 1u ? -1.0 : 1.0;
}

// Tabulates f from an evaluator. The evaluator is called either with the
// point mask (if invocable on uint32_t) or with a span of n signs.
template <class F>
BooleanFunction from_evaluator(int n, F&& eval) {
  check_dim(n);
  BooleanFunction f{n, std::vector<double>(std::size_t{1} << n)};
  if constexpr (std::is_invocable_v<F&, std::uint32_t>) {
    for (std::uint32_t m = 0; m < f.values.size(); ++m)
      f.values[m] = static_cast<double>(eval(m));
  } else {
    std::vector<double> x(n);
    for (std::uint32_t m = 0; m < f.values.size(); ++m) {
      decode_point(m, n, x.data());
      f.values[m] = static_cast<double>(eval(std::span<const double>(x)));
    }
  }
  return f;
}

// In-place Walsh-Hadamard butterfly: v <- H v with H[t][m] = (-1)^|t & m|.
// Self-inverse up to the factor 2^n.
inline void walsh_hadamard_inplace(std::vector<double>& v) {
  const std::size_t size = v.size();
  for (std::size_t len = 1; len < size; len <<= 1)
    for (std::size_t block = 0; block < size; block += len << 1)
      for (std::size_t i = block; i < block + len; ++i) {
        const double a = v[i], b = v[i + len];
        v[i] = a + b;
        v[i + len] = a - b;
      }
}

inline FourierSpectrum fourier_transform(const BooleanFunction& f) {
  check_table(f);
  FourierSpectrum s{f.n, f.values};
  walsh_hadamard_inplace(s.coeffs);
  const double scale = 1.0 / static_cast<double>(std::size_t{1} << f.n);
  for (double& c : s.coeffs) c *= scale;
  return s;
}

inline BooleanFunction inverse_transform(const FourierSpectrum& s) {
  check_spectrum(s);
  BooleanFunction f{s.n, s.coeffs};
  walsh_hadamard_inplace(f.values);
  return f;
}

// Inf_k(f) = sum over T containing k of f_hat(T)^2.
inline double influence(const FourierSpectrum& s, int k) {
  check_spectrum(s);
  if (k < 1 || k > s.n) throw std::invalid_argument("coordinate k out of range");
  const std::uint32_t bit = 1u << (k - 1);
  double acc = 0.0;
  for (std::uint32_t t = 0; t < s.coeffs.size(); ++t)
    if (t & bit) acc += s.coeffs[t] * s.coeffs[t];
  return acc;
}

// W^k[f] for k = 0..n.
inline std::vector<double> degree_weights(const FourierSpectrum& s) {
  check_spectrum(s);
  std::vector<double> w(s.n + 1, 0.0);
  for (std::uint32_t t = 0; t < s.coeffs.size(); ++t)
    w[std::popcount(t)] += s.coeffs[t] * s.coeffs[t];
  return w;
}

// Stab_delta[f] = sum_k (1-2 delta)^k W^k[f] = E[f(X) f(Y)] with Y an
// independent delta-flip of X.
inline double noise_stability(const FourierSpectrum& s, double delta) {
  if (delta < 0.0 || delta > 1.0)
    throw std::invalid_argument("delta out of range [0, 1]");
  const std::vector<double> w = degree_weights(s);
  const double rho = 1.0 - 2.0 * delta;
  double acc = 0.0, pw = 1.0;
  for (std::size_t k = 0; k < w.size(); ++k, pw *= rho) acc += pw * w[k];
  return acc;
}

inline bool is_pm_one(const BooleanFunction& f, double tol = 0.0) {
  for (double v : f.values)
    if (std::abs(std::abs(v) - 1.0) > tol) return false;
  return true;
}

// NS_delta[f] = 1/2 - 1/2 Stab_delta[f]; the flip-probability reading only
// holds for ±1-valued f, so anything else is rejected.
inline double noise_sensitivity(const BooleanFunction& f, double delta) {
  check_table(f);
  if (!is_pm_one(f))
    throw std::invalid_argument("noise sensitivity requires a ±1-valued function");
  return 0.5 - 0.5 * noise_stability(fourier_transform(f), delta);
}

// f with x_k frozen to +1; still a function of n coordinates.
inline BooleanFunction freeze(const BooleanFunction& f, int k) {
  check_table(f);
  if (k < 1 || k > f.n) throw std::invalid_argument("coordinate k out of range");
  const std::uint32_t bit = 1u << (k - 1);
  BooleanFunction g{f.n, std::vector<double>(f.values.size())};
  for (std::uint32_t m = 0; m < f.values.size(); ++m)
    g.values[m] = f.values[m & ~bit];
  return g;
}

// Same function viewed on a larger cube; the new coordinates are ignored.
inline BooleanFunction extend(const BooleanFunction& f, int big_n) {
  check_table(f);
  check_dim(big_n);
  if (big_n < f.n) throw std::invalid_argument("extension must not shrink n");
  const std::uint32_t low = (std::uint32_t{1} << f.n) - 1;
  BooleanFunction g{big_n, std::vector<double>(std::size_t{1} << big_n)};
  for (std::uint32_t m = 0; m < g.values.size(); ++m)
    g.values[m] = f.values[m & low];
  return g;
}

// 1/2 sum_T (f_hat(T) - g_hat(T))^2 = 1/2 E[(f - g)^2].
inline double spectral_distance(const FourierSpectrum& a, const FourierSpectrum& b) {
  check_spectrum(a);
  check_spectrum(b);
  if (a.n != b.n) throw std::invalid_argument("spectral distance needs equal dimensions");
  double acc = 0.0;
  for (std::size_t t = 0; t < a.coeffs.size(); ++t) {
    const double d = a.coeffs[t] - b.coeffs[t];
    acc += d * d;
  }
  return 0.5 * acc;
}

// Minimum-l2-norm interpolant of the data {x : x_k = +1}: spreads each merged
// coefficient f_hat(T) + f_hat(T+k) equally over T and T+k.
inline FourierSpectrum min_norm_completion(const BooleanFunction& f, int k) {
  check_table(f);
  if (k < 1 || k > f.n) throw std::invalid_argument("coordinate k out of range");
  const FourierSpectrum s = fourier_transform(f);
  const std::uint32_t bit = 1u << (k - 1);
  FourierSpectrum out{f.n, std::vector<double>(s.coeffs.size())};
  for (std::uint32_t t = 0; t < s.coeffs.size(); ++t) {
    if (t & bit) continue;
    const double half = 0.5 * (s.coeffs[t] + s.coeffs[t | bit]);
    out.coeffs[t] = half;
    out.coeffs[t | bit] = half;
  }
  return out;
}

struct DensityReport {
  double small_weight = 0.0;       // sum of f_hat(T)^2 with f_hat(T)^2 <= n^-c
  double high_degree_weight = 0.0; // sum of f_hat(T)^2 with |T| >= n - D
};

// Density queries behind the non-dense / non-extremal assumptions. A squared
// coefficient exactly equal to n^-c counts as small.
inline DensityReport spectral_density_queries(const FourierSpectrum& s, double c, int d) {
  check_spectrum(s);
  if (c <= 0.0) throw std::invalid_argument("exponent c must be positive");
  if (d < 0 || d >= s.n) throw std::invalid_argument("degree margin D out of range [0, n)");
  const double threshold = std::pow(static_cast<double>(s.n), -c);
  DensityReport r;
  for (std::uint32_t t = 0; t < s.coeffs.size(); ++t) {
    const double sq = s.coeffs[t] * s.coeffs[t];
    if (sq <= threshold) r.small_weight += sq;
    if (std::popcount(t) >= s.n - d) r.high_degree_weight += sq;
  }
  return r;
}

}  // namespace pvrlab
