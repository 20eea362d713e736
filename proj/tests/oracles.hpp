#pragma once

// Independent reference implementations used only by tests. Each oracle is a
// deliberately naive alternative code path (quadratic transforms, straight
// per-point loops, exhaustive enumerations) so that agreement with the
// library is meaningful.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include "pvrlab/boolfn.hpp"
#include "pvrlab/pvr.hpp"
#include "pvrlab/rng.hpp"

namespace oracles {

using pvrlab::BooleanFunction;
using pvrlab::FourierSpectrum;

// O(4^n) direct transform; no butterflies.
inline FourierSpectrum naive_fourier(const BooleanFunction& f) {
  const std::size_t size = f.values.size();
  FourierSpectrum s{f.n, std::vector<double>(size, 0.0)};
  for (std::uint32_t t = 0; t < size; ++t) {
    double acc = 0.0;
    for (std::uint32_t m = 0; m < size; ++m)
      acc += f.values[m] * ((std::popcount(t & m) & 1) ? -1.0 : 1.0);
    s.coeffs[t] = acc / static_cast<double>(size);
  }
  return s;
}

// (1/4) E_x (f(x) - f(x ^ e_k))^2; the flip probability when f is ±1-valued.
inline double flip_influence(const BooleanFunction& f, int k) {
  const std::uint32_t bit = 1u << (k - 1);
  double acc = 0.0;
  for (std::uint32_t m = 0; m < f.values.size(); ++m) {
    const double d = f.values[m] - f.values[m ^ bit];
    acc += d * d;
  }
  return 0.25 * acc / static_cast<double>(f.values.size());
}

// E[f(X) f(Y)] with Y a delta-flip of X, by exhaustive enumeration of the
// 2^n flip patterns.
inline double pairsum_stability(const BooleanFunction& f, double delta) {
  const std::size_t size = f.values.size();
  double acc = 0.0;
  for (std::uint32_t e = 0; e < size; ++e) {
    const int flips = std::popcount(e);
    const double pe =
        std::pow(delta, flips) * std::pow(1.0 - delta, f.n - flips);
    double inner = 0.0;
    for (std::uint32_t m = 0; m < size; ++m)
      inner += f.values[m] * f.values[m ^ e];
    acc += pe * inner / static_cast<double>(size);
  }
  return acc;
}

inline BooleanFunction random_pm_one(int n, pvrlab::Rng& rng) {
  return pvrlab::from_evaluator(n, [&](std::uint32_t) { return rng.sign(); });
}

inline BooleanFunction random_real(int n, pvrlab::Rng& rng) {
  return pvrlab::from_evaluator(n, [&](std::uint32_t) { return rng.uniform(-1.0, 1.0); });
}

// The 4-bit worked example in its pointer form, evaluated directly.
inline BooleanFunction pointer_example4() {
  return pvrlab::from_evaluator(4, [](std::span<const double> x) {
    return 0.5 * (1.0 + x[0]) * x[1] * x[2] + 0.5 * (1.0 - x[0]) * x[2] * x[3];
  });
}

// Straight-line PVR evaluation from first principles: decode the pointer
// digit by digit, gather the window with explicit index arithmetic, fold the
// aggregation with plain ifs. Shares only the PvrSpec parameter struct with
// the library.
inline double straight_pvr_value(const pvrlab::PvrSpec& s, std::uint32_t m) {
  const int n = pvrlab::pvr_dimension(s);
  int v = 0;
  for (int i = 1; i <= s.p; ++i) {
    const bool is_one = (m >> (i - 1)) & 1u;  // -1 plays digit 1
    v = 2 * v + (is_one ? 1 : 0);
  }
  std::vector<int> window;
  if (s.mode == pvrlab::PvrMode::non_overlapping) {
    const int start = s.p + 1 + v * s.w;
    for (int j = 0; j < s.w; ++j) window.push_back(start + j);
  } else if (s.mode == pvrlab::PvrMode::cyclic) {
    for (int j = 0; j < s.w; ++j) {
      int coord = s.p + 1 + v + j;
      while (coord > n) coord -= n - s.p;
      window.push_back(coord);
    }
  } else {
    const int start = s.p + 1 + v;
    for (int j = 0; j < s.w && start + j <= n; ++j) window.push_back(start + j);
  }
  std::vector<double> bits;
  for (int coord : window)
    bits.push_back(((m >> (coord - 1)) & 1u) ? -1.0 : 1.0);
  switch (s.agg) {
    case pvrlab::Aggregation::parity: {
      double prod = 1.0;
      for (double b : bits) prod *= b;
      return prod;
    }
    case pvrlab::Aggregation::majority: {
      double sum = 0.0;
      for (double b : bits) sum += b;
      if (sum > 0) return 1.0;
      if (sum < 0) return -1.0;
      return 0.0;
    }
    case pvrlab::Aggregation::min:
      return *std::min_element(bits.begin(), bits.end());
    case pvrlab::Aggregation::max:
      return *std::max_element(bits.begin(), bits.end());
    case pvrlab::Aggregation::custom: {
      std::uint32_t wm = 0;
      for (std::size_t j = 0; j < bits.size(); ++j)
        if (bits[j] < 0) wm |= 1u << j;
      return s.custom_tables[bits.size() - 1][wm];
    }
  }
  return 0.0;
}

inline BooleanFunction straight_pvr(const pvrlab::PvrSpec& s) {
  return pvrlab::from_evaluator(pvrlab::pvr_dimension(s), [&](std::uint32_t m) {
    return straight_pvr_value(s, m);
  });
}

// Exact cross-predictability over all of S_n via the spectral identity
// E[f · (f∘pi)] = sum_T f̂(T) f̂(pi(T)); the library works from truth tables.
inline double sn_cross_predictability(const BooleanFunction& f) {
  const FourierSpectrum s = naive_fourier(f);
  const std::size_t size = s.coeffs.size();
  std::vector<int> perm(f.n);
  std::iota(perm.begin(), perm.end(), 0);
  double acc = 0.0;
  std::size_t count = 0;
  do {
    double inner = 0.0;
    for (std::uint32_t t = 0; t < size; ++t) {
      std::uint32_t pt = 0;
      for (int i = 0; i < f.n; ++i)
        if ((t >> i) & 1u) pt |= 1u << perm[i];
      inner += s.coeffs[t] * s.coeffs[pt];
    }
    acc += inner * inner;
    ++count;
  } while (std::next_permutation(perm.begin(), perm.end()));
  return acc / static_cast<double>(count);
}

}  // namespace oracles
