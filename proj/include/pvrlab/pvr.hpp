#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvrlab/boolfn.hpp"

// Pointer-value-retrieval functions: the first p bits form a pointer that
// selects a window of w bits among the remaining coordinates; an aggregation
// of the window is the output.
//
// Conventions (fixed here, documented once):
//   * x_1 is the most significant pointer bit;
//   * +1 plays the role of binary digit 0, -1 of digit 1, matching the
//     truth-table encoding in boolfn.hpp;
//   * windows for pointer value v start at coordinate p+1+v (truncated and
//     cyclic modes) or p+1+v*w (non-overlapping), and cyclic indexing wraps
//     back to coordinate p+1.

namespace pvrlab {

enum class PvrMode { truncated, cyclic, non_overlapping };
enum class Aggregation { parity, majority, min, max, custom };

struct PvrSpec {
  int p = 1;
  int w = 1;
  PvrMode mode = PvrMode::truncated;
  Aggregation agg = Aggregation::parity;
  // Custom aggregation: custom_tables[r-1] is the table for arity r, indexed
  // by the r-bit window mask (bit j set iff window bit j is -1). Arity w is
  // required; lower arities only when truncated windows actually shrink.
  std::vector<std::vector<double>> custom_tables;
  // Explicit total dimension; 0 selects the standard sizing p + 2^p
  // (truncated/cyclic) or p + 2^p * w (non-overlapping). An override is only
  // meaningful for truncated/cyclic, e.g. the 4-bit two-window example.
  int dim = 0;
};

inline int pvr_dimension(const PvrSpec& s) {
  const int windows = 1 << s.p;
  const int standard = s.mode == PvrMode::non_overlapping ? s.p + windows * s.w
                                                          : s.p + windows;
  return s.dim > 0 ? s.dim : standard;
}

inline void check_pvr(const PvrSpec& s) {
  if (s.p < 1) throw std::invalid_argument("pointer width p must be >= 1");
  if (s.w < 1) throw std::invalid_argument("window size w must be >= 1");
  if (s.mode != PvrMode::non_overlapping && s.w > (1 << s.p))
    throw std::invalid_argument("sliding windows require w <= 2^p");
  if (s.dim != 0) {
    if (s.mode == PvrMode::non_overlapping)
      throw std::invalid_argument("dimension override is not supported for non-overlapping mode");
    if (s.dim < s.p + (1 << s.p))
      throw std::invalid_argument("dimension override must cover every window start");
  }
  if (s.agg == Aggregation::custom) {
    if (s.custom_tables.size() < static_cast<std::size_t>(s.w) ||
        s.custom_tables[s.w - 1].size() != (std::size_t{1} << s.w))
      throw std::invalid_argument("custom aggregation needs a table of size 2^w at arity w");
    for (int r = 1; r <= s.w; ++r)
      if (!s.custom_tables[r - 1].empty() &&
          s.custom_tables[r - 1].size() != (std::size_t{1} << r))
        throw std::invalid_argument("custom table at arity " + std::to_string(r) +
                                    " has the wrong size");
  } else if (!s.custom_tables.empty()) {
    throw std::invalid_argument("custom tables given but aggregation is not custom");
  }
  check_dim(pvr_dimension(s));
}

namespace detail {

// signs[0..arity) are ±1; for custom, the table is indexed by the window mask
// with bit j set iff signs[j] = -1.
inline double aggregate(const PvrSpec& s, const double* signs, int arity) {
  switch (s.agg) {
    case Aggregation::parity: {
      double prod = 1.0;
      for (int j = 0; j < arity; ++j) prod *= signs[j];
      return prod;
    }
    case Aggregation::majority: {
      double sum = 0.0;
      for (int j = 0; j < arity; ++j) sum += signs[j];
      return sum > 0.0 ? 1.0 : (sum < 0.0 ? -1.0 : 0.0);
    }
    case Aggregation::min: {
      for (int j = 0; j < arity; ++j)
        if (signs[j] < 0.0) return -1.0;
      return 1.0;
    }
    case Aggregation::max: {
      for (int j = 0; j < arity; ++j)
        if (signs[j] > 0.0) return 1.0;
      return -1.0;
    }
    case Aggregation::custom: {
      if (s.custom_tables[arity - 1].empty())
        throw std::invalid_argument("custom aggregation missing arity " +
                                    std::to_string(arity) + " needed by truncated mode");
      std::uint32_t mask = 0;
      for (int j = 0; j < arity; ++j)
        if (signs[j] < 0.0) mask |= 1u << j;
      return s.custom_tables[arity - 1][mask];
    }
  }
  throw std::logic_error("unreachable aggregation");
}

}  // namespace detail

// The w-bit aggregation g as a function on the cube, full arity.
inline BooleanFunction aggregation_table(const PvrSpec& s) {
  check_pvr(s);
  std::vector<double> signs(s.w);
  return from_evaluator(s.w, [&](std::uint32_t m) {
    decode_point(m, s.w, signs.data());
    return detail::aggregate(s, signs.data(), s.w);
  });
}

inline BooleanFunction make_pvr(const PvrSpec& s) {
  check_pvr(s);
  const int n = pvr_dimension(s);
  const int field = n - s.p;  // window coordinates p+1 .. n
  BooleanFunction f{n, std::vector<double>(std::size_t{1} << n)};
  std::vector<double> signs(s.w);
  for (std::uint32_t m = 0; m < f.values.size(); ++m) {
    std::uint32_t v = 0;  // pointer value, x_1 most significant, -1 = digit 1
    for (int i = 0; i < s.p; ++i)
      v = (v << 1) | ((m >> i) & 1u);
    int arity = s.w;
    if (s.mode == PvrMode::cyclic) {
      for (int j = 0; j < s.w; ++j) {
        const int coord = s.p + 1 + static_cast<int>((v + j) % static_cast<std::uint32_t>(field));
        signs[j] = (m >> (coord - 1)) & 1u ? -1.0 : 1.0;
      }
    } else {
      const int start = s.mode == PvrMode::non_overlapping
                            ? s.p + 1 + static_cast<int>(v) * s.w
                            : s.p + 1 + static_cast<int>(v);
      if (s.mode == PvrMode::truncated && start + s.w - 1 > n) arity = n - start + 1;
      for (int j = 0; j < arity; ++j)
        signs[j] = (m >> (start + j - 1)) & 1u ? -1.0 : 1.0;
    }
    f.values[m] = detail::aggregate(s, signs.data(), arity);
  }
  return f;
}

namespace detail {

inline std::uint64_t binomial(int n, int r) {
  if (r < 0 || r > n) return 0;
  std::uint64_t acc = 1;
  for (int i = 1; i <= r; ++i) acc = acc * static_cast<std::uint64_t>(n - r + i) / i;
  return acc;
}

}  // namespace detail

// Closed-form Boolean influence of a window coordinate of a cyclic PVR:
// Inf_k(f) = (total influence of g) / 2^p, independent of k for k > p.
inline double analytic_influence(const PvrSpec& s, int k) {
  check_pvr(s);
  if (s.mode != PvrMode::cyclic)
    throw std::invalid_argument("analytic influence covers cyclic mode only");
  const int n = pvr_dimension(s);
  if (k <= s.p || k > n)
    throw std::invalid_argument("analytic influence needs a window coordinate (p < k <= n)");
  const double windows = static_cast<double>(std::uint64_t{1} << s.p);
  switch (s.agg) {
    case Aggregation::parity:
      return s.w / windows;
    case Aggregation::majority: {
      const double scale = std::ldexp(static_cast<double>(s.w), -(s.p + s.w - 1));
      if (s.w % 2 == 1)
        return scale * static_cast<double>(detail::binomial(s.w - 1, (s.w - 1) / 2));
      return 0.5 * scale * static_cast<double>(detail::binomial(s.w - 1, s.w / 2));
    }
    case Aggregation::min:
    case Aggregation::max:
      return std::ldexp(static_cast<double>(s.w), -(s.p + s.w - 1));
    case Aggregation::custom: {
      const FourierSpectrum g = fourier_transform(aggregation_table(s));
      double total = 0.0;
      for (int i = 1; i <= s.w; ++i) total += influence(g, i);
      return total / windows;
    }
  }
  throw std::logic_error("unreachable aggregation");
}

// Closed-form noise stability of a non-overlapping-window PVR with a
// balanced ±1-valued aggregation:
//   Stab_delta[f] = (1-delta)^p * Stab_delta[g].
// Flip noise leaves the pointer intact with probability (1-delta)^p, in which
// case both evaluations read the same window and correlate as Stab_delta[g];
// any pointer flip selects a disjoint window, whose correlation with the
// original is E[g]^2 = 0 for balanced g.
inline double analytic_stability(const PvrSpec& s, double delta) {
  check_pvr(s);
  if (s.mode != PvrMode::non_overlapping)
    throw std::invalid_argument("analytic stability covers non-overlapping mode only");
  if (delta < 0.0 || delta > 1.0) throw std::invalid_argument("delta out of range [0, 1]");
  const BooleanFunction g = aggregation_table(s);
  if (!is_pm_one(g))
    throw std::invalid_argument("analytic stability requires a ±1-valued aggregation");
  double mean = 0.0;
  for (double v : g.values) mean += v;
  if (mean != 0.0)
    throw std::invalid_argument("analytic stability requires a balanced aggregation");
  const double stab_g = noise_stability(fourier_transform(g), delta);
  return std::pow(1.0 - delta, s.p) * stab_g;
}

}  // namespace pvrlab
