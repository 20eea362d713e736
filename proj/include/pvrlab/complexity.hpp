#pragma once

// Orbit cross-predictability, the CP-versus-stability bound check, and the
// initial-alignment estimator.
//
// The orbit of f is { f∘pi : pi in S_n } with (f∘pi)(x)_j = x_{pi(j)}.
// Cross-predictability averages the squared inner product E_X[f · f∘pi] over
// the orbit; the inner expectation is always exact (truth table), only the
// permutation average is ever sampled.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvrlab/boolfn.hpp"
#include "pvrlab/nets.hpp"
#include "pvrlab/rng.hpp"

namespace pvrlab {

inline constexpr int kMaxExactOrbitDim = 8;
inline constexpr int kMaxInalDim = 16;

enum class OrbitMode { exact, monte_carlo };

struct OrbitSampler {
  BooleanFunction base;
  OrbitMode mode = OrbitMode::exact;
  std::uint64_t seed = 0;  // monte_carlo permutation stream
};

struct CpResult {
  double estimate = 0.0;
  double std_error = 0.0;   // 0 in exact mode
  long long samples = 0;    // permutations averaged
};

namespace detail {

// E_X[f(X) · (f∘pi)(X)] from the truth table; perm is 0-based, bit j of the
// permuted point reads bit perm[j] of the original.
inline double orbit_inner(const BooleanFunction& f, const std::vector<int>& perm) {
  double acc = 0.0;
  for (std::uint32_t m = 0; m < f.values.size(); ++m) {
    std::uint32_t pt = 0;
    for (int j = 0; j < f.n; ++j) pt |= ((m >> perm[j]) & 1u) << j;
    acc += f.values[m] * f.values[pt];
  }
  return std::ldexp(acc, -f.n);
}

}  // namespace detail

inline CpResult cross_predictability(const OrbitSampler& sampler, long long samples = 0) {
  const BooleanFunction& f = sampler.base;
  check_table(f);
  CpResult out;
  std::vector<int> perm(f.n);
  std::iota(perm.begin(), perm.end(), 0);

  if (sampler.mode == OrbitMode::exact) {
    if (f.n > kMaxExactOrbitDim)
      throw std::invalid_argument("exact orbit enumeration is capped at n = " +
                                  std::to_string(kMaxExactOrbitDim));
    double acc = 0.0;
    long long count = 0;
    do {
      const double inner = detail::orbit_inner(f, perm);
      acc += inner * inner;
      ++count;
    } while (std::next_permutation(perm.begin(), perm.end()));
    out.estimate = acc / static_cast<double>(count);
    out.samples = count;
    return out;
  }

  if (samples < 2)
    throw std::invalid_argument("monte-carlo cross-predictability needs at least 2 samples");
  Rng rng(sampler.seed);
  double sum = 0.0, sumsq = 0.0;
  for (long long s = 0; s < samples; ++s) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = f.n - 1; i > 0; --i)
      std::swap(perm[i], perm[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    const double inner = detail::orbit_inner(f, perm);
    sum += inner * inner;
    sumsq += inner * inner * inner * inner;
  }
  const double count = static_cast<double>(samples);
  out.estimate = sum / count;
  const double var = std::max(0.0, (sumsq - sum * sum / count) / (count - 1.0));
  out.std_error = std::sqrt(var / count);
  out.samples = samples;
  return out;
}

struct CpStabReport {
  double cp = 0.0;
  double stab = 0.0;
  bool holds = false;
};

// Checks the bound CP(orb(fbar)) <= Stab_{delta'}(f) on an already-extended
// input (a function on 2m coordinates carrying no weight on the upper m).
inline CpStabReport verify_cp_stab(const BooleanFunction& fbar, double delta_prime) {
  check_table(fbar);
  if (fbar.n > kMaxExactOrbitDim)
    throw std::invalid_argument("bound check needs exact orbit enumeration (n <= 8)");
  if (delta_prime < 0.0 || delta_prime > 0.25)
    throw std::invalid_argument("the bound is certified for delta' in [0, 1/4]");
  const FourierSpectrum s = fourier_transform(fbar);
  if (fbar.n % 2 != 0)
    throw std::invalid_argument("input is not a doubled extension (odd width)");
  const std::uint32_t upper = ~((1u << (fbar.n / 2)) - 1u);
  for (std::uint32_t t = 0; t < s.coeffs.size(); ++t)
    if ((t & upper) && s.coeffs[t] != 0.0)
      throw std::invalid_argument(
          "input is not a doubled extension (weight on the upper coordinates)");

  CpStabReport report;
  report.cp = cross_predictability({fbar, OrbitMode::exact, 0}).estimate;
  report.stab = noise_stability(s, delta_prime);
  report.holds = report.cp <= report.stab + 1e-12;
  return report;
}

struct InalResult {
  double inal = 0.0;           // max over hidden neurons of the mean squared alignment
  std::size_t best = 0;        // flat index of the winning neuron
  std::vector<double> mean;    // per hidden neuron, layer-major
  std::vector<double> std_error;
};

// Initial alignment: for every hidden neuron v, the average over fresh
// initializations of (E_X[f(X) · act_v(X)])^2, the X-expectation taken
// exactly over the truth table. Returns the max across neurons; the output
// unit is excluded.
inline InalResult estimate_inal(const BooleanFunction& f, const ModelConfig& cfg,
                                const InitScheme& init, int init_samples, Rng& rng) {
  check_table(f);
  if (f.n > kMaxInalDim)
    throw std::invalid_argument("exact X-expectation is capped at n = " +
                                std::to_string(kMaxInalDim));
  if (cfg.input_dim != f.n) throw std::invalid_argument("input width mismatch");
  if (cfg.hidden.empty()) throw std::invalid_argument("the model has no hidden neurons");
  if (init_samples < 2) throw std::invalid_argument("need at least 2 initializations");

  std::size_t neurons = 0;
  for (int h : cfg.hidden) neurons += static_cast<std::size_t>(h);
  std::vector<double> s1(neurons, 0.0), s2(neurons, 0.0), acc(neurons);
  std::vector<double> x(f.n);
  Workspace ws;

  for (int trial = 0; trial < init_samples; ++trial) {
    Model m = make_model(cfg);
    initialize(m, init, rng);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::uint32_t mask = 0; mask < f.values.size(); ++mask) {
      decode_point(mask, f.n, x.data());
      forward(m, x, ws);
      const double y = f.values[mask];
      std::size_t base = 0;
      for (std::size_t l = 0; l + 1 < m.layers.size(); ++l) {
        for (std::size_t j = 0; j < ws.act[l].size(); ++j) acc[base + j] += y * ws.act[l][j];
        base += ws.act[l].size();
      }
    }
    for (std::size_t v = 0; v < neurons; ++v) {
      const double a = std::ldexp(acc[v], -f.n);
      s1[v] += a * a;
      s2[v] += a * a * a * a;
    }
  }

  InalResult out;
  out.mean.resize(neurons);
  out.std_error.resize(neurons);
  const double count = static_cast<double>(init_samples);
  for (std::size_t v = 0; v < neurons; ++v) {
    out.mean[v] = s1[v] / count;
    const double var = std::max(0.0, (s2[v] - s1[v] * s1[v] / count) / (count - 1.0));
    out.std_error[v] = std::sqrt(var / count);
    if (out.mean[v] > out.mean[out.best]) out.best = v;
  }
  out.inal = out.mean[out.best];
  return out;
}

}  // namespace pvrlab
