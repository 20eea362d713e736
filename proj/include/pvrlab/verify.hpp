#pragma once

// Built-in verification suite: cross-checks the library against independent
// recomputations of its closed forms and worked fixtures. Each check prints
// one ok/FAIL line; any failure makes run_verify return nonzero.
//
// The mutate hook deliberately corrupts one independent recomputation so the
// surrounding tooling can confirm the checks have teeth.

#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pvrlab/boolfn.hpp"
#include "pvrlab/harness.hpp"
#include "pvrlab/complexity.hpp"
#include "pvrlab/nets.hpp"
#include "pvrlab/pvr.hpp"
#include "pvrlab/rng.hpp"

namespace pvrlab {

inline constexpr const char* kMutateCyclicInfluence = "cyclic-influence-binomial";

namespace verify_detail {

inline double binom(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double acc = 1.0;
  for (int i = 1; i <= k; ++i) acc = acc * (n - k + i) / i;
  return acc;
}

// Flip-probability form of the influence: E[(f(x) - f(x^k))^2] / 4.
inline double flip_influence(const BooleanFunction& f, int k) {
  const std::uint32_t bit = 1u << (k - 1);
  double acc = 0.0;
  for (std::uint32_t m = 0; m < f.values.size(); ++m) {
    const double gap = f.values[m] - f.values[m ^ bit];
    acc += gap * gap;
  }
  return std::ldexp(acc, -f.n) / 4.0;
}

// Window-coordinate influence of a cyclic PVR, recomputed from first
// principles: the selected window contains coordinate k with probability
// w / 2^p, and a flip there changes the aggregation with the single-bit flip
// probability of g, which has an elementary binomial form for these
// aggregations.
inline double straight_cyclic_influence(const PvrSpec& s, bool mutate_binomial) {
  double flip = 0.0;
  switch (s.agg) {
    case Aggregation::parity:
      flip = 1.0;
      break;
    case Aggregation::majority:
      if (s.w % 2 == 1) {
        flip = binom(s.w - 1, (s.w - 1) / 2) * std::ldexp(1.0, -(s.w - 1));
      } else {
        const int idx = s.w / 2 + (mutate_binomial ? 1 : 0);
        flip = binom(s.w - 1, idx) * std::ldexp(1.0, -s.w);
      }
      break;
    case Aggregation::min:
      flip = std::ldexp(1.0, -(s.w - 1));
      break;
    default:
      throw std::invalid_argument("no straight-line influence for this aggregation");
  }
  return static_cast<double>(s.w) * std::ldexp(1.0, -s.p) * flip;
}

using Check = std::function<bool(std::ostream&)>;

inline bool check_fourier_round_trip(std::ostream& log) {
  Rng rng(2024);
  for (int n : {1, 5, 10}) {
    BooleanFunction f{n, std::vector<double>(std::size_t{1} << n)};
    for (auto& v : f.values) v = rng.uniform(-1.0, 1.0);
    const FourierSpectrum s = fourier_transform(f);
    const BooleanFunction back = inverse_transform(s);
    double worst = 0.0, mass = 0.0, mean_sq = 0.0;
    for (std::size_t i = 0; i < f.values.size(); ++i)
      worst = std::max(worst, std::abs(back.values[i] - f.values[i]));
    for (double c : s.coeffs) mass += c * c;
    for (double v : f.values) mean_sq += v * v;
    mean_sq = std::ldexp(mean_sq, -n);
    if (worst > 1e-12 || std::abs(mass - mean_sq) > 1e-12) {
      log << "round trip off at n=" << n << ": point gap " << worst << ", squared-mass gap "
          << std::abs(mass - mean_sq);
      return false;
    }
  }
  return true;
}

inline bool check_influence_flip_match(std::ostream& log) {
  const PvrSpec specs[] = {
      {3, 3, PvrMode::truncated, Aggregation::majority},
      {3, 2, PvrMode::cyclic, Aggregation::majority},
      {2, 2, PvrMode::non_overlapping, Aggregation::parity},
      {2, 3, PvrMode::cyclic, Aggregation::min},
      {2, 4, PvrMode::truncated, Aggregation::max},
  };
  for (const auto& spec : specs) {
    const BooleanFunction f = make_pvr(spec);
    const FourierSpectrum s = fourier_transform(f);
    for (int k = 1; k <= f.n; ++k) {
      const double spectral = influence(s, k);
      const double flip = flip_influence(f, k);
      if (std::abs(spectral - flip) > 1e-12) {
        log << "spectral " << spectral << " vs flip " << flip << " at k=" << k << " (p="
            << spec.p << " w=" << spec.w << ")";
        return false;
      }
    }
  }
  return true;
}

inline bool check_cyclic_influence_closed_form(bool mutate, std::ostream& log) {
  for (int p : {2, 3}) {
    for (int w = 1; w <= 4; ++w) {
      for (const Aggregation agg :
           {Aggregation::parity, Aggregation::majority, Aggregation::min}) {
        const PvrSpec spec{p, w, PvrMode::cyclic, agg};
        const BooleanFunction f = make_pvr(spec);
        const FourierSpectrum s = fourier_transform(f);
        const double straight = straight_cyclic_influence(spec, mutate);
        for (int k = p + 1; k <= f.n; ++k) {
          const double closed = analytic_influence(spec, k);
          const double spectral = influence(s, k);
          if (std::abs(closed - spectral) > 1e-12 || std::abs(straight - spectral) > 1e-12) {
            log << "p=" << p << " w=" << w << " agg=" << static_cast<int>(agg) << " k=" << k
                << ": closed " << closed << ", straight " << straight << ", spectral "
                << spectral;
            return false;
          }
        }
      }
    }
  }
  return true;
}

inline bool check_pointer_stability_closed_form(std::ostream& log) {
  std::vector<PvrSpec> specs;
  for (int p : {1, 2})
    for (int w : {1, 2, 3}) specs.push_back({p, w, PvrMode::non_overlapping, Aggregation::parity});
  specs.push_back({2, 3, PvrMode::non_overlapping, Aggregation::majority});
  for (const auto& spec : specs) {
    const FourierSpectrum s = fourier_transform(make_pvr(spec));
    for (int i = 0; i <= 10; ++i) {
      const double delta = 0.05 * i;
      const double closed = analytic_stability(spec, delta);
      const double spectral = noise_stability(s, delta);
      if (std::abs(closed - spectral) > 1e-10) {
        log << "p=" << spec.p << " w=" << spec.w << " delta=" << delta << ": closed " << closed
            << " vs spectral " << spectral;
        return false;
      }
    }
  }
  return true;
}

inline bool check_linreg_closed_form_vs_gd(std::ostream& log) {
  const int n = 6, k = 3;
  FourierSpectrum s{n, std::vector<double>(std::size_t{1} << n, 0.0)};
  s.coeffs[0] = 0.8;
  for (int i = 1; i <= n; ++i)
    s.coeffs[1u << (i - 1)] = (i % 2 == 1 ? 1.0 : -1.0) * 0.4 * i;
  const BooleanFunction target = inverse_transform(s);

  Rng rng(99);
  std::vector<double> w0(n);
  for (auto& w : w0) w = rng.uniform(-1.0, 1.0);
  const double b0 = rng.uniform(-1.0, 1.0);
  const double gamma = 0.05;

  // population gradient descent on the frozen slice, through the real layers
  Model m = make_model({ModelKind::linear_regression, n, {}});
  m.layers[0].W = w0;
  m.layers[0].b[0] = b0;
  std::vector<std::uint32_t> slice;
  for (std::uint32_t mask = 0; mask < target.values.size(); ++mask)
    if (!(mask & (1u << (k - 1)))) slice.push_back(mask);
  const Batch population = batch_from_masks(target, slice);
  OptimizerConfig opt_cfg;
  opt_cfg.lr = gamma;
  Optimizer opt = make_optimizer(opt_cfg, m);
  Gradients grads;
  Workspace ws;

  const double d0 = m.layers[0].W[k - 1] - m.layers[0].b[0];
  for (long long t = 1; t <= 40; ++t) {
    gradient(m, population, grads, ws);
    step(m, opt, grads, rng);
    const LinregClosedForm closed = linreg_closed_form(s, k, w0, b0, gamma, t);
    double gap = std::abs(closed.bias - m.layers[0].b[0]);
    for (int i = 0; i < n; ++i)
      gap = std::max(gap, std::abs(closed.weights[i] - m.layers[0].W[i]));
    if (gap > 1e-10) {
      log << "closed form vs simulated parameters differ by " << gap << " at step " << t;
      return false;
    }
    const double drift = std::abs(m.layers[0].W[k - 1] - m.layers[0].b[0] - d0);
    if (drift > 1e-12) {
      log << "conserved direction drifted by " << drift << " at step " << t;
      return false;
    }
  }
  return true;
}

inline bool check_cp_stability_bound(std::ostream& log) {
  std::vector<std::pair<const char*, BooleanFunction>> bases;
  bases.emplace_back("dictator", from_evaluator(1, [](std::uint32_t m) {
                       return m & 1u ? -1.0 : 1.0;
                     }));
  bases.emplace_back("parity2", from_evaluator(2, [](std::uint32_t m) {
                       return (m & 1u) ^ ((m >> 1) & 1u) ? -1.0 : 1.0;
                     }));
  bases.emplace_back("majority3", from_evaluator(3, [](std::uint32_t m) {
                       int neg = 0;
                       for (int i = 0; i < 3; ++i) neg += (m >> i) & 1u;
                       return neg >= 2 ? -1.0 : 1.0;
                     }));
  for (const auto& [name, base] : bases) {
    const BooleanFunction fbar = extend(base, 2 * base.n);
    for (int i = 1; i <= 5; ++i) {
      const double dp = 0.05 * i;
      const CpStabReport rep = verify_cp_stab(fbar, dp);
      if (!rep.holds) {
        log << name << " at delta'=" << dp << ": cp " << rep.cp << " > stability " << rep.stab;
        return false;
      }
    }
  }
  return true;
}

inline bool check_worked_example_fixture(std::ostream& log) {
  // the 4-bit pointer example: x_1 selects x_2 x_3 or x_3 x_4
  const BooleanFunction f = from_evaluator(4, [](std::span<const double> x) {
    return 0.5 * (1.0 + x[0]) * x[1] * x[2] + 0.5 * (1.0 - x[0]) * x[2] * x[3];
  });
  const FourierSpectrum s = fourier_transform(f);
  const double inf2 = influence(s, 2);
  if (std::abs(inf2 - 0.5) > 1e-12) {
    log << "influence of coordinate 2 is " << inf2 << ", expected 0.5";
    return false;
  }
  const double frozen_gen = gen_error_exact(f, freeze(f, 2), 0);
  if (std::abs(frozen_gen - 0.5) > 1e-12) {
    log << "frozen-function error " << frozen_gen << ", expected 0.5";
    return false;
  }
  const double completion_gen =
      gen_error_exact(f, inverse_transform(min_norm_completion(f, 2)), 0);
  if (std::abs(completion_gen - 0.25) > 1e-12) {
    log << "minimum-norm completion error " << completion_gen << ", expected 0.25";
    return false;
  }
  const std::vector<std::uint32_t> subsets = {0b0100u, 0b0110u};
  const auto coefs = track_coefficients(freeze(f, 2), subsets);
  if (std::abs(coefs[0] - 0.5) > 1e-12 || std::abs(coefs[1]) > 1e-12) {
    log << "frozen coefficients (" << coefs[0] << ", " << coefs[1]
        << "), expected (0.5, 0)";
    return false;
  }
  return true;
}

}  // namespace verify_detail

// Runs every check, printing one line each; returns 0 when all pass, 2
// otherwise. `mutate` may name a deliberate corruption (see
// kMutateCyclicInfluence).
inline int run_verify(std::ostream& out, const std::string& mutate = "") {
  using verify_detail::Check;
  if (!mutate.empty() && mutate != kMutateCyclicInfluence)
    throw std::invalid_argument("unknown mutation '" + mutate + "'");
  const bool mutate_binomial = mutate == kMutateCyclicInfluence;

  const std::vector<std::pair<const char*, Check>> checks = {
      {"fourier_round_trip", verify_detail::check_fourier_round_trip},
      {"influence_flip_match", verify_detail::check_influence_flip_match},
      {"cyclic_influence_closed_form",
       [mutate_binomial](std::ostream& log) {
         return verify_detail::check_cyclic_influence_closed_form(mutate_binomial, log);
       }},
      {"pointer_stability_closed_form", verify_detail::check_pointer_stability_closed_form},
      {"linreg_closed_form_vs_gd", verify_detail::check_linreg_closed_form_vs_gd},
      {"cp_stability_bound", verify_detail::check_cp_stability_bound},
      {"worked_example_fixture", verify_detail::check_worked_example_fixture},
  };

  int failures = 0;
  for (const auto& [name, check] : checks) {
    std::string detail;
    bool ok = false;
    {
      std::ostringstream capture;
      ok = check(capture);
      detail = std::move(capture).str();
    }
    if (ok) {
      out << "ok " << name << '\n';
    } else {
      out << "FAIL " << name << (detail.empty() ? "" : ": " + detail) << '\n';
      ++failures;
    }
  }
  if (failures) {
    out << failures << " check(s) failed\n";
    return 2;
  }
  out << "all checks passed\n";
  return 0;
}

}  // namespace pvrlab
