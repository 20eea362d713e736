#pragma once

// Canonical-holdout experiment harness: frozen-coordinate sampling, training
// runs, exact and Monte-Carlo generalization evaluation, monomial-coefficient
// tracking, and seed-parallel sweeps.
//
// The holdout freezes one coordinate to +1 during training; generalization is
// the half-scaled mean square gap, measured both on the full cube (ood) and
// on the frozen slice (id). Every run derives all of its randomness from one
// seed through fixed stream tags, so a sweep's records do not depend on how
// its runs are scheduled.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "pvrlab/boolfn.hpp"
#include "pvrlab/nets.hpp"
#include "pvrlab/rng.hpp"

namespace pvrlab {

inline constexpr int kMaxExactEvalDim = 20;   // hard cap for exact enumeration
inline constexpr int kMaxExactTrackDim = 16;  // hard cap for exact tracking
inline constexpr int kAutoExactEvalDim = 16;  // runs switch to Monte-Carlo above this

// Stream tags: Rng(mix_seed(run_seed, tag)) gives the run's independent
// sources for the dataset draw, the parameter init, the shuffle/noise stream,
// and Monte-Carlo evaluation.
inline constexpr std::uint64_t kStreamData = 1;
inline constexpr std::uint64_t kStreamInit = 2;
inline constexpr std::uint64_t kStreamTrain = 3;
inline constexpr std::uint64_t kStreamEval = 4;

struct HoldoutConfig {
  int k = 0;  // frozen coordinate; 0 = matched (no freeze)
};

inline void check_holdout(int n, const HoldoutConfig& cfg) {
  check_dim(n);
  if (cfg.k != 0) check_coordinate(n, cfg.k);
}

// Masks with coordinate k pinned to +1 (bit k-1 clear); matched mode samples
// the whole cube.
inline std::vector<std::uint32_t> sample_holdout_batch(int n, const HoldoutConfig& cfg,
                                                       std::size_t count, Rng& rng) {
  check_holdout(n, cfg);
  const std::uint32_t all = (1u << n) - 1u;
  const std::uint32_t keep = cfg.k == 0 ? all : all & ~(1u << (cfg.k - 1));
  std::vector<std::uint32_t> out(count);
  for (auto& m : out) m = static_cast<std::uint32_t>(rng.next_u64()) & keep;
  return out;
}

namespace detail {

template <class Predict>
double gen_error_exact_impl(const BooleanFunction& target, Predict&& predict, int frozen_k) {
  check_table(target);
  if (target.n > kMaxExactEvalDim)
    throw std::invalid_argument("exact evaluation is capped at n = " +
                                std::to_string(kMaxExactEvalDim));
  if (frozen_k != 0) check_coordinate(target.n, frozen_k);
  const std::uint32_t bit = frozen_k == 0 ? 0u : 1u << (frozen_k - 1);
  double acc = 0.0;
  std::size_t count = 0;
  for (std::uint32_t m = 0; m < target.values.size(); ++m) {
    if (m & bit) continue;
    const double gap = target.values[m] - predict(m);
    acc += gap * gap;
    ++count;
  }
  return 0.5 * acc / static_cast<double>(count);
}

}  // namespace detail

// Half-scaled mean square error of the model against the target, enumerated
// over the full cube (frozen_k = 0) or the x_k = +1 slice.
inline double gen_error_exact(const BooleanFunction& target, const Model& m, int frozen_k = 0) {
  if (m.input_dim() != target.n) throw std::invalid_argument("input width mismatch");
  Workspace ws;
  std::vector<double> x(target.n);
  return detail::gen_error_exact_impl(target, [&](std::uint32_t mask) {
    decode_point(mask, target.n, x.data());
    return forward(m, x, ws);
  }, frozen_k);
}

// Same, for a predictor given as a truth table (exact representations of
// frozen functions, completions, and other fixtures).
inline double gen_error_exact(const BooleanFunction& target, const BooleanFunction& predictor,
                              int frozen_k = 0) {
  check_table(predictor);
  if (predictor.n != target.n) throw std::invalid_argument("input width mismatch");
  return detail::gen_error_exact_impl(
      target, [&](std::uint32_t mask) { return predictor.values[mask]; }, frozen_k);
}

struct McEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long long samples = 0;
};

inline McEstimate gen_error_mc(const BooleanFunction& target, const Model& m, int frozen_k,
                               long long samples, Rng& rng) {
  check_table(target);
  if (m.input_dim() != target.n) throw std::invalid_argument("input width mismatch");
  if (samples < 2) throw std::invalid_argument("monte-carlo evaluation needs at least 2 samples");
  if (frozen_k != 0) check_coordinate(target.n, frozen_k);
  const std::uint32_t all = (1u << target.n) - 1u;
  const std::uint32_t keep = frozen_k == 0 ? all : all & ~(1u << (frozen_k - 1));
  Workspace ws;
  std::vector<double> x(target.n);
  double sum = 0.0, sumsq = 0.0;
  for (long long s = 0; s < samples; ++s) {
    const std::uint32_t mask = static_cast<std::uint32_t>(rng.next_u64()) & keep;
    decode_point(mask, target.n, x.data());
    const double gap = target.values[mask] - forward(m, x, ws);
    const double sq = 0.5 * gap * gap;
    sum += sq;
    sumsq += sq * sq;
  }
  McEstimate out;
  const double count = static_cast<double>(samples);
  out.value = sum / count;
  const double var = std::max(0.0, (sumsq - sum * sum / count) / (count - 1.0));
  out.std_error = std::sqrt(var / count);
  out.samples = samples;
  return out;
}

namespace detail {

template <class Predict>
std::vector<double> track_impl(int n, Predict&& predict, std::span<const std::uint32_t> subsets) {
  if (n > kMaxExactTrackDim)
    throw std::invalid_argument("exact coefficient tracking is capped at n = " +
                                std::to_string(kMaxExactTrackDim));
  const std::uint32_t all = (1u << n) - 1u;
  for (std::uint32_t s : subsets)
    if (s & ~all) throw std::invalid_argument("tracked subset outside the input coordinates");
  std::vector<double> acc(subsets.size(), 0.0);
  for (std::uint32_t m = 0; m <= all; ++m) {
    const double v = predict(m);
    for (std::size_t i = 0; i < subsets.size(); ++i) acc[i] += v * chi(subsets[i], m);
  }
  for (auto& a : acc) a = std::ldexp(a, -n);
  return acc;
}

}  // namespace detail

// Monomial coefficients of the model's output over the full uniform cube:
// chat(S) = E_X[f_NN(X) chi_S(X)], one entry per requested subset.
inline std::vector<double> track_coefficients(const Model& m,
                                              std::span<const std::uint32_t> subsets) {
  const int n = m.input_dim();
  check_dim(n);
  Workspace ws;
  std::vector<double> x(n);
  return detail::track_impl(n, [&](std::uint32_t mask) {
    decode_point(mask, n, x.data());
    return forward(m, x, ws);
  }, subsets);
}

inline std::vector<double> track_coefficients(const BooleanFunction& table,
                                              std::span<const std::uint32_t> subsets) {
  check_table(table);
  return detail::track_impl(table.n, [&](std::uint32_t mask) { return table.values[mask]; },
                            subsets);
}

// Default tracked subsets for a holdout run: the pairs (S, S + {k}) over the
// frozen function's nonzero coefficients, keeping the 16 largest |fhat_{-k}(S)|.
inline std::vector<std::uint32_t> default_tracked_pairs(const FourierSpectrum& s, int k,
                                                        std::size_t max_pairs = 16) {
  check_spectrum(s);
  check_coordinate(s.n, k);
  const std::uint32_t bit = 1u << (k - 1);
  std::vector<std::pair<double, std::uint32_t>> nonzero;
  for (std::uint32_t t = 0; t < s.coeffs.size(); ++t) {
    if (t & bit) continue;
    const double frozen = s.coeffs[t] + s.coeffs[t | bit];
    if (frozen != 0.0) nonzero.push_back({std::abs(frozen), t});
  }
  std::sort(nonzero.begin(), nonzero.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  if (nonzero.size() > max_pairs) nonzero.resize(max_pairs);
  std::vector<std::uint32_t> out;
  out.reserve(2 * nonzero.size());
  for (const auto& [mag, t] : nonzero) {
    out.push_back(t);
    out.push_back(t | bit);
  }
  return out;
}

struct CoefPoint {
  long long step = 0;
  std::uint32_t mask = 0;
  double value = 0.0;

  friend bool operator==(const CoefPoint&, const CoefPoint&) = default;
};

struct ErrorPoint {
  long long step = 0;
  double ood = 0.0;
  double id = 0.0;
  double ood_se = 0.0;  // Monte-Carlo standard errors; 0 under exact evaluation
  double id_se = 0.0;

  friend bool operator==(const ErrorPoint&, const ErrorPoint&) = default;
};

struct RunRecord {
  int frozen_index = 0;
  std::uint64_t seed = 0;
  long long steps = 0;
  double gen_error_ood = 0.0;
  double gen_error_id = 0.0;
  double influence = 0.0;
  std::vector<CoefPoint> coefficient_trajectory;
  std::vector<ErrorPoint> error_trajectory;
  double wall_time_s = 0.0;  // 0 unless timings were requested
};

struct Schedule {
  int epochs = 1;
  long long dataset_size = 0;          // 0 -> 40 * 2^n, capped at 1e6
  int eval_every = 1;                  // epochs between evaluations (>= 1)
  std::vector<std::uint32_t> tracked;  // empty + frozen k -> default pairs
  long long mc_samples = 100000;       // evaluation fallback beyond the exact cap
  bool timings = false;                // record wall time (breaks byte-stability)
};

inline long long default_dataset_size(int n) {
  const long long full = 40LL << n;
  return full < 1000000LL ? full : 1000000LL;
}

using StepObserver = std::function<void(long long step, const Model&)>;

// One training run, fully determined by (configs, seed): draws a fixed
// training set from the holdout distribution, runs mini-batch epochs, and
// evaluates at the cadence. The observer, when set, sees the model after
// every optimizer step.
inline RunRecord train_run(const BooleanFunction& target, const HoldoutConfig& holdout,
                           const ModelConfig& model_cfg, const InitScheme& init,
                           const OptimizerConfig& opt_cfg, const Schedule& schedule,
                           std::uint64_t seed, const StepObserver& observer = {}) {
  check_table(target);
  check_holdout(target.n, holdout);
  check_optimizer(opt_cfg);
  if (model_cfg.input_dim != target.n) throw std::invalid_argument("input width mismatch");
  if (schedule.epochs < 0) throw std::invalid_argument("epochs must be nonnegative");
  if (schedule.eval_every < 1) throw std::invalid_argument("eval cadence must be positive");

  const auto start = std::chrono::steady_clock::now();
  const int n = target.n;
  const int k = holdout.k;

  RunRecord rec;
  rec.frozen_index = k;
  rec.seed = seed;
  const FourierSpectrum spectrum = fourier_transform(target);
  rec.influence = k == 0 ? 0.0 : influence(spectrum, k);

  std::vector<std::uint32_t> tracked = schedule.tracked;
  if (tracked.empty() && k != 0) tracked = default_tracked_pairs(spectrum, k);

  // fixed training set
  Rng data_rng(mix_seed(seed, kStreamData));
  const long long want =
      schedule.dataset_size > 0 ? schedule.dataset_size : default_dataset_size(n);
  const auto masks = sample_holdout_batch(n, holdout, static_cast<std::size_t>(want), data_rng);
  const Batch dataset = batch_from_masks(target, masks);

  Model model = make_model(model_cfg);
  Rng init_rng(mix_seed(seed, kStreamInit));
  initialize(model, init, init_rng);

  Optimizer opt = make_optimizer(opt_cfg, model);
  Rng train_rng(mix_seed(seed, kStreamTrain));
  Rng eval_rng(mix_seed(seed, kStreamEval));

  const bool exact_eval = n <= kAutoExactEvalDim;
  auto evaluate = [&](long long step) {
    ErrorPoint pt;
    pt.step = step;
    if (exact_eval) {
      pt.ood = gen_error_exact(target, model, 0);
      pt.id = k == 0 ? pt.ood : gen_error_exact(target, model, k);
    } else {
      const auto ood = gen_error_mc(target, model, 0, schedule.mc_samples, eval_rng);
      pt.ood = ood.value;
      pt.ood_se = ood.std_error;
      if (k == 0) {
        pt.id = pt.ood;
        pt.id_se = pt.ood_se;
      } else {
        const auto id = gen_error_mc(target, model, k, schedule.mc_samples, eval_rng);
        pt.id = id.value;
        pt.id_se = id.std_error;
      }
    }
    rec.error_trajectory.push_back(pt);
    if (!tracked.empty() && n <= kMaxExactTrackDim) {
      const auto coefs = track_coefficients(model, tracked);
      for (std::size_t i = 0; i < tracked.size(); ++i)
        rec.coefficient_trajectory.push_back({step, tracked[i], coefs[i]});
    }
  };

  evaluate(0);

  std::vector<std::size_t> order(dataset.count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Batch mini;
  mini.dim = n;
  Gradients grads;
  Workspace ws;
  std::vector<double> row(n);
  long long step = 0;

  for (int epoch = 1; epoch <= schedule.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[train_rng.below(i)]);
    for (std::size_t at = 0; at < order.size(); at += opt_cfg.batch) {
      const std::size_t stop = std::min(at + opt_cfg.batch, order.size());
      mini.x.clear();
      mini.y.clear();
      for (std::size_t i = at; i < stop; ++i) {
        const double* src = dataset.x.data() + order[i] * static_cast<std::size_t>(n);
        mini.x.insert(mini.x.end(), src, src + n);
        mini.y.push_back(dataset.y[order[i]]);
      }
      gradient(model, mini, grads, ws);
      pvrlab::step(model, opt, grads, train_rng);
      ++step;
      if (observer) observer(step, model);
    }
    if (epoch % schedule.eval_every == 0 || epoch == schedule.epochs) evaluate(step);
  }

  rec.steps = step;
  rec.gen_error_ood = rec.error_trajectory.back().ood;
  rec.gen_error_id = rec.error_trajectory.back().id;
  if (schedule.timings)
    rec.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

struct AggregateRow {
  int frozen_index = 0;
  int repeats = 0;
  double mean_ood = 0.0;
  double ci95_ood = 0.0;  // 1.96 * standard error of the mean
  double mean_id = 0.0;
  double influence = 0.0;
};

struct SweepResult {
  std::vector<RunRecord> records;  // ordered by (k position in k_range, repeat)
  std::vector<AggregateRow> aggregate;
};

// One run per (k, repeat), seeded mix_seed(base_seed, k, repeat); scheduling
// cannot change any record. pointer_bits > 0 rejects frozen indices that fall
// on a PVR pointer.
inline SweepResult sweep(const BooleanFunction& target, std::span<const int> k_range,
                         int repeats, const ModelConfig& model_cfg, const InitScheme& init,
                         const OptimizerConfig& opt_cfg, const Schedule& schedule,
                         std::uint64_t base_seed, int threads = 1, int pointer_bits = 0) {
  check_table(target);
  if (k_range.empty()) throw std::invalid_argument("sweep needs at least one frozen index");
  if (repeats < 1) throw std::invalid_argument("sweep needs at least one repeat");
  for (int k : k_range) {
    check_coordinate(target.n, k);
    if (k <= pointer_bits)
      throw std::invalid_argument("frozen index " + std::to_string(k) +
                                  " falls on a pointer bit");
  }

  SweepResult out;
  out.records.resize(k_range.size() * static_cast<std::size_t>(repeats));
  auto run_one = [&](std::size_t task) {
    const int k = k_range[task / repeats];
    const int rep = static_cast<int>(task % repeats);
    out.records[task] =
        train_run(target, {k}, model_cfg, init, opt_cfg, schedule,
                  mix_seed(base_seed, static_cast<std::uint64_t>(k),
                           static_cast<std::uint64_t>(rep)));
  };

  const std::size_t tasks = out.records.size();
  if (threads <= 1 || tasks <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) run_one(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    const int workers =
        static_cast<int>(std::min(static_cast<std::size_t>(threads), tasks));
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next.fetch_add(1); t < tasks; t = next.fetch_add(1)) run_one(t);
      });
    for (auto& th : pool) th.join();
  }

  for (std::size_t i = 0; i < k_range.size(); ++i) {
    AggregateRow row;
    row.frozen_index = k_range[i];
    row.repeats = repeats;
    double sum = 0.0, sumsq = 0.0, idsum = 0.0;
    for (int r = 0; r < repeats; ++r) {
      const auto& rec = out.records[i * repeats + r];
      sum += rec.gen_error_ood;
      sumsq += rec.gen_error_ood * rec.gen_error_ood;
      idsum += rec.gen_error_id;
    }
    const double count = static_cast<double>(repeats);
    row.mean_ood = sum / count;
    row.mean_id = idsum / count;
    if (repeats > 1) {
      const double var = std::max(0.0, (sumsq - sum * sum / count) / (count - 1.0));
      row.ci95_ood = 1.96 * std::sqrt(var / count);
    }
    row.influence = out.records[i * repeats].influence;
    out.aggregate.push_back(row);
  }
  return out;
}

}  // namespace pvrlab
