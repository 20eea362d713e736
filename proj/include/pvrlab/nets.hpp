#pragma once

// From-scratch differentiable models over hypercube inputs: plain linear
// regression, deep linear networks, and ReLU MLPs, with reverse-mode
// gradients of the unhalved square loss (f_NN(x) - y)^2, three optimizers,
// and the exact population-gradient simulator for linear regression under a
// single frozen coordinate.
//
// Layer convention: z_out = x^T W + b with W stored row-major as
// W[i * out + j] (input index i, output index j). Hidden ReLU applies to mlp
// only; the output layer is always affine. ReLU takes subgradient 0 at 0.

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pvrlab/boolfn.hpp"
#include "pvrlab/rng.hpp"

namespace pvrlab {

enum class ModelKind { linear_regression, deep_linear, mlp };

struct Layer {
  int in = 0;
  int out = 0;
  std::vector<double> W;  // in * out, row-major
  std::vector<double> b;  // out
};

struct Model {
  ModelKind kind = ModelKind::linear_regression;
  std::vector<Layer> layers;

  int input_dim() const { return layers.empty() ? 0 : layers.front().in; }

  std::size_t param_count() const {
    std::size_t total = 0;
    for (const auto& l : layers) total += l.W.size() + l.b.size();
    return total;
  }
};

struct ModelConfig {
  ModelKind kind = ModelKind::linear_regression;
  int input_dim = 0;
  std::vector<int> hidden;  // empty for linear_regression
};

inline const std::vector<int>& mlp_hidden_full() {
  static const std::vector<int> widths = {512, 1024, 512, 64};
  return widths;
}

inline const std::vector<int>& mlp_hidden_desk() {
  static const std::vector<int> widths = {64, 128, 64, 16};
  return widths;
}

// Zero-parameter model of the requested shape; call initialize() to draw
// weights.
inline Model make_model(const ModelConfig& cfg) {
  if (cfg.input_dim < 1) throw std::invalid_argument("model needs a positive input width");
  if (cfg.kind == ModelKind::linear_regression && !cfg.hidden.empty())
    throw std::invalid_argument("linear regression takes no hidden layers");
  if (cfg.kind != ModelKind::linear_regression && cfg.hidden.empty())
    throw std::invalid_argument("deep models need at least one hidden layer");
  for (int h : cfg.hidden)
    if (h < 1) throw std::invalid_argument("hidden widths must be positive");

  Model m;
  m.kind = cfg.kind;
  int in = cfg.input_dim;
  for (int h : cfg.hidden) {
    m.layers.push_back({in, h, std::vector<double>(static_cast<std::size_t>(in) * h, 0.0),
                        std::vector<double>(h, 0.0)});
    in = h;
  }
  m.layers.push_back({in, 1, std::vector<double>(in, 0.0), std::vector<double>(1, 0.0)});
  return m;
}

struct InitScheme {
  enum class Family { uniform_symmetric, gaussian };
  Family family = Family::uniform_symmetric;
  double alpha = 0.5;     // uniform half-width = in_width^(-alpha)
  double mean = 0.0;      // gaussian only
  double variance = 0.0;  // gaussian only
};

// Draws every weight and bias independently. The uniform family scales each
// layer by its own input width; the gaussian family uses the same mean and
// variance everywhere.
inline void initialize(Model& m, const InitScheme& init, Rng& rng) {
  for (auto& l : m.layers) {
    if (init.family == InitScheme::Family::uniform_symmetric) {
      const double half = std::pow(static_cast<double>(l.in), -init.alpha);
      if (!(half > 0.0)) throw std::invalid_argument("init half-width must be positive");
      for (auto& w : l.W) w = rng.uniform(-half, half);
      for (auto& b : l.b) b = rng.uniform(-half, half);
    } else {
      if (init.variance < 0.0) throw std::invalid_argument("init variance must be nonnegative");
      const double sd = std::sqrt(init.variance);
      for (auto& w : l.W) w = rng.gaussian(init.mean, sd);
      for (auto& b : l.b) b = rng.gaussian(init.mean, sd);
    }
  }
}

namespace detail {

inline bool hidden_relu(const Model& m) { return m.kind == ModelKind::mlp; }

inline void affine(const Layer& l, const double* x, double* z) {
  for (int j = 0; j < l.out; ++j) z[j] = l.b[j];
  for (int i = 0; i < l.in; ++i) {
    const double xi = x[i];
    const double* row = l.W.data() + static_cast<std::size_t>(i) * l.out;
    for (int j = 0; j < l.out; ++j) z[j] += xi * row[j];
  }
}

}  // namespace detail

// Scratch space reused across forward/backward passes of one model.
struct Workspace {
  std::vector<std::vector<double>> act;    // act[l] = activations after layer l
  std::vector<std::vector<double>> delta;  // backpropagated products

  void shape(const Model& m) {
    act.resize(m.layers.size());
    delta.resize(m.layers.size());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      act[l].resize(m.layers[l].out);
      delta[l].resize(m.layers[l].out);
    }
  }
};

inline double forward(const Model& m, std::span<const double> x, Workspace& ws) {
  if (static_cast<int>(x.size()) != m.input_dim())
    throw std::invalid_argument("input width mismatch");
  ws.shape(m);
  const bool relu = detail::hidden_relu(m);
  const double* cur = x.data();
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    detail::affine(m.layers[l], cur, ws.act[l].data());
    if (relu && l + 1 < m.layers.size())
      for (auto& v : ws.act[l]) v = v > 0.0 ? v : 0.0;
    cur = ws.act[l].data();
  }
  return ws.act.back()[0];
}

inline double forward(const Model& m, std::span<const double> x) {
  Workspace ws;
  return forward(m, x, ws);
}

// A batch of hypercube points (row-major, one row per sample) with labels.
struct Batch {
  int dim = 0;
  std::vector<double> x;
  std::vector<double> y;

  int count() const { return dim == 0 ? 0 : static_cast<int>(y.size()); }

  void add(std::span<const double> point, double label) {
    x.insert(x.end(), point.begin(), point.end());
    y.push_back(label);
  }
};

// Expands masks to ±1 rows (bit set -> -1) labeled by the target table.
inline Batch batch_from_masks(const BooleanFunction& f, std::span<const std::uint32_t> masks) {
  Batch b;
  b.dim = f.n;
  b.x.reserve(masks.size() * static_cast<std::size_t>(f.n));
  b.y.reserve(masks.size());
  std::vector<double> row(f.n);
  for (std::uint32_t m : masks) {
    decode_point(m, f.n, row.data());
    b.add(row, f.at(m));
  }
  return b;
}

struct Gradients {
  std::vector<std::vector<double>> W;
  std::vector<std::vector<double>> b;

  void shape(const Model& m) {
    W.resize(m.layers.size());
    b.resize(m.layers.size());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      W[l].assign(m.layers[l].W.size(), 0.0);
      b[l].assign(m.layers[l].b.size(), 0.0);
    }
  }
};

// Batch-averaged gradient of the unhalved square loss: each sample
// contributes 2 * (f_NN(x) - y) times the reverse-mode factors.
inline void gradient(const Model& m, const Batch& batch, Gradients& g, Workspace& ws) {
  if (batch.count() == 0) throw std::invalid_argument("gradient needs a nonempty batch");
  if (batch.dim != m.input_dim()) throw std::invalid_argument("input width mismatch");
  g.shape(m);
  ws.shape(m);
  const bool relu = detail::hidden_relu(m);
  const std::size_t depth = m.layers.size();
  for (int s = 0; s < batch.count(); ++s) {
    const double* x = batch.x.data() + static_cast<std::size_t>(s) * batch.dim;
    forward(m, std::span<const double>(x, static_cast<std::size_t>(batch.dim)), ws);
    ws.delta[depth - 1][0] = 2.0 * (ws.act[depth - 1][0] - batch.y[s]);
    for (std::size_t l = depth; l-- > 0;) {
      const Layer& layer = m.layers[l];
      const double* input = l == 0 ? x : ws.act[l - 1].data();
      const double* d = ws.delta[l].data();
      double* gw = g.W[l].data();
      for (int i = 0; i < layer.in; ++i) {
        const double xi = input[i];
        double* grow = gw + static_cast<std::size_t>(i) * layer.out;
        for (int j = 0; j < layer.out; ++j) grow[j] += xi * d[j];
      }
      for (int j = 0; j < layer.out; ++j) g.b[l][j] += d[j];
      if (l == 0) break;
      double* dprev = ws.delta[l - 1].data();
      for (int i = 0; i < layer.in; ++i) {
        double acc = 0.0;
        const double* row = layer.W.data() + static_cast<std::size_t>(i) * layer.out;
        for (int j = 0; j < layer.out; ++j) acc += row[j] * d[j];
        // ReLU subgradient: pass only where the unit is strictly active
        dprev[i] = (relu && !(ws.act[l - 1][i] > 0.0)) ? 0.0 : acc;
      }
    }
  }
  const double inv = 1.0 / batch.count();
  for (auto& mat : g.W)
    for (auto& v : mat) v *= inv;
  for (auto& vec : g.b)
    for (auto& v : vec) v *= inv;
}

inline Gradients gradient(const Model& m, const Batch& batch) {
  Gradients g;
  Workspace ws;
  gradient(m, batch, g, ws);
  return g;
}

inline double batch_loss(const Model& m, const Batch& batch, Workspace& ws) {
  if (batch.count() == 0) throw std::invalid_argument("loss needs a nonempty batch");
  double acc = 0.0;
  for (int s = 0; s < batch.count(); ++s) {
    const double* x = batch.x.data() + static_cast<std::size_t>(s) * batch.dim;
    const double r =
        forward(m, std::span<const double>(x, static_cast<std::size_t>(batch.dim)), ws) -
        batch.y[s];
    acc += r * r;
  }
  return acc / batch.count();
}

struct OptimizerConfig {
  enum class Kind { sgd, adam, noisy_gd };
  Kind kind = Kind::sgd;
  double lr = 0.01;
  double momentum = 0.0;  // sgd
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clamp = std::numeric_limits<double>::infinity();  // noisy_gd precision A
  double noise = 0.0;                                      // noisy_gd stddev sigma_z
  int batch = 64;                                          // mini-batch size
};

inline void check_optimizer(const OptimizerConfig& cfg) {
  if (!(cfg.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (cfg.momentum < 0.0 || cfg.momentum >= 1.0)
    throw std::invalid_argument("momentum must lie in [0, 1)");
  if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0)
    throw std::invalid_argument("adam betas must lie in [0, 1)");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("adam epsilon must be positive");
  if (!(cfg.clamp > 0.0)) throw std::invalid_argument("gradient precision must be positive");
  if (cfg.noise < 0.0) throw std::invalid_argument("gradient noise must be nonnegative");
  if (cfg.batch < 1) throw std::invalid_argument("batch size must be positive");
}

// Optimizer state laid out parallel to the model's parameters.
struct Optimizer {
  OptimizerConfig cfg;
  long long t = 0;
  std::vector<std::vector<double>> vel_W, vel_b;  // sgd momentum
  std::vector<std::vector<double>> m_W, m_b;      // adam first moment
  std::vector<std::vector<double>> v_W, v_b;      // adam second moment
};

inline Optimizer make_optimizer(const OptimizerConfig& cfg, const Model& m) {
  check_optimizer(cfg);
  Optimizer opt;
  opt.cfg = cfg;
  auto shape = [&](std::vector<std::vector<double>>& W, std::vector<std::vector<double>>& b) {
    W.resize(m.layers.size());
    b.resize(m.layers.size());
    for (std::size_t l = 0; l < m.layers.size(); ++l) {
      W[l].assign(m.layers[l].W.size(), 0.0);
      b[l].assign(m.layers[l].b.size(), 0.0);
    }
  };
  if (cfg.kind == OptimizerConfig::Kind::sgd) shape(opt.vel_W, opt.vel_b);
  if (cfg.kind == OptimizerConfig::Kind::adam) {
    shape(opt.m_W, opt.m_b);
    shape(opt.v_W, opt.v_b);
  }
  return opt;
}

namespace detail {

inline void sgd_update(std::span<double> p, std::span<const double> g, std::span<double> vel,
                       double lr, double momentum) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    vel[i] = momentum * vel[i] + g[i];
    p[i] -= lr * vel[i];
  }
}

inline void adam_update(std::span<double> p, std::span<const double> g, std::span<double> m1,
                        std::span<double> m2, const OptimizerConfig& cfg, double bc1,
                        double bc2) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    m1[i] = cfg.beta1 * m1[i] + (1.0 - cfg.beta1) * g[i];
    m2[i] = cfg.beta2 * m2[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    p[i] -= cfg.lr * (m1[i] / bc1) / (std::sqrt(m2[i] / bc2) + cfg.epsilon);
  }
}

inline void noisy_update(std::span<double> p, std::span<const double> g,
                         const OptimizerConfig& cfg, Rng& rng) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    double c = g[i];
    if (c > cfg.clamp) c = cfg.clamp;
    if (c < -cfg.clamp) c = -cfg.clamp;
    p[i] -= cfg.lr * c;
    if (cfg.noise > 0.0) p[i] += rng.gaussian(0.0, cfg.noise);
  }
}

}  // namespace detail

// One parameter update from an averaged gradient. The rng is touched only by
// noisy_gd with nonzero noise, so deterministic optimizers stay bit-stable
// regardless of seeding.
inline void step(Model& m, Optimizer& opt, const Gradients& g, Rng& rng) {
  opt.t += 1;
  const auto& cfg = opt.cfg;
  for (std::size_t l = 0; l < m.layers.size(); ++l) {
    auto& layer = m.layers[l];
    switch (cfg.kind) {
      case OptimizerConfig::Kind::sgd:
        detail::sgd_update(layer.W, g.W[l], opt.vel_W[l], cfg.lr, cfg.momentum);
        detail::sgd_update(layer.b, g.b[l], opt.vel_b[l], cfg.lr, cfg.momentum);
        break;
      case OptimizerConfig::Kind::adam: {
        const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.t));
        const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.t));
        detail::adam_update(layer.W, g.W[l], opt.m_W[l], opt.v_W[l], cfg, bc1, bc2);
        detail::adam_update(layer.b, g.b[l], opt.m_b[l], opt.v_b[l], cfg, bc1, bc2);
        break;
      }
      case OptimizerConfig::Kind::noisy_gd:
        detail::noisy_update(layer.W, g.W[l], cfg, rng);
        detail::noisy_update(layer.b, g.b[l], cfg, rng);
        break;
    }
  }
}

// ---------------------------------------------------------------------------
// Exact population-gradient simulator for linear regression with one frozen
// coordinate.
//
// Training freezes x_k = +1; the population square-loss gradients then close
// into three recursions:
//   W_j  <- (1-2g) W_j + 2g fhat({j})        for j != k
//   W_k+b <- (1-4g)(W_k+b) + 4g (fhat(0)+fhat({k}))
//   W_k-b   conserved exactly.
// The out-of-distribution error (half the full-cube mean square gap) of the
// t -> inf limit depends on the init only through W_k - b:
//   gen_limit = (b0 - W_k0 - fhat(0) + fhat({k}))^2 / 4.
// Averaged over inits with common mean and variance s^2 this becomes
// (fhat(0) - fhat({k}))^2 / 4 + s^2/2, which reduces to Inf_k(f) + s^2/2
// when the frozen function is unbiased (fhat(0) + fhat({k}) = 0).

struct LinregClosedForm {
  std::vector<double> weights;  // after t steps
  double bias = 0.0;
  double wk_minus_b = 0.0;      // the conserved quantity, carried untouched
  double gen_error = 0.0;       // of the step-t parameters
  double gen_error_limit = 0.0; // of the t -> inf parameters
};

namespace detail {

inline void check_linear_target(const FourierSpectrum& f) {
  for (std::size_t mask = 0; mask < f.coeffs.size(); ++mask)
    if (std::popcount(mask) > 1 && f.coeffs[mask] != 0.0)
      throw std::invalid_argument("closed form needs a linear target");
}

// Half the full-cube mean square gap between the affine model and the linear
// target.
inline double linear_gen_error(const FourierSpectrum& f, std::span<const double> w, double b) {
  double acc = (f.coeffs[0] - b) * (f.coeffs[0] - b);
  for (int j = 1; j <= f.n; ++j) {
    const double gap = f.at(1u << (j - 1)) - w[j - 1];
    acc += gap * gap;
  }
  return 0.5 * acc;
}

}  // namespace detail

inline double linreg_gen_error_limit(const FourierSpectrum& f, int k, double w_k0, double b0) {
  detail::check_linear_target(f);
  check_coordinate(f.n, k);
  const double gap = b0 - w_k0 - f.coeffs[0] + f.at(1u << (k - 1));
  return 0.25 * gap * gap;
}

// Expectation of linreg_gen_error_limit over inits drawn i.i.d. with a common
// mean and variance sigma2.
inline double linreg_gen_error_init_averaged(const FourierSpectrum& f, int k, double sigma2) {
  detail::check_linear_target(f);
  check_coordinate(f.n, k);
  if (sigma2 < 0.0) throw std::invalid_argument("variance must be nonnegative");
  const double gap = f.coeffs[0] - f.at(1u << (k - 1));
  return 0.25 * gap * gap + 0.5 * sigma2;
}

inline LinregClosedForm linreg_closed_form(const FourierSpectrum& f, int k,
                                           std::span<const double> w0, double b0, double gamma,
                                           long long steps) {
  detail::check_linear_target(f);
  check_coordinate(f.n, k);
  if (static_cast<int>(w0.size()) != f.n)
    throw std::invalid_argument("initial weights must match the input width");
  if (!(gamma > 0.0) || gamma >= 0.25)
    throw std::invalid_argument("closed form requires 0 < learning rate < 1/4");
  if (steps < 0) throw std::invalid_argument("steps must be nonnegative");

  LinregClosedForm out;
  out.weights.assign(w0.begin(), w0.end());
  const double wk0 = w0[k - 1];
  double sum = wk0 + b0;                  // contracts at rate 1 - 4 gamma
  const double diff = wk0 - b0;           // conserved
  const double target_sum = f.coeffs[0] + f.at(1u << (k - 1));
  for (long long t = 0; t < steps; ++t) {
    for (int j = 1; j <= f.n; ++j) {
      if (j == k) continue;
      double& w = out.weights[j - 1];
      w = (1.0 - 2.0 * gamma) * w + 2.0 * gamma * f.at(1u << (j - 1));
    }
    sum = (1.0 - 4.0 * gamma) * sum + 4.0 * gamma * target_sum;
  }
  out.weights[k - 1] = 0.5 * (sum + diff);
  out.bias = 0.5 * (sum - diff);
  out.wk_minus_b = diff;
  out.gen_error = detail::linear_gen_error(f, out.weights, out.bias);
  out.gen_error_limit = linreg_gen_error_limit(f, k, wk0, b0);
  return out;
}

}  // namespace pvrlab
