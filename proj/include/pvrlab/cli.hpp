#pragma once

// Experiment frontend: a strict flat key=value schema resolved into library
// objects, subcommands that emit deterministic CSV artifacts, and a
// self-contained verification suite that cross-checks the library against
// independent recomputations.

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "pvrlab/boolfn.hpp"
#include "pvrlab/complexity.hpp"
#include "pvrlab/config.hpp"
#include "pvrlab/csv.hpp"
#include "pvrlab/harness.hpp"
#include "pvrlab/nets.hpp"
#include "pvrlab/pvr.hpp"
#include "pvrlab/rng.hpp"

namespace pvrlab {

struct ExperimentConfig {
  std::string task = "pvr";  // pvr | spectrum
  PvrSpec pvr{3, 2, PvrMode::cyclic, Aggregation::majority};
  std::string spectrum_file;
  int spectrum_n = 0;

  HoldoutConfig holdout;

  ModelKind model_kind = ModelKind::mlp;
  std::vector<int> model_hidden;  // resolved widths; presets already expanded
  bool hidden_given = false;
  int model_depth = 0;    // deep_linear: number of weight layers; 0 = use hidden
  int model_width = 256;  // deep_linear hidden width when depth is given
  InitScheme init;

  OptimizerConfig opt;

  Schedule schedule;

  std::vector<int> k_list;
  std::vector<int> w_list;
  std::vector<int> depth_list;
  std::vector<double> alpha_list;

  long long cp_samples = 0;  // 0 = exact orbit enumeration
  int inal_samples = 200;

  std::uint64_t seed = 1;
  int repeats = 1;
  std::string out_dir;
};

namespace detail {

inline const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "task",          "pvr.p",          "pvr.w",           "pvr.mode",
      "pvr.agg",       "pvr.dim",        "spectrum.file",   "spectrum.n",
      "holdout.k",     "model.kind",     "model.hidden",    "model.depth",
      "model.width",   "model.init",     "model.alpha",     "model.init_mean",
      "model.init_variance",             "opt.kind",        "opt.lr",
      "opt.momentum",  "opt.beta1",      "opt.beta2",       "opt.epsilon",
      "opt.clamp",     "opt.noise",      "opt.batch",       "train.epochs",
      "train.dataset", "train.eval_every",                  "train.mc_samples",
      "train.timings", "train.tracked",  "sweep.k_list",    "sweep.w_list",
      "sweep.depth_list",                "sweep.alpha_list",
      "cp.samples",    "inal.samples",   "seed",            "repeats",
      "out"};
  return keys;
}

inline int to_int(const std::string& key, const std::string& v) {
  const long long x = parse_int(v);
  if (x < -2147483648LL || x > 2147483647LL)
    throw std::invalid_argument("config value out of range for '" + key + "'");
  return static_cast<int>(x);
}

inline std::vector<std::string> split_list(std::string_view v) {
  std::vector<std::string> out;
  std::size_t at = 0;
  while (at <= v.size()) {
    std::size_t c = v.find(',', at);
    if (c == std::string_view::npos) c = v.size();
    const std::string tok(trim(v.substr(at, c - at)));
    if (!tok.empty()) out.push_back(tok);
    at = c + 1;
  }
  return out;
}

// Integer lists; a token `a..b` expands to the inclusive ascending range.
inline std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const auto& tok : split_list(v)) {
    const std::size_t dots = tok.find("..");
    if (dots == std::string::npos) {
      out.push_back(to_int(key, tok));
    } else {
      const int lo = to_int(key, tok.substr(0, dots));
      const int hi = to_int(key, tok.substr(dots + 2));
      if (hi < lo)
        throw std::invalid_argument("descending range in '" + key + "': " + tok);
      for (int x = lo; x <= hi; ++x) out.push_back(x);
    }
  }
  return out;
}

inline std::string join_ints(const std::vector<int>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_int(xs[i]);
  }
  return out;
}

inline std::string join_doubles(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double(xs[i]);
  }
  return out;
}

inline std::string join_masks(const std::vector<std::uint32_t>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_uint(xs[i]);
  }
  return out;
}

template <class Enum>
Enum parse_token(const std::string& key, const std::string& v,
                 std::initializer_list<std::pair<const char*, Enum>> table) {
  for (const auto& [name, value] : table)
    if (v == name) return value;
  std::string names;
  for (const auto& [name, value] : table) {
    if (!names.empty()) names += ", ";
    names += name;
  }
  throw std::invalid_argument("'" + key + "' must be one of: " + names + " (got '" + v + "')");
}

inline const char* mode_token(PvrMode m) {
  switch (m) {
    case PvrMode::truncated: return "truncated";
    case PvrMode::cyclic: return "cyclic";
    case PvrMode::non_overlapping: return "non_overlapping";
  }
  return "?";
}

inline const char* agg_token(Aggregation a) {
  switch (a) {
    case Aggregation::parity: return "parity";
    case Aggregation::majority: return "majority";
    case Aggregation::min: return "min";
    case Aggregation::max: return "max";
    case Aggregation::custom: return "custom";
  }
  return "?";
}

inline const char* kind_token(ModelKind k) {
  switch (k) {
    case ModelKind::linear_regression: return "linear_regression";
    case ModelKind::deep_linear: return "deep_linear";
    case ModelKind::mlp: return "mlp";
  }
  return "?";
}

inline const char* opt_token(OptimizerConfig::Kind k) {
  switch (k) {
    case OptimizerConfig::Kind::sgd: return "sgd";
    case OptimizerConfig::Kind::adam: return "adam";
    case OptimizerConfig::Kind::noisy_gd: return "noisy_gd";
  }
  return "?";
}

inline const char* init_token(InitScheme::Family f) {
  return f == InitScheme::Family::uniform_symmetric ? "uniform" : "gaussian";
}

}  // namespace detail

inline ExperimentConfig experiment_from_map(const ConfigMap& map) {
  for (const auto& [key, value] : map)
    if (!detail::known_keys().count(key))
      throw std::invalid_argument("unknown config key '" + key + "'");

  const auto get = [&map](const char* key) -> const std::string* {
    const auto it = map.find(key);
    return it == map.end() ? nullptr : &it->second;
  };

  ExperimentConfig cfg;
  // default per source material: momentum SGD for the desk-scale tasks
  cfg.opt.momentum = 0.9;

  if (const auto* v = get("task")) {
    if (*v != "pvr" && *v != "spectrum")
      throw std::invalid_argument("'task' must be pvr or spectrum (got '" + *v + "')");
    cfg.task = *v;
  }
  if (const auto* v = get("pvr.p")) cfg.pvr.p = detail::to_int("pvr.p", *v);
  if (const auto* v = get("pvr.w")) cfg.pvr.w = detail::to_int("pvr.w", *v);
  if (const auto* v = get("pvr.mode"))
    cfg.pvr.mode = detail::parse_token<PvrMode>(
        "pvr.mode", *v,
        {{"truncated", PvrMode::truncated},
         {"cyclic", PvrMode::cyclic},
         {"non_overlapping", PvrMode::non_overlapping}});
  if (const auto* v = get("pvr.agg"))
    cfg.pvr.agg = detail::parse_token<Aggregation>("pvr.agg", *v,
                                                   {{"parity", Aggregation::parity},
                                                    {"majority", Aggregation::majority},
                                                    {"min", Aggregation::min},
                                                    {"max", Aggregation::max}});
  if (const auto* v = get("pvr.dim")) cfg.pvr.dim = detail::to_int("pvr.dim", *v);
  if (const auto* v = get("spectrum.file")) cfg.spectrum_file = *v;
  if (const auto* v = get("spectrum.n")) cfg.spectrum_n = detail::to_int("spectrum.n", *v);

  if (const auto* v = get("holdout.k")) cfg.holdout.k = detail::to_int("holdout.k", *v);

  if (const auto* v = get("model.kind"))
    cfg.model_kind = detail::parse_token<ModelKind>(
        "model.kind", *v,
        {{"linear_regression", ModelKind::linear_regression},
         {"deep_linear", ModelKind::deep_linear},
         {"mlp", ModelKind::mlp}});
  if (const auto* v = get("model.hidden")) {
    cfg.hidden_given = true;
    if (*v == "full") {
      cfg.model_hidden = mlp_hidden_full();
    } else if (*v == "desk") {
      cfg.model_hidden = mlp_hidden_desk();
    } else {
      for (const auto& tok : detail::split_list(*v))
        cfg.model_hidden.push_back(detail::to_int("model.hidden", tok));
    }
  }
  if (const auto* v = get("model.depth")) cfg.model_depth = detail::to_int("model.depth", *v);
  if (const auto* v = get("model.width")) cfg.model_width = detail::to_int("model.width", *v);
  if (const auto* v = get("model.init"))
    cfg.init.family = detail::parse_token<InitScheme::Family>(
        "model.init", *v,
        {{"uniform", InitScheme::Family::uniform_symmetric},
         {"gaussian", InitScheme::Family::gaussian}});
  if (const auto* v = get("model.alpha")) cfg.init.alpha = parse_double(*v);
  if (const auto* v = get("model.init_mean")) cfg.init.mean = parse_double(*v);
  if (const auto* v = get("model.init_variance")) cfg.init.variance = parse_double(*v);

  if (const auto* v = get("opt.kind"))
    cfg.opt.kind = detail::parse_token<OptimizerConfig::Kind>(
        "opt.kind", *v,
        {{"sgd", OptimizerConfig::Kind::sgd},
         {"adam", OptimizerConfig::Kind::adam},
         {"noisy_gd", OptimizerConfig::Kind::noisy_gd}});
  if (const auto* v = get("opt.lr")) cfg.opt.lr = parse_double(*v);
  if (const auto* v = get("opt.momentum")) cfg.opt.momentum = parse_double(*v);
  if (const auto* v = get("opt.beta1")) cfg.opt.beta1 = parse_double(*v);
  if (const auto* v = get("opt.beta2")) cfg.opt.beta2 = parse_double(*v);
  if (const auto* v = get("opt.epsilon")) cfg.opt.epsilon = parse_double(*v);
  if (const auto* v = get("opt.clamp")) cfg.opt.clamp = parse_double(*v);
  if (const auto* v = get("opt.noise")) cfg.opt.noise = parse_double(*v);
  if (const auto* v = get("opt.batch")) cfg.opt.batch = detail::to_int("opt.batch", *v);

  if (const auto* v = get("train.epochs")) cfg.schedule.epochs = detail::to_int("train.epochs", *v);
  if (const auto* v = get("train.dataset")) cfg.schedule.dataset_size = parse_int(*v);
  if (const auto* v = get("train.eval_every"))
    cfg.schedule.eval_every = detail::to_int("train.eval_every", *v);
  if (const auto* v = get("train.mc_samples")) cfg.schedule.mc_samples = parse_int(*v);
  if (const auto* v = get("train.timings")) {
    if (*v != "true" && *v != "false")
      throw std::invalid_argument("'train.timings' must be true or false");
    cfg.schedule.timings = *v == "true";
  }
  if (const auto* v = get("train.tracked"))
    for (const auto& tok : detail::split_list(*v))
      cfg.schedule.tracked.push_back(static_cast<std::uint32_t>(parse_uint(tok)));

  if (const auto* v = get("sweep.k_list")) cfg.k_list = detail::parse_int_list("sweep.k_list", *v);
  if (const auto* v = get("sweep.w_list")) cfg.w_list = detail::parse_int_list("sweep.w_list", *v);
  if (const auto* v = get("sweep.depth_list"))
    cfg.depth_list = detail::parse_int_list("sweep.depth_list", *v);
  if (const auto* v = get("sweep.alpha_list"))
    for (const auto& tok : detail::split_list(*v)) cfg.alpha_list.push_back(parse_double(tok));

  if (const auto* v = get("cp.samples")) cfg.cp_samples = parse_int(*v);
  if (const auto* v = get("inal.samples")) cfg.inal_samples = detail::to_int("inal.samples", *v);

  if (const auto* v = get("seed")) cfg.seed = parse_uint(*v);
  if (const auto* v = get("repeats")) cfg.repeats = detail::to_int("repeats", *v);
  if (const auto* v = get("out")) cfg.out_dir = *v;

  if (cfg.task == "spectrum" && cfg.spectrum_file.empty())
    throw std::invalid_argument("task = spectrum requires spectrum.file");
  if (cfg.task == "spectrum" && cfg.spectrum_n < 1)
    throw std::invalid_argument("task = spectrum requires spectrum.n >= 1");
  if (cfg.model_depth < 0) throw std::invalid_argument("model.depth must be nonnegative");
  if (cfg.model_depth > 0 && cfg.hidden_given)
    throw std::invalid_argument("give model.depth or model.hidden, not both");
  if (cfg.model_width < 1) throw std::invalid_argument("model.width must be positive");
  if (cfg.repeats < 1) throw std::invalid_argument("repeats must be positive");
  if (cfg.cp_samples < 0) throw std::invalid_argument("cp.samples must be nonnegative");
  if (cfg.inal_samples < 2) throw std::invalid_argument("inal.samples must be at least 2");
  return cfg;
}

// Hidden widths after presets / depth shorthand; the mlp default is the desk
// preset.
inline std::vector<int> resolve_hidden(const ExperimentConfig& cfg) {
  if (cfg.model_kind == ModelKind::linear_regression) {
    if (!cfg.model_hidden.empty() || cfg.model_depth > 1)
      throw std::invalid_argument("linear_regression takes no hidden layers");
    return {};
  }
  if (cfg.model_depth > 0)
    return std::vector<int>(static_cast<std::size_t>(cfg.model_depth - 1), cfg.model_width);
  if (!cfg.hidden_given && cfg.model_kind == ModelKind::mlp) return mlp_hidden_desk();
  return cfg.model_hidden;
}

// The full resolved configuration as parseable key = value lines, in a fixed
// order; feeding this file back through the tool reproduces the run.
inline std::string resolved_text(const ExperimentConfig& cfg) {
  using namespace detail;
  std::string out;
  const auto line = [&out](const char* key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  line("task", cfg.task);
  line("pvr.p", format_int(cfg.pvr.p));
  line("pvr.w", format_int(cfg.pvr.w));
  line("pvr.mode", mode_token(cfg.pvr.mode));
  line("pvr.agg", agg_token(cfg.pvr.agg));
  line("pvr.dim", format_int(cfg.pvr.dim));
  line("spectrum.file", cfg.spectrum_file);
  line("spectrum.n", format_int(cfg.spectrum_n));
  line("holdout.k", format_int(cfg.holdout.k));
  line("model.kind", kind_token(cfg.model_kind));
  line("model.hidden", join_ints(resolve_hidden(cfg)));
  line("model.depth", format_int(cfg.model_depth));
  line("model.width", format_int(cfg.model_width));
  line("model.init", init_token(cfg.init.family));
  line("model.alpha", format_double(cfg.init.alpha));
  line("model.init_mean", format_double(cfg.init.mean));
  line("model.init_variance", format_double(cfg.init.variance));
  line("opt.kind", opt_token(cfg.opt.kind));
  line("opt.lr", format_double(cfg.opt.lr));
  line("opt.momentum", format_double(cfg.opt.momentum));
  line("opt.beta1", format_double(cfg.opt.beta1));
  line("opt.beta2", format_double(cfg.opt.beta2));
  line("opt.epsilon", format_double(cfg.opt.epsilon));
  line("opt.clamp", format_double(cfg.opt.clamp));
  line("opt.noise", format_double(cfg.opt.noise));
  line("opt.batch", format_int(cfg.opt.batch));
  line("train.epochs", format_int(cfg.schedule.epochs));
  line("train.dataset", format_int(cfg.schedule.dataset_size));
  line("train.eval_every", format_int(cfg.schedule.eval_every));
  line("train.mc_samples", format_int(cfg.schedule.mc_samples));
  line("train.timings", cfg.schedule.timings ? "true" : "false");
  line("train.tracked", join_masks(cfg.schedule.tracked));
  line("sweep.k_list", join_ints(cfg.k_list));
  line("sweep.w_list", join_ints(cfg.w_list));
  line("sweep.depth_list", join_ints(cfg.depth_list));
  line("sweep.alpha_list", join_doubles(cfg.alpha_list));
  line("cp.samples", format_int(cfg.cp_samples));
  line("inal.samples", format_int(cfg.inal_samples));
  line("seed", format_uint(cfg.seed));
  line("repeats", format_int(cfg.repeats));
  line("out", cfg.out_dir);
  return out;
}

inline FourierSpectrum read_spectrum_csv(const std::string& path, int n) {
  check_dim(n);
  const CsvTable t = read_csv(path);
  const std::size_t mask_col = t.column("subset_mask");
  const std::size_t coef_col = t.column("coefficient");
  FourierSpectrum s{n, std::vector<double>(std::size_t{1} << n, 0.0)};
  std::vector<bool> seen(s.coeffs.size(), false);
  for (const auto& row : t.rows) {
    const std::uint64_t mask = parse_uint(row[mask_col]);
    if (mask >= s.coeffs.size())
      throw std::invalid_argument("spectrum mask " + row[mask_col] + " exceeds 2^n - 1");
    if (seen[mask])
      throw std::invalid_argument("spectrum mask " + row[mask_col] + " appears twice");
    seen[mask] = true;
    s.coeffs[mask] = parse_double(row[coef_col]);
  }
  return s;
}

inline BooleanFunction build_target(const ExperimentConfig& cfg) {
  if (cfg.task == "pvr") return make_pvr(cfg.pvr);
  return inverse_transform(read_spectrum_csv(cfg.spectrum_file, cfg.spectrum_n));
}

inline ModelConfig resolve_model(const ExperimentConfig& cfg, int input_dim) {
  return {cfg.model_kind, input_dim, resolve_hidden(cfg)};
}

namespace detail {

inline std::string out_path(const ExperimentConfig& cfg, const std::string& name) {
  return (std::filesystem::path(cfg.out_dir) / name).string();
}

inline void prepare_out(const ExperimentConfig& cfg) {
  if (cfg.out_dir.empty())
    throw std::invalid_argument("output directory required (out = DIR or --out DIR)");
  std::filesystem::create_directories(cfg.out_dir);
  write_text_file(out_path(cfg, "config_resolved.txt"), resolved_text(cfg));
}

inline const std::vector<std::string>& run_header() {
  static const std::vector<std::string> h = {"frozen_index", "seed",      "steps",
                                             "gen_error_ood", "gen_error_id", "influence",
                                             "wall_time_s"};
  return h;
}

inline std::vector<std::string> run_row(const RunRecord& r) {
  return {format_int(r.frozen_index), format_uint(r.seed),
          format_int(r.steps),        format_double(r.gen_error_ood),
          format_double(r.gen_error_id), format_double(r.influence),
          format_double(r.wall_time_s)};
}

inline CsvTable records_table(const std::vector<RunRecord>& records) {
  CsvTable t;
  t.header = run_header();
  for (const auto& r : records) t.rows.push_back(run_row(r));
  return t;
}

inline CsvTable trajectory_table(const RunRecord& r) {
  CsvTable t;
  t.header = {"step", "subset_mask", "coefficient"};
  for (const auto& pt : r.coefficient_trajectory)
    t.rows.push_back({format_int(pt.step), format_uint(pt.mask), format_double(pt.value)});
  return t;
}

inline CsvTable errors_table(const RunRecord& r) {
  CsvTable t;
  t.header = {"step", "gen_error_ood", "gen_error_id", "ood_std_error", "id_std_error"};
  for (const auto& pt : r.error_trajectory)
    t.rows.push_back({format_int(pt.step), format_double(pt.ood), format_double(pt.id),
                      format_double(pt.ood_se), format_double(pt.id_se)});
  return t;
}

inline std::vector<std::string> aggregate_row(const AggregateRow& a) {
  return {format_int(a.frozen_index),  format_int(a.repeats),
          format_double(a.mean_ood),   format_double(a.ci95_ood),
          format_double(a.mean_id),    format_double(a.influence)};
}

}  // namespace detail

inline int cmd_analyze(const ExperimentConfig& cfg, std::ostream& log) {
  detail::prepare_out(cfg);
  const BooleanFunction target = build_target(cfg);
  const FourierSpectrum s = fourier_transform(target);

  CsvTable spectrum;
  spectrum.header = {"subset_mask", "coefficient"};
  std::size_t nonzero = 0;
  for (std::uint32_t t = 0; t < s.coeffs.size(); ++t)
    if (s.coeffs[t] != 0.0) {
      spectrum.rows.push_back({format_uint(t), format_double(s.coeffs[t])});
      ++nonzero;
    }
  write_csv(detail::out_path(cfg, "spectrum.csv"), spectrum);

  CsvTable inf;
  inf.header = {"coordinate", "influence"};
  for (int k = 1; k <= s.n; ++k)
    inf.rows.push_back({format_int(k), format_double(influence(s, k))});
  write_csv(detail::out_path(cfg, "influence.csv"), inf);

  CsvTable deg;
  deg.header = {"degree", "weight"};
  const auto weights = degree_weights(s);
  for (std::size_t d = 0; d < weights.size(); ++d)
    deg.rows.push_back({format_int(static_cast<long long>(d)), format_double(weights[d])});
  write_csv(detail::out_path(cfg, "degree_weights.csv"), deg);

  CsvTable stab;
  stab.header = {"delta", "stability"};
  for (int i = 0; i <= 20; ++i) {
    const double delta = 0.025 * i;
    stab.rows.push_back({format_double(delta), format_double(noise_stability(s, delta))});
  }
  write_csv(detail::out_path(cfg, "stability.csv"), stab);

  log << "analyzed n=" << s.n << " target: " << nonzero
      << " nonzero coefficients; wrote spectrum.csv, influence.csv, degree_weights.csv, "
         "stability.csv\n";
  return 0;
}

inline int cmd_train(const ExperimentConfig& cfg, std::ostream& log) {
  detail::prepare_out(cfg);
  const BooleanFunction target = build_target(cfg);
  const RunRecord rec = train_run(target, cfg.holdout, resolve_model(cfg, target.n), cfg.init,
                                  cfg.opt, cfg.schedule, cfg.seed);
  write_csv(detail::out_path(cfg, "runs.csv"), detail::records_table({rec}));
  write_csv(detail::out_path(cfg, "trajectory.csv"), detail::trajectory_table(rec));
  write_csv(detail::out_path(cfg, "errors.csv"), detail::errors_table(rec));
  log << "trained " << rec.steps << " steps: gen_error_ood=" << format_double(rec.gen_error_ood)
      << " gen_error_id=" << format_double(rec.gen_error_id)
      << " influence=" << format_double(rec.influence) << '\n';
  return 0;
}

inline int cmd_sweep(const ExperimentConfig& cfg, int threads, std::ostream& log) {
  detail::prepare_out(cfg);
  const int pointer_bits = cfg.task == "pvr" ? cfg.pvr.p : 0;

  if (!cfg.w_list.empty()) {
    // window-size panel: one cell per w at a fixed frozen index
    if (cfg.task != "pvr")
      throw std::invalid_argument("sweep.w_list requires a pvr task");
    if (!cfg.k_list.empty() || !cfg.depth_list.empty() || !cfg.alpha_list.empty())
      throw std::invalid_argument("sweep.w_list excludes the other sweep lists");
    if (cfg.holdout.k == 0)
      throw std::invalid_argument("sweep.w_list requires holdout.k");

    CsvTable agg;
    agg.header = {"w", "frozen_index", "repeats", "mean_gen_error_ood", "ci95_gen_error_ood",
                  "mean_gen_error_id", "influence"};
    CsvTable plot;
    plot.header = {"w", "influence", "mean_gen_error_ood", "ci95_gen_error_ood"};
    for (const int w : cfg.w_list) {
      PvrSpec spec = cfg.pvr;
      spec.w = w;
      const BooleanFunction target = make_pvr(spec);
      const std::vector<int> ks = {cfg.holdout.k};
      const SweepResult res = sweep(target, ks, cfg.repeats, resolve_model(cfg, target.n),
                                    cfg.init, cfg.opt, cfg.schedule, cfg.seed, threads,
                                    pointer_bits);
      write_csv(detail::out_path(cfg, "runs_w" + format_int(w) + ".csv"),
                detail::records_table(res.records));
      const AggregateRow& a = res.aggregate[0];
      std::vector<std::string> row = {format_int(w)};
      const auto base = detail::aggregate_row(a);
      row.insert(row.end(), base.begin(), base.end());
      agg.rows.push_back(row);
      plot.rows.push_back({format_int(w), format_double(a.influence),
                           format_double(a.mean_ood), format_double(a.ci95_ood)});
      log << "w=" << w << ": mean_gen_error_ood=" << format_double(a.mean_ood)
          << " influence=" << format_double(a.influence) << '\n';
    }
    write_csv(detail::out_path(cfg, "aggregate.csv"), agg);
    write_csv(detail::out_path(cfg, "plot_gen_vs_w.csv"), plot);
    return 0;
  }

  if (cfg.k_list.empty())
    throw std::invalid_argument("sweep requires sweep.k_list (or sweep.w_list)");
  const BooleanFunction target = build_target(cfg);

  if (!cfg.depth_list.empty() || !cfg.alpha_list.empty()) {
    // model-variant panels: a full frozen-index sweep per depth and per
    // initialization exponent
    CsvTable agg;
    agg.header = {"variant", "value", "frozen_index", "repeats", "mean_gen_error_ood",
                  "ci95_gen_error_ood", "mean_gen_error_id", "influence"};
    const auto run_panel = [&](const char* variant, const std::string& value,
                               const ModelConfig& mc, const InitScheme& init, CsvTable& plot) {
      const SweepResult res = sweep(target, cfg.k_list, cfg.repeats, mc, init, cfg.opt,
                                    cfg.schedule, cfg.seed, threads, pointer_bits);
      write_csv(detail::out_path(cfg, std::string("runs_") + variant + value + ".csv"),
                detail::records_table(res.records));
      for (const auto& a : res.aggregate) {
        std::vector<std::string> row = {variant, value};
        const auto base = detail::aggregate_row(a);
        row.insert(row.end(), base.begin(), base.end());
        agg.rows.push_back(row);
        plot.rows.push_back({value, format_int(a.frozen_index), format_double(a.influence),
                             format_double(a.mean_ood), format_double(a.ci95_ood)});
      }
      double gap = 0.0;
      for (const auto& a : res.aggregate) gap += std::abs(a.mean_ood - a.influence);
      log << variant << "=" << value << ": mean |gen - influence| over k = "
          << format_double(gap / static_cast<double>(res.aggregate.size())) << '\n';
    };

    if (!cfg.depth_list.empty()) {
      if (cfg.model_kind != ModelKind::deep_linear)
        throw std::invalid_argument("sweep.depth_list requires model.kind = deep_linear");
      CsvTable plot;
      plot.header = {"depth", "frozen_index", "influence", "mean_gen_error_ood",
                     "ci95_gen_error_ood"};
      for (const int depth : cfg.depth_list) {
        if (depth < 1) throw std::invalid_argument("sweep.depth_list entries must be >= 1");
        // depth 1 is a single matrix, i.e. plain linear regression
        const ModelConfig mc{depth == 1 ? ModelKind::linear_regression : cfg.model_kind,
                             target.n,
                             std::vector<int>(static_cast<std::size_t>(depth - 1),
                                              cfg.model_width)};
        run_panel("depth", format_int(depth), mc, cfg.init, plot);
      }
      write_csv(detail::out_path(cfg, "plot_depth.csv"), plot);
    }
    if (!cfg.alpha_list.empty()) {
      if (cfg.init.family != InitScheme::Family::uniform_symmetric)
        throw std::invalid_argument("sweep.alpha_list requires model.init = uniform");
      CsvTable plot;
      plot.header = {"alpha", "frozen_index", "influence", "mean_gen_error_ood",
                     "ci95_gen_error_ood"};
      const ModelConfig mc = resolve_model(cfg, target.n);
      for (const double alpha : cfg.alpha_list) {
        InitScheme init = cfg.init;
        init.alpha = alpha;
        run_panel("alpha", format_double(alpha), mc, init, plot);
      }
      write_csv(detail::out_path(cfg, "plot_alpha.csv"), plot);
    }
    write_csv(detail::out_path(cfg, "aggregate.csv"), agg);
    return 0;
  }

  // plain frozen-index sweep
  const SweepResult res = sweep(target, cfg.k_list, cfg.repeats, resolve_model(cfg, target.n),
                                cfg.init, cfg.opt, cfg.schedule, cfg.seed, threads,
                                pointer_bits);
  write_csv(detail::out_path(cfg, "runs.csv"), detail::records_table(res.records));
  CsvTable agg;
  agg.header = {"frozen_index", "repeats", "mean_gen_error_ood", "ci95_gen_error_ood",
                "mean_gen_error_id", "influence"};
  CsvTable plot;
  plot.header = {"frozen_index", "influence", "mean_gen_error_ood", "ci95_gen_error_ood"};
  for (const auto& a : res.aggregate) {
    agg.rows.push_back(detail::aggregate_row(a));
    plot.rows.push_back({format_int(a.frozen_index), format_double(a.influence),
                         format_double(a.mean_ood), format_double(a.ci95_ood)});
    log << "k=" << a.frozen_index << ": mean_gen_error_ood=" << format_double(a.mean_ood)
        << " ci95=" << format_double(a.ci95_ood)
        << " influence=" << format_double(a.influence) << '\n';
  }
  write_csv(detail::out_path(cfg, "aggregate.csv"), agg);
  write_csv(detail::out_path(cfg, "plot_gen_vs_influence.csv"), plot);
  return 0;
}

inline int cmd_cp(const ExperimentConfig& cfg, std::ostream& log) {
  detail::prepare_out(cfg);
  OrbitSampler sampler;
  sampler.base = build_target(cfg);
  sampler.mode = cfg.cp_samples == 0 ? OrbitMode::exact : OrbitMode::monte_carlo;
  sampler.seed = cfg.seed;
  const CpResult res = cross_predictability(sampler, cfg.cp_samples);
  CsvTable t;
  t.header = {"estimate", "std_error", "samples"};
  t.rows.push_back({format_double(res.estimate), format_double(res.std_error),
                    format_int(res.samples)});
  write_csv(detail::out_path(cfg, "cp.csv"), t);
  log << "cross-predictability " << format_double(res.estimate) << " (std error "
      << format_double(res.std_error) << ", " << res.samples << " samples)\n";
  return 0;
}

inline int cmd_inal(const ExperimentConfig& cfg, std::ostream& log) {
  detail::prepare_out(cfg);
  const BooleanFunction target = build_target(cfg);
  Rng rng(mix_seed(cfg.seed, kStreamInit));
  const InalResult res =
      estimate_inal(target, resolve_model(cfg, target.n), cfg.init, cfg.inal_samples, rng);
  CsvTable t;
  t.header = {"inal", "best_neuron", "init_samples"};
  t.rows.push_back({format_double(res.inal), format_uint(res.best),
                    format_int(cfg.inal_samples)});
  write_csv(detail::out_path(cfg, "inal.csv"), t);
  CsvTable neurons;
  neurons.header = {"neuron", "mean_alignment_sq", "std_error"};
  for (std::size_t v = 0; v < res.mean.size(); ++v)
    neurons.rows.push_back(
        {format_uint(v), format_double(res.mean[v]), format_double(res.std_error[v])});
  write_csv(detail::out_path(cfg, "neurons.csv"), neurons);
  log << "initial alignment " << format_double(res.inal) << " (best neuron " << res.best
      << " of " << res.mean.size() << ")\n";
  return 0;
}

}  // namespace pvrlab
