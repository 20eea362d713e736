#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pvrlab/cli.hpp"
#include "pvrlab/verify.hpp"

using namespace pvrlab;
using Catch::Matchers::WithinAbs;

namespace {

namespace fs = std::filesystem;

const fs::path& work_dir() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "pvrlab_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PVRLAB_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string conf_file(const std::string& name, const std::string& text) {
  const std::string path = (work_dir() / name).string();
  write_text_file(path, text);
  return path;
}

std::vector<std::string> column(const CsvTable& t, const char* name) {
  const std::size_t i = t.column(name);
  std::vector<std::string> out;
  for (const auto& row : t.rows) out.push_back(row[i]);
  return out;
}

}  // namespace

TEST_CASE("csv writing round-trips through the reader") {
  CsvTable t;
  t.header = {"a", "b", "c"};
  t.rows.push_back({format_double(0.1), format_double(1.0 / 3.0), format_int(-7)});
  t.rows.push_back({format_double(1e-300), format_double(-0.0), format_uint(1ull << 63)});
  const std::string text = to_csv(t);
  REQUIRE(parse_csv(text) == t);
  REQUIRE(parse_double(format_double(0.1)) == 0.1);
  REQUIRE(parse_double(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  REQUIRE(parse_double(format_double(1e-300)) == 1e-300);
  const double inf = std::numeric_limits<double>::infinity();
  REQUIRE(parse_double(format_double(inf)) == inf);
}

TEST_CASE("csv rejects malformed content") {
  CsvTable bad;
  bad.header = {"a"};
  bad.rows.push_back({"x,y"});
  REQUIRE_THROWS_AS(to_csv(bad), std::invalid_argument);
  bad.rows[0] = {"x", "y"};
  REQUIRE_THROWS_AS(to_csv(bad), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_csv("a,b\n1\n"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_csv(""), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_double("1.5x"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_int("七"), std::invalid_argument);
}

TEST_CASE("config text parses strictly") {
  const auto map = parse_config_text("# comment\n  task = pvr \n\nopt.lr = 0.5 # inline\n");
  REQUIRE(map.size() == 2);
  REQUIRE(map.at("task") == "pvr");
  REQUIRE(map.at("opt.lr") == "0.5");
  REQUIRE_THROWS_AS(parse_config_text("task pvr\n"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_config_text("= 3\n"), std::invalid_argument);
  REQUIRE_THROWS_AS(parse_config_text("a = 1\na = 2\n"), std::invalid_argument);
}

TEST_CASE("schema application fills defaults and rejects the unknown") {
  const auto cfg = experiment_from_map(parse_config_text("task = pvr\n"));
  REQUIRE(cfg.opt.momentum == 0.9);
  REQUIRE(cfg.model_kind == ModelKind::mlp);
  REQUIRE(resolve_hidden(cfg) == mlp_hidden_desk());
  REQUIRE(cfg.repeats == 1);

  REQUIRE_THROWS_AS(experiment_from_map({{"tsak", "pvr"}}), std::invalid_argument);
  REQUIRE_THROWS_AS(experiment_from_map({{"pvr.mode", "circular"}}), std::invalid_argument);
  REQUIRE_THROWS_AS(experiment_from_map({{"task", "spectrum"}}), std::invalid_argument);
  REQUIRE_THROWS_AS(experiment_from_map({{"model.depth", "2"}, {"model.hidden", "8"}}),
                    std::invalid_argument);
  REQUIRE_THROWS_AS(experiment_from_map({{"repeats", "0"}}), std::invalid_argument);

  const auto ranged = experiment_from_map(parse_config_text("sweep.k_list = 4..7,11\n"));
  REQUIRE(ranged.k_list == std::vector<int>{4, 5, 6, 7, 11});
}

TEST_CASE("the resolved echo reproduces itself byte for byte") {
  const auto cfg = experiment_from_map(parse_config_text(
      "task = pvr\npvr.p = 3\npvr.w = 2\nholdout.k = 5\nmodel.hidden = desk\n"
      "opt.lr = 0.005\ntrain.epochs = 12\nsweep.k_list = 4..6\nseed = 42\nout = somewhere\n"));
  const std::string echo = resolved_text(cfg);
  const auto again = experiment_from_map(parse_config_text(echo));
  REQUIRE(resolved_text(again) == echo);
}

TEST_CASE("spectrum files build the function they describe") {
  const auto f = oracles::pointer_example4();
  const auto s = fourier_transform(f);
  CsvTable t;
  t.header = {"subset_mask", "coefficient"};
  for (std::uint32_t m = 0; m < s.coeffs.size(); ++m)
    if (s.coeffs[m] != 0.0) t.rows.push_back({format_uint(m), format_double(s.coeffs[m])});
  const std::string path = (work_dir() / "pointer4.csv").string();
  write_csv(path, t);

  const auto cfg = experiment_from_map(parse_config_text(
      "task = spectrum\nspectrum.file = " + path + "\nspectrum.n = 4\n"));
  const auto built = build_target(cfg);
  REQUIRE(built.n == 4);
  for (std::uint32_t m = 0; m < built.values.size(); ++m)
    REQUIRE_THAT(built.values[m], WithinAbs(f.values[m], 1e-12));

  CsvTable dup = t;
  dup.rows.push_back(t.rows[0]);
  write_csv(path + ".dup", dup);
  REQUIRE_THROWS_AS(read_spectrum_csv(path + ".dup", 4), std::invalid_argument);
  REQUIRE_THROWS_AS(read_spectrum_csv(path, 2), std::invalid_argument);
}

TEST_CASE("the verification suite passes and the mutation hook trips it") {
  std::ostringstream clean;
  REQUIRE(run_verify(clean) == 0);
  REQUIRE(clean.str().find("FAIL") == std::string::npos);
  std::ostringstream mutated;
  REQUIRE(run_verify(mutated, kMutateCyclicInfluence) == 2);
  REQUIRE(mutated.str().find("FAIL cyclic_influence_closed_form") != std::string::npos);
  REQUIRE_THROWS_AS(run_verify(mutated, "no-such-mutation"), std::invalid_argument);
}

TEST_CASE("binary: verify exits clean and the mutation exits 2") {
  REQUIRE(run_cli("verify") == 0);
  REQUIRE(run_cli("verify --mutate cyclic-influence-binomial") == 2);
  REQUIRE(run_cli("verify --mutate nonsense") == 1);
}

TEST_CASE("binary: usage and config errors exit 1") {
  REQUIRE(run_cli("") == 1);
  REQUIRE(run_cli("frobnicate") == 1);
  REQUIRE(run_cli("sweep") == 1);

  const auto cap = conf_file("cap.conf",
                             "task = pvr\npvr.p = 1\npvr.w = 1\npvr.mode = cyclic\n"
                             "pvr.agg = parity\npvr.dim = 27\nout = " +
                                 (work_dir() / "cap_out").string() + "\n");
  REQUIRE(run_cli("analyze --config " + cap) == 1);

  const auto unknown = conf_file("unknown.conf", "task = pvr\nwibble = 3\n");
  REQUIRE(run_cli("analyze --config " + unknown + " --out " +
                  (work_dir() / "u_out").string()) == 1);

  const auto pointer = conf_file("pointer.conf",
                                 "task = pvr\npvr.p = 2\npvr.w = 1\npvr.mode = cyclic\n"
                                 "pvr.agg = parity\nsweep.k_list = 2,3\ntrain.epochs = 1\n"
                                 "train.dataset = 32\nmodel.hidden = 4\nout = " +
                                     (work_dir() / "p_out").string() + "\n");
  REQUIRE(run_cli("sweep --config " + pointer) == 1);
}

TEST_CASE("binary: analyze reports the worked example's true influence column") {
  const std::string spectrum_path = (work_dir() / "pointer4.csv").string();
  const auto out = (work_dir() / "analyze_out").string();
  const auto conf = conf_file("analyze.conf", "task = spectrum\nspectrum.file = " +
                                                  spectrum_path +
                                                  "\nspectrum.n = 4\nout = " + out + "\n");
  REQUIRE(run_cli("analyze --config " + conf) == 0);

  const CsvTable inf = read_csv(out + "/influence.csv");
  REQUIRE(column(inf, "influence") == std::vector<std::string>{"0.5", "0.5", "1", "0.5"});

  const CsvTable stab = read_csv(out + "/stability.csv");
  REQUIRE(stab.rows.size() == 21);
  REQUIRE(stab.rows.front() == std::vector<std::string>{"0", "1"});

  const CsvTable spec = read_csv(out + "/spectrum.csv");
  REQUIRE(spec.rows.size() == 4);

  const CsvTable deg = read_csv(out + "/degree_weights.csv");
  REQUIRE(column(deg, "weight") == std::vector<std::string>{"0", "0", "0.5", "0.5", "0"});
}

TEST_CASE("binary: analyze on a constant target reports zero influence everywhere") {
  CsvTable t;
  t.header = {"subset_mask", "coefficient"};
  t.rows.push_back({"0", "1"});
  const std::string path = (work_dir() / "constant.csv").string();
  write_csv(path, t);
  const auto out = (work_dir() / "constant_out").string();
  const auto conf = conf_file("constant.conf", "task = spectrum\nspectrum.file = " + path +
                                                   "\nspectrum.n = 3\nout = " + out + "\n");
  REQUIRE(run_cli("analyze --config " + conf) == 0);
  const CsvTable inf = read_csv(out + "/influence.csv");
  REQUIRE(column(inf, "influence") == std::vector<std::string>{"0", "0", "0"});
}

TEST_CASE("binary: train smoke run emits the exact record header") {
  const auto out = (work_dir() / "train_out").string();
  const auto conf = conf_file("train.conf",
                              "task = pvr\npvr.p = 2\npvr.w = 2\npvr.mode = cyclic\n"
                              "pvr.agg = parity\nholdout.k = 4\nmodel.hidden = 8\n"
                              "opt.lr = 0.05\ntrain.epochs = 2\ntrain.dataset = 128\n"
                              "seed = 9\nout = " +
                                  out + "\n");
  REQUIRE(run_cli("train --config " + conf) == 0);

  const std::string runs = read_text_file(out + "/runs.csv");
  REQUIRE(runs.rfind("frozen_index,seed,steps,gen_error_ood,gen_error_id,influence,wall_time_s\n",
                     0) == 0);
  const CsvTable table = parse_csv(runs);
  REQUIRE(table.rows.size() == 1);
  REQUIRE(table.rows[0][0] == "4");
  REQUIRE(table.rows[0][6] == "0");  // timings off by default

  const CsvTable traj = read_csv(out + "/trajectory.csv");
  REQUIRE(traj.header == std::vector<std::string>{"step", "subset_mask", "coefficient"});
  REQUIRE(!traj.rows.empty());
  const CsvTable errs = read_csv(out + "/errors.csv");
  REQUIRE(errs.rows.size() == 3);  // steps 0, 2, 4

  const auto echoed = parse_config_text(read_text_file(out + "/config_resolved.txt"));
  REQUIRE(echoed.at("holdout.k") == "4");
  REQUIRE(echoed.at("opt.momentum") == "0.9");
}

TEST_CASE("binary: sweeps are byte-identical across thread counts and echo reruns") {
  const std::string base =
      "task = pvr\npvr.p = 2\npvr.w = 2\npvr.mode = cyclic\npvr.agg = majority\n"
      "model.hidden = 8\nopt.lr = 0.05\ntrain.epochs = 2\ntrain.dataset = 128\n"
      "sweep.k_list = 3..6\nseed = 77\nrepeats = 2\n";
  const auto out_a = (work_dir() / "sweep_a").string();
  const auto out_b = (work_dir() / "sweep_b").string();
  const auto out_c = (work_dir() / "sweep_c").string();
  const auto conf = conf_file("sweep.conf", base + "out = " + out_a + "\n");

  REQUIRE(run_cli("sweep --config " + conf) == 0);
  REQUIRE(run_cli("sweep --config " + conf + " --out " + out_b + " --threads 4") == 0);
  for (const char* name : {"runs.csv", "aggregate.csv", "plot_gen_vs_influence.csv"})
    REQUIRE(read_text_file(out_a + "/" + name) == read_text_file(out_b + "/" + name));

  // the echoed config is a complete, rerunnable description of the run
  REQUIRE(run_cli("sweep --config " + out_a + "/config_resolved.txt --out " + out_c) == 0);
  REQUIRE(read_text_file(out_a + "/runs.csv") == read_text_file(out_c + "/runs.csv"));

  const CsvTable agg = read_csv(out_a + "/aggregate.csv");
  REQUIRE(agg.rows.size() == 4);
  REQUIRE(column(agg, "influence") ==
          std::vector<std::string>{"0.125", "0.125", "0.125", "0.125"});
}

TEST_CASE("binary: window-size sweep pins the closed-form influence column") {
  const auto out = (work_dir() / "wsweep_out").string();
  const auto conf = conf_file("wsweep.conf",
                              "task = pvr\npvr.p = 3\npvr.mode = cyclic\npvr.agg = majority\n"
                              "holdout.k = 5\nmodel.hidden = 8\nopt.lr = 0.05\n"
                              "train.epochs = 1\ntrain.dataset = 64\n"
                              "sweep.w_list = 1,2,3,4\nseed = 5\nout = " +
                                  out + "\n");
  REQUIRE(run_cli("sweep --config " + conf) == 0);
  const CsvTable plot = read_csv(out + "/plot_gen_vs_w.csv");
  REQUIRE(column(plot, "w") == std::vector<std::string>{"1", "2", "3", "4"});
  REQUIRE(column(plot, "influence") ==
          std::vector<std::string>{"0.125", "0.0625", "0.1875", "0.09375"});
  for (int w = 1; w <= 4; ++w) {
    const std::string runs = read_text_file(out + "/runs_w" + std::to_string(w) + ".csv");
    REQUIRE(runs.rfind("frozen_index,seed,", 0) == 0);
  }
}

TEST_CASE("binary: depth and alpha panels produce one plot file each") {
  const auto out = (work_dir() / "panels_out").string();
  const auto conf = conf_file("panels.conf",
                              "task = pvr\npvr.p = 2\npvr.w = 1\npvr.mode = cyclic\n"
                              "pvr.agg = parity\nmodel.kind = deep_linear\nmodel.depth = 2\n"
                              "model.width = 16\nopt.lr = 0.02\nopt.momentum = 0\n"
                              "train.epochs = 2\ntrain.dataset = 64\n"
                              "sweep.k_list = 3,4\nsweep.depth_list = 1,2\n"
                              "sweep.alpha_list = 0.5,2.5\nseed = 21\nout = " +
                                  out + "\n");
  REQUIRE(run_cli("sweep --config " + conf) == 0);
  const CsvTable depth = read_csv(out + "/plot_depth.csv");
  REQUIRE(column(depth, "depth") == std::vector<std::string>{"1", "1", "2", "2"});
  const CsvTable alpha = read_csv(out + "/plot_alpha.csv");
  REQUIRE(column(alpha, "alpha") == std::vector<std::string>{"0.5", "0.5", "2.5", "2.5"});
  const CsvTable agg = read_csv(out + "/aggregate.csv");
  REQUIRE(agg.rows.size() == 8);
  for (const char* name : {"runs_depth1.csv", "runs_depth2.csv", "runs_alpha0.5.csv",
                           "runs_alpha2.5.csv"})
    REQUIRE(fs::exists(fs::path(out) / name));
}

TEST_CASE("binary: cp and inal emit their single-row tables") {
  const std::string spectrum_path = (work_dir() / "pointer4.csv").string();
  const auto out_cp = (work_dir() / "cp_out").string();
  const auto conf_c = conf_file("cp.conf", "task = spectrum\nspectrum.file = " + spectrum_path +
                                               "\nspectrum.n = 4\nout = " + out_cp + "\n");
  REQUIRE(run_cli("cp --config " + conf_c) == 0);
  const CsvTable cp = read_csv(out_cp + "/cp.csv");
  REQUIRE(cp.rows.size() == 1);
  REQUIRE(parse_int(cp.rows[0][cp.column("samples")]) == 24);  // 4! exact orbit
  REQUIRE(cp.rows[0][cp.column("std_error")] == "0");

  const auto out_inal = (work_dir() / "inal_out").string();
  const auto conf_i = conf_file("inal.conf",
                                "task = spectrum\nspectrum.file = " + spectrum_path +
                                    "\nspectrum.n = 4\nmodel.hidden = 8\n"
                                    "inal.samples = 50\nseed = 2\nout = " +
                                    out_inal + "\n");
  REQUIRE(run_cli("inal --config " + conf_i) == 0);
  const CsvTable inal = read_csv(out_inal + "/inal.csv");
  REQUIRE(inal.rows.size() == 1);
  const double best = parse_double(inal.rows[0][inal.column("inal")]);
  REQUIRE(best > 0.0);
  const CsvTable neurons = read_csv(out_inal + "/neurons.csv");
  REQUIRE(neurons.rows.size() == 8);
  double max_mean = 0.0;
  for (const auto& row : neurons.rows)
    max_mean = std::max(max_mean, parse_double(row[neurons.column("mean_alignment_sq")]));
  REQUIRE(max_mean == best);
}
