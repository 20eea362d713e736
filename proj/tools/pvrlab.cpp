// pvrlab: deterministic Boolean-function experiment runner.
//
// usage: pvrlab <analyze|train|sweep|cp|inal|verify> [options]
//   --config PATH   experiment config (key = value lines); required except for verify
//   --out DIR       output directory (overrides `out` from the config)
//   --seed N        base seed (overrides `seed` from the config)
//   --threads N     worker threads for sweep (default 1)
//   --mutate NAME   verify only: corrupt one internal recomputation on purpose
//
// exit codes: 0 success, 1 usage/config error, 2 verification failure

#include <cstring>
#include <iostream>
#include <string>

#include "pvrlab/cli.hpp"
#include "pvrlab/verify.hpp"

namespace {

int usage(std::ostream& out) {
  out << "usage: pvrlab <analyze|train|sweep|cp|inal|verify> [--config PATH] [--out DIR]\n"
         "              [--seed N] [--threads N] [--mutate NAME]\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) return usage(std::cerr);
  const std::string command = argv[1];

  std::string config_path, out_dir, mutate;
  std::string seed_arg;
  int threads = 1;
  for (int i = 2; i < argc; ++i) {
    const std::string flag = argv[i];
    const auto value = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "error: " << flag << " needs a value\n";
        std::exit(1);
      }
      return argv[++i];
    };
    if (flag == "--config") {
      config_path = value();
    } else if (flag == "--out") {
      out_dir = value();
    } else if (flag == "--seed") {
      seed_arg = value();
    } else if (flag == "--threads") {
      threads = static_cast<int>(pvrlab::parse_int(value()));
    } else if (flag == "--mutate") {
      mutate = value();
    } else {
      std::cerr << "error: unknown option " << flag << '\n';
      return usage(std::cerr);
    }
  }

  try {
    if (command == "verify") return pvrlab::run_verify(std::cout, mutate);

    if (config_path.empty()) {
      std::cerr << "error: " << command << " requires --config\n";
      return 1;
    }
    pvrlab::ExperimentConfig cfg = pvrlab::experiment_from_map(
        pvrlab::parse_config_text(pvrlab::read_text_file(config_path)));
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (!seed_arg.empty()) cfg.seed = pvrlab::parse_uint(seed_arg);
    if (threads < 1) throw std::invalid_argument("--threads must be positive");

    if (command == "analyze") return pvrlab::cmd_analyze(cfg, std::cout);
    if (command == "train") return pvrlab::cmd_train(cfg, std::cout);
    if (command == "sweep") return pvrlab::cmd_sweep(cfg, threads, std::cout);
    if (command == "cp") return pvrlab::cmd_cp(cfg, std::cout);
    if (command == "inal") return pvrlab::cmd_inal(cfg, std::cout);
    std::cerr << "error: unknown command " << command << '\n';
    return usage(std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
