#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "droplet/experiment.hpp"

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kSolverFailure = 3 };

struct Options {
  std::string config_path;
  std::string out_dir;
  int threads = 1;
  std::optional<long long> seed_override;
};

droplet::ExperimentConfig resolve(const Options& o) {
  droplet::ExperimentConfig cfg = o.config_path.empty() ? droplet::ExperimentConfig{} : droplet::load_config(o.config_path);
  if (!o.out_dir.empty()) cfg.output = o.out_dir;
  if (o.seed_override) {
    if (*o.seed_override < 0) throw droplet::ConfigError("--seed-override must be >= 0");
    cfg.sweep.seeds = {static_cast<std::uint64_t>(*o.seed_override)};
  }
  if (o.threads < 1) throw droplet::ConfigError("--threads must be >= 1");
  cfg.validate();
  return cfg;
}

int run(const std::string& command, const Options& o) {
  droplet::ExperimentConfig cfg;
  try {
    cfg = resolve(o);
  } catch (const droplet::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  }
  try {
    const droplet::OutputDir out(cfg.output, droplet::config_hash(cfg));
    if (command == "ball") {
      droplet::cmd_ball(cfg, out);
    } else if (command == "spectrum") {
      droplet::cmd_spectrum(cfg, out);
    } else if (command == "flow" || command == "sweep") {
      const auto batch = command == "flow" ? droplet::cmd_flow(cfg, out, o.threads) : droplet::cmd_sweep(cfg, out, o.threads);
      for (const auto& r : batch.rows)
        std::printf("Q=%-6g seed=%-4llu final_h1=%.3e gap=%.3e steps=%d %s\n", r.Q,
                    static_cast<unsigned long long>(r.seed), r.final_h1, r.final_gap, r.iterations, r.status.c_str());
      if (batch.aborted) return kSolverFailure;
    } else if (command == "verify") {
      if (!droplet::cmd_verify(cfg, out)) {
        std::cerr << "verification failed; see " << (out.path() / "verify.csv").string() << "\n";
        return kVerifyFailed;
      }
    }
    std::printf("%s: wrote %s (config %s)\n", command.c_str(), out.path().string().c_str(), out.hash().c_str());
    return kOk;
  } catch (const droplet::InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Debye-Hueckel charged droplet experiments"};
  app.require_subcommand(1);
  Options opts;
  std::string command;
  for (const char* name : {"ball", "spectrum", "flow", "sweep", "verify"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config_path, "JSON configuration file");
    sub->add_option("--out", opts.out_dir, "output directory (overrides config)");
    sub->add_option("--threads", opts.threads, "worker threads for flow/sweep");
    sub->add_option("--seed-override", opts.seed_override, "replace the seed list by one seed");
    sub->callback([&command, name] { command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  return run(command, opts);
}
