#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spdelab/errors.hpp"
#include "spdelab/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{
      "spdelab: Langevin-SPDE posterior laboratory on a spectrally truncated "
      "Hilbert space"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool seed_set = false;
  bool out_set = false;

  const auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* copt = sub->add_option("--config", config_path, "config file (JSON)");
    if (config_required) copt->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)")
        ->each([&](const std::string&) { out_set = true; });
    sub->add_option("--seed", seed, "seed override")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--threads", threads,
                    "worker threads (speed only, never results)");
  };

  add_common(app.add_subcommand("simulate",
                                "moment traces and stationarity report"),
             true);
  add_common(app.add_subcommand(
                 "certify", "contraction certificates plus validation"),
             true);
  add_common(app.add_subcommand(
                 "laplace", "Laplace pair, F-H report, KL and H/K bounds"),
             true);
  add_common(app.add_subcommand("sweep", "parameter grid with slope fits"),
             true);
  add_common(app.add_subcommand("audit", "assumption audits (A/B/C/BvM)"),
             true);
  add_common(app.add_subcommand("accept", "full acceptance suite"), false);

  CLI11_PARSE(app, argc, argv);

  const std::string sub = app.get_subcommands().front()->get_name();
  spdelab::RunOptions opts;
  if (out_set) opts.out_override = out_dir;
  if (seed_set) opts.seed_override = seed;
  opts.threads = threads;

  try {
    return spdelab::run_subcommand(sub, config_path, opts, std::cout);
  } catch (const spdelab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const spdelab::AuditBlock& e) {
    std::cerr << "audit failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
