// smr: phantom -> trajectory -> simulate -> recon -> analyze, one stage per command.

#include <CLI11.hpp>

#include <iostream>
#include <optional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "smr/pipeline.hpp"

namespace {

struct Common {
  std::string config;
  std::string out = "out";
  std::optional<long long> seed;
  int threads = 0;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config, "key=value configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--out", c.out, "output directory")->capture_default_str();
  cmd->add_option("--seed", c.seed, "overrides run.seed");
  cmd->add_option("--threads", c.threads, "worker threads (0: default)")->check(CLI::NonNegativeNumber);
}

smr::RunConfig resolve(const Common& c) {
  smr::RunConfig cfg;
  if (!c.config.empty()) cfg.load(c.config);
  cfg.apply_env();
  if (c.seed) cfg.set("run.seed", std::to_string(*c.seed));
  if (c.threads > 0) cfg.set("run.threads", std::to_string(c.threads));
#ifdef _OPENMP
  if (const auto t = cfg.get_int("run.threads"); t > 0) omp_set_num_threads(static_cast<int>(t));
#endif
  return cfg;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-navigated manifold reconstruction toolkit for dynamic spiral MRI"};
  app.require_subcommand(1);
  Common common;
  std::string algorithm;

  auto* phantom = app.add_subcommand("phantom", "render the ground-truth image series");
  auto* traj = app.add_subcommand("traj", "write spiral trajectories as CSV");
  auto* simulate = app.add_subcommand("simulate", "simulate multi-coil k-t data");
  auto* recon = app.add_subcommand("recon", "reconstruct with one algorithm");
  auto* analyze = app.add_subcommand("analyze", "MSE table, ROI profiles, Laplacian and space-time reports");
  auto* config = app.add_subcommand("config", "print every configuration key with its default");
  for (auto* cmd : {phantom, traj, simulate, recon, analyze}) add_common(cmd, common);
  recon->add_option("algorithm", algorithm, "manifold | viewshare | lowrank | tfd | xdsort")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (config->parsed()) {
      std::cout << smr::RunConfig().dump(true);
      return 0;
    }
    const smr::RunConfig cfg = resolve(common);
    const smr::fs::path out(common.out);
    if (phantom->parsed()) smr::cmd_phantom(cfg, out);
    if (traj->parsed()) smr::cmd_traj(cfg, out);
    if (simulate->parsed()) smr::cmd_simulate(cfg, out);
    if (recon->parsed()) smr::cmd_recon(smr::parse_algorithm(algorithm), cfg, out);
    if (analyze->parsed()) smr::cmd_analyze(cfg, out);
  } catch (const std::exception& e) {
    std::cerr << "smr: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
