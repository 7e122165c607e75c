#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "mvf/experiments.hpp"
#include "mvf/report.hpp"
#include "mvf/util.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mvlab: measure-valued stochastic integration experiments"};
  app.require_subcommand(1);
  std::string config, out = "out";
  std::uint64_t seed = 0;
  int threads = 1;
  double corrupt = 0.0;
  auto* o_seed = app.add_option("--seed", seed, "override the config seed");
  app.add_option("--config", config, "JSON experiment config");
  app.add_option("--out", out, "output directory");
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  auto* o_cor = app.add_option("--corrupt", corrupt, "negative-control fixture: perturb the integrand side");
  for (const char* name : {"fubini", "approx", "volterra", "example7", "conditions"}) app.add_subcommand(name);
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return mvf::kConfigError;
  }

  mvf::RunRequest req;
  req.command = app.get_subcommands().front()->get_name();
  req.out_dir = out;
  if (*o_seed) req.seed = seed;
  if (*o_cor) req.corrupt = corrupt;
  if (!config.empty()) {
    try {
      req.config_text = mvf::read_file(config);
    } catch (const std::exception& e) {
      std::cerr << "config error: " << e.what() << '\n';
      return mvf::kConfigError;
    }
    req.config_dir = std::filesystem::path(config).parent_path().string();
  }
  mvf::set_threads(threads);
  return mvf::run_experiment(req, std::cerr);
}
