#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

namespace mvf {

inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kPass = 0, kToleranceBreach = 1, kConfigError = 2 };

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunRequest {
  std::string command;      // fubini | approx | volterra | example7 | conditions
  std::string config_text;  // JSON, "{}" for all defaults
  std::string config_dir;   // base for relative paths inside the config
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> corrupt;  // negative-control fixture, overrides fixture.corrupt
};

// runs one experiment, writes its CSVs and summary.json, returns the exit code
int run_experiment(const RunRequest& req, std::ostream& log);

}  // namespace mvf
