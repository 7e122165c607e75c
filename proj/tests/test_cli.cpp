#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "mvf/experiments.hpp"
#include "mvf/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kExe = MVLAB_EXE;
const std::string kConfigs = std::string(MVF_SOURCE_DIR) + "/configs";

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("mvf_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int run(const std::string& args) {
  int st = std::system((kExe + " " + args + " 2>/dev/null").c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string write_config(const fs::path& dir, const std::string& name, const std::string& text) {
  auto p = dir / name;
  std::ofstream(p) << text;
  return p.string();
}

json summary(const fs::path& out) { return json::parse(mvf::read_file((out / "summary.json").string())); }

const char* kSmallFubini = R"({
  "seed": 4,
  "time": {"T": 1.0, "N": 16},
  "grid": {"T_K": 1.0, "J": 16},
  "scenarios": {"mode": "monte_carlo", "P": 20},
  "driver": {"kind": "mixture", "drift": 0.2, "jump_rate": 1.0, "jump_sd": 0.3},
  "integrand": {"kind": "elementary_random", "terms": 4},
  "family": {"K_max": 40},
  "tolerances": {"fubini": 1e-12}
})";

}  // namespace

TEST(Cli, FubiniElementaryPasses) {
  auto out = scratch("fub_el");
  EXPECT_EQ(run("fubini --config " + kConfigs + "/fubini_elementary.json --out " + out.string()), 0);
  auto s = summary(out);
  EXPECT_EQ(s["schema_version"], mvf::kSchemaVersion);
  EXPECT_EQ(s["experiment"], "fubini");
  EXPECT_TRUE(s["pass"].get<bool>());
  EXPECT_TRUE(fs::exists(out / "fubini_report.csv"));
}

TEST(Cli, FubiniPowerKernelPasses) {
  auto out = scratch("fub_pow");
  EXPECT_EQ(run("fubini --config " + kConfigs + "/fubini_power.json --out " + out.string()), 0);
}

TEST(Cli, CorruptedFixtureBreachesTolerance) {
  auto out = scratch("fub_cor");
  EXPECT_EQ(run("fubini --config " + kConfigs + "/fubini_corrupt.json --out " + out.string()), 1);
  EXPECT_FALSE(summary(out)["pass"].get<bool>());
  auto cfg = write_config(out, "small.json", kSmallFubini);
  EXPECT_EQ(run("fubini --config " + cfg + " --corrupt 1e-6 --out " + (out / "flag").string()), 1);
}

TEST(Cli, ConfigErrorsExitTwo) {
  auto dir = scratch("errors");
  EXPECT_EQ(run("approx --config " + kConfigs + "/fubini_elementary.json --out " + (dir / "a").string()), 2);
  EXPECT_EQ(run("fubini --config " + (dir / "missing.json").string()), 2);
  auto bad = write_config(dir, "bad.json", "{ \"time\": ");
  EXPECT_EQ(run("fubini --config " + bad + " --out " + (dir / "b").string()), 2);
  auto neg = write_config(dir, "neg.json", R"({"time": {"T": -1, "N": 4}})");
  EXPECT_EQ(run("fubini --config " + neg + " --out " + (dir / "c").string()), 2);
  auto unk = write_config(dir, "unk.json", R"({"time": {"T": 1, "N": 8}, "scenarios": {"P": 5},
    "volterra": {"kernels": [{"name": "sinc_bump"}]}})");
  EXPECT_EQ(run("volterra --config " + unk + " --out " + (dir / "d").string()), 2);
  auto a0 = write_config(dir, "a0.json", R"({"time": {"T": 1, "N": 8}, "example7": {"alphas": [0.0]}})");
  EXPECT_EQ(run("example7 --config " + a0 + " --out " + (dir / "e").string()), 2);
  EXPECT_EQ(run("bogus"), 2);
  EXPECT_EQ(run("fubini --threads 0"), 2);
}

TEST(Cli, ApproxOnTree) {
  auto out = scratch("approx");
  EXPECT_EQ(run("approx --config " + kConfigs + "/approx_tree.json --out " + out.string()), 0);
  auto csv = mvf::read_file((out / "approx_report.csv").string());
  EXPECT_EQ(csv.rfind("integrand,n,net_size,q_error", 0), 0u);
}

TEST(Cli, VolterraSmall) {
  auto dir = scratch("volterra");
  auto cfg = write_config(dir, "v.json", R"({
    "seed": 2,
    "time": {"T": 1.0, "N": 64},
    "scenarios": {"mode": "monte_carlo", "P": 20},
    "volterra": {
      "kernels": [{"name": "power_alpha", "params": {"alpha": 0.75}}, {"name": "affine", "params": {"a": 1, "b": 2}},
                  {"name": "random_fv", "adapted": true}],
      "diagnostic": {"alphas": [0.25, 0.75], "N": 1024, "P": 100}
    }
  })");
  EXPECT_EQ(run("volterra --config " + cfg + " --out " + (dir / "o").string()), 0);
  auto s = summary(dir / "o");
  ASSERT_EQ(s["results"]["kernels"].size(), 3u);
  EXPECT_LE(s["results"]["kernels"][1]["protter_max_diff"].get<double>(), 1e-12);
  auto sl = s["results"]["slopes"];
  EXPECT_NEAR(sl[0]["slope"].get<double>(), 0.25, 0.1);
  EXPECT_NEAR(sl[1]["slope"].get<double>(), 0.0, 0.1);
}

TEST(Cli, ConditionsRuns) {
  auto out = scratch("conditions");
  EXPECT_EQ(run("conditions --config " + kConfigs + "/conditions.json --out " + out.string()), 0);
  EXPECT_TRUE(fs::exists(out / "certificates.csv"));
  auto cj = json::parse(mvf::read_file((out / "conditions.json").string()));
  EXPECT_GT(cj.size(), 20u);
}

TEST(Cli, DeterministicOutputs) {
  auto dir = scratch("det");
  auto cfg = write_config(dir, "f.json", kSmallFubini);
  ASSERT_EQ(run("fubini --config " + cfg + " --out " + (dir / "a").string()), 0);
  ASSERT_EQ(run("fubini --config " + cfg + " --out " + (dir / "b").string()), 0);
  ASSERT_EQ(run("fubini --config " + cfg + " --threads 3 --out " + (dir / "c").string()), 0);
  for (const char* f : {"fubini_report.csv", "summary.json"}) {
    auto a = mvf::read_file((dir / "a" / f).string());
    EXPECT_EQ(a, mvf::read_file((dir / "b" / f).string())) << f;
    EXPECT_EQ(a, mvf::read_file((dir / "c" / f).string())) << f;
  }
  ASSERT_EQ(run("fubini --config " + cfg + " --seed 99 --out " + (dir / "d").string()), 0);
  EXPECT_NE(mvf::read_file((dir / "a/fubini_report.csv").string()),
            mvf::read_file((dir / "d/fubini_report.csv").string()));
  EXPECT_EQ(summary(dir / "d")["seed"], 99);
}

TEST(Cli, InProcessRunner) {
  auto out = scratch("inproc");
  mvf::RunRequest req;
  req.command = "fubini";
  req.config_text = kSmallFubini;
  req.out_dir = out.string();
  std::ostringstream log;
  EXPECT_EQ(mvf::run_experiment(req, log), mvf::kPass);
  EXPECT_NE(log.str().find("PASS"), std::string::npos);
  req.command = "nonsense";
  EXPECT_EQ(mvf::run_experiment(req, log), mvf::kConfigError);
}
