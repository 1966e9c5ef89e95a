#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "magflow/scenario.hpp"

using namespace magflow;
namespace fs = std::filesystem;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const std::string path = (fs::temp_directory_path() / name).string();
  std::ofstream f(path);
  f << text;
  return path;
}

std::string config_dir() {
#ifdef MAGFLOW_CONFIG_DIR
  return MAGFLOW_CONFIG_DIR;
#else
  return "configs";
#endif
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::string((std::istreambuf_iterator<char>(f)),
                     std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("config parse errors carry line and column") {
  const std::string path =
      write_temp("magflow_bad.json", "{\n  \"scenario\": \"constants\",\n  oops\n}\n");
  try {
    load_config(path);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.line == 3);
    CHECK(e.column >= 1);
  }
}

TEST_CASE("schema violations point at the offending key") {
  const std::string path = write_temp("magflow_bad2.json", R"({
    "manifold": { "dim": 2 },
    "sigma": { "name": "constant", "coeffs": [[0, 1], [1, 0]] }
  })");
  try {
    load_config(path);
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key == "sigma.coeffs");
  }
}

TEST_CASE("missing winding defaults to the zero class with a notice") {
  const std::string path = write_temp("magflow_nowind.json", R"({
    "manifold": { "dim": 2 },
    "sigma": { "name": "area", "delta": 1.0 }
  })");
  std::vector<Diagnostic> diags;
  const ScenarioConfig cfg = load_config(path, &diags);
  CHECK(cfg.winding.isZero());
  bool noticed = false;
  for (const auto& d : diags)
    if (d.level == Diagnostic::Level::Notice && d.key == "class") noticed = true;
  CHECK(noticed);
}

TEST_CASE("validate flags non-atoroidal classes") {
  const std::string path = write_temp("magflow_nonatoroidal.json", R"({
    "manifold": { "dim": 3 },
    "sigma": { "name": "dq1dq2", "delta": 1.0 },
    "class": [1, 0, 0]
  })");
  const auto diags = validate_config(path);
  bool flagged = false;
  for (const auto& d : diags)
    if (d.level == Diagnostic::Level::Warning &&
        d.message.find("not sigma-atoroidal") != std::string::npos)
      flagged = true;
  CHECK(flagged);
}

TEST_CASE("validate warns when delta*tau exceeds the thresholds") {
  const std::string path = write_temp("magflow_overdelta.json", R"({
    "manifold": { "dim": 2 },
    "sigma": { "name": "area", "delta": 0.5 },
    "system": { "tau": 1.0 },
    "class": [0, 0]
  })");
  const auto diags = validate_config(path);
  int warnings = 0;
  for (const auto& d : diags)
    if (d.level == Diagnostic::Level::Warning &&
        d.message.find("exceeds") != std::string::npos)
      ++warnings;
  CHECK(warnings >= 1);  // delta0 ~ 0.0923 and delta(L) ~ 0.1847 both exceeded
}

TEST_CASE("constants scenario reproduces the golden pipeline") {
  ScenarioConfig cfg = load_config(config_dir() + "/t2_constants.json");
  cfg.out_dir = (fs::temp_directory_path() / "magflow_scn_constants").string();
  const ScenarioResult res = run_scenario(cfg, ScenarioKind::Constants);
  CHECK(res.exit_code == 0);
  CHECK(res.values.at("C0") ==
        doctest::Approx(2.7071067811865475).epsilon(1e-12));
  CHECK(res.values.at("delta0") ==
        doctest::Approx(1.0 / (4.0 * 2.7071067811865475)).epsilon(1e-12));
  CHECK(fs::exists(cfg.out_dir + "/report.json"));
}

TEST_CASE("reports are byte stable across runs") {
  ScenarioConfig cfg = load_config(config_dir() + "/t2_constants.json");
  cfg.out_dir = (fs::temp_directory_path() / "magflow_scn_stable1").string();
  run_scenario(cfg, ScenarioKind::Constants);
  const std::string a = slurp(cfg.out_dir + "/report.json");
  cfg.out_dir = (fs::temp_directory_path() / "magflow_scn_stable2").string();
  run_scenario(cfg, ScenarioKind::Constants);
  const std::string b = slurp(cfg.out_dir + "/report.json");
  CHECK(a == b);
  CHECK(!a.empty());
}

TEST_CASE("index sweep scenario matches the expected column") {
  ScenarioConfig cfg = load_config(config_dir() + "/t2_index_sweep.json");
  cfg.out_dir = (fs::temp_directory_path() / "magflow_scn_sweep").string();
  const ScenarioResult res = run_scenario(cfg, ScenarioKind::IndexSweep);
  CHECK(res.exit_code == 0);
}

TEST_CASE("flow scenario: circle closure and energy drift") {
  ScenarioConfig cfg = load_config(config_dir() + "/t2_flow_circle.json");
  cfg.out_dir = (fs::temp_directory_path() / "magflow_scn_flow").string();
  const ScenarioResult res = run_scenario(cfg, ScenarioKind::Flow);
  CHECK(res.exit_code == 0);
  CHECK(res.values.at("closure_residual") < 1e-6);
  CHECK(fs::exists(cfg.out_dir + "/trajectory.csv"));
  CHECK(fs::exists(cfg.out_dir + "/trajectory.poly"));
}

TEST_CASE("failed expectations drive the exit code") {
  ScenarioConfig cfg = load_config(config_dir() + "/t2_constants.json");
  cfg.out_dir = (fs::temp_directory_path() / "magflow_scn_fail").string();
  cfg.expects.push_back({"C0", 999.0, 1e-9});
  const ScenarioResult res = run_scenario(cfg, ScenarioKind::Constants);
  CHECK(res.exit_code == 1);
  bool found = false;
  for (const auto& a : res.assertions)
    if (a.name == "expect.C0" && !a.pass) found = true;
  CHECK(found);
}

TEST_CASE("orbit scenario emits loop artifacts") {
  ScenarioConfig cfg = load_config(config_dir() + "/t3_orbits.json");
  cfg.out_dir = (fs::temp_directory_path() / "magflow_scn_orbits").string();
  cfg.solver.seeds = 3;
  const ScenarioResult res = run_scenario(cfg, ScenarioKind::Orbits);
  CHECK(res.exit_code == 0);
  CHECK(res.values.at("orbit_count") >= 1.0);
  CHECK(fs::exists(cfg.out_dir + "/orbit_0.csv"));
  CHECK(fs::exists(cfg.out_dir + "/orbit_0.poly"));
  CHECK(fs::exists(cfg.out_dir + "/orbit_0.json"));
}
