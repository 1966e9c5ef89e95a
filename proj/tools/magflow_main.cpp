#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "magflow/parallel.hpp"
#include "magflow/scenario.hpp"

using namespace magflow;

namespace {

int run_kind(const std::string& config_path, ScenarioKind kind,
             const std::string& out_dir, long seed, int resolution) {
  std::vector<Diagnostic> diags;
  ScenarioConfig cfg;
  try {
    cfg = load_config(config_path, &diags);
  } catch (const ConfigError& e) {
    std::cerr << "config error";
    if (!e.key.empty()) std::cerr << " at key '" << e.key << "'";
    std::cerr << ": " << e.what() << "\n";
    return 2;
  }
  for (const auto& d : diags) {
    const char* tag = d.level == Diagnostic::Level::Warning ? "warning" : "notice";
    std::cerr << tag << (d.key.empty() ? "" : " [" + d.key + "]") << ": "
              << d.message << "\n";
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  if (seed >= 0) cfg.solver.rng_seed = static_cast<unsigned long long>(seed);
  if (resolution > 0) cfg.solver.loop_samples = resolution;

  try {
    const ScenarioResult res = run_scenario(cfg, kind);
    for (const auto& a : res.assertions)
      std::cout << (a.pass ? "[PASS] " : "[FAIL] ") << a.name
                << " (value " << a.value << ")\n";
    std::cout << "report: " << cfg.out_dir << "/report.json\n";
    if (res.exit_code != 0) {
      std::cerr << "failed assertions:\n";
      for (const auto& a : res.assertions)
        if (!a.pass) std::cerr << "  " << a.name << "\n";
    }
    return res.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"magflow: periodic orbits and explicit constants of magnetic "
               "flows on flat and conformally flat tori"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  long seed = -1;
  int resolution = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "scenario config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory (overrides config)");
    sub->add_option("--seed", seed, "RNG seed override");
    sub->add_option("--resolution", resolution, "loop sample count override");
  };

  struct SubDef {
    const char* name;
    const char* blurb;
    ScenarioKind kind;
  };
  const SubDef defs[] = {
      {"constants", "explicit constants report", ScenarioKind::Constants},
      {"orbits", "multi-start orbit search in the configured class",
       ScenarioKind::Orbits},
      {"isoperimetric", "verify the quadratic isoperimetric inequality",
       ScenarioKind::Isoperimetric},
      {"flow", "integrate the magnetic Hamiltonian flow", ScenarioKind::Flow},
      {"index-sweep", "Morse index of the constant loop across deltas",
       ScenarioKind::IndexSweep},
      {"report", "full report (all applicable sections)",
       ScenarioKind::FullReport},
  };
  for (const auto& d : defs) add_common(app.add_subcommand(d.name, d.blurb));
  CLI::App* validate = app.add_subcommand("validate", "check a config file");
  validate->add_option("--config", config_path, "scenario config (JSON)")->required();

  CLI11_PARSE(app, argc, argv);
  apply_thread_budget();

  if (validate->parsed()) {
    const std::vector<Diagnostic> diags = validate_config(config_path);
    bool errors = false;
    for (const auto& d : diags) {
      const char* tag = d.level == Diagnostic::Level::Error     ? "error"
                        : d.level == Diagnostic::Level::Warning ? "warning"
                                                                : "notice";
      std::cout << tag << (d.key.empty() ? "" : " [" + d.key + "]") << ": "
                << d.message << "\n";
      errors = errors || d.level == Diagnostic::Level::Error;
    }
    if (diags.empty()) std::cout << "config ok\n";
    return errors ? 2 : 0;
  }

  for (const auto& d : defs)
    if (app.get_subcommand(d.name)->parsed())
      return run_kind(config_path, d.kind, out_dir, seed, resolution);
  return 2;
}
