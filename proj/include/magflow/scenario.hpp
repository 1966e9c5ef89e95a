#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "magflow/constants.hpp"
#include "magflow/flow.hpp"
#include "magflow/solver.hpp"

namespace magflow {

enum class ScenarioKind {
  Constants,
  Orbits,
  Isoperimetric,
  Flow,
  IndexSweep,
  FullReport
};

std::string scenario_name(ScenarioKind k);

struct ScenarioConfig {
  int dim = 2;

  std::string metric_name = "flat";  // flat | conformal
  MatrixXd gram;                     // flat Gram / conformal base
  double conf_amplitude = 0.0;
  VectorXi conf_mode;

  std::string sigma_name = "area";  // zero | constant | area | dq1dq2 | sine
  MatrixXd sigma_coeffs;            // for "constant"
  double sigma_scale = 1.0;
  double delta = 1.0;
  double sine_amplitude = 0.0;
  VectorXi sine_mode;
  int sine_axis = 1;

  std::string potential_name = "zero";  // zero | constant | cosine
  double potential_value = 0.0;
  VectorXi potential_mode;
  bool potential_time_dependent = false;
  double tau = 1.0;

  VectorXi winding;

  SolverParams solver;

  bool has_flow = false;
  VectorXd flow_q0, flow_p0;
  double flow_t1 = 1.0;
  double flow_dt = 1e-3;
  std::optional<double> flow_closure_time;
  double flow_max_energy_drift = 1e-6;

  std::vector<double> sweep_deltas;
  std::vector<int> expected_indices;

  int iso_loops = 1000;
  double iso_amplitude = 0.4;
  int iso_max_mode = 4;

  std::string out_dir = "out";
  bool write_csv = true;
  bool write_poly = true;

  ScenarioKind scenario = ScenarioKind::FullReport;

  struct Expect {
    std::string name;
    double value = 0.0;
    double tol = 0.0;
  };
  std::vector<Expect> expects;

  // factories for the configured objects
  TorusManifold make_manifold() const;
  MagneticSystem make_sigma() const;
  Potential make_potential() const;
};

struct Diagnostic {
  enum class Level { Error, Warning, Notice };
  Level level;
  std::string key;
  std::string message;
};

struct ConfigError : std::runtime_error {
  std::string key;
  int line = -1, column = -1;
  ConfigError(const std::string& msg, std::string k, int l = -1, int c = -1)
      : std::runtime_error(msg), key(std::move(k)), line(l), column(c) {}
};

// Parse + structural validation. Throws ConfigError on malformed input.
ScenarioConfig load_config(const std::string& path,
                           std::vector<Diagnostic>* diags = nullptr);

// Structural and semantic diagnostics without running anything.
std::vector<Diagnostic> validate_config(const std::string& path);

struct Assertion {
  std::string name;
  bool pass = false;
  double value = 0.0;
  std::string detail;
};

struct ScenarioResult {
  int exit_code = 0;  // 0 pass, 1 failed assertions
  std::vector<Assertion> assertions;
  std::string report_text;                // the JSON report
  std::map<std::string, double> values;   // headline numbers by name
  std::vector<std::string> files;         // paths written
};

ScenarioResult run_scenario(const ScenarioConfig& cfg, ScenarioKind kind);

}  // namespace magflow
