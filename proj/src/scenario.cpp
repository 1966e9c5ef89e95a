#include "magflow/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "magflow/report.hpp"

namespace magflow {

namespace fs = std::filesystem;
using nlohmann::json;

std::string scenario_name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Constants: return "constants";
    case ScenarioKind::Orbits: return "orbits";
    case ScenarioKind::Isoperimetric: return "isoperimetric";
    case ScenarioKind::Flow: return "flow";
    case ScenarioKind::IndexSweep: return "index_sweep";
    case ScenarioKind::FullReport: return "full_report";
  }
  return "unknown";
}

// ---- config loading -----------------------------------------------------

namespace {

std::pair<int, int> line_col_of(const std::string& text, std::size_t byte) {
  int line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

MatrixXd parse_matrix(const json& j, const std::string& key, int dim) {
  if (!j.is_array())
    throw ConfigError("expected a matrix (array of rows)", key);
  MatrixXd m(dim, dim);
  if (static_cast<int>(j.size()) != dim)
    throw ConfigError("matrix has wrong number of rows", key);
  for (int r = 0; r < dim; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != dim)
      throw ConfigError("matrix row has wrong length", key);
    for (int c = 0; c < dim; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

VectorXi parse_int_vector(const json& j, const std::string& key, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ConfigError("expected an integer vector of length " + std::to_string(dim), key);
  VectorXi v(dim);
  for (int i = 0; i < dim; ++i) v[i] = j[i].get<int>();
  return v;
}

VectorXd parse_vector(const json& j, const std::string& key, int dim) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw ConfigError("expected a vector of length " + std::to_string(dim), key);
  VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = j[i].get<double>();
  return v;
}

ScenarioKind parse_scenario(const std::string& s, const std::string& key) {
  if (s == "constants") return ScenarioKind::Constants;
  if (s == "orbits") return ScenarioKind::Orbits;
  if (s == "isoperimetric") return ScenarioKind::Isoperimetric;
  if (s == "flow") return ScenarioKind::Flow;
  if (s == "index_sweep" || s == "index-sweep") return ScenarioKind::IndexSweep;
  if (s == "full_report" || s == "report") return ScenarioKind::FullReport;
  throw ConfigError("unknown scenario '" + s + "'", key);
}

}  // namespace

TorusManifold ScenarioConfig::make_manifold() const {
  TorusManifold M = (metric_name == "conformal")
                        ? TorusManifold::conformal(gram, conf_amplitude, conf_mode)
                        : TorusManifold::flat(gram);
  M.name = metric_name;
  return M;
}

MagneticSystem ScenarioConfig::make_sigma() const {
  MagneticSystem S = [&] {
    if (sigma_name == "zero") return MagneticSystem::zero(dim);
    if (sigma_name == "sine")
      return MagneticSystem::sine_form(dim, sine_amplitude, sine_mode,
                                       sine_axis, delta);
    if (sigma_name == "constant")
      return MagneticSystem::constant_form(sigma_scale * sigma_coeffs, delta);
    // "area" (n=2) and "dq1dq2": the e1^e2 block
    MatrixXd c = MatrixXd::Zero(dim, dim);
    c(0, 1) = sigma_scale;
    c(1, 0) = -sigma_scale;
    return MagneticSystem::constant_form(c, delta);
  }();
  S.name = sigma_name;
  return S;
}

Potential ScenarioConfig::make_potential() const {
  if (potential_name == "constant") return Potential::constant(potential_value);
  if (potential_name == "cosine")
    return Potential::cosine(potential_value, potential_mode,
                             potential_time_dependent, tau);
  return Potential::zero();
}

ScenarioConfig load_config(const std::string& path,
                           std::vector<Diagnostic>* diags) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path, "");
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    auto [line, col] = line_col_of(text, e.byte);
    std::ostringstream os;
    os << "JSON parse error at line " << line << ", column " << col << ": "
       << e.what();
    throw ConfigError(os.str(), "", line, col);
  }

  auto notice = [&](const std::string& key, const std::string& msg) {
    if (diags) diags->push_back({Diagnostic::Level::Notice, key, msg});
  };
  auto warn = [&](const std::string& key, const std::string& msg) {
    if (diags) diags->push_back({Diagnostic::Level::Warning, key, msg});
  };

  static const char* known_keys[] = {"scenario", "manifold", "sigma",
                                     "system",   "class",    "solver",
                                     "flow",     "index_sweep", "isoperimetric",
                                     "outputs",  "expect"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : known_keys)
      if (it.key() == k) known = true;
    if (!known) warn(it.key(), "unknown key ignored");
  }

  ScenarioConfig cfg;
  if (j.contains("scenario")) {
    if (!j["scenario"].is_string())
      throw ConfigError("scenario must be a string", "scenario");
    cfg.scenario = parse_scenario(j["scenario"].get<std::string>(), "scenario");
  }

  if (!j.contains("manifold") || !j["manifold"].is_object())
    throw ConfigError("missing manifold section", "manifold");
  const json& man = j["manifold"];
  if (!man.contains("dim") || !man["dim"].is_number_integer())
    throw ConfigError("manifold.dim must be an integer", "manifold.dim");
  cfg.dim = man["dim"].get<int>();
  if (cfg.dim < 2) throw ConfigError("manifold.dim must be >= 2", "manifold.dim");
  cfg.gram = MatrixXd::Identity(cfg.dim, cfg.dim);
  if (man.contains("metric")) {
    const json& met = man["metric"];
    cfg.metric_name = met.value("name", std::string("flat"));
    if (cfg.metric_name != "flat" && cfg.metric_name != "conformal")
      throw ConfigError("metric name must be flat or conformal", "manifold.metric.name");
    if (met.contains("gram"))
      cfg.gram = parse_matrix(met["gram"], "manifold.metric.gram", cfg.dim);
    if (cfg.metric_name == "conformal") {
      cfg.conf_amplitude = met.value("amplitude", 0.0);
      cfg.conf_mode = met.contains("mode")
                          ? parse_int_vector(met["mode"], "manifold.metric.mode", cfg.dim)
                          : VectorXi::Zero(cfg.dim);
    }
    if ((cfg.gram - cfg.gram.transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw ConfigError("Gram matrix must be symmetric", "manifold.metric.gram");
  }

  if (j.contains("sigma")) {
    const json& sig = j["sigma"];
    cfg.sigma_name = sig.value("name", std::string("area"));
    cfg.sigma_scale = sig.value("scale", 1.0);
    cfg.delta = sig.value("delta", 1.0);
    if (cfg.sigma_name == "constant") {
      if (!sig.contains("coeffs"))
        throw ConfigError("constant sigma needs a coeffs matrix", "sigma.coeffs");
      cfg.sigma_coeffs = parse_matrix(sig["coeffs"], "sigma.coeffs", cfg.dim);
      if ((cfg.sigma_coeffs + cfg.sigma_coeffs.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw ConfigError("sigma coefficients must be antisymmetric", "sigma.coeffs");
    } else if (cfg.sigma_name == "sine") {
      cfg.sine_amplitude = sig.value("amplitude", 1.0);
      cfg.sine_axis = sig.value("axis", 1);
      if (cfg.sine_axis < 0 || cfg.sine_axis >= cfg.dim)
        throw ConfigError("sine axis out of range", "sigma.axis");
      cfg.sine_mode = sig.contains("mode")
                          ? parse_int_vector(sig["mode"], "sigma.mode", cfg.dim)
                          : VectorXi::Zero(cfg.dim);
    } else if (cfg.sigma_name != "zero" && cfg.sigma_name != "area" &&
               cfg.sigma_name != "dq1dq2") {
      throw ConfigError("unknown sigma name '" + cfg.sigma_name + "'", "sigma.name");
    }
  }

  if (j.contains("system")) {
    const json& sys = j["system"];
    cfg.tau = sys.value("tau", 1.0);
    if (cfg.tau <= 0.0) throw ConfigError("tau must be > 0", "system.tau");
    if (sys.contains("potential")) {
      const json& pot = sys["potential"];
      cfg.potential_name = pot.value("name", std::string("zero"));
      if (cfg.potential_name != "zero" && cfg.potential_name != "constant" &&
          cfg.potential_name != "cosine")
        throw ConfigError("unknown potential '" + cfg.potential_name + "'",
                          "system.potential.name");
      cfg.potential_value = pot.value("value", pot.value("amplitude", 0.0));
      cfg.potential_time_dependent = pot.value("time_dependent", false);
      if (cfg.potential_name == "cosine")
        cfg.potential_mode =
            pot.contains("mode")
                ? parse_int_vector(pot["mode"], "system.potential.mode", cfg.dim)
                : VectorXi::Unit(cfg.dim, 0).eval();
    }
  }

  if (j.contains("class") && !j["class"].empty()) {
    cfg.winding = parse_int_vector(j["class"], "class", cfg.dim);
  } else {
    cfg.winding = VectorXi::Zero(cfg.dim);
    notice("class", "winding not given; defaulting to the nullhomotopic class 0");
  }

  if (j.contains("solver")) {
    const json& sol = j["solver"];
    cfg.solver.max_iters = sol.value("max_iters", cfg.solver.max_iters);
    cfg.solver.grad_tol = sol.value("grad_tol", cfg.solver.grad_tol);
    cfg.solver.newton_switch_tol =
        sol.value("newton_switch_tol", cfg.solver.newton_switch_tol);
    cfg.solver.tol_null = sol.value("tol_null", cfg.solver.tol_null);
    cfg.solver.seeds = sol.value("seeds", cfg.solver.seeds);
    cfg.solver.rng_seed = sol.value("rng_seed", cfg.solver.rng_seed);
    cfg.solver.loop_samples = sol.value("loop_samples", cfg.solver.loop_samples);
    cfg.solver.step_size = sol.value("step_size", cfg.solver.step_size);
    cfg.solver.seed_amplitude = sol.value("seed_amplitude", cfg.solver.seed_amplitude);
    cfg.solver.seed_max_mode = sol.value("seed_max_mode", cfg.solver.seed_max_mode);
    if (sol.value("step_rule", std::string("backtracking")) == "fixed")
      cfg.solver.step_rule = SolverParams::StepRule::Fixed;
    if (cfg.solver.max_iters < 1)
      throw ConfigError("solver.max_iters must be >= 1", "solver.max_iters");
    if (cfg.solver.grad_tol <= 0 || cfg.solver.tol_null <= 0)
      throw ConfigError("solver tolerances must be > 0", "solver");
    if (cfg.solver.loop_samples < 8)
      throw ConfigError("solver.loop_samples must be >= 8", "solver.loop_samples");
  }
  cfg.solver.tau = cfg.tau;

  if (j.contains("flow")) {
    const json& fl = j["flow"];
    cfg.has_flow = true;
    cfg.flow_q0 = fl.contains("q0") ? parse_vector(fl["q0"], "flow.q0", cfg.dim)
                                    : VectorXd::Zero(cfg.dim);
    cfg.flow_p0 = fl.contains("p0") ? parse_vector(fl["p0"], "flow.p0", cfg.dim)
                                    : VectorXd::Unit(cfg.dim, 0).eval();
    cfg.flow_t1 = fl.value("t1", 1.0);
    cfg.flow_dt = fl.value("dt", 1e-3);
    if (cfg.flow_dt <= 0) throw ConfigError("flow.dt must be > 0", "flow.dt");
    if (fl.contains("closure_time"))
      cfg.flow_closure_time = fl["closure_time"].get<double>();
    cfg.flow_max_energy_drift = fl.value("max_energy_drift", 1e-6);
  }

  if (j.contains("index_sweep")) {
    const json& sw = j["index_sweep"];
    if (sw.contains("deltas"))
      for (const auto& d : sw["deltas"]) cfg.sweep_deltas.push_back(d.get<double>());
    if (sw.contains("expected_indices"))
      for (const auto& d : sw["expected_indices"])
        cfg.expected_indices.push_back(d.get<int>());
    if (!cfg.expected_indices.empty() &&
        cfg.expected_indices.size() != cfg.sweep_deltas.size())
      throw ConfigError("expected_indices length must match deltas",
                        "index_sweep.expected_indices");
  }

  if (j.contains("isoperimetric")) {
    const json& iso = j["isoperimetric"];
    cfg.iso_loops = iso.value("loops", 1000);
    cfg.iso_amplitude = iso.value("amplitude", 0.4);
    cfg.iso_max_mode = iso.value("max_mode", 4);
  }

  if (j.contains("outputs")) {
    const json& out = j["outputs"];
    cfg.out_dir = out.value("dir", std::string("out"));
    cfg.write_csv = out.value("csv", true);
    cfg.write_poly = out.value("poly", true);
  }

  if (j.contains("expect")) {
    for (const auto& e : j["expect"]) {
      ScenarioConfig::Expect ex;
      ex.name = e.value("name", std::string(""));
      ex.value = e.value("value", 0.0);
      ex.tol = e.value("tol", 1e-9);
      if (ex.name.empty())
        throw ConfigError("expect entries need a name", "expect");
      cfg.expects.push_back(ex);
    }
  }
  return cfg;
}

std::vector<Diagnostic> validate_config(const std::string& path) {
  std::vector<Diagnostic> diags;
  ScenarioConfig cfg;
  try {
    cfg = load_config(path, &diags);
  } catch (const ConfigError& e) {
    diags.push_back({Diagnostic::Level::Error, e.key, e.what()});
    return diags;
  }

  // semantic checks
  try {
    const TorusManifold M = cfg.make_manifold();
    const MagneticSystem S = cfg.make_sigma();
    if (!S.is_zero() && !atoroidal_test(M, S, cfg.winding)) {
      diags.push_back({Diagnostic::Level::Warning, "class",
                       "class not sigma-atoroidal; action_sigma unavailable"});
      return diags;
    }
    if (!S.is_zero()) {
      const IsoperimetricConstants iso =
          isoperimetric_constants(M, S, cfg.winding);
      const GrowthConstants g = growth_constants_kinetic(
          M, S, cfg.make_potential(), cfg.tau, 4, 10.0, 5);
      const double d0 = delta0(g, iso, S.growth_class());
      const double dl = delta_lagrangian(g.ell0, iso.C0);
      const double dtau = std::abs(cfg.delta) * cfg.tau;
      if (dtau >= d0) {
        std::ostringstream os;
        os << "delta*tau = " << dtau << " exceeds the compactness threshold "
           << "delta0 = " << d0
           << "; the bound is sufficient, not necessary, so the run proceeds";
        diags.push_back({Diagnostic::Level::Warning, "sigma.delta", os.str()});
      }
      if (dtau >= dl) {
        std::ostringstream os;
        os << "delta*tau = " << dtau << " exceeds the coercivity threshold "
           << "delta(L) = " << dl << "; descent may not be coercive";
        diags.push_back({Diagnostic::Level::Warning, "sigma.delta", os.str()});
      }
    }
  } catch (const std::exception& e) {
    diags.push_back({Diagnostic::Level::Error, "", e.what()});
  }
  return diags;
}

// ---- scenario running ---------------------------------------------------

namespace {

struct Runner {
  const ScenarioConfig& cfg;
  TorusManifold M;
  MagneticSystem S;
  Potential V;
  LagrangianSystem L;
  HamiltonianSystem H;
  Json report = Json::object();
  std::vector<Assertion> assertions;
  std::map<std::string, double> values;
  std::vector<std::string> files;

  explicit Runner(const ScenarioConfig& c)
      : cfg(c),
        M(c.make_manifold()),
        S(c.make_sigma()),
        V(c.make_potential()),
        L(LagrangianSystem::kinetic(M, V)),
        H(HamiltonianSystem::kinetic(M, V)) {}

  void check(const std::string& name, bool pass, double value,
             const std::string& detail = "") {
    assertions.push_back({name, pass, value, detail});
  }

  void remember(const std::string& name, double v) { values[name] = v; }

  Json config_echo() const {
    Json c = Json::object();
    c.set("dim", Json::integer(cfg.dim));
    c.set("metric", Json::string(cfg.metric_name));
    c.set("sigma", Json::string(cfg.sigma_name));
    c.set("delta", Json::number(cfg.delta));
    c.set("tau", Json::number(cfg.tau));
    Json w = Json::array();
    for (int i = 0; i < cfg.winding.size(); ++i)
      w.push(Json::integer(cfg.winding[i]));
    c.set("class", std::move(w));
    c.set("rng_seed", Json::integer(static_cast<long long>(cfg.solver.rng_seed)));
    c.set("loop_samples", Json::integer(cfg.solver.loop_samples));
    return c;
  }

  void run_constants() {
    Json sec = Json::object();
    const double ynorm = lorentz_norm(M, S);
    const RescaleResult resc = rescale_into_r_sigma(M, S);
    const double ynorm_rescaled = lorentz_norm(resc.manifold, S);
    const IsoperimetricConstants iso = isoperimetric_constants(M, S, cfg.winding);
    const GrowthConstants g = growth_constants_kinetic(M, S, V, cfg.tau);
    const double d0 = delta0(g, iso, S.growth_class());
    const double dl = delta_lagrangian(g.ell0, iso.C0);
    const GrowthCheckReport gc = verify_growth_conditions(M, S, V, cfg.tau, g);

    sec.set("lorentz_norm", Json::number(ynorm));
    Json rj = Json::object();
    rj.set("upsilon", Json::number(resc.upsilon));
    rj.set("lorentz_norm_after", Json::number(ynorm_rescaled));
    sec.set("rescale", std::move(rj));
    sec.set("diameter", Json::number(iso.d));
    Json tj = Json::object();
    tj.set("used", Json::number(iso.Theta));
    tj.set("sampled", Json::number(iso.Theta_sampled));
    const auto analytic = S.analytic_growth_constant(M);
    if (analytic) tj.set("analytic_envelope", Json::number(*analytic));
    sec.set("growth_constant", std::move(tj));
    Json ij = Json::object();
    ij.set("C0", Json::number(iso.C0));
    ij.set("C1", Json::number(iso.C1));
    ij.set("d", Json::number(iso.d));
    ij.set("Theta", Json::number(iso.Theta));
    ij.set("ell_alpha", Json::number(iso.ell_alpha));
    sec.set("isoperimetric", std::move(ij));
    Json gj = Json::object();
    gj.set("eta1", Json::number(g.eta1));
    gj.set("k1", Json::number(g.k1));
    gj.set("eta2", Json::number(g.eta2));
    gj.set("k2", Json::number(g.k2));
    gj.set("h_sigma_g", Json::number(g.h_sigma_g));
    gj.set("ell1", Json::number(g.ell1));
    gj.set("ell2", Json::number(g.ell2));
    gj.set("ell0", Json::number(g.ell0));
    gj.set("D", Json::number(g.D));
    sec.set("growth", std::move(gj));
    sec.set("delta0", Json::number(d0));
    sec.set("delta0_note",
            Json::string("threshold is sufficient, not sharp; the flat-torus "
                         "examples stay well-behaved for delta*tau outside "
                         "2*pi*Z"));
    sec.set("delta_lagrangian", Json::number(dl));
    sec.set("growth_conditions_verified", Json::boolean(gc.all_ok()));
    report.set("constants", std::move(sec));

    remember("lorentz_norm", ynorm);
    remember("C0", iso.C0);
    remember("C1", iso.C1);
    remember("Theta", iso.Theta);
    remember("diameter", iso.d);
    remember("delta0", d0);
    remember("delta_lagrangian", dl);
    remember("eta1", g.eta1);
    remember("eta2", g.eta2);
    remember("ell0", g.ell0);
    remember("D", g.D);

    check("growth_conditions_verified", gc.all_ok(), gc.h1_margin);
    check("rescaled_lorentz_norm_le_1", ynorm_rescaled <= 1.0 + 1e-12,
          ynorm_rescaled);
  }

  void run_isoperimetric() {
    Json sec = Json::object();
    const IsoperimetricConstants iso = isoperimetric_constants(M, S, cfg.winding);
    std::mt19937_64 rng(cfg.solver.rng_seed);
    std::vector<DiscreteLoop> loops;
    loops.reserve(cfg.iso_loops);
    for (int i = 0; i < cfg.iso_loops; ++i)
      loops.push_back(DiscreteLoop::random_fourier(
          rng, cfg.dim, cfg.winding, cfg.solver.loop_samples, cfg.tau,
          cfg.iso_amplitude, cfg.iso_max_mode));
    const IsoperimetricCheck chk = verify_isoperimetric(M, S, iso, loops);
    sec.set("loops", Json::integer(cfg.iso_loops));
    sec.set("C0", Json::number(iso.C0));
    sec.set("C1", Json::number(iso.C1));
    sec.set("violations", Json::integer(chk.violations));
    sec.set("max_ratio", Json::number(chk.max_ratio));
    report.set("isoperimetric", std::move(sec));
    remember("isoperimetric_violations", double(chk.violations));
    check("isoperimetric_no_violations", chk.violations == 0,
          double(chk.violations));
  }

  void run_orbits() {
    Json sec = Json::object();
    SolverParams params = cfg.solver;
    // coercivity threshold for the warning contract
    if (!S.is_zero()) {
      const IsoperimetricConstants iso = isoperimetric_constants(M, S, cfg.winding);
      const GrowthConstants g = growth_constants_kinetic(M, S, V, cfg.tau);
      params.delta_tau_threshold = delta_lagrangian(g.ell0, iso.C0);
    }
    std::vector<OrbitRecord> records = multi_start_survey(M, S, L, cfg.winding, params);
    for (auto& rec : records)
      rec = crosscheck_orbit(M, S, L, H, std::move(rec), cfg.flow_dt > 0 ? cfg.flow_dt : 1e-3);

    Json arr = Json::array();
    double max_res = 0.0, max_closure = 0.0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      const OrbitRecord& r = records[i];
      Json oj = Json::object();
      oj.set("seed", Json::integer(r.seed));
      oj.set("action", Json::number(r.action));
      oj.set("el_residual", Json::number(r.el_residual));
      oj.set("morse_index", Json::integer(r.morse_index));
      oj.set("nullity", Json::integer(r.nullity));
      oj.set("nondegenerate", Json::boolean(r.nondegenerate));
      if (r.flow_closure_residual)
        oj.set("flow_closure_residual", Json::number(*r.flow_closure_residual));
      oj.set("loop_extent", Json::number(r.loop.extent()));
      arr.push(std::move(oj));
      max_res = std::max(max_res, r.el_residual);
      if (r.flow_closure_residual)
        max_closure = std::max(max_closure, *r.flow_closure_residual);
      if (cfg.write_csv) {
        const std::string stem = cfg.out_dir + "/orbit_" + std::to_string(i);
        write_loop_csv(stem + ".csv", r.loop);
        write_loop_sidecar(stem + ".json", r.loop, M.name, S.name);
        files.push_back(stem + ".csv");
        files.push_back(stem + ".json");
      }
      if (cfg.write_poly) {
        const std::string p = cfg.out_dir + "/orbit_" + std::to_string(i) + ".poly";
        write_loop_poly(p, r.loop);
        files.push_back(p);
      }
    }
    sec.set("count", Json::integer(static_cast<long long>(records.size())));
    sec.set("records", std::move(arr));
    report.set("orbits", std::move(sec));
    remember("orbit_count", double(records.size()));
    remember("orbit_max_el_residual", max_res);
    remember("orbit_max_closure_residual", max_closure);
    check("orbit_found", !records.empty(), double(records.size()));
    check("orbit_el_residuals", records.empty() || max_res < 1e-8, max_res);
    check("orbit_closure_residuals", records.empty() || max_closure < 1e-6,
          max_closure);
  }

  void run_flow() {
    Json sec = Json::object();
    const VectorXd z0 = phase_point(cfg.flow_q0, cfg.flow_p0);
    const Trajectory traj = integrate(M, S, H, z0, 0.0, cfg.flow_t1, cfg.flow_dt);
    sec.set("t1", Json::number(cfg.flow_t1));
    sec.set("dt", Json::number(cfg.flow_dt));
    sec.set("energy_drift", Json::number(traj.energy_drift));
    remember("energy_drift", traj.energy_drift);
    check("flow_energy_drift", traj.energy_drift < cfg.flow_max_energy_drift,
          traj.energy_drift);
    if (cfg.flow_closure_time) {
      const Trajectory cl = integrate(M, S, H, z0, 0.0, *cfg.flow_closure_time,
                                      cfg.flow_dt);
      const VectorXd zT = cl.states.col(cl.states.cols() - 1);
      const double res = (zT - z0).norm();
      sec.set("closure_time", Json::number(*cfg.flow_closure_time));
      sec.set("closure_residual", Json::number(res));
      remember("closure_residual", res);
      check("flow_closure", res < 1e-6, res);
    }
    if (cfg.write_csv) {
      const std::string p = cfg.out_dir + "/trajectory.csv";
      std::ofstream f(p);
      f << "t";
      for (int i = 0; i < cfg.dim; ++i) f << ",q" << (i + 1);
      for (int i = 0; i < cfg.dim; ++i) f << ",p" << (i + 1);
      f << "\n";
      for (std::size_t k = 0; k < traj.times.size(); ++k) {
        f << format_number17(traj.times[k]);
        for (int i = 0; i < 2 * cfg.dim; ++i)
          f << "," << format_number17(traj.states(i, k));
        f << "\n";
      }
      files.push_back(p);
    }
    if (cfg.write_poly) {
      const std::string p = cfg.out_dir + "/trajectory.poly";
      std::ofstream f(p);
      for (std::size_t k = 0; k < traj.times.size(); ++k) {
        f << format_number17(traj.times[k]);
        for (int i = 0; i < cfg.dim; ++i)
          f << " " << format_number17(traj.states(i, k));
        f << "\n";
      }
      files.push_back(p);
    }
    report.set("flow", std::move(sec));
  }

  void run_index_sweep() {
    Json sec = Json::object();
    Json rows = Json::array();
    const VectorXd q0 = VectorXd::Zero(cfg.dim);
    bool expected_ok = true;
    for (std::size_t i = 0; i < cfg.sweep_deltas.size(); ++i) {
      MagneticSystem Sd = S;
      Sd.set_delta(cfg.sweep_deltas[i]);
      const DiscreteLoop loop =
          DiscreteLoop::constant(q0, cfg.solver.loop_samples, cfg.tau);
      const auto [index, nullity] = morse_index(M, Sd, L, loop, cfg.solver.tol_null);
      Json row = Json::object();
      row.set("delta", Json::number(cfg.sweep_deltas[i]));
      row.set("index", Json::integer(index));
      row.set("nullity", Json::integer(nullity));
      if (!cfg.expected_indices.empty()) {
        row.set("expected", Json::integer(cfg.expected_indices[i]));
        if (index != cfg.expected_indices[i]) expected_ok = false;
      }
      rows.push(std::move(row));
    }
    sec.set("rows", std::move(rows));
    report.set("index_sweep", std::move(sec));
    if (!cfg.expected_indices.empty())
      check("index_sweep_expected", expected_ok, expected_ok ? 1.0 : 0.0);
  }

  void run_expects() {
    for (const auto& e : cfg.expects) {
      const auto it = values.find(e.name);
      if (it == values.end()) {
        check("expect." + e.name, false, 0.0, "value not produced by scenario");
        continue;
      }
      const double err = std::abs(it->second - e.value);
      check("expect." + e.name, err <= e.tol, it->second,
            "target " + format_number17(e.value) + " tol " + format_number17(e.tol));
    }
  }
};

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& cfg, ScenarioKind kind) {
  fs::create_directories(cfg.out_dir);
  Runner r(cfg);
  r.report.set("scenario", Json::string(scenario_name(kind)));
  r.report.set("config", r.config_echo());

  switch (kind) {
    case ScenarioKind::Constants:
      r.run_constants();
      break;
    case ScenarioKind::Orbits:
      r.run_orbits();
      break;
    case ScenarioKind::Isoperimetric:
      r.run_isoperimetric();
      break;
    case ScenarioKind::Flow:
      r.run_flow();
      break;
    case ScenarioKind::IndexSweep:
      r.run_index_sweep();
      break;
    case ScenarioKind::FullReport:
      r.run_constants();
      r.run_isoperimetric();
      if (!cfg.sweep_deltas.empty()) r.run_index_sweep();
      r.run_orbits();
      if (cfg.has_flow) r.run_flow();
      break;
  }
  r.run_expects();

  Json aj = Json::array();
  bool all_pass = true;
  for (const auto& a : r.assertions) {
    Json one = Json::object();
    one.set("name", Json::string(a.name));
    one.set("pass", Json::boolean(a.pass));
    one.set("value", Json::number(a.value));
    if (!a.detail.empty()) one.set("detail", Json::string(a.detail));
    aj.push(std::move(one));
    all_pass = all_pass && a.pass;
  }
  r.report.set("assertions", std::move(aj));

  ScenarioResult out;
  out.assertions = r.assertions;
  out.values = r.values;
  out.report_text = r.report.dump();
  out.exit_code = all_pass ? 0 : 1;
  const std::string report_path = cfg.out_dir + "/report.json";
  std::ofstream f(report_path, std::ios::binary);
  f << out.report_text;
  out.files = r.files;
  out.files.push_back(report_path);
  return out;
}

}  // namespace magflow
