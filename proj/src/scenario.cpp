#include "cs/scenario.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <unsupported/Eigen/MatrixFunctions>

#include "cs/hardinput.hpp"

namespace cs {

using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// Dynamics
// ---------------------------------------------------------------------------

double cwh_mean_motion(double orbital_radius_km) {
  constexpr double mu_earth = 398600.4418;  // km^3 / s^2
  if (orbital_radius_km <= 0.0)
    throw std::invalid_argument("cwh: orbital radius must be positive");
  return std::sqrt(mu_earth / std::pow(orbital_radius_km, 3));
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> cwh_matrices(double orbital_radius_km,
                                                         double mass_kg) {
  if (mass_kg <= 0.0) throw std::invalid_argument("cwh: mass must be positive");
  const double w = cwh_mean_motion(orbital_radius_km);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(6, 6);
  A.topRightCorner(3, 3).setIdentity();
  A(3, 0) = 3.0 * w * w;
  A(3, 4) = 2.0 * w;
  A(4, 3) = -2.0 * w;
  A(5, 2) = -w * w;
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(6, 3);
  B.bottomRows(3) = Eigen::MatrixXd::Identity(3, 3) / mass_kg;
  return {A, B};
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> discretize_zoh(const Eigen::MatrixXd& A,
                                                           const Eigen::MatrixXd& B,
                                                           double dt) {
  const int n = static_cast<int>(A.rows());
  const int m = static_cast<int>(B.cols());
  if (A.cols() != n || B.rows() != n)
    throw std::invalid_argument("discretize_zoh: dimension mismatch");
  if (dt <= 0.0) throw std::invalid_argument("discretize_zoh: dt must be positive");
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(n + m, n + m);
  aug.topLeftCorner(n, n) = A * dt;
  aug.topRightCorner(n, m) = B * dt;
  const Eigen::MatrixXd E = aug.exp();
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument("config: " + what); }

const ordered_json& need(const ordered_json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) fail(std::string("missing field '") + key + "'");
  return *it;
}

Eigen::VectorXd vec_of(const ordered_json& j, const char* what) {
  if (!j.is_array()) fail(std::string(what) + " must be an array of numbers");
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) fail(std::string(what) + " must be numeric");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd mat_of(const ordered_json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j[0].is_array())
    fail(std::string(what) + " must be an array of rows");
  const size_t rows = j.size(), cols = j[0].size();
  Eigen::MatrixXd M(rows, cols);
  for (size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      fail(std::string(what) + " rows must have equal length");
    for (size_t c = 0; c < cols; ++c) M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return M;
}

// Accepts either "<key>_diag" (vector) or "<key>" (full matrix).
Eigen::MatrixXd diag_or_full(const ordered_json& j, const std::string& key) {
  const std::string dk = key + "_diag";
  if (j.contains(dk)) return vec_of(j.at(dk), dk.c_str()).asDiagonal();
  if (j.contains(key)) return mat_of(j.at(key), key.c_str());
  fail("expected '" + key + "' or '" + dk + "'");
}

ordered_json vec_json(const Eigen::VectorXd& v) {
  ordered_json a = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

ordered_json mat_json(const Eigen::MatrixXd& M) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

void fmt_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Config parsing
// ---------------------------------------------------------------------------

ScenarioConfig scenario_from_json(const ordered_json& j) {
  ScenarioConfig cfg;
  cfg.raw = j;
  cfg.name = need(j, "name").get<std::string>();
  if (cfg.name.empty()) fail("name must be non-empty");

  // Dynamics.
  const ordered_json& dj = need(j, "dynamics");
  const std::string type = need(dj, "type").get<std::string>();
  const int steps = need(dj, "steps").get<int>();
  if (steps < 1) fail("dynamics.steps must be >= 1");
  Eigen::MatrixXd Ad, Bd, D;
  if (type == "cwh") {
    cfg.dt_s = need(dj, "dt_s").get<double>();
    auto [Ac, Bc] = cwh_matrices(need(dj, "orbital_radius_km").get<double>(),
                                 need(dj, "mass_kg").get<double>());
    std::tie(Ad, Bd) = discretize_zoh(Ac, Bc, cfg.dt_s);
    if (dj.contains("noise_gain_diag"))
      D = Eigen::MatrixXd(vec_of(dj.at("noise_gain_diag"), "noise_gain_diag").asDiagonal());
    else
      D = mat_of(need(dj, "noise_gain"), "noise_gain");
  } else if (type == "explicit") {
    Ad = mat_of(need(dj, "A"), "dynamics.A");
    Bd = mat_of(need(dj, "B"), "dynamics.B");
    D = mat_of(need(dj, "D"), "dynamics.D");
  } else {
    fail("dynamics.type must be 'cwh' or 'explicit'");
  }
  if (D.rows() != Ad.rows()) fail("noise gain row count must match the state dimension");
  cfg.problem.sys = LtvSystem::time_invariant(steps, Ad, Bd, D);
  const int n = cfg.problem.sys.n, m = cfg.problem.sys.m;

  // Boundary conditions.
  const ordered_json& bj = need(j, "boundary");
  cfg.problem.mu0 = vec_of(need(bj, "mu0"), "mu0");
  cfg.problem.Sigma0 = diag_or_full(bj, "sigma0");
  cfg.problem.terminal.muf = vec_of(need(bj, "muf"), "muf");
  cfg.problem.terminal.Sigmaf = diag_or_full(bj, "sigmaf");

  // Cost.
  const ordered_json& cj = need(j, "cost");
  const Eigen::MatrixXd Q = diag_or_full(cj, "q");
  const Eigen::MatrixXd R = diag_or_full(cj, "r");
  if (Q.rows() != n || R.rows() != m) fail("cost weight dimensions mismatch");
  cfg.problem.Q.assign(static_cast<size_t>(steps), Q);
  cfg.problem.R.assign(static_cast<size_t>(steps), R);

  // Chance constraint.
  if (j.contains("chance") && !j.at("chance").is_null()) {
    const ordered_json& hj = j.at("chance");
    cfg.risk.delta_total = need(hj, "delta_total").get<double>();
    if (cfg.risk.delta_total <= 0.0 || cfg.risk.delta_total >= 1.0)
      fail("chance.delta_total must lie in (0, 1)");
    const std::string ct = need(hj, "type").get<std::string>();
    if (ct == "polytope") {
      const ordered_json& hs = need(hj, "halfspaces");
      if (!hs.is_array() || hs.empty()) fail("chance.halfspaces must be non-empty");
      PolytopeCC cc;
      cc.alpha.resize(hs.size(), n);
      cc.beta.resize(hs.size());
      for (size_t row = 0; row < hs.size(); ++row) {
        cc.alpha.row(static_cast<Eigen::Index>(row)) =
            vec_of(need(hs[row], "a"), "halfspace.a").transpose();
        cc.beta[static_cast<Eigen::Index>(row)] = need(hs[row], "b").get<double>();
      }
      cc.validate(n);
      cfg.problem.chance = std::move(cc);
    } else if (ct == "cone") {
      ConeCC cc;
      cc.A = diag_or_full(hj, "A");
      cc.b = hj.contains("b") ? vec_of(hj.at("b"), "cone.b") : Eigen::VectorXd::Zero(n);
      cc.c = vec_of(need(hj, "c"), "cone.c");
      cc.d = need(hj, "d").get<double>();
      const std::string rel = need(hj, "relaxation").get<std::string>();
      if (rel == "threecut")
        cc.relaxation = ConeRelaxation::ThreeCut;
      else if (rel == "rub")
        cc.relaxation = ConeRelaxation::ReverseUnionBound;
      else if (rel == "geometric")
        cc.relaxation = ConeRelaxation::Geometric;
      else
        fail("chance.relaxation must be 'threecut', 'rub' or 'geometric'");
      if (hj.contains("beta")) cc.beta = vec_of(hj.at("beta"), "cone.beta");
      if (cc.relaxation == ConeRelaxation::Geometric) {
        const ordered_json& gj = need(hj, "geometric");
        GeometricCC geo;
        geo.Ac = diag_or_full(gj, "Ac");
        geo.cc = vec_of(need(gj, "cc"), "geometric.cc");
        const int p = static_cast<int>(geo.Ac.rows());
        if (p > n) fail("geometric cross-section larger than the state");
        const ordered_json& rows = need(gj, "rows");
        if (!rows.is_array() || rows.empty()) fail("geometric.rows must be non-empty");
        geo.H = Eigen::MatrixXd::Zero(rows.size(), p);
        for (size_t e = 0; e < rows.size(); ++e) {
          const int idx = rows[e].get<int>();
          if (idx < 0 || idx >= p) fail("geometric.rows index out of range");
          geo.H(static_cast<Eigen::Index>(e), idx) = 1.0;
        }
        geo.Ip = Eigen::MatrixXd::Zero(p, n);
        geo.Ip.leftCols(p).setIdentity();
        if (gj.contains("norm")) {
          const std::string nm = gj.at("norm").get<std::string>();
          if (nm == "spectral")
            geo.norm = GeometricCC::Norm::SpectralLmi;
          else if (nm == "frobenius")
            geo.norm = GeometricCC::Norm::Frobenius;
          else
            fail("geometric.norm must be 'spectral' or 'frobenius'");
        }
        cc.geometric = std::move(geo);
      }
      if (hj.contains("rotation_about_x_rad")) {
        cc = rotated_about_x(cc, hj.at("rotation_about_x_rad").get<double>());
      }
      cc.validate(n);
      cfg.problem.chance = std::move(cc);
    } else {
      fail("chance.type must be 'polytope' or 'cone'");
    }
  }

  // Risk allocation policy.
  const ordered_json& rj = need(j, "risk");
  const std::string mode = need(rj, "allocation").get<std::string>();
  if (mode == "uniform")
    cfg.risk.mode = RiskSettings::Mode::Uniform;
  else if (mode == "ira")
    cfg.risk.mode = RiskSettings::Mode::Ira;
  else
    fail("risk.allocation must be 'uniform' or 'ira'");
  if (rj.contains("epsilon")) cfg.risk.ira.epsilon = rj.at("epsilon").get<double>();
  if (rj.contains("max_iterations"))
    cfg.risk.ira.max_iters = rj.at("max_iterations").get<int>();
  if (rj.contains("eta")) cfg.risk.ira.eta = rj.at("eta").get<double>();
  if (rj.contains("rho0")) cfg.risk.ira.rho0 = rj.at("rho0").get<double>();
  if (rj.contains("rho_decay")) cfg.risk.ira.rho_decay = rj.at("rho_decay").get<double>();
  if (rj.contains("delta_floor"))
    cfg.risk.ira.delta_floor = rj.at("delta_floor").get<double>();
  if (cfg.risk.mode == RiskSettings::Mode::Ira &&
      std::holds_alternative<std::monostate>(cfg.problem.chance))
    fail("risk.allocation 'ira' requires a chance constraint");

  // Hard input enforcement.
  if (j.contains("input") && !j.at("input").is_null()) {
    const ordered_json& ij = j.at("input");
    const std::string enf = need(ij, "enforcement").get<std::string>();
    if (enf == "hard") {
      SaturationSpec sat;
      sat.y_max = vec_of(need(ij, "y_max"), "input.y_max");
      if (ij.contains("u_max")) {
        const double umax = ij.at("u_max").get<double>();
        if (umax <= 0.0) fail("input.u_max must be positive");
        sat.Hu.resize(2 * m, m);
        sat.Hu.topRows(m) = Eigen::MatrixXd::Identity(m, m);
        sat.Hu.bottomRows(m) = -Eigen::MatrixXd::Identity(m, m);
        sat.hu = Eigen::VectorXd::Constant(2 * m, umax);
      } else {
        sat.Hu = mat_of(need(ij, "Hu"), "input.Hu");
        sat.hu = vec_of(need(ij, "hu"), "input.hu");
      }
      if (ij.contains("moment_samples"))
        sat.moment_samples = ij.at("moment_samples").get<long>();
      if (ij.contains("moment_seed"))
        sat.moment_seed = ij.at("moment_seed").get<uint64_t>();
      cfg.problem.saturation = std::move(sat);
    } else if (enf != "none") {
      fail("input.enforcement must be 'none' or 'hard'");
    }
  }

  // Validation settings.
  if (j.contains("validation") && !j.at("validation").is_null()) {
    const ordered_json& vj = j.at("validation");
    if (vj.contains("samples")) cfg.validation.samples = vj.at("samples").get<long>();
    if (vj.contains("seed")) cfg.validation.seed = vj.at("seed").get<uint64_t>();
    if (vj.contains("keep_trajectories"))
      cfg.validation.keep_trajectories = vj.at("keep_trajectories").get<int>();
    if (cfg.validation.samples < 1) fail("validation.samples must be >= 1");
  }

  // Solver settings.
  if (j.contains("solver") && !j.at("solver").is_null()) {
    const ordered_json& sj = j.at("solver");
    if (sj.contains("tol")) cfg.solver.tol = sj.at("tol").get<double>();
    if (sj.contains("max_iterations"))
      cfg.solver.max_iters = sj.at("max_iterations").get<int>();
    if (sj.contains("verify_tol")) cfg.solver.verify_tol = sj.at("verify_tol").get<double>();
  }

  cfg.problem.validate();
  return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open '" + path + "'");
  ordered_json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("invalid JSON: ") + e.what());
  }
  return scenario_from_json(j);
}

// ---------------------------------------------------------------------------
// Running
// ---------------------------------------------------------------------------

ScenarioRun run_scenario(const ScenarioConfig& cfg, bool do_validation) {
  ScenarioRun run;
  run.config = cfg;
  const int N = cfg.problem.sys.N;
  const int M = cfg.problem.chance_columns();

  RiskAllocation init;
  if (M > 0) {
    init = RiskAllocation::uniform(cfg.risk.delta_total, N, M);
  } else {
    init.total = 0.0;
    init.delta.resize(N, 0);
  }
  if (M > 0 && cfg.risk.mode == RiskSettings::Mode::Ira) {
    IraResult res = run_ira(cfg.problem, init, cfg.risk.ira, cfg.solver);
    run.solution = std::move(res.solution);
    run.alloc = std::move(res.alloc);
    run.ira_trace = std::move(res.trace);
    run.ira_stop = res.stop;
  } else {
    run.solution = solve_steering(cfg.problem, init, cfg.solver);
    run.alloc = init;
  }

  if (do_validation && run.solution.status == conic::SolveStatus::Optimal) {
    RolloutOptions opt;
    opt.samples = cfg.validation.samples;
    opt.seed = cfg.validation.seed;
    opt.keep_trajectories = cfg.validation.keep_trajectories;
    run.stats = rollout(cfg.problem, run.solution, opt);
    run.validated = true;
  }
  return run;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

namespace {

double terminal_mean_error(const ScenarioRun& run) {
  const int N = run.config.problem.sys.N, n = run.config.problem.sys.n;
  return (run.solution.xbar.segment(N * n, n) - run.config.problem.terminal.muf)
      .cwiseAbs()
      .maxCoeff();
}

double terminal_cov_margin(const Eigen::MatrixXd& Sigmaf, const Eigen::MatrixXd& SigmaN) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sigmaf - SigmaN,
                                                    Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

ordered_json report_json(const ScenarioRun& run) {
  const auto& pb = run.config.problem;
  const int N = pb.sys.N, n = pb.sys.n;
  const bool optimal = run.solution.status == conic::SolveStatus::Optimal;

  ordered_json rep;
  rep["generator"] = kVersion;
  rep["scenario"] = run.config.name;
  rep["allocation_mode"] =
      run.config.risk.mode == RiskSettings::Mode::Ira ? "ira" : "uniform";
  rep["horizon"] = {{"steps", N}, {"dt_s", run.config.dt_s}};

  ordered_json solve;
  solve["status"] = conic::to_string(run.solution.status);
  solve["message"] = run.solution.message;
  solve["iterations"] = run.solution.iterations;
  solve["reduced_accuracy"] = run.solution.reduced_accuracy;
  if (optimal) {
    solve["objective"] = run.solution.J;
    solve["max_violation"] = run.solution.max_violation;
    solve["terminal_mean_error"] = terminal_mean_error(run);
    solve["terminal_cov_margin"] = terminal_cov_margin(
        pb.terminal.Sigmaf, run.solution.SigmaX.block(N * n, N * n, n, n));
    solve["terminal_logdet"] = run.solution.VN;
  }
  rep["solve"] = std::move(solve);

  ordered_json risk;
  risk["budget"] = run.config.risk.delta_total;
  if (pb.chance_columns() > 0 && optimal) {
    risk["allocated_sum"] = run.alloc.sum();
    risk["posterior_sum"] = posterior_risk(pb, run.solution).sum();
  }
  if (run.config.risk.mode == RiskSettings::Mode::Ira) {
    risk["ira_iterations"] = static_cast<int>(run.ira_trace.size());
    risk["ira_stop"] = to_string(run.ira_stop);
  }
  rep["risk"] = std::move(risk);

  if (run.validated) {
    ordered_json val;
    val["samples"] = run.stats.samples;
    val["seed"] = run.stats.seed;
    val["joint_risk"] = run.stats.joint_risk;
    val["joint_risk_se"] = run.stats.joint_risk_se;
    val["max_input_abs"] = run.stats.max_input_abs;
    val["input_violations"] = run.stats.input_violations;
    val["terminal_mean_error_mc"] =
        (run.stats.mean_xN - pb.terminal.muf).cwiseAbs().maxCoeff();
    val["terminal_cov_margin_mc"] =
        terminal_cov_margin(pb.terminal.Sigmaf, run.stats.cov_xN);
    rep["validation"] = std::move(val);
  } else {
    rep["validation"] = nullptr;
  }
  return rep;
}

ordered_json solution_json(const ScenarioRun& run) {
  const auto& sol = run.solution;
  ordered_json j;
  j["generator"] = kVersion;
  j["scenario"] = run.config.name;
  j["status"] = conic::to_string(sol.status);
  if (sol.status != conic::SolveStatus::Optimal) return j;
  j["objective"] = sol.J;
  j["V"] = vec_json(sol.V);
  ordered_json blocks = ordered_json::array();
  for (int k = 0; k < sol.N; ++k) blocks.push_back(mat_json(sol.gain_block(k)));
  j["K_blocks"] = std::move(blocks);
  if (sol.f_values.size() > 0 && sol.f_values.allFinite())
    j["f"] = mat_json(sol.f_values);
  return j;
}

ControllerSolution solution_from_json(const ScenarioConfig& cfg, const ordered_json& j) {
  const int N = cfg.problem.sys.N, n = cfg.problem.sys.n, m = cfg.problem.sys.m;
  ControllerSolution sol;
  sol.N = N;
  sol.n = n;
  sol.m = m;
  const std::string status = need(j, "status").get<std::string>();
  if (status != "optimal") fail("solution file does not hold an optimal controller");
  sol.status = conic::SolveStatus::Optimal;
  sol.J = need(j, "objective").get<double>();
  sol.V = vec_of(need(j, "V"), "solution.V");
  if (sol.V.size() != N * m) fail("solution.V length mismatch");
  const ordered_json& blocks = need(j, "K_blocks");
  if (static_cast<int>(blocks.size()) != N) fail("solution.K_blocks count mismatch");
  sol.K = Eigen::MatrixXd::Zero(N * m, (N + 1) * n);
  for (int k = 0; k < N; ++k) {
    const Eigen::MatrixXd blk = mat_of(blocks[static_cast<size_t>(k)], "K block");
    if (blk.rows() != m || blk.cols() != n) fail("solution K block shape mismatch");
    sol.K.block(k * m, k * n, m, n) = blk;
  }
  if (j.contains("f")) sol.f_values = mat_of(j.at("f"), "solution.f");

  // Rebuild the moment channel to recover the mean history and deviation
  // covariance without re-solving.
  const LiftedSystem lf = lift(cfg.problem.sys, cfg.problem.Q, cfg.problem.R,
                               cfg.problem.Sigma0);
  DecisionMap map;
  map.N = N;
  map.n = n;
  map.m = m;
  map.calB = lf.calB;
  map.xbar_base = lf.calA * cfg.problem.mu0;
  if (cfg.problem.saturation) {
    const StackedMoments mom =
        stacked_moments(lf, cfg.problem.Sigma0, *cfg.problem.saturation);
    map.stacked = true;
    map.zdim = 2 * (N + 1) * n;
    map.factor = mom.factor;
  } else {
    map.stacked = false;
    map.zdim = (N + 1) * n;
    map.factor = lf.SigmaY_sqrt;
  }
  map.qz = static_cast<int>(map.factor.cols());
  sol.xbar = map.mean_state(sol.V);
  sol.SigmaX = map.deviation_covariance(sol.K);
  sol.VN = logdet_psd(sol.SigmaX.block(N * n, N * n, n, n));
  return sol;
}

std::string trajectories_csv(const ScenarioRun& run) {
  const int n = run.config.problem.sys.n;
  std::string out = "sample,step";
  for (int i = 0; i < n; ++i) out += ",x" + std::to_string(i);
  out += "\n";
  for (size_t s = 0; s < run.stats.trajectories.size(); ++s) {
    const Eigen::MatrixXd& traj = run.stats.trajectories[s];
    for (Eigen::Index k = 0; k < traj.rows(); ++k) {
      out += std::to_string(s);
      out += ',';
      out += std::to_string(k);
      for (Eigen::Index i = 0; i < traj.cols(); ++i) {
        out += ',';
        fmt_double(out, traj(k, i));
      }
      out += '\n';
    }
  }
  return out;
}

std::string allocation_csv(const ScenarioRun& run) {
  std::string out = "iter,objective,rho,step,column,delta,delta_bar,active\n";
  for (const IraIterate& it : run.ira_trace) {
    for (Eigen::Index k = 0; k < it.delta.rows(); ++k)
      for (Eigen::Index j = 0; j < it.delta.cols(); ++j) {
        out += std::to_string(it.iter);
        out += ',';
        fmt_double(out, it.J);
        out += ',';
        fmt_double(out, it.rho);
        out += ',';
        out += std::to_string(k + 1);  // constraints apply from step 1
        out += ',';
        out += std::to_string(j);
        out += ',';
        fmt_double(out, it.delta(k, j));
        out += ',';
        fmt_double(out, it.delta_bar(k, j));
        out += ',';
        out += std::to_string(it.active(k, j));
        out += '\n';
      }
  }
  return out;
}

std::vector<std::string> write_outputs(const ScenarioRun& run, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::string> written;
  auto emit = [&](const std::string& file, const std::string& text) {
    const std::string path = (fs::path(dir) / file).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << text;
    written.push_back(path);
  };
  emit("report.json", report_json(run).dump(2) + "\n");
  emit("solution.json", solution_json(run).dump(2) + "\n");
  if (!run.ira_trace.empty()) emit("allocation_trace.csv", allocation_csv(run));
  if (run.validated && !run.stats.trajectories.empty())
    emit("trajectories.csv", trajectories_csv(run));
  return written;
}

}  // namespace cs
