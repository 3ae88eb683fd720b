#include <doctest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <variant>

#include "cs/scenario.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;
using nlohmann::ordered_json;

namespace {

// Small explicit-dynamics scenario (double integrator) that solves and
// validates in well under a second.
ordered_json tiny_config() {
  return ordered_json::parse(R"({
    "name": "tiny",
    "dynamics": {
      "type": "explicit",
      "steps": 4,
      "A": [[1.0, 1.0], [0.0, 1.0]],
      "B": [[0.5], [1.0]],
      "D": [[0.05, 0.0], [0.0, 0.05]]
    },
    "boundary": {
      "mu0": [4.0, 0.0],
      "sigma0_diag": [0.3, 0.3],
      "muf": [0.0, 0.0],
      "sigmaf_diag": [0.25, 0.25]
    },
    "cost": { "q_diag": [1.0, 1.0], "r_diag": [1.0] },
    "chance": {
      "type": "polytope",
      "delta_total": 0.05,
      "halfspaces": [ { "a": [1.0, 0.0], "b": 4.6 } ]
    },
    "risk": { "allocation": "ira", "max_iterations": 8 },
    "input": { "enforcement": "none" },
    "validation": { "samples": 4000, "seed": 11, "keep_trajectories": 2 },
    "solver": { "tol": 1e-9, "max_iterations": 200 }
  })");
}

}  // namespace

TEST_SUITE_BEGIN("scenario");

TEST_CASE("clohessy-wiltshire matrices at the reference orbit") {
  const double radius = 7178.137, mass = 300.0;
  CHECK(cs::cwh_mean_motion(radius) ==
        doctest::Approx(0.0010381288812802356).epsilon(1e-14));

  const auto [Ac, Bc] = cs::cwh_matrices(radius, mass);
  REQUIRE(Ac.rows() == 6);
  REQUIRE(Bc.cols() == 3);
  const double w = cs::cwh_mean_motion(radius);
  // Continuous-time structure: upper-right identity, 3w^2 radial term,
  // 2w Coriolis coupling, -w^2 cross-track spring, 1/m force scaling.
  CHECK((Ac.topRightCorner(3, 3) - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() ==
        0.0);
  CHECK(Ac(3, 0) == doctest::Approx(3 * w * w).epsilon(1e-14));
  CHECK(Ac(3, 4) == doctest::Approx(2 * w).epsilon(1e-14));
  CHECK(Ac(4, 3) == doctest::Approx(-2 * w).epsilon(1e-14));
  CHECK(Ac(5, 2) == doctest::Approx(-w * w).epsilon(1e-14));
  CHECK(Bc.bottomRows(3).isApprox(MatrixXd::Identity(3, 3) / mass, 1e-14));
  CHECK(Bc.topRows(3).cwiseAbs().maxCoeff() == 0.0);

  // Frozen zero-order-hold discretization at dt = 4 s.
  const auto [Ad, Bd] = cs::discretize_zoh(Ac, Bc, 4.0);
  CHECK(Ad(0, 0) == doctest::Approx(1.0000258650406129).epsilon(1e-13));
  CHECK(Bd(0, 0) == doctest::Approx(2.6666628348054951e-02).epsilon(1e-12));
}

TEST_CASE("zero-order hold on the double integrator is exact") {
  MatrixXd A(2, 2), B(2, 1);
  A << 0, 1, 0, 0;
  B << 0, 1;
  const double dt = 0.7;
  const auto [Ad, Bd] = cs::discretize_zoh(A, B, dt);
  CHECK(Ad(0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(Ad(0, 1) == doctest::Approx(dt).epsilon(1e-15));
  CHECK(Ad(1, 0) == doctest::Approx(0.0));
  CHECK(Ad(1, 1) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(Bd(0, 0) == doctest::Approx(dt * dt / 2).epsilon(1e-14));
  CHECK(Bd(1, 0) == doctest::Approx(dt).epsilon(1e-14));
}

TEST_CASE("bundled scenarios parse with the expected shape") {
  const cs::ScenarioConfig poly =
      cs::load_scenario(std::string(COVSTEER_SCENARIO_DIR) + "/rendezvous_poly.json");
  CHECK(poly.name == "rendezvous_poly");
  CHECK(poly.problem.sys.N == 15);
  CHECK(poly.problem.sys.n == 6);
  CHECK(poly.problem.sys.m == 3);
  CHECK(poly.dt_s == 4.0);
  CHECK(poly.risk.mode == cs::RiskSettings::Mode::Ira);
  CHECK(poly.risk.delta_total == 0.035);
  REQUIRE(std::holds_alternative<cs::PolytopeCC>(poly.problem.chance));
  CHECK(std::get<cs::PolytopeCC>(poly.problem.chance).size() == 1);
  CHECK(poly.validation.samples == 100000);
  CHECK(!poly.problem.saturation.has_value());

  const cs::ScenarioConfig hard =
      cs::load_scenario(std::string(COVSTEER_SCENARIO_DIR) + "/rendezvous_hard.json");
  REQUIRE(hard.problem.saturation.has_value());
  CHECK(hard.problem.saturation->hu.size() == 6);
  CHECK(hard.problem.saturation->hu.maxCoeff() == 30.0);
  CHECK(hard.dt_s == 8.0);
  CHECK(std::holds_alternative<std::monostate>(hard.problem.chance));

  const cs::ScenarioConfig geo = cs::load_scenario(
      std::string(COVSTEER_SCENARIO_DIR) + "/rendezvous_cone_geo.json");
  REQUIRE(std::holds_alternative<cs::ConeCC>(geo.problem.chance));
  const auto& cone = std::get<cs::ConeCC>(geo.problem.chance);
  CHECK(cone.relaxation == cs::ConeRelaxation::Geometric);
  REQUIRE(cone.geometric.has_value());
}

TEST_CASE("parser rejects malformed configs with pointed messages") {
  ordered_json base = tiny_config();

  ordered_json j = base;
  j.erase("boundary");
  CHECK_THROWS_WITH_AS(cs::scenario_from_json(j),
                       doctest::Contains("missing field 'boundary'"),
                       std::invalid_argument);

  j = base;
  j["risk"]["allocation"] = "greedy";
  CHECK_THROWS_WITH_AS(cs::scenario_from_json(j), doctest::Contains("allocation"),
                       std::invalid_argument);

  j = base;
  j["dynamics"]["type"] = "continuous";
  CHECK_THROWS_WITH_AS(cs::scenario_from_json(j), doctest::Contains("dynamics.type"),
                       std::invalid_argument);

  j = base;
  j["chance"] = nullptr;  // ira without a chance constraint
  CHECK_THROWS_WITH_AS(cs::scenario_from_json(j),
                       doctest::Contains("requires a chance constraint"),
                       std::invalid_argument);

  j = base;
  j["chance"]["delta_total"] = 1.5;
  CHECK_THROWS_AS(cs::scenario_from_json(j), std::invalid_argument);

  j = base;
  j["boundary"]["mu0"] = {1.0, 2.0, 3.0};  // wrong state dimension
  CHECK_THROWS_AS(cs::scenario_from_json(j), std::invalid_argument);
}

TEST_CASE("runs are deterministic and reports round trip") {
  const cs::ScenarioConfig cfg = cs::scenario_from_json(tiny_config());
  const cs::ScenarioRun run1 = cs::run_scenario(cfg, true);
  const cs::ScenarioRun run2 = cs::run_scenario(cfg, true);
  REQUIRE(run1.solution.status == cs::conic::SolveStatus::Optimal);

  // Byte-identical reports for identical configs and seeds.
  CHECK(cs::report_json(run1).dump(2) == cs::report_json(run2).dump(2));
  CHECK(cs::solution_json(run1).dump(2) == cs::solution_json(run2).dump(2));
  CHECK(cs::trajectories_csv(run1) == cs::trajectories_csv(run2));
  CHECK(cs::allocation_csv(run1) == cs::allocation_csv(run2));

  // The solution document reloads losslessly.
  const cs::ControllerSolution back =
      cs::solution_from_json(cfg, cs::solution_json(run1));
  CHECK((back.V - run1.solution.V).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.K - run1.solution.K).cwiseAbs().maxCoeff() == 0.0);
  CHECK((back.xbar - run1.solution.xbar).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((back.SigmaX - run1.solution.SigmaX).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(back.VN == doctest::Approx(run1.solution.VN).epsilon(1e-12));

  // Report content sanity.
  const ordered_json rep = cs::report_json(run1);
  CHECK(rep.at("generator").get<std::string>() == cs::kVersion);
  CHECK(rep.at("scenario").get<std::string>() == "tiny");
  CHECK(rep.at("solve").at("status").get<std::string>() == "optimal");
  CHECK(rep.contains("validation"));
  CHECK(rep.at("risk").at("budget").get<double>() == 0.05);

  // IRA trace is recorded and the budget is honored at every pass.
  REQUIRE(!run1.ira_trace.empty());
  for (const auto& it : run1.ira_trace) CHECK(it.delta.sum() <= 0.05);
}

TEST_CASE("trajectory csv has one row per kept sample and step") {
  const cs::ScenarioConfig cfg = cs::scenario_from_json(tiny_config());
  const cs::ScenarioRun run = cs::run_scenario(cfg, true);
  const std::string csv = cs::trajectories_csv(run);
  const long rows = std::count(csv.begin(), csv.end(), '\n');
  // Header plus keep_trajectories * (N + 1) state rows.
  CHECK(rows == 1 + 2 * (cfg.problem.sys.N + 1));
  CHECK(csv.rfind("sample,step", 0) == 0);
}

TEST_SUITE_END();
