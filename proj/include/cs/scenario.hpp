#pragma once

#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "cs/ira.hpp"
#include "cs/steering.hpp"
#include "cs/validation.hpp"

// Scenario configs bind a steering problem, a risk-allocation policy and
// validation settings into one JSON document; runs produce deterministic
// reports (byte-identical for identical configs and seeds).

namespace cs {

inline constexpr const char* kVersion = "covsteer 0.1.0";

// Clohessy-Wiltshire relative orbital dynamics (state [position; velocity],
// radial / along-track / cross-track), continuous time, force inputs scaled
// by the spacecraft mass.
double cwh_mean_motion(double orbital_radius_km);
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> cwh_matrices(double orbital_radius_km,
                                                         double mass_kg);

// Zero-order-hold discretization via the augmented matrix exponential.
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> discretize_zoh(const Eigen::MatrixXd& A,
                                                           const Eigen::MatrixXd& B,
                                                           double dt);

struct RiskSettings {
  enum class Mode { Uniform, Ira } mode = Mode::Uniform;
  double delta_total = 0.0;  // taken from the chance block; 0 when unconstrained
  IraConfig ira;
};

struct ValidationSettings {
  long samples = 100000;
  uint64_t seed = 0;
  int keep_trajectories = 8;
};

struct ScenarioConfig {
  std::string name;
  SteeringProblem problem;
  RiskSettings risk;
  ValidationSettings validation;
  conic::SolverOptions solver;
  double dt_s = 0.0;  // informational (0 for explicit dynamics)
  nlohmann::ordered_json raw;  // the config document as loaded
};

ScenarioConfig scenario_from_json(const nlohmann::ordered_json& j);
ScenarioConfig load_scenario(const std::string& path);

struct ScenarioRun {
  ScenarioConfig config;
  ControllerSolution solution;
  RiskAllocation alloc;
  std::vector<IraIterate> ira_trace;
  IraStop ira_stop = IraStop::Converged;
  bool validated = false;
  RolloutStats stats;
};

ScenarioRun run_scenario(const ScenarioConfig& cfg, bool do_validation);

nlohmann::ordered_json report_json(const ScenarioRun& run);
nlohmann::ordered_json solution_json(const ScenarioRun& run);
ControllerSolution solution_from_json(const ScenarioConfig& cfg,
                                      const nlohmann::ordered_json& j);
std::string trajectories_csv(const ScenarioRun& run);
std::string allocation_csv(const ScenarioRun& run);

// Writes report.json, solution.json and, when applicable, the CSV side files
// into dir (created if needed). Returns the list of files written.
std::vector<std::string> write_outputs(const ScenarioRun& run, const std::string& dir);

}  // namespace cs
