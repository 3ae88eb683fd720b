#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cs/steering.hpp"

// Monte Carlo validation of a synthesized controller: closed-loop rollouts
// under the true (clamped, when applicable) dynamics, empirical joint risk
// against the exact constraint region, terminal moment checks and input
// compliance. Sampling is counter-seeded so ensembles are reproducible and
// two controllers can be compared on common random numbers.

namespace cs {

struct RolloutOptions {
  long samples = 100000;
  uint64_t seed = 0;
  int keep_trajectories = 0;  // retain the first few sample paths for plotting
};

struct RolloutStats {
  long samples = 0;
  uint64_t seed = 0;
  double joint_risk = 0.0;     // fraction of samples leaving the region at any step
  double joint_risk_se = 0.0;  // binomial standard error
  Eigen::MatrixXd constraint_freq;  // N x M per-(step, column) violation frequency
  Eigen::VectorXd mean_xN;
  Eigen::MatrixXd cov_xN;
  double max_input_abs = 0.0;  // max |u_i| over all samples, steps, components
  long input_violations = 0;   // samples breaking the hard input polytope anywhere
  std::vector<uint8_t> violated;            // per-sample joint violation flag
  std::vector<Eigen::MatrixXd> trajectories;  // kept paths, (N+1) x n
  std::vector<Eigen::MatrixXd> inputs;        // kept inputs, N x m
};

RolloutStats rollout(const SteeringProblem& pb, const ControllerSolution& sol,
                     const RolloutOptions& opt);

// Difference of joint risks of two rollouts on common random numbers
// (requires equal seed and sample count); the standard error is that of the
// paired per-sample differences.
struct PairedDelta {
  double delta = 0.0;
  double se = 0.0;
};
PairedDelta paired_risk_delta(const RolloutStats& a, const RolloutStats& b);

// Self-checks of the probability machinery the synthesis rests on. Each check
// is provable, evaluated by deterministic Monte Carlo or exact arithmetic:
// failure indicates a defect, not sampling noise.
struct LawCheck {
  std::string name;
  bool pass = false;
  double statistic = 0.0;  // worst observed margin (>= 0 when passing)
  std::string detail;
};

std::vector<LawCheck> probability_law_oracles(uint64_t seed);
bool all_pass(const std::vector<LawCheck>& checks);

}  // namespace cs
