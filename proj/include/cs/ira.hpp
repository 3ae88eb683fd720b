#pragma once

#include <string>
#include <vector>

#include "cs/steering.hpp"

// Iterative risk allocation. Starting from a uniform split of the joint risk
// budget, each pass solves the steering program, measures the posterior risk
// of every individual constraint, tightens allocations that are slack and
// hands the recovered budget to the active ones. The objective is
// monotonically non-increasing up to solver tolerance; iteration stops on
// stalling or on an all-active / all-inactive certificate.

namespace cs {

struct IraConfig {
  double epsilon = 1e-5;     // |J_i - J_{i-1}| convergence threshold
  int max_iters = 50;
  double eta = 1e-2;         // active iff posterior risk >= (1 - eta) * allocated
  double rho0 = 0.7;         // tightening interpolation weight, decayed per pass
  double rho_decay = 0.98;
  double delta_floor = 1e-9;
  double delta_cap = 0.5 - 1e-9;
};

struct IraIterate {
  int iter = 0;
  double J = 0.0;
  double rho = 0.0;
  int num_active = 0;
  double budget_used = 0.0;      // sum of the allocation entering this solve
  Eigen::MatrixXd delta;         // allocation entering this solve
  Eigen::MatrixXd delta_bar;     // posterior risk of its solution
  Eigen::MatrixXi active;
};

enum class IraStop {
  Converged,       // cost stalled within epsilon
  AllInactive,     // no constraint active: allocation certificate
  AllActive,       // every constraint active: nothing left to reallocate
  IterationLimit,
  SolverFailure,
};

const char* to_string(IraStop s);

struct IraResult {
  ControllerSolution solution;  // best (lowest cost) iterate
  RiskAllocation alloc;         // allocation that produced it
  std::vector<IraIterate> trace;
  IraStop stop = IraStop::SolverFailure;
  int iterations = 0;
};

// active(k,j) = posterior >= (1 - eta) * allocated.
Eigen::MatrixXi classify(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& delta_bar,
                         double eta);

// One reallocation pass: inactive entries move toward their posterior risk,
// the recovered budget is split equally over the active entries, and the
// result is clamped to [floor, cap] and repaired so the sum never exceeds
// the total budget.
void reallocate(RiskAllocation& alloc, const Eigen::MatrixXd& delta_bar,
                const Eigen::MatrixXi& active, double rho, const IraConfig& cfg);

IraResult run_ira(const SteeringProblem& pb, const RiskAllocation& init,
                  const IraConfig& cfg = {}, const conic::SolverOptions& sopts = {});

}  // namespace cs
