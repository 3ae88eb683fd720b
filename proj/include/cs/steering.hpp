#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "cs/constraints.hpp"
#include "cs/lifting.hpp"
#include "cs/saturation.hpp"

// Finite-horizon covariance steering: choose an affine feedback policy
// u_k = v_k + K_k y_k (y the autonomous deviation process) that moves the
// state distribution from (mu0, Sigma0) to mean mu_f and covariance at most
// Sigma_f, minimizing the expected quadratic cost, subject to an optional
// joint chance constraint and optionally hard input bounds enforced through
// a clamped feedback channel.

namespace cs {

struct TerminalSpec {
  Eigen::VectorXd muf;
  Eigen::MatrixXd Sigmaf;  // terminal covariance upper bound (PSD order)
};

using ChanceSpec = std::variant<std::monostate, PolytopeCC, ConeCC>;

struct SteeringProblem {
  LtvSystem sys;
  Eigen::VectorXd mu0;
  Eigen::MatrixXd Sigma0;
  std::vector<Eigen::MatrixXd> Q;  // N stage weights (terminal stage excluded)
  std::vector<Eigen::MatrixXd> R;  // N input weights
  TerminalSpec terminal;
  ChanceSpec chance;
  std::optional<SaturationSpec> saturation;

  // Columns of the risk allocation: halfspace count for a polytope, one for
  // a cone, zero when unconstrained.
  int chance_columns() const;
  void validate() const;
};

// Assembled cone program plus the bookkeeping needed to read a solution back.
struct Assembled {
  conic::Program program;
  DecisionMap map;
  ConeAux cone_aux;
  LiftedSystem lifted;
};

struct ControllerSolution {
  int N = 0, n = 0, m = 0;
  conic::SolveStatus status = conic::SolveStatus::NumericalFailure;
  std::string message;
  double J = 0.0;
  int iterations = 0;
  bool reduced_accuracy = false;
  double max_violation = 0.0;

  Eigen::VectorXd V;        // Nm feedforward
  Eigen::MatrixXd K;        // Nm x (N+1)n, block diagonal
  Eigen::VectorXd xbar;     // (N+1)n mean history
  Eigen::MatrixXd SigmaX;   // (N+1)n deviation covariance
  Eigen::MatrixXd f_values; // N x n solved cone radii (NaN where unused)
  Eigen::VectorXd geo_sigma;  // N spectral deviation sizes (Geometric only)
  double VN = 0.0;          // log det of the terminal covariance

  Eigen::MatrixXd gain_block(int k) const;  // m x n slice K_k
};

Assembled assemble(const SteeringProblem& pb, const RiskAllocation& alloc);

// Reads a backend result into controller form (V, K, mean history, deviation
// covariance, terminal log det). Non-optimal statuses carry only diagnostics.
ControllerSolution extract(const SteeringProblem& pb, const Assembled& asm_,
                           const conic::SolveResult& res);

ControllerSolution solve_steering(const SteeringProblem& pb, const RiskAllocation& alloc,
                                  const conic::SolverOptions& opts = {});

// Posterior risk table of a solved controller (N x chance_columns; empty when
// the problem has no chance constraint).
Eigen::MatrixXd posterior_risk(const SteeringProblem& pb, const ControllerSolution& sol);

}  // namespace cs
