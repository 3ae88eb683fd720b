#pragma once

#include <Eigen/Dense>
#include <cstdint>

// Hard input enforcement. The feedback channel is driven by element-wise
// clamped copies of the stochastic terms, which keeps the feedback
// contribution bounded and lets the input polytope be enforced robustly.

namespace cs {

struct SaturationSpec {
  Eigen::VectorXd y_max;  // per-component clamp levels, strictly positive
  Eigen::MatrixXd Hu;     // input polytope rows: Hu * u <= hu at every step
  Eigen::VectorXd hu;
  long moment_samples = 1000000;  // Monte Carlo size for the clamp moments
  uint64_t moment_seed = 2024;

  void validate(int n, int m) const;
};

// Element-wise clamp of y to [-y_max, y_max].
Eigen::VectorXd saturate(const Eigen::VectorXd& y, const Eigen::VectorXd& y_max);

struct SaturatedMoments {
  Eigen::MatrixXd cross;  // E[y phi(y)^T]
  Eigen::MatrixXd outer;  // E[phi(y) phi(y)^T]
};

// Moments of the clamped Gaussian, estimated from a deterministic
// counter-seeded sample of y ~ N(0, Sigma). Both blocks come from the same
// draws so the stacked second-moment matrix stays consistent.
SaturatedMoments saturated_moments(const Eigen::MatrixXd& Sigma,
                                   const Eigen::VectorXd& y_max, long samples,
                                   uint64_t seed);

// Closed form for the cross moment of a clamped Gaussian:
// E[y phi(y)^T] = Sigma * diag(P(|y_j| <= y_max_j)). Used as an oracle for
// the Monte Carlo estimate.
Eigen::MatrixXd stein_cross_moment(const Eigen::MatrixXd& Sigma,
                                   const Eigen::VectorXd& y_max);

}  // namespace cs
