#pragma once

#include "cs/steering.hpp"

// Covariance steering with hard input bounds. The feedback channel is driven
// by a clamped copy of the stochastic terms,
//   u_k = v_k + K_k z_k,  z_{k+1} = A_k z_k + D_k phi(w_k),  z_0 = phi(y_0),
// with phi the element-wise clamp to [-y_max, y_max]. Every signal entering
// the input is then bounded, and the polytope Hu u_k <= hu is enforced for
// every realization by dualizing the box support of the clamped stack.

namespace cs {

// Second moments of the stacked pair [Y; Z]. The cross and clamp moments are
// Monte Carlo estimates; the assembled matrix is eigenvalue-clamped to the
// PSD cone (sampling error can push it slightly indefinite) and all blocks
// are re-read from the projected matrix so objective, constraints and the
// factor stay mutually consistent.
struct StackedMoments {
  Eigen::MatrixXd SigmaYY;  // (N+1)n square
  Eigen::MatrixXd SigmaYZ;  // E[Y Z']
  Eigen::MatrixXd SigmaZZ;
  Eigen::MatrixXd factor;   // 2(N+1)n rows, factor factor' = [[YY, YZ], [ZY, ZZ]]
};

StackedMoments stacked_moments(const LiftedSystem& lifted, const Eigen::MatrixXd& Sigma0,
                               const SaturationSpec& sat);

// Assembles the saturated-feedback steering program: the usual objective,
// terminal and chance constraints evaluated against the stacked moments,
// plus robust input rows
//   Hu (v_k + K_k z_k) <= hu  for all realizations,
// written with one nonnegative multiplier pair per (step, row, clamped
// component). Requires noise dimension r == n.
Assembled assemble_hard(const SteeringProblem& pb, const RiskAllocation& alloc);

}  // namespace cs
