#pragma once

#include <Eigen/Dense>
#include <vector>

#include "cs/conic.hpp"

// Mapping from steering decision variables (feedforward V, block-diagonal
// feedback gains K_k) to cone-program variables, plus helpers that phrase
// per-step mean and deviation projections as affine expressions.
//
// The controlled state history splits as X = Xbar + Xdev with
//   Xbar = calA mu0 + calB V                       (affine in V)
//   Xdev = (I + calB K) Y          (plain feedback on the deviation), or
//   Xdev = Y + calB K Z            (feedback on a separately driven signal Z,
//                                   used by the saturated-noise controller).
// With [Y] (or [Y;Z]) = factor * zeta, zeta standard normal, the deviation of
// any scalar projection a' x_k has standard deviation || dev_proj(k, a) ||.

namespace cs {

struct DecisionMap {
  int N = 0, n = 0, m = 0;
  int zdim = 0;  // rows of factor: (N+1)n, or 2(N+1)n when stacked
  int qz = 0;    // columns of factor
  bool stacked = false;
  Eigen::MatrixXd calB;       // (N+1)n x Nm
  Eigen::VectorXd xbar_base;  // calA mu0
  Eigen::MatrixXd factor;     // zdim x qz, driver covariance = factor factor'
  int v_offset = 0;           // first variable id of V (Nm contiguous)
  int k_offset = 0;           // first variable id of the K entries

  int v_var(int k, int c) const { return v_offset + k * m + c; }
  // Entry (i, j) of the gain block K_k.
  int k_var(int k, int i, int j) const { return k_offset + (k * m + i) * n + j; }
  int num_k_vars() const { return N * m * n; }

  // a' E_k (calA mu0 + calB V) as an affine expression in V.
  conic::AffineExpr mean_proj(int k, const Eigen::VectorXd& a) const;

  // factor' * C(K)' * E_k' a, the deviation direction of a' x_k, as a vector
  // of affine expressions in the K entries (length qz).
  std::vector<conic::AffineExpr> dev_proj(int k, const Eigen::VectorXd& a) const;

  // Numeric counterparts at a solved point.
  Eigen::VectorXd mean_state(const Eigen::VectorXd& V) const;  // (N+1)n
  // Full deviation covariance C(K) factor factor' C(K)' ((N+1)n square).
  Eigen::MatrixXd deviation_covariance(const Eigen::MatrixXd& K) const;
};

}  // namespace cs
