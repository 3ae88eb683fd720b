#pragma once

#include "cs/steering.hpp"

// Assembly pieces shared between the plain steering program and the
// saturated-feedback variant.

namespace cs::detail {

// Expected quadratic cost over (V, K). With M = calB' Qbar calB + Rbar:
//   J = (calA mu0 + calB V)' Qbar (calA mu0 + calB V) + V' Rbar V
//       + tr(K' M K Sigma_quad) + 2 tr(Qbar calB K Sigma_cross')
//       + tr(Qbar Sigma_yy)
// where Sigma_quad is the covariance of the feedback driver and Sigma_cross
// its cross covariance E[Y driver'] with the autonomous deviation Y. The
// plain controller feeds back Y itself, so both collapse to Sigma_yy.
void set_objective(conic::Program& prog, const DecisionMap& map, const LiftedSystem& lifted,
                   const Eigen::VectorXd& mu0, const Eigen::MatrixXd& Sigma_quad,
                   const Eigen::MatrixXd& Sigma_cross, const Eigen::MatrixXd& Sigma_yy);

// E_N (calA mu0 + calB V) == muf, one equality per state component.
void add_terminal_mean(conic::Program& prog, const DecisionMap& map,
                       const Eigen::VectorXd& muf);

// Terminal covariance bound as the Schur-complement LMI
//   [ Sigmaf          G(K) ]
//   [ G(K)'           I    ]  >= 0,   G(K) row i = dev_proj(N, e_i),
// equivalent to E_N C(K) factor factor' C(K)' E_N' <= Sigmaf.
void add_terminal_lmi(conic::Program& prog, const DecisionMap& map,
                      const Eigen::MatrixXd& Sigmaf);

ConeAux emit_chance(conic::Program& prog, const DecisionMap& map, const ChanceSpec& chance,
                    const RiskAllocation& alloc);

}  // namespace cs::detail
