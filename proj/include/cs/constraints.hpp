#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "cs/decision_map.hpp"

// Joint chance constraints on the state history, their deterministic convex
// sur rogates, and the posterior ("true") risk of a solved controller.
//
// Polyhedral regions use the classic union bound: each halfspace at each step
// receives a risk share delta_{k,j} and becomes one second-order cone
// constraint on (V, K). Conic regions ||A x + b|| <= c' x + d are handled by
// replacing the radius with its value at the mean and splitting the two-sided
// row constraints either by a three-cut quantile system, by a reversed union
// bound, or - for low effective dimension - by a Gaussian disk tail bound.

namespace cs {

// Intersection of halfspaces alpha_j' x <= beta_j, rows of alpha.
struct PolytopeCC {
  Eigen::MatrixXd alpha;  // M x n
  Eigen::VectorXd beta;   // M

  int size() const { return static_cast<int>(alpha.rows()); }
  bool contains(const Eigen::VectorXd& x) const;
  void validate(int n) const;
};

enum class ConeRelaxation { ThreeCut, ReverseUnionBound, Geometric };

// Disk-bound data for the Geometric relaxation: the cross-section
// xi = H Ac Ip x lives in a low-dimensional subspace.
struct GeometricCC {
  Eigen::MatrixXd Ac;  // p x p
  Eigen::MatrixXd H;   // e x p, selects the nonzero rows of Ac
  Eigen::VectorXd cc;  // p
  Eigen::MatrixXd Ip;  // p x n, state -> cross-section coordinates
  enum class Norm { SpectralLmi, Frobenius } norm = Norm::SpectralLmi;
};

// Second-order cone region ||A x + b|| <= c' x + d.
struct ConeCC {
  Eigen::MatrixXd A;  // n x n
  Eigen::VectorXd b;  // n
  Eigen::VectorXd c;  // n
  double d = 0.0;
  ConeRelaxation relaxation = ConeRelaxation::ThreeCut;
  Eigen::VectorXd beta;  // per-row split; empty means beta_i = 1/n uniformly
  std::optional<GeometricCC> geometric;

  bool contains(const Eigen::VectorXd& x) const;
  Eigen::VectorXd beta_or_default() const;
  std::vector<int> nonzero_rows() const;  // rows of A with any nonzero entry
  void validate(int n) const;
};

// Rotation of the cone data about the x axis of a [position; velocity] state:
// the rotated region contains x iff the base region contains Rbar x.
ConeCC rotated_about_x(const ConeCC& cone, double psi);
Eigen::MatrixXd rotation_about_x(double psi);  // 3 x 3

// Risk allocation over steps k = 1..N (rows) and constraint columns
// (halfspaces for polytopes, a single column for conic regions).
struct RiskAllocation {
  double total = 0.0;     // joint budget Delta
  Eigen::MatrixXd delta;  // N x M

  static RiskAllocation uniform(double Delta, int N, int M);
  double sum() const { return delta.sum(); }
  // Every entry within [floor, cap] and sum <= total.
  void validate(double floor, double cap) const;
};

// Variable bookkeeping created by the conic emitters (solved values feed the
// posterior risk evaluation).
struct ConeAux {
  Eigen::MatrixXi f;         // N x n variable ids of the per-row radii (-1 unused)
  Eigen::MatrixXi t;         // N x n ids of the deviation bounds (-1 unused)
  std::vector<int> geo_s;    // per step: ||mean cross-section|| epigraph
  std::vector<int> geo_t;    // per step: deviation-size epigraph
};

// One SOC constraint per (step, halfspace). delta entries must lie in
// (0, 0.5]; anything larger is rejected.
void emit_polyhedral(conic::Program& prog, const DecisionMap& map, const PolytopeCC& cc,
                     const RiskAllocation& alloc);

// Cone surrogate per the selected relaxation; returns the aux variable ids.
ConeAux emit_cone(conic::Program& prog, const DecisionMap& map, const ConeCC& cc,
                  const RiskAllocation& alloc);

// Posterior per-(step, halfspace) risk of a solved controller given the mean
// history and deviation covariance: 1 - Phi((beta_j - alpha_j' xbar_k) / sd).
Eigen::MatrixXd true_risk_polytope(const PolytopeCC& cc, const Eigen::VectorXd& xbar,
                                   const Eigen::MatrixXd& SigmaX, int N);

struct ConeTrueRisk {
  Eigen::MatrixXd sub;       // N x n per-row two-sided exceedance (0 for zero rows)
  Eigen::VectorXd per_step;  // N, aggregated: max_i sub(k,i)/beta_i, clamped to 1
};

// TC / RUB posterior risk at the solved per-row radii f_values (N x n).
ConeTrueRisk true_risk_cone(const ConeCC& cc, const Eigen::VectorXd& xbar,
                            const Eigen::MatrixXd& SigmaX,
                            const Eigen::MatrixXd& f_values, int N);

// Geometric posterior risk exp(-Rbar_k^2 / (2 sigma_k^2)) with the exact
// spectral deviation size; also returns sigma_k for reporting.
struct GeometricTrueRisk {
  Eigen::VectorXd per_step;  // N
  Eigen::VectorXd sigma;     // N, largest singular value of the cross-section factor
};
GeometricTrueRisk true_risk_geometric(const ConeCC& cc, const Eigen::VectorXd& xbar,
                                      const Eigen::MatrixXd& SigmaX, int N);

}  // namespace cs
