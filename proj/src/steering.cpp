#include "cs/steering.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cs/hardinput.hpp"
#include "steering_detail.hpp"

namespace cs {

// ---------------------------------------------------------------------------
// DecisionMap
// ---------------------------------------------------------------------------

conic::AffineExpr DecisionMap::mean_proj(int k, const Eigen::VectorXd& a) const {
  conic::AffineExpr e(a.dot(xbar_base.segment(k * n, n)));
  const Eigen::VectorXd w = calB.middleRows(k * n, n).transpose() * a;
  for (int idx = 0; idx < w.size(); ++idx) {
    if (w[idx] != 0.0) e.add(v_offset + idx, w[idx]);
  }
  return e;
}

std::vector<conic::AffineExpr> DecisionMap::dev_proj(int k, const Eigen::VectorXd& a) const {
  std::vector<conic::AffineExpr> out(static_cast<size_t>(qz));
  // Direct part: a' E_k Y = a' (row block k of the Y factor) zeta.
  const Eigen::VectorXd base = factor.middleRows(k * n, n).transpose() * a;
  for (int c = 0; c < qz; ++c) out[c].add_constant(base[c]);

  // Feedback part: a' E_k calB K (Y or Z). Row block k of calB selects the
  // gains of steps before k; each gain entry multiplies a factor row of the
  // driver signal.
  const Eigen::VectorXd w = calB.middleRows(k * n, n).transpose() * a;
  const int zoff = stacked ? (N + 1) * n : 0;
  for (int kp = 0; kp < N; ++kp) {
    bool any = false;
    for (int i = 0; i < m && !any; ++i) any = w[kp * m + i] != 0.0;
    if (!any) continue;
    for (int i = 0; i < m; ++i) {
      const double wi = w[kp * m + i];
      if (wi == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        const int var = k_var(kp, i, j);
        const int frow = zoff + kp * n + j;
        for (int c = 0; c < qz; ++c) {
          const double coef = wi * factor(frow, c);
          if (coef != 0.0) out[c].add(var, coef);
        }
      }
    }
  }
  return out;
}

Eigen::VectorXd DecisionMap::mean_state(const Eigen::VectorXd& V) const {
  return xbar_base + calB * V;
}

Eigen::MatrixXd DecisionMap::deviation_covariance(const Eigen::MatrixXd& K) const {
  const int nx = (N + 1) * n;
  Eigen::MatrixXd M1;
  if (stacked) {
    M1 = factor.topRows(nx) + calB * K * factor.bottomRows(nx);
  } else {
    M1 = factor + calB * K * factor;
  }
  Eigen::MatrixXd S = M1 * M1.transpose();
  return 0.5 * (S + S.transpose());
}

// ---------------------------------------------------------------------------
// Shared assembly pieces
// ---------------------------------------------------------------------------

namespace detail {

void set_objective(conic::Program& prog, const DecisionMap& map, const LiftedSystem& lifted,
                   const Eigen::VectorXd& mu0, const Eigen::MatrixXd& Sigma_quad,
                   const Eigen::MatrixXd& Sigma_cross, const Eigen::MatrixXd& Sigma_yy) {
  const int N = map.N, n = map.n, m = map.m;
  const int Nm = N * m;
  const Eigen::MatrixXd M =
      lifted.calB.transpose() * lifted.Qbar * lifted.calB + lifted.Rbar;
  const Eigen::VectorXd xbase = lifted.calA * mu0;

  std::vector<Eigen::Triplet<double>> H;
  H.reserve(static_cast<size_t>(Nm) * Nm + static_cast<size_t>(N * m * n) * (N * m * n));
  for (int i = 0; i < Nm; ++i)
    for (int j = 0; j < Nm; ++j)
      if (M(i, j) != 0.0) H.emplace_back(map.v_offset + i, map.v_offset + j, M(i, j));

  // tr(K' M K Sigma_quad): coefficient of kappa_{k,i,j} kappa_{l,p,q} is
  // M[k m + i, l m + p] * Sigma_quad[l n + q, k n + j].
  for (int k = 0; k < N; ++k)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) {
        const int rowv = map.k_var(k, i, j);
        for (int l = 0; l < N; ++l)
          for (int p = 0; p < m; ++p) {
            const double mv = M(k * m + i, l * m + p);
            if (mv == 0.0) continue;
            for (int q = 0; q < n; ++q) {
              const double hv = mv * Sigma_quad(l * n + q, k * n + j);
              if (hv != 0.0) H.emplace_back(rowv, map.k_var(l, p, q), hv);
            }
          }
      }

  Eigen::VectorXd g = Eigen::VectorXd::Zero(prog.num_variables());
  const Eigen::VectorXd gV = 2.0 * lifted.calB.transpose() * (lifted.Qbar * xbase);
  for (int i = 0; i < Nm; ++i) g[map.v_offset + i] = gV[i];
  // 2 tr(Qbar calB K Sigma_cross'): coefficient of kappa_{k,i,j} is
  // 2 (calB' Qbar Sigma_cross)[k m + i, k n + j].
  const Eigen::MatrixXd GK = 2.0 * lifted.calB.transpose() * lifted.Qbar * Sigma_cross;
  for (int k = 0; k < N; ++k)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) g[map.k_var(k, i, j)] = GK(k * m + i, k * n + j);

  const double constant =
      xbase.dot(lifted.Qbar * xbase) + (lifted.Qbar * Sigma_yy).trace();
  prog.set_objective(std::move(H), std::move(g), constant);
}

void add_terminal_mean(conic::Program& prog, const DecisionMap& map,
                       const Eigen::VectorXd& muf) {
  for (int i = 0; i < map.n; ++i) {
    conic::AffineExpr e = map.mean_proj(map.N, Eigen::VectorXd::Unit(map.n, i));
    e.add_constant(-muf[i]);
    prog.add_linear(std::move(e), conic::Sense::Equal);
  }
}

void add_terminal_lmi(conic::Program& prog, const DecisionMap& map,
                      const Eigen::MatrixXd& Sigmaf) {
  const int n = map.n, qz = map.qz;
  std::vector<std::vector<conic::AffineExpr>> G(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) G[i] = map.dev_proj(map.N, Eigen::VectorXd::Unit(n, i));

  const int dim = n + qz;
  std::vector<conic::AffineExpr> upper;
  upper.reserve(static_cast<size_t>(dim) * (dim + 1) / 2);
  for (int col = 0; col < dim; ++col) {
    for (int row = 0; row <= col; ++row) {
      if (col < n) {
        upper.emplace_back(Sigmaf(row, col));
      } else if (row < n) {
        upper.push_back(G[row][static_cast<size_t>(col - n)]);
      } else {
        upper.emplace_back(row == col ? 1.0 : 0.0);
      }
    }
  }
  prog.add_psd(dim, std::move(upper));
}

ConeAux emit_chance(conic::Program& prog, const DecisionMap& map, const ChanceSpec& chance,
                    const RiskAllocation& alloc) {
  ConeAux aux;
  if (std::holds_alternative<PolytopeCC>(chance)) {
    emit_polyhedral(prog, map, std::get<PolytopeCC>(chance), alloc);
  } else if (std::holds_alternative<ConeCC>(chance)) {
    aux = emit_cone(prog, map, std::get<ConeCC>(chance), alloc);
  }
  return aux;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// SteeringProblem
// ---------------------------------------------------------------------------

int SteeringProblem::chance_columns() const {
  if (std::holds_alternative<PolytopeCC>(chance))
    return std::get<PolytopeCC>(chance).size();
  if (std::holds_alternative<ConeCC>(chance)) return 1;
  return 0;
}

void SteeringProblem::validate() const {
  sys.validate();
  if (mu0.size() != sys.n) throw std::invalid_argument("steering: mu0 size mismatch");
  if (Sigma0.rows() != sys.n || Sigma0.cols() != sys.n)
    throw std::invalid_argument("steering: Sigma0 size mismatch");
  if (static_cast<int>(Q.size()) != sys.N || static_cast<int>(R.size()) != sys.N)
    throw std::invalid_argument("steering: Q and R must supply one weight per step");
  if (terminal.muf.size() != sys.n)
    throw std::invalid_argument("steering: terminal mean size mismatch");
  if (terminal.Sigmaf.rows() != sys.n || terminal.Sigmaf.cols() != sys.n)
    throw std::invalid_argument("steering: terminal covariance size mismatch");
  if (!terminal.Sigmaf.isApprox(terminal.Sigmaf.transpose(), 1e-10))
    throw std::invalid_argument("steering: terminal covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sf_eig(terminal.Sigmaf,
                                                        Eigen::EigenvaluesOnly);
  if (sf_eig.eigenvalues().minCoeff() <
      -1e-10 * std::max(1.0, terminal.Sigmaf.norm()))
    throw std::invalid_argument(
        "steering: terminal covariance must be positive semidefinite");
  if (std::holds_alternative<PolytopeCC>(chance))
    std::get<PolytopeCC>(chance).validate(sys.n);
  if (std::holds_alternative<ConeCC>(chance)) std::get<ConeCC>(chance).validate(sys.n);
  if (saturation) {
    saturation->validate(sys.n, sys.m);
    if (sys.r != sys.n)
      throw std::invalid_argument(
          "steering: the saturated feedback channel requires noise dimension "
          "equal to state dimension");
  }
}

Assembled assemble(const SteeringProblem& pb, const RiskAllocation& alloc) {
  pb.validate();
  const int M = pb.chance_columns();
  if (M > 0 && (alloc.delta.rows() != pb.sys.N || alloc.delta.cols() != M))
    throw std::invalid_argument("steering: risk allocation shape mismatch");

  if (pb.saturation) return assemble_hard(pb, alloc);

  Assembled out;
  out.lifted = lift(pb.sys, pb.Q, pb.R, pb.Sigma0);
  const LiftedSystem& lf = out.lifted;
  const int N = lf.N, n = lf.n, m = lf.m;

  DecisionMap& map = out.map;
  map.N = N;
  map.n = n;
  map.m = m;
  map.zdim = (N + 1) * n;
  map.qz = static_cast<int>(lf.SigmaY_sqrt.cols());
  map.stacked = false;
  map.calB = lf.calB;
  map.xbar_base = lf.calA * pb.mu0;
  map.factor = lf.SigmaY_sqrt;
  map.v_offset = 0;
  map.k_offset = N * m;

  conic::Program& prog = out.program;
  prog.add_variables(N * m + map.num_k_vars());
  detail::set_objective(prog, map, lf, pb.mu0, lf.SigmaY, lf.SigmaY, lf.SigmaY);
  detail::add_terminal_mean(prog, map, pb.terminal.muf);
  detail::add_terminal_lmi(prog, map, pb.terminal.Sigmaf);
  out.cone_aux = detail::emit_chance(prog, map, pb.chance, alloc);
  return out;
}

Eigen::MatrixXd ControllerSolution::gain_block(int k) const {
  return K.block(k * m, k * n, m, n);
}

ControllerSolution extract(const SteeringProblem& pb, const Assembled& asm_,
                           const conic::SolveResult& res) {
  const int N = pb.sys.N, n = pb.sys.n, m = pb.sys.m;
  ControllerSolution sol;
  sol.N = N;
  sol.n = n;
  sol.m = m;
  sol.status = res.status;
  sol.message = res.message;
  sol.J = res.objective;
  sol.iterations = res.iterations;
  sol.reduced_accuracy = res.reduced_accuracy;
  sol.max_violation = res.max_violation;
  if (res.status != conic::SolveStatus::Optimal) return sol;

  const DecisionMap& map = asm_.map;
  sol.V = res.x.segment(map.v_offset, N * m);
  sol.K = Eigen::MatrixXd::Zero(N * m, (N + 1) * n);
  for (int k = 0; k < N; ++k)
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        sol.K(k * m + i, k * n + j) = res.x[map.k_var(k, i, j)];

  sol.xbar = map.mean_state(sol.V);
  sol.SigmaX = map.deviation_covariance(sol.K);
  sol.VN = logdet_psd(sol.SigmaX.block(N * n, N * n, n, n));

  sol.f_values = Eigen::MatrixXd::Constant(N, n, std::numeric_limits<double>::quiet_NaN());
  if (asm_.cone_aux.f.size() > 0) {
    for (int k = 0; k < N; ++k)
      for (int i = 0; i < n; ++i)
        if (asm_.cone_aux.f(k, i) >= 0) sol.f_values(k, i) = res.x[asm_.cone_aux.f(k, i)];
  }
  if (std::holds_alternative<ConeCC>(pb.chance)) {
    const ConeCC& cone = std::get<ConeCC>(pb.chance);
    if (cone.relaxation == ConeRelaxation::Geometric) {
      sol.geo_sigma = true_risk_geometric(cone, sol.xbar, sol.SigmaX, N).sigma;
    }
  }
  return sol;
}

ControllerSolution solve_steering(const SteeringProblem& pb, const RiskAllocation& alloc,
                                  const conic::SolverOptions& opts) {
  Assembled asm_ = assemble(pb, alloc);
  conic::SolveResult res = conic::solve(asm_.program, opts);
  return extract(pb, asm_, res);
}

Eigen::MatrixXd posterior_risk(const SteeringProblem& pb, const ControllerSolution& sol) {
  const int N = pb.sys.N;
  if (std::holds_alternative<PolytopeCC>(pb.chance)) {
    return true_risk_polytope(std::get<PolytopeCC>(pb.chance), sol.xbar, sol.SigmaX, N);
  }
  if (std::holds_alternative<ConeCC>(pb.chance)) {
    const ConeCC& cone = std::get<ConeCC>(pb.chance);
    if (cone.relaxation == ConeRelaxation::Geometric) {
      return true_risk_geometric(cone, sol.xbar, sol.SigmaX, N).per_step;
    }
    return true_risk_cone(cone, sol.xbar, sol.SigmaX, sol.f_values, N).per_step;
  }
  return Eigen::MatrixXd();
}

}  // namespace cs
