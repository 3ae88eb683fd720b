#include "cs/constraints.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cs/normal.hpp"

namespace cs {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

// Quantile of the allocated share; exactly zero at delta == 0.5 so that a
// half allocation degenerates to a constraint on the mean alone.
double share_quantile(double delta, const char* where) {
  require(delta > 0.0 && delta <= 0.5,
          std::string(where) + ": risk share must lie in (0, 0.5]");
  if (delta == 0.5) return 0.0;
  return norm_quantile(1.0 - delta);
}

}  // namespace

bool PolytopeCC::contains(const Eigen::VectorXd& x) const {
  for (int j = 0; j < size(); ++j) {
    if (alpha.row(j).dot(x) > beta[j]) return false;
  }
  return true;
}

void PolytopeCC::validate(int n) const {
  require(alpha.rows() >= 1, "PolytopeCC: needs at least one halfspace");
  require(alpha.cols() == n, "PolytopeCC: alpha column count != state dimension");
  require(beta.size() == alpha.rows(), "PolytopeCC: beta size != halfspace count");
  for (int j = 0; j < size(); ++j) {
    require(alpha.row(j).cwiseAbs().maxCoeff() > 0.0,
            "PolytopeCC: alpha row " + std::to_string(j) + " is zero");
  }
}

bool ConeCC::contains(const Eigen::VectorXd& x) const {
  return (A * x + b).norm() <= c.dot(x) + d;
}

Eigen::VectorXd ConeCC::beta_or_default() const {
  if (beta.size() > 0) return beta;
  int n = static_cast<int>(A.rows());
  return Eigen::VectorXd::Constant(n, 1.0 / n);
}

std::vector<int> ConeCC::nonzero_rows() const {
  std::vector<int> rows;
  for (int i = 0; i < A.rows(); ++i) {
    if (A.row(i).cwiseAbs().maxCoeff() > 0.0) rows.push_back(i);
  }
  return rows;
}

void ConeCC::validate(int n) const {
  require(A.rows() == n && A.cols() == n, "ConeCC: A must be n x n");
  require(b.size() == n, "ConeCC: b size != n");
  require(c.size() == n, "ConeCC: c size != n");
  require(!nonzero_rows().empty(), "ConeCC: A has no nonzero row");
  Eigen::VectorXd bt = beta_or_default();
  require(bt.size() == n, "ConeCC: beta size != n");
  require(bt.minCoeff() > 0.0, "ConeCC: beta entries must be positive");
  require(bt.sum() <= 1.0 + 1e-12, "ConeCC: beta entries must sum to at most 1");
  if (relaxation == ConeRelaxation::Geometric) {
    require(geometric.has_value(), "ConeCC: geometric relaxation needs GeometricCC data");
    require(b.cwiseAbs().maxCoeff() == 0.0,
            "ConeCC: geometric relaxation requires b = 0");
    const auto& g = *geometric;
    int p = static_cast<int>(g.Ac.rows());
    require(g.Ac.cols() == p, "GeometricCC: Ac must be square");
    require(g.Ip.rows() == p && g.Ip.cols() == n, "GeometricCC: Ip must be p x n");
    require(g.cc.size() == p, "GeometricCC: cc size != p");
    require(g.H.cols() == p && g.H.rows() >= 1, "GeometricCC: H must be e x p");
  }
}

Eigen::MatrixXd rotation_about_x(double psi) {
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(3, 3);
  double cp = std::cos(psi), sp = std::sin(psi);
  R(1, 1) = cp;
  R(1, 2) = sp;
  R(2, 1) = -sp;
  R(2, 2) = cp;
  return R;
}

ConeCC rotated_about_x(const ConeCC& cone, double psi) {
  require(cone.A.rows() == 6, "rotated_about_x: expects a 6-state [pos; vel] cone");
  Eigen::MatrixXd R3 = rotation_about_x(psi);
  Eigen::MatrixXd Rbar = Eigen::MatrixXd::Zero(6, 6);
  Rbar.topLeftCorner(3, 3) = R3;
  Rbar.bottomRightCorner(3, 3) = R3;
  ConeCC out = cone;
  out.A = cone.A * Rbar;
  out.c = Rbar.transpose() * cone.c;
  if (cone.geometric.has_value()) {
    require(cone.geometric->Ac.rows() == 3,
            "rotated_about_x: geometric cross-section must be 3-dimensional");
    out.geometric->Ac = cone.geometric->Ac * R3;
    out.geometric->cc = R3.transpose() * cone.geometric->cc;
  }
  return out;
}

RiskAllocation RiskAllocation::uniform(double Delta, int N, int M) {
  require(Delta > 0.0 && Delta < 1.0, "RiskAllocation: Delta must lie in (0,1)");
  require(N >= 1 && M >= 1, "RiskAllocation: empty grid");
  RiskAllocation a;
  a.total = Delta;
  a.delta = Eigen::MatrixXd::Constant(N, M, Delta / (N * M));
  // Round-off can push the sum a few ulps past the budget; trim the last
  // entry so that sum <= Delta holds exactly.
  double s = a.delta.sum();
  if (s > Delta) a.delta(N - 1, M - 1) -= (s - Delta);
  return a;
}

void RiskAllocation::validate(double floor, double cap) const {
  require(delta.size() > 0, "RiskAllocation: empty");
  require(delta.minCoeff() >= floor, "RiskAllocation: entry below floor");
  require(delta.maxCoeff() <= cap, "RiskAllocation: entry above cap");
  require(sum() <= total, "RiskAllocation: allocation exceeds budget");
}

void emit_polyhedral(conic::Program& prog, const DecisionMap& map, const PolytopeCC& cc,
                     const RiskAllocation& alloc) {
  cc.validate(map.n);
  const int M = cc.size();
  require(alloc.delta.rows() == map.N && alloc.delta.cols() == M,
          "emit_polyhedral: allocation grid must be N x M");
  for (int k = 1; k <= map.N; ++k) {
    for (int j = 0; j < M; ++j) {
      const Eigen::VectorXd a = cc.alpha.row(j).transpose();
      double qv = share_quantile(alloc.delta(k - 1, j), "emit_polyhedral");
      conic::AffineExpr mean = map.mean_proj(k, a);
      if (qv == 0.0) {
        mean.add_constant(-cc.beta[j]);
        prog.add_linear(std::move(mean), conic::Sense::LessEqual);
        continue;
      }
      conic::AffineExpr rhs(cc.beta[j]);
      rhs -= mean;
      std::vector<conic::AffineExpr> dev = map.dev_proj(k, a);
      for (auto& e : dev) e *= qv;
      prog.add_soc(std::move(dev), std::move(rhs));
    }
  }
}

namespace {

void emit_radius_soc(conic::Program& prog, const DecisionMap& map, const ConeCC& cc,
                     int k, const std::vector<int>& rows, const Eigen::MatrixXi& f) {
  // || f_k || <= c' xbar_k + d with the radius taken at the mean.
  conic::AffineExpr rhs = map.mean_proj(k, cc.c);
  rhs.add_constant(cc.d);
  std::vector<conic::AffineExpr> fvec;
  fvec.reserve(rows.size());
  for (int i : rows) fvec.push_back(conic::AffineExpr::variable(f(k - 1, i)));
  prog.add_soc(std::move(fvec), std::move(rhs));
}

}  // namespace

ConeAux emit_cone(conic::Program& prog, const DecisionMap& map, const ConeCC& cc,
                  const RiskAllocation& alloc) {
  cc.validate(map.n);
  require(alloc.delta.rows() == map.N && alloc.delta.cols() == 1,
          "emit_cone: allocation grid must be N x 1");
  const std::vector<int> rows = cc.nonzero_rows();
  const Eigen::VectorXd beta = cc.beta_or_default();

  ConeAux aux;
  aux.f = Eigen::MatrixXi::Constant(map.N, map.n, -1);
  aux.t = Eigen::MatrixXi::Constant(map.N, map.n, -1);

  if (cc.relaxation == ConeRelaxation::Geometric) {
    const GeometricCC& g = *cc.geometric;
    const Eigen::MatrixXd W = g.H * g.Ac * g.Ip;       // e x n cross-section map
    const Eigen::VectorXd cvec = g.Ip.transpose() * g.cc;
    const int e = static_cast<int>(W.rows());
    for (int k = 1; k <= map.N; ++k) {
      double dl = alloc.delta(k - 1, 0);
      require(dl > 0.0 && dl < 1.0, "emit_cone: geometric risk share outside (0,1)");
      const double gain = std::sqrt(2.0 * std::log(1.0 / dl));

      int s_var = prog.add_variable();
      int t_var = prog.add_variable();
      aux.geo_s.push_back(s_var);
      aux.geo_t.push_back(t_var);

      std::vector<conic::AffineExpr> mean_xs(e);
      for (int i = 0; i < e; ++i) mean_xs[i] = map.mean_proj(k, W.row(i).transpose());
      prog.add_soc(std::move(mean_xs), conic::AffineExpr::variable(s_var));

      std::vector<std::vector<conic::AffineExpr>> Mx(e);
      for (int i = 0; i < e; ++i) Mx[i] = map.dev_proj(k, W.row(i).transpose());
      if (g.norm == GeometricCC::Norm::Frobenius) {
        std::vector<conic::AffineExpr> flat;
        flat.reserve(e * map.qz);
        for (auto& row : Mx)
          for (auto& expr : row) flat.push_back(std::move(expr));
        prog.add_soc(std::move(flat), conic::AffineExpr::variable(t_var));
      } else {
        // t >= ||Mx||_2  via  [[t I_e, Mx], [Mx', t I_qz]] >= 0.
        const int dim = e + map.qz;
        std::vector<conic::AffineExpr> upper;
        upper.reserve(dim * (dim + 1) / 2);
        for (int col = 0; col < dim; ++col) {
          for (int row = 0; row <= col; ++row) {
            if (row == col) {
              upper.push_back(conic::AffineExpr::variable(t_var));
            } else if (row < e && col >= e) {
              upper.push_back(Mx[row][col - e]);
            } else {
              upper.push_back(conic::AffineExpr(0.0));
            }
          }
        }
        prog.add_psd(dim, std::move(upper));
      }

      conic::AffineExpr lin = conic::AffineExpr::variable(t_var, gain);
      lin.add(s_var, 1.0);
      lin -= map.mean_proj(k, cvec);
      lin.add_constant(-cc.d);
      prog.add_linear(std::move(lin), conic::Sense::LessEqual);
    }
    return aux;
  }

  for (int k = 1; k <= map.N; ++k) {
    double dl = alloc.delta(k - 1, 0);
    for (int i : rows) {
      aux.f(k - 1, i) = prog.add_variable();
      if (cc.relaxation == ConeRelaxation::ThreeCut) aux.t(k - 1, i) = prog.add_variable();
    }
    for (int i : rows) {
      const Eigen::VectorXd a = cc.A.row(i).transpose();
      const double share = beta[i] * dl;
      const int f_var = aux.f(k - 1, i);
      conic::AffineExpr mean = map.mean_proj(k, a);

      if (cc.relaxation == ConeRelaxation::ThreeCut) {
        require(share > 0.0 && share <= 0.5,
                "emit_cone: three-cut per-row share outside (0, 0.5]");
        const int t_var = aux.t(k - 1, i);
        const double q_lo = (share == 0.5) ? 0.0 : norm_quantile(share);
        const double q_hi = (share == 0.5) ? 0.0 : norm_quantile(1.0 - share);
        const double q_half = norm_quantile(0.5 * share);

        prog.add_soc(map.dev_proj(k, a), conic::AffineExpr::variable(t_var));
        // lower tail: -(f + b_i + a' xbar) <= q_lo t
        conic::AffineExpr lo = mean;
        lo *= -1.0;
        lo.add_constant(-cc.b[i]);
        lo.add(f_var, -1.0);
        lo.add(t_var, -q_lo);
        prog.add_linear(std::move(lo), conic::Sense::LessEqual);
        // upper tail: f - b_i - a' xbar >= q_hi t
        conic::AffineExpr hi = mean;
        hi.add_constant(cc.b[i]);
        hi.add(f_var, -1.0);
        hi.add(t_var, q_hi);
        prog.add_linear(std::move(hi), conic::Sense::LessEqual);
        // width: -f <= q_half t  (q_half < 0 forces f to scale with t)
        conic::AffineExpr width;
        width.add(f_var, -1.0);
        width.add(t_var, -q_half);
        prog.add_linear(std::move(width), conic::Sense::LessEqual);
      } else {
        // Reverse union bound with the symmetric split eps1 = eps2 = 1 - share/2.
        require(share > 0.0 && share < 1.0,
                "emit_cone: reverse-union-bound share outside (0, 1)");
        const double q = norm_quantile(1.0 - 0.5 * share);
        {
          std::vector<conic::AffineExpr> dev = map.dev_proj(k, a);
          for (auto& expr : dev) expr *= q;
          conic::AffineExpr rhs = conic::AffineExpr::variable(f_var);
          rhs.add_constant(-cc.b[i]);
          rhs -= mean;
          prog.add_soc(std::move(dev), std::move(rhs));
        }
        {
          std::vector<conic::AffineExpr> dev = map.dev_proj(k, a);
          for (auto& expr : dev) expr *= q;
          conic::AffineExpr rhs = conic::AffineExpr::variable(f_var);
          rhs.add_constant(cc.b[i]);
          rhs += mean;
          prog.add_soc(std::move(dev), std::move(rhs));
        }
      }
    }
    emit_radius_soc(prog, map, cc, k, rows, aux.f);
  }
  return aux;
}

Eigen::MatrixXd true_risk_polytope(const PolytopeCC& cc, const Eigen::VectorXd& xbar,
                                   const Eigen::MatrixXd& SigmaX, int N) {
  const int n = static_cast<int>(cc.alpha.cols());
  Eigen::MatrixXd out(N, cc.size());
  for (int k = 1; k <= N; ++k) {
    const Eigen::VectorXd xk = xbar.segment(k * n, n);
    const Eigen::MatrixXd Sk = SigmaX.block(k * n, k * n, n, n);
    for (int j = 0; j < cc.size(); ++j) {
      const Eigen::VectorXd a = cc.alpha.row(j).transpose();
      double margin = cc.beta[j] - a.dot(xk);
      double sd = std::sqrt(std::max(0.0, a.dot(Sk * a)));
      if (sd <= 1e-300) {
        out(k - 1, j) = (margin >= 0.0) ? 0.0 : 1.0;
      } else {
        out(k - 1, j) = 1.0 - norm_cdf(margin / sd);
      }
    }
  }
  return out;
}

ConeTrueRisk true_risk_cone(const ConeCC& cc, const Eigen::VectorXd& xbar,
                            const Eigen::MatrixXd& SigmaX,
                            const Eigen::MatrixXd& f_values, int N) {
  const int n = static_cast<int>(cc.A.rows());
  const Eigen::VectorXd beta = cc.beta_or_default();
  ConeTrueRisk tr;
  tr.sub = Eigen::MatrixXd::Zero(N, n);
  tr.per_step = Eigen::VectorXd::Zero(N);
  for (int k = 1; k <= N; ++k) {
    const Eigen::VectorXd xk = xbar.segment(k * n, n);
    const Eigen::MatrixXd Sk = SigmaX.block(k * n, k * n, n, n);
    double worst = 0.0;
    for (int i : cc.nonzero_rows()) {
      const Eigen::VectorXd a = cc.A.row(i).transpose();
      const double mean = a.dot(xk) + cc.b[i];
      const double sd = std::sqrt(std::max(0.0, a.dot(Sk * a)));
      const double f = f_values(k - 1, i);
      double sub;
      if (sd <= 1e-300) {
        sub = (std::fabs(mean) <= f) ? 0.0 : 1.0;
      } else {
        sub = 1.0 - (norm_cdf((f - mean) / sd) - norm_cdf((-f - mean) / sd));
      }
      sub = std::min(std::max(sub, 0.0), 1.0);
      tr.sub(k - 1, i) = sub;
      worst = std::max(worst, sub / beta[i]);
    }
    tr.per_step[k - 1] = std::min(worst, 1.0);
  }
  return tr;
}

GeometricTrueRisk true_risk_geometric(const ConeCC& cc, const Eigen::VectorXd& xbar,
                                      const Eigen::MatrixXd& SigmaX, int N) {
  const GeometricCC& g = *cc.geometric;
  const int n = static_cast<int>(cc.A.rows());
  const Eigen::MatrixXd W = g.H * g.Ac * g.Ip;
  const Eigen::VectorXd cvec = g.Ip.transpose() * g.cc;
  GeometricTrueRisk tr;
  tr.per_step = Eigen::VectorXd::Zero(N);
  tr.sigma = Eigen::VectorXd::Zero(N);
  for (int k = 1; k <= N; ++k) {
    const Eigen::VectorXd xk = xbar.segment(k * n, n);
    const Eigen::MatrixXd Sk = SigmaX.block(k * n, k * n, n, n);
    const Eigen::MatrixXd Sxi = W * Sk * W.transpose();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Sxi, Eigen::EigenvaluesOnly);
    const double sigma = std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
    const double margin = cvec.dot(xk) + cc.d - (W * xk).norm();
    tr.sigma[k - 1] = sigma;
    if (margin <= 0.0) {
      tr.per_step[k - 1] = 1.0;
    } else if (sigma <= 1e-300) {
      tr.per_step[k - 1] = 0.0;
    } else {
      tr.per_step[k - 1] = std::exp(-0.5 * margin * margin / (sigma * sigma));
    }
  }
  return tr;
}

}  // namespace cs
