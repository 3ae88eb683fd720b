#include "cs/lifting.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace cs {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool is_symmetric(const Eigen::MatrixXd& S, double tol = 1e-10) {
  if (S.rows() != S.cols()) return false;
  double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
  return (S - S.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

double min_eig(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

}  // namespace

LtvSystem LtvSystem::time_invariant(int N, const Eigen::MatrixXd& A,
                                    const Eigen::MatrixXd& B,
                                    const Eigen::MatrixXd& D) {
  LtvSystem sys;
  sys.N = N;
  sys.n = static_cast<int>(A.rows());
  sys.m = static_cast<int>(B.cols());
  sys.r = static_cast<int>(D.cols());
  sys.A.assign(N, A);
  sys.B.assign(N, B);
  sys.D.assign(N, D);
  sys.validate();
  return sys;
}

void LtvSystem::validate() const {
  require(N >= 1, "LtvSystem: horizon N must be >= 1");
  require(n >= 1 && m >= 1 && r >= 1, "LtvSystem: dimensions must be positive");
  require(static_cast<int>(A.size()) == N, "LtvSystem: A needs N entries");
  require(static_cast<int>(B.size()) == N, "LtvSystem: B needs N entries");
  require(static_cast<int>(D.size()) == N, "LtvSystem: D needs N entries");
  for (int k = 0; k < N; ++k) {
    require(A[k].rows() == n && A[k].cols() == n,
            "LtvSystem: A[" + std::to_string(k) + "] must be n x n");
    require(B[k].rows() == n && B[k].cols() == m,
            "LtvSystem: B[" + std::to_string(k) + "] must be n x m");
    require(D[k].rows() == n && D[k].cols() == r,
            "LtvSystem: D[" + std::to_string(k) + "] must be n x r");
  }
}

Eigen::MatrixXd LiftedSystem::selector(int k) const {
  if (k < 0 || k > N) throw std::invalid_argument("selector: k out of range");
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(n, (N + 1) * n);
  E.middleCols(k * n, n).setIdentity();
  return E;
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S) {
  if (!is_symmetric(S)) throw std::invalid_argument("psd_sqrt: matrix not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() == Eigen::Success) {
    return Eigen::MatrixXd(llt.matrixL());
  }
  // Semi-definite (or barely indefinite from round-off): symmetric root.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  Eigen::VectorXd ev = es.eigenvalues();
  double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-8 * scale) {
    throw std::invalid_argument("psd_sqrt: matrix is indefinite");
  }
  Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double logdet_psd(const Eigen::MatrixXd& S) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  double acc = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    double v = es.eigenvalues()[i];
    if (v <= 0.0) return -std::numeric_limits<double>::infinity();
    acc += std::log(v);
  }
  return acc;
}

LiftedSystem lift(const LtvSystem& sys, const std::vector<Eigen::MatrixXd>& Q,
                  const std::vector<Eigen::MatrixXd>& R,
                  const Eigen::MatrixXd& Sigma0) {
  sys.validate();
  const int N = sys.N, n = sys.n, m = sys.m, r = sys.r;
  require(static_cast<int>(Q.size()) == N, "lift: Q needs N entries");
  require(static_cast<int>(R.size()) == N, "lift: R needs N entries");
  for (int k = 0; k < N; ++k) {
    require(Q[k].rows() == n && Q[k].cols() == n && is_symmetric(Q[k]),
            "lift: Q[" + std::to_string(k) + "] must be symmetric n x n");
    require(min_eig(Q[k]) >= -1e-10 * std::max(1.0, Q[k].cwiseAbs().maxCoeff()),
            "lift: Q[" + std::to_string(k) + "] must be positive semidefinite");
    require(R[k].rows() == m && R[k].cols() == m && is_symmetric(R[k]),
            "lift: R[" + std::to_string(k) + "] must be symmetric m x m");
    require(min_eig(R[k]) > 0.0,
            "lift: R[" + std::to_string(k) + "] must be positive definite");
  }
  require(Sigma0.rows() == n && Sigma0.cols() == n && is_symmetric(Sigma0),
          "lift: Sigma0 must be symmetric n x n");
  require(min_eig(Sigma0) > 0.0, "lift: Sigma0 must be positive definite");

  LiftedSystem lf;
  lf.N = N;
  lf.n = n;
  lf.m = m;
  lf.r = r;
  lf.calA = Eigen::MatrixXd::Zero((N + 1) * n, n);
  lf.calB = Eigen::MatrixXd::Zero((N + 1) * n, N * m);
  lf.calD = Eigen::MatrixXd::Zero((N + 1) * n, N * r);

  // Row block k holds Phi(k,0) = A_{k-1}...A_0 and Phi(k,j+1) B_j / D_j.
  lf.calA.topRows(n).setIdentity();
  for (int k = 1; k <= N; ++k) {
    lf.calA.middleRows(k * n, n) = sys.A[k - 1] * lf.calA.middleRows((k - 1) * n, n);
    for (int j = 0; j < k; ++j) {
      if (j == k - 1) {
        lf.calB.block(k * n, j * m, n, m) = sys.B[j];
        lf.calD.block(k * n, j * r, n, r) = sys.D[j];
      } else {
        lf.calB.block(k * n, j * m, n, m) =
            sys.A[k - 1] * lf.calB.block((k - 1) * n, j * m, n, m);
        lf.calD.block(k * n, j * r, n, r) =
            sys.A[k - 1] * lf.calD.block((k - 1) * n, j * r, n, r);
      }
    }
  }

  lf.Qbar = Eigen::MatrixXd::Zero((N + 1) * n, (N + 1) * n);
  lf.Rbar = Eigen::MatrixXd::Zero(N * m, N * m);
  for (int k = 0; k < N; ++k) {
    lf.Qbar.block(k * n, k * n, n, n) = Q[k];
    lf.Rbar.block(k * m, k * m, m, m) = R[k];
  }

  lf.SigmaY = lf.calA * Sigma0 * lf.calA.transpose() + lf.calD * lf.calD.transpose();
  lf.SigmaY = 0.5 * (lf.SigmaY + lf.SigmaY.transpose().eval());
  lf.SigmaY_sqrt = psd_sqrt(lf.SigmaY);
  return lf;
}

}  // namespace cs
