#pragma once

#include <Eigen/Dense>
#include <vector>

// Block lifting of a finite-horizon discrete linear system: the whole state
// history is written as one affine map of the initial state, the stacked
// inputs and the stacked noise, which turns covariance steering into a
// deterministic cone program.

namespace cs {

// x_{k+1} = A_k x_k + B_k u_k + D_k w_k,  k = 0..N-1,  w_k ~ N(0, I_r) i.i.d.
struct LtvSystem {
  int N = 0;  // number of steps
  int n = 0;  // state dimension
  int m = 0;  // input dimension
  int r = 0;  // noise dimension
  std::vector<Eigen::MatrixXd> A;  // N matrices, n x n
  std::vector<Eigen::MatrixXd> B;  // N matrices, n x m
  std::vector<Eigen::MatrixXd> D;  // N matrices, n x r

  static LtvSystem time_invariant(int N, const Eigen::MatrixXd& A,
                                  const Eigen::MatrixXd& B,
                                  const Eigen::MatrixXd& D);

  // Throws std::invalid_argument naming the offending matrix and index.
  void validate() const;
};

// Stacked form X = calA x0 + calB U + calD W with X = [x_0; ...; x_N],
// U = [u_0; ...; u_{N-1}], W = [w_0; ...; w_{N-1}], plus the stacked cost
// weights and the covariance of the uncontrolled deviation process
// y_{k+1} = A_k y_k + D_k w_k, y_0 = x_0 - mu_0.
struct LiftedSystem {
  int N = 0, n = 0, m = 0, r = 0;
  Eigen::MatrixXd calA;  // (N+1)n x n
  Eigen::MatrixXd calB;  // (N+1)n x Nm
  Eigen::MatrixXd calD;  // (N+1)n x Nr
  Eigen::MatrixXd Qbar;  // (N+1)n sq: blkdiag(Q_0..Q_{N-1}, 0)
  Eigen::MatrixXd Rbar;  // Nm sq: blkdiag(R_0..R_{N-1})
  Eigen::MatrixXd SigmaY;       // (N+1)n sq: calA Sigma0 calA' + calD calD'
  Eigen::MatrixXd SigmaY_sqrt;  // factor L with L L' = SigmaY

  // Block selector E_k with E_k X = x_k (n x (N+1)n).
  Eigen::MatrixXd selector(int k) const;
};

// Builds the stacked matrices. Q entries must be symmetric PSD, R entries
// symmetric PD, Sigma0 symmetric PD; violations throw std::invalid_argument.
LiftedSystem lift(const LtvSystem& sys, const std::vector<Eigen::MatrixXd>& Q,
                  const std::vector<Eigen::MatrixXd>& R,
                  const Eigen::MatrixXd& Sigma0);

// Square root factor F with F F' = S for symmetric PSD S: lower Cholesky when
// S is numerically PD, symmetric eigenvalue root (negative eigenvalues
// clamped to zero) otherwise. Throws if S is meaningfully indefinite.
Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& S);

// log det of a symmetric PSD matrix (-inf when singular).
double logdet_psd(const Eigen::MatrixXd& S);

}  // namespace cs
