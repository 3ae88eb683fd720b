#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "cs/lifting.hpp"
#include "cs/rng.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

MatrixXd random_matrix(cs::CounterRng& g, int rows, int cols, double scale = 1.0) {
  MatrixXd M(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) M(i, j) = scale * g.normal();
  return M;
}

MatrixXd random_spd(cs::CounterRng& g, int n, double ridge = 0.5) {
  const MatrixXd L = random_matrix(g, n, n);
  return L * L.transpose() + ridge * MatrixXd::Identity(n, n);
}

cs::LtvSystem random_system(cs::CounterRng& g, int N, int n, int m, int r) {
  cs::LtvSystem sys;
  sys.N = N;
  sys.n = n;
  sys.m = m;
  sys.r = r;
  for (int k = 0; k < N; ++k) {
    sys.A.push_back(random_matrix(g, n, n, 0.8));
    sys.B.push_back(random_matrix(g, n, m));
    sys.D.push_back(random_matrix(g, n, r, 0.3));
  }
  return sys;
}

// Reference: propagate the recursion step by step.
VectorXd stepwise(const cs::LtvSystem& sys, const VectorXd& x0, const VectorXd& U,
                  const VectorXd& W) {
  VectorXd X((sys.N + 1) * sys.n);
  X.head(sys.n) = x0;
  VectorXd x = x0;
  for (int k = 0; k < sys.N; ++k) {
    x = sys.A[k] * x + sys.B[k] * U.segment(k * sys.m, sys.m) +
        sys.D[k] * W.segment(k * sys.r, sys.r);
    X.segment((k + 1) * sys.n, sys.n) = x;
  }
  return X;
}

}  // namespace

TEST_SUITE_BEGIN("lifting");

TEST_CASE("lifted map equals stepwise propagation on random systems") {
  cs::CounterRng g(cs::CounterRng::derive_key(101, 0, 0));
  for (int trial = 0; trial < 25; ++trial) {
    const int N = 2 + static_cast<int>(g.uniform() * 7);
    const int n = 1 + static_cast<int>(g.uniform() * 4);
    const int m = 1 + static_cast<int>(g.uniform() * 3);
    const int r = 1 + static_cast<int>(g.uniform() * 3);
    const cs::LtvSystem sys = random_system(g, N, n, m, r);

    std::vector<MatrixXd> Q(N, MatrixXd::Identity(n, n));
    std::vector<MatrixXd> R(N, MatrixXd::Identity(m, m));
    const cs::LiftedSystem lf = cs::lift(sys, Q, R, MatrixXd::Identity(n, n));

    const VectorXd x0 = random_matrix(g, n, 1);
    const VectorXd U = random_matrix(g, N * m, 1);
    const VectorXd W = random_matrix(g, N * r, 1);
    const VectorXd ref = stepwise(sys, x0, U, W);
    const VectorXd X = lf.calA * x0 + lf.calB * U + lf.calD * W;
    CHECK((X - ref).cwiseAbs().maxCoeff() < 1e-11);
  }
}

TEST_CASE("double integrator lifting has the closed-form blocks") {
  const double dt = 0.5;
  MatrixXd A(2, 2), B(2, 1), D(2, 1);
  A << 1, dt, 0, 1;
  B << dt * dt / 2, dt;
  D << 0, 1;
  const int N = 4;
  const cs::LtvSystem sys = cs::LtvSystem::time_invariant(N, A, B, D);
  std::vector<MatrixXd> Q(N, MatrixXd::Identity(2, 2));
  std::vector<MatrixXd> R(N, MatrixXd::Identity(1, 1));
  const cs::LiftedSystem lf = cs::lift(sys, Q, R, MatrixXd::Identity(2, 2));

  // calA stacks powers of A; A^k keeps 1 on the diagonal and k dt above it.
  for (int k = 0; k <= N; ++k) {
    const MatrixXd blk = lf.calA.block(2 * k, 0, 2, 2);
    CHECK(blk(0, 0) == doctest::Approx(1.0));
    CHECK(blk(0, 1) == doctest::Approx(k * dt));
    CHECK(blk(1, 0) == doctest::Approx(0.0));
    CHECK(blk(1, 1) == doctest::Approx(1.0));
  }
  // Block (k, j) of calB is A^{k-1-j} B for j < k, zero otherwise.
  for (int k = 0; k <= N; ++k)
    for (int j = 0; j < N; ++j) {
      const MatrixXd blk = lf.calB.block(2 * k, j, 2, 1);
      if (j >= k) {
        CHECK(blk.cwiseAbs().maxCoeff() == 0.0);
      } else {
        const int p = k - 1 - j;
        CHECK(blk(0, 0) == doctest::Approx(dt * dt / 2 + p * dt * dt));
        CHECK(blk(1, 0) == doctest::Approx(dt));
      }
    }
}

TEST_CASE("uncontrolled covariance matches the stepwise Lyapunov recursion") {
  cs::CounterRng g(cs::CounterRng::derive_key(102, 0, 0));
  const int N = 6, n = 3, m = 2, r = 2;
  const cs::LtvSystem sys = random_system(g, N, n, m, r);
  std::vector<MatrixXd> Q(N, MatrixXd::Identity(n, n));
  std::vector<MatrixXd> R(N, MatrixXd::Identity(m, m));
  const MatrixXd Sigma0 = random_spd(g, n);
  const cs::LiftedSystem lf = cs::lift(sys, Q, R, Sigma0);

  MatrixXd P = Sigma0;
  CHECK((lf.SigmaY.topLeftCorner(n, n) - P).cwiseAbs().maxCoeff() < 1e-12);
  for (int k = 0; k < N; ++k) {
    P = sys.A[k] * P * sys.A[k].transpose() + sys.D[k] * sys.D[k].transpose();
    const MatrixXd blk = lf.SigmaY.block((k + 1) * n, (k + 1) * n, n, n);
    CHECK((blk - P).cwiseAbs().maxCoeff() < 1e-10);
  }

  // The stored factor reproduces SigmaY.
  const MatrixXd rec = lf.SigmaY_sqrt * lf.SigmaY_sqrt.transpose();
  CHECK((rec - lf.SigmaY).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("selector extracts the k-th state block") {
  cs::CounterRng g(cs::CounterRng::derive_key(103, 0, 0));
  const int N = 5, n = 3;
  const cs::LtvSystem sys = random_system(g, N, n, 1, 1);
  std::vector<MatrixXd> Q(N, MatrixXd::Identity(n, n));
  std::vector<MatrixXd> R(N, MatrixXd::Identity(1, 1));
  const cs::LiftedSystem lf = cs::lift(sys, Q, R, MatrixXd::Identity(n, n));
  const VectorXd X = random_matrix(g, (N + 1) * n, 1);
  for (int k = 0; k <= N; ++k)
    CHECK((lf.selector(k) * X - X.segment(k * n, n)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("cost stacks are block diagonal with a zero terminal state block") {
  cs::CounterRng g(cs::CounterRng::derive_key(104, 0, 0));
  const int N = 3, n = 2, m = 2;
  const cs::LtvSystem sys = random_system(g, N, n, m, 1);
  std::vector<MatrixXd> Q, R;
  for (int k = 0; k < N; ++k) {
    Q.push_back(random_spd(g, n));
    R.push_back(random_spd(g, m));
  }
  const cs::LiftedSystem lf = cs::lift(sys, Q, R, MatrixXd::Identity(n, n));
  for (int k = 0; k < N; ++k) {
    CHECK((lf.Qbar.block(k * n, k * n, n, n) - Q[k]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((lf.Rbar.block(k * m, k * m, m, m) - R[k]).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(lf.Qbar.block(N * n, N * n, n, n).cwiseAbs().maxCoeff() == 0.0);
  // Off-diagonal blocks are zero.
  CHECK(lf.Qbar.block(0, n, n, n).cwiseAbs().maxCoeff() == 0.0);
  CHECK(lf.Rbar.block(0, m, m, m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("psd_sqrt factors PD, PSD-singular and rejects indefinite input") {
  cs::CounterRng g(cs::CounterRng::derive_key(105, 0, 0));
  const MatrixXd S = random_spd(g, 4);
  const MatrixXd F = cs::psd_sqrt(S);
  CHECK((F * F.transpose() - S).cwiseAbs().maxCoeff() < 1e-10);

  // Rank-1 PSD.
  VectorXd v = random_matrix(g, 4, 1);
  const MatrixXd S1 = v * v.transpose();
  const MatrixXd F1 = cs::psd_sqrt(S1);
  CHECK((F1 * F1.transpose() - S1).cwiseAbs().maxCoeff() < 1e-10);

  MatrixXd bad = MatrixXd::Identity(3, 3);
  bad(2, 2) = -1.0;
  CHECK_THROWS_AS(cs::psd_sqrt(bad), std::invalid_argument);
}

TEST_CASE("logdet_psd equals the sum of log eigenvalues") {
  MatrixXd D = MatrixXd::Zero(3, 3);
  D.diagonal() << 2.0, 0.5, 4.0;
  CHECK(cs::logdet_psd(D) ==
        doctest::Approx(std::log(2.0) + std::log(0.5) + std::log(4.0)).epsilon(1e-12));
  MatrixXd S = MatrixXd::Zero(2, 2);
  S(0, 0) = 1.0;  // singular
  CHECK(std::isinf(cs::logdet_psd(S)));
  CHECK(cs::logdet_psd(S) < 0);
}

TEST_CASE("validation rejects malformed systems and weights") {
  cs::CounterRng g(cs::CounterRng::derive_key(106, 0, 0));
  const int N = 3, n = 2, m = 1, r = 1;
  cs::LtvSystem sys = random_system(g, N, n, m, r);
  std::vector<MatrixXd> Q(N, MatrixXd::Identity(n, n));
  std::vector<MatrixXd> R(N, MatrixXd::Identity(m, m));

  cs::LtvSystem wrong = sys;
  wrong.B[1] = MatrixXd::Zero(n, m + 1);
  CHECK_THROWS_AS(wrong.validate(), std::invalid_argument);

  cs::LtvSystem missing = sys;
  missing.A.pop_back();
  CHECK_THROWS_AS(missing.validate(), std::invalid_argument);

  // Indefinite stage weight.
  std::vector<MatrixXd> Qbad = Q;
  Qbad[0](0, 0) = -1.0;
  CHECK_THROWS_AS(cs::lift(sys, Qbad, R, MatrixXd::Identity(n, n)),
                  std::invalid_argument);

  // R must be PD, not merely PSD.
  std::vector<MatrixXd> Rbad = R;
  Rbad[2] = MatrixXd::Zero(m, m);
  CHECK_THROWS_AS(cs::lift(sys, Q, Rbad, MatrixXd::Identity(n, n)),
                  std::invalid_argument);

  // Sigma0 must be PD.
  CHECK_THROWS_AS(cs::lift(sys, Q, R, MatrixXd::Zero(n, n)), std::invalid_argument);
}

TEST_SUITE_END();
