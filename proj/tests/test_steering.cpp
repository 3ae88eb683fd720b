#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <variant>

#include "cs/lifting.hpp"
#include "cs/steering.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

cs::SteeringProblem integrator_problem(int N, double dnoise) {
  const double dt = 1.0;
  MatrixXd A(2, 2), B(2, 1), D(2, 2);
  A << 1, dt, 0, 1;
  B << 0.5 * dt * dt, dt;
  D = dnoise * MatrixXd::Identity(2, 2);
  cs::SteeringProblem pb;
  pb.sys = cs::LtvSystem::time_invariant(N, A, B, D);
  pb.mu0 = (VectorXd(2) << 5.0, -1.0).finished();
  pb.Sigma0 = 0.5 * MatrixXd::Identity(2, 2);
  pb.Q.assign(N, MatrixXd::Identity(2, 2));
  pb.R.assign(N, MatrixXd::Identity(1, 1));
  pb.terminal.muf = (VectorXd(2) << 0.0, 0.0).finished();
  pb.terminal.Sigmaf = 0.3 * MatrixXd::Identity(2, 2);
  return pb;
}

}  // namespace

TEST_SUITE_BEGIN("steering");

TEST_CASE("noise-free unweighted steering reduces to min-energy least squares") {
  const int N = 4;
  cs::SteeringProblem pb = integrator_problem(N, 0.0);
  pb.Q.assign(N, MatrixXd::Zero(2, 2));
  pb.terminal.Sigmaf = 1e3 * MatrixXd::Identity(2, 2);  // covariance slack

  const cs::RiskAllocation none{0.0, MatrixXd(N, 0)};
  const cs::ControllerSolution sol = cs::solve_steering(pb, none);
  REQUIRE(sol.status == cs::conic::SolveStatus::Optimal);

  const cs::LiftedSystem lf = cs::lift(pb.sys, pb.Q, pb.R, pb.Sigma0);
  const MatrixXd Bn = lf.selector(N) * lf.calB;
  const VectorXd rhs = pb.terminal.muf - lf.selector(N) * lf.calA * pb.mu0;
  const VectorXd vstar =
      Bn.transpose() * (Bn * Bn.transpose()).ldlt().solve(rhs);
  CHECK((sol.V - vstar).cwiseAbs().maxCoeff() < 2e-5);
  // With zero state weight and a slack terminal bound, feedback only costs.
  CHECK(sol.K.cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("solution satisfies the terminal mean and covariance bound") {
  const int N = 5;
  cs::SteeringProblem pb = integrator_problem(N, 0.05);
  const cs::RiskAllocation none{0.0, MatrixXd(N, 0)};
  const cs::ControllerSolution sol = cs::solve_steering(pb, none);
  REQUIRE(sol.status == cs::conic::SolveStatus::Optimal);

  const int n = pb.sys.n;
  const VectorXd xN = sol.xbar.tail(n);
  CHECK((xN - pb.terminal.muf).cwiseAbs().maxCoeff() < 1e-6);

  const MatrixXd SN = sol.SigmaX.bottomRightCorner(n, n);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(pb.terminal.Sigmaf - SN);
  CHECK(es.eigenvalues().minCoeff() > -1e-7);
  // The bound is active at the optimum: some direction touches it.
  CHECK(es.eigenvalues().minCoeff() < 1e-3);
}

TEST_CASE("reported objective equals the analytic expected cost") {
  const int N = 5;
  cs::SteeringProblem pb = integrator_problem(N, 0.08);
  const cs::RiskAllocation none{0.0, MatrixXd(N, 0)};
  const cs::ControllerSolution sol = cs::solve_steering(pb, none);
  REQUIRE(sol.status == cs::conic::SolveStatus::Optimal);

  const cs::LiftedSystem lf = cs::lift(pb.sys, pb.Q, pb.R, pb.Sigma0);
  const MatrixXd closed =
      MatrixXd::Identity(lf.SigmaY.rows(), lf.SigmaY.cols()) + lf.calB * sol.K;
  const MatrixXd SigX = closed * lf.SigmaY * closed.transpose();
  const double J_analytic = sol.xbar.dot(lf.Qbar * sol.xbar) +
                            (lf.Qbar * SigX).trace() +
                            sol.V.dot(lf.Rbar * sol.V) +
                            (lf.Rbar * sol.K * lf.SigmaY * sol.K.transpose()).trace();
  CHECK(sol.J == doctest::Approx(J_analytic).epsilon(1e-6));

  // Extraction identities.
  CHECK((sol.xbar - (lf.calA * pb.mu0 + lf.calB * sol.V)).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK((sol.SigmaX - SigX).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("gain blocks tile the block-diagonal feedback") {
  const int N = 3;
  cs::SteeringProblem pb = integrator_problem(N, 0.05);
  const cs::RiskAllocation none{0.0, MatrixXd(N, 0)};
  const cs::ControllerSolution sol = cs::solve_steering(pb, none);
  REQUIRE(sol.status == cs::conic::SolveStatus::Optimal);
  const int n = pb.sys.n, m = pb.sys.m;
  for (int k = 0; k < N; ++k) {
    const MatrixXd blk = sol.gain_block(k);
    CHECK((blk - sol.K.block(k * m, k * n, m, n)).cwiseAbs().maxCoeff() == 0.0);
  }
  // Off-diagonal blocks of K are structurally zero (causality by construction).
  for (int k = 0; k < N; ++k)
    for (int j = 0; j <= N; ++j) {
      if (j == k) continue;
      CHECK(sol.K.block(k * m, j * n, m, n).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("unreachable terminal covariance is certified infeasible") {
  const int N = 2;
  cs::SteeringProblem pb = integrator_problem(N, 0.0);
  // Remove control authority over the deviation: zero input matrix, and pick
  // the terminal mean the drift actually reaches.
  for (auto& B : pb.sys.B) B.setZero();
  MatrixXd A2 = pb.sys.A[0] * pb.sys.A[0];
  pb.terminal.muf = A2 * pb.mu0;
  pb.terminal.Sigmaf = 1e-4 * MatrixXd::Identity(2, 2);
  const cs::RiskAllocation none{0.0, MatrixXd(N, 0)};
  const cs::ControllerSolution sol = cs::solve_steering(pb, none);
  CHECK(sol.status == cs::conic::SolveStatus::Infeasible);
}

TEST_CASE("posterior risk table matches the polytope evaluator") {
  const int N = 4;
  cs::SteeringProblem pb = integrator_problem(N, 0.05);
  cs::PolytopeCC cc;
  cc.alpha.resize(1, 2);
  cc.alpha << 1, 0;
  cc.beta.resize(1);
  cc.beta << 6.0;
  pb.chance = cc;
  CHECK(pb.chance_columns() == 1);
  const cs::RiskAllocation alloc = cs::RiskAllocation::uniform(0.05, N, 1);
  const cs::ControllerSolution sol = cs::solve_steering(pb, alloc);
  REQUIRE(sol.status == cs::conic::SolveStatus::Optimal);
  const MatrixXd tab = cs::posterior_risk(pb, sol);
  const MatrixXd ref = cs::true_risk_polytope(cc, sol.xbar, sol.SigmaX, N);
  CHECK((tab - ref).cwiseAbs().maxCoeff() == 0.0);

  cs::SteeringProblem free_pb = integrator_problem(N, 0.05);
  CHECK(free_pb.chance_columns() == 0);
  const cs::RiskAllocation none{0.0, MatrixXd(N, 0)};
  const cs::ControllerSolution fsol = cs::solve_steering(free_pb, none);
  CHECK(cs::posterior_risk(free_pb, fsol).size() == 0);
}

TEST_CASE("problem validation catches malformed inputs") {
  const int N = 3;
  cs::SteeringProblem pb = integrator_problem(N, 0.05);
  CHECK_NOTHROW(pb.validate());

  cs::SteeringProblem bad = pb;
  bad.Q.pop_back();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = pb;
  bad.mu0 = VectorXd::Zero(3);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = pb;
  bad.terminal.Sigmaf = -MatrixXd::Identity(2, 2);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_SUITE_END();
