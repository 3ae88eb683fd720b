#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "cs/constraints.hpp"
#include "cs/normal.hpp"
#include "cs/rng.hpp"
#include "cs/steering.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Double-integrator steering problem small enough for unit-test solves.
cs::SteeringProblem small_problem(int N) {
  const double dt = 1.0;
  MatrixXd A(2, 2), B(2, 1), D(2, 2);
  A << 1, dt, 0, 1;
  B << 0.5 * dt * dt, dt;
  D = 0.05 * MatrixXd::Identity(2, 2);
  cs::SteeringProblem pb;
  pb.sys = cs::LtvSystem::time_invariant(N, A, B, D);
  pb.mu0 = (VectorXd(2) << 4.0, 0.0).finished();
  pb.Sigma0 = 0.25 * MatrixXd::Identity(2, 2);
  pb.Q.assign(N, MatrixXd::Identity(2, 2));
  pb.R.assign(N, MatrixXd::Identity(1, 1));
  pb.terminal.muf = VectorXd::Zero(2);
  pb.terminal.Sigmaf = 0.2 * MatrixXd::Identity(2, 2);
  return pb;
}

}  // namespace

TEST_SUITE_BEGIN("constraints");

TEST_CASE("polytope membership and validation") {
  cs::PolytopeCC cc;
  cc.alpha.resize(2, 2);
  cc.alpha << 1, 0, 0, -1;
  cc.beta.resize(2);
  cc.beta << 1.0, 2.0;  // x <= 1 and y >= -2
  CHECK(cc.contains((VectorXd(2) << 0.5, 0.0).finished()));
  CHECK(!cc.contains((VectorXd(2) << 1.5, 0.0).finished()));
  CHECK(!cc.contains((VectorXd(2) << 0.0, -3.0).finished()));
  CHECK_NOTHROW(cc.validate(2));
  CHECK_THROWS_AS(cc.validate(3), std::invalid_argument);
}

TEST_CASE("cone membership") {
  cs::ConeCC cc;
  cc.A = MatrixXd::Zero(2, 2);
  cc.A(0, 0) = 1.0;
  cc.b = VectorXd::Zero(2);
  cc.c = (VectorXd(2) << 0.0, 0.5).finished();
  cc.d = 1.0;
  // |x| <= 0.5 y + 1.
  CHECK(cc.contains((VectorXd(2) << 1.0, 1.0).finished()));
  CHECK(!cc.contains((VectorXd(2) << 2.0, 1.0).finished()));
  CHECK_NOTHROW(cc.validate(2));
}

TEST_CASE("rotation about x is orthogonal and membership transports") {
  const double psi = 0.6435011087932844;
  const MatrixXd R = cs::rotation_about_x(psi);
  CHECK((R * R.transpose() - MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(R.determinant() == doctest::Approx(1.0).epsilon(1e-14));

  cs::ConeCC base;
  base.A = MatrixXd::Zero(6, 6);
  base.A(0, 0) = 1.0;
  base.A(2, 2) = 1.0;
  base.b = VectorXd::Zero(6);
  base.c = VectorXd::Zero(6);
  base.c(1) = std::tan(15.0 * M_PI / 180.0);
  base.d = 10.0;
  const cs::ConeCC rot = cs::rotated_about_x(base, psi);

  MatrixXd Rbar = MatrixXd::Zero(6, 6);
  Rbar.topLeftCorner(3, 3) = R;
  Rbar.bottomRightCorner(3, 3) = R;
  cs::CounterRng g(cs::CounterRng::derive_key(201, 0, 0));
  for (int t = 0; t < 200; ++t) {
    VectorXd x(6);
    for (int i = 0; i < 6; ++i) x(i) = 40.0 * (g.uniform() - 0.3);
    CHECK(rot.contains(x) == base.contains(Rbar * x));
  }
}

TEST_CASE("uniform allocation meets the budget exactly") {
  const cs::RiskAllocation a = cs::RiskAllocation::uniform(0.03, 15, 1);
  CHECK(a.total == 0.03);
  CHECK(a.sum() <= a.total);
  CHECK(a.sum() == doctest::Approx(0.03).epsilon(1e-14));
  CHECK_NOTHROW(a.validate(0.0, 0.5));

  const cs::RiskAllocation b = cs::RiskAllocation::uniform(0.035, 7, 3);
  CHECK(b.sum() <= b.total);
  CHECK(b.delta.rows() == 7);
  CHECK(b.delta.cols() == 3);

  CHECK_THROWS_AS(cs::RiskAllocation::uniform(0.0, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(cs::RiskAllocation::uniform(1.0, 3, 1), std::invalid_argument);

  cs::RiskAllocation bad = a;
  bad.delta(0, 0) = 0.6;
  CHECK_THROWS_AS(bad.validate(0.0, 0.5), std::invalid_argument);
  bad = a;
  bad.delta.setConstant(0.01);  // sum 0.15 > 0.03
  CHECK_THROWS_AS(bad.validate(0.0, 0.5), std::invalid_argument);
}

TEST_CASE("polytope posterior risk has the Gaussian closed form") {
  cs::PolytopeCC cc;
  cc.alpha.resize(1, 2);
  cc.alpha << 1, 0;
  cc.beta.resize(1);
  cc.beta << 1.0;
  const int N = 2, n = 2;
  VectorXd xbar = VectorXd::Zero((N + 1) * n);
  xbar(2) = 0.0;   // step 1: mean 0, sd 1 -> risk = 1 - cdf(1)
  xbar(4) = -2.0;  // step 2: mean -2, sd 1 -> risk = 1 - cdf(3)
  MatrixXd SigmaX = MatrixXd::Identity((N + 1) * n, (N + 1) * n);
  const MatrixXd risk = cs::true_risk_polytope(cc, xbar, SigmaX, N);
  REQUIRE(risk.rows() == N);
  REQUIRE(risk.cols() == 1);
  CHECK(risk(0, 0) == doctest::Approx(1.0 - 0.8413447460685429).epsilon(1e-12));
  CHECK(risk(1, 0) == doctest::Approx(0.0013498980316300933).epsilon(1e-9));
}

TEST_CASE("cone posterior risk aggregates two-sided row exceedances") {
  cs::ConeCC cc;
  cc.A = MatrixXd::Identity(2, 2);
  cc.A(1, 1) = 0.0;  // one active row
  cc.b = VectorXd::Zero(2);
  cc.c = VectorXd::Zero(2);
  cc.d = 5.0;
  const int N = 1, n = 2;
  VectorXd xbar = VectorXd::Zero((N + 1) * n);
  xbar(2) = 0.5;  // row mean 0.5, sd 1
  MatrixXd SigmaX = MatrixXd::Identity((N + 1) * n, (N + 1) * n);
  MatrixXd f(1, 2);
  f << 2.0, 0.0;
  const cs::ConeTrueRisk tr = cs::true_risk_cone(cc, xbar, SigmaX, f, N);
  const double expect =
      1.0 - (cs::norm_cdf(2.0 - 0.5) - cs::norm_cdf(-2.0 - 0.5));
  CHECK(tr.sub(0, 0) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(tr.sub(0, 1) == 0.0);
  // Zero row contributes nothing; active row is scaled by its share 1/2.
  CHECK(tr.per_step(0) == doctest::Approx(2.0 * expect).epsilon(1e-12));
}

TEST_CASE("geometric posterior risk is the disk tail at the spectral size") {
  cs::ConeCC cc;
  cc.A = MatrixXd::Zero(2, 2);
  cc.A(0, 0) = 1.0;
  cc.b = VectorXd::Zero(2);
  cc.c = VectorXd::Zero(2);
  cc.d = 3.0;
  cs::GeometricCC geo;
  geo.Ac = MatrixXd::Identity(2, 2);
  geo.Ac(1, 1) = 0.0;
  geo.H = MatrixXd::Zero(1, 2);
  geo.H(0, 0) = 1.0;
  geo.Ip = MatrixXd::Identity(2, 2);
  geo.cc = VectorXd::Zero(2);
  cc.geometric = geo;
  cc.relaxation = cs::ConeRelaxation::Geometric;

  const int N = 1, n = 2;
  VectorXd xbar = VectorXd::Zero((N + 1) * n);
  xbar(2) = 1.0;  // cross-section mean norm 1, margin = d - 1 = 2
  MatrixXd SigmaX = MatrixXd::Zero((N + 1) * n, (N + 1) * n);
  SigmaX(2, 2) = 4.0;  // sigma = 2
  const cs::GeometricTrueRisk tr = cs::true_risk_geometric(cc, xbar, SigmaX, N);
  CHECK(tr.sigma(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(tr.per_step(0) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
}

TEST_CASE("solved polytope surrogate caps the posterior risk at the allocation") {
  const int N = 4;
  cs::SteeringProblem pb = small_problem(N);
  cs::PolytopeCC cc;
  cc.alpha.resize(1, 2);
  cc.alpha << 1, 0;
  cc.beta.resize(1);
  cc.beta << 4.6;
  pb.chance = cc;
  const cs::RiskAllocation alloc = cs::RiskAllocation::uniform(0.04, N, 1);
  const cs::ControllerSolution sol = cs::solve_steering(pb, alloc);
  REQUIRE(sol.status == cs::conic::SolveStatus::Optimal);
  const MatrixXd risk = cs::true_risk_polytope(cc, sol.xbar, sol.SigmaX, N);
  for (int k = 0; k < N; ++k)
    CHECK(risk(k, 0) <= alloc.delta(k, 0) + 1e-7);
}

TEST_CASE("solved cone surrogates cap the posterior risk at the allocation") {
  for (const auto rel :
       {cs::ConeRelaxation::ThreeCut, cs::ConeRelaxation::ReverseUnionBound}) {
    const int N = 4;
    cs::SteeringProblem pb = small_problem(N);
    cs::ConeCC cc;
    cc.A = MatrixXd::Zero(2, 2);
    cc.A(0, 0) = 1.0;
    cc.b = VectorXd::Zero(2);
    cc.c = VectorXd::Zero(2);
    cc.d = 6.0;
    cc.relaxation = rel;
    pb.chance = cc;
    const cs::RiskAllocation alloc = cs::RiskAllocation::uniform(0.05, N, 1);
    const cs::ControllerSolution sol = cs::solve_steering(pb, alloc);
    REQUIRE(sol.status == cs::conic::SolveStatus::Optimal);
    const cs::ConeTrueRisk tr = cs::true_risk_cone(cc, sol.xbar, sol.SigmaX,
                                                   sol.f_values, N);
    for (int k = 0; k < N; ++k)
      CHECK(tr.per_step(k) <= alloc.delta(k, 0) + 1e-7);
  }
}

TEST_SUITE_END();
