#include "cs/ira.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cs {

const char* to_string(IraStop s) {
  switch (s) {
    case IraStop::Converged: return "converged";
    case IraStop::AllInactive: return "all_inactive";
    case IraStop::AllActive: return "all_active";
    case IraStop::IterationLimit: return "iteration_limit";
    case IraStop::SolverFailure: return "solver_failure";
  }
  return "unknown";
}

Eigen::MatrixXi classify(const Eigen::MatrixXd& delta, const Eigen::MatrixXd& delta_bar,
                         double eta) {
  if (delta.rows() != delta_bar.rows() || delta.cols() != delta_bar.cols())
    throw std::invalid_argument("classify: shape mismatch");
  Eigen::MatrixXi active(delta.rows(), delta.cols());
  for (int k = 0; k < delta.rows(); ++k)
    for (int j = 0; j < delta.cols(); ++j)
      active(k, j) = delta_bar(k, j) >= (1.0 - eta) * delta(k, j) ? 1 : 0;
  return active;
}

void reallocate(RiskAllocation& alloc, const Eigen::MatrixXd& delta_bar,
                const Eigen::MatrixXi& active, double rho, const IraConfig& cfg) {
  const int rows = static_cast<int>(alloc.delta.rows());
  const int cols = static_cast<int>(alloc.delta.cols());
  const int num_active = active.sum();
  if (num_active == 0 || num_active == rows * cols)
    throw std::invalid_argument("reallocate: nothing to move");

  for (int k = 0; k < rows; ++k)
    for (int j = 0; j < cols; ++j) {
      if (active(k, j)) continue;
      double v = rho * alloc.delta(k, j) + (1.0 - rho) * delta_bar(k, j);
      alloc.delta(k, j) = std::min(std::max(v, cfg.delta_floor), cfg.delta_cap);
    }

  const double residual = alloc.total - alloc.sum();
  if (residual > 0.0) {
    const double share = residual / num_active;
    for (int k = 0; k < rows; ++k)
      for (int j = 0; j < cols; ++j)
        if (active(k, j))
          alloc.delta(k, j) = std::min(alloc.delta(k, j) + share, cfg.delta_cap);
  }

  // Float drift repair: walk entries largest first and shave off any excess
  // so the budget inequality holds exactly.
  double excess = alloc.sum() - alloc.total;
  while (excess > 0.0) {
    int bk = 0, bj = 0;
    alloc.delta.maxCoeff(&bk, &bj);
    const double room = alloc.delta(bk, bj) - cfg.delta_floor;
    if (room <= 0.0) break;
    const double take = std::min(excess, room);
    alloc.delta(bk, bj) -= take;
    excess = alloc.sum() - alloc.total;
  }
}

IraResult run_ira(const SteeringProblem& pb, const RiskAllocation& init,
                  const IraConfig& cfg, const conic::SolverOptions& sopts) {
  const int M = pb.chance_columns();
  if (M == 0)
    throw std::invalid_argument("run_ira: problem has no chance constraint");
  IraResult result;
  RiskAllocation alloc = init;
  alloc.validate(cfg.delta_floor, cfg.delta_cap);

  double J_prev = std::numeric_limits<double>::infinity();
  double best_J = std::numeric_limits<double>::infinity();
  bool have_best = false;

  for (int it = 0; it < cfg.max_iters; ++it) {
    const double rho = cfg.rho0 * std::pow(cfg.rho_decay, it);
    ControllerSolution sol = solve_steering(pb, alloc, sopts);
    result.iterations = it + 1;
    if (sol.status != conic::SolveStatus::Optimal) {
      if (!have_best) {
        result.solution = std::move(sol);
        result.alloc = alloc;
      }
      result.stop = IraStop::SolverFailure;
      return result;
    }

    const double J = sol.J;
    const Eigen::MatrixXd delta_bar = posterior_risk(pb, sol);
    const Eigen::MatrixXi active = classify(alloc.delta, delta_bar, cfg.eta);
    IraIterate rec;
    rec.iter = it;
    rec.J = J;
    rec.rho = rho;
    rec.num_active = active.sum();
    rec.budget_used = alloc.sum();
    rec.delta = alloc.delta;
    rec.delta_bar = delta_bar;
    rec.active = active;
    result.trace.push_back(std::move(rec));

    if (J <= best_J) {
      best_J = J;
      result.solution = std::move(sol);
      result.alloc = alloc;
      have_best = true;
    }

    if (std::abs(J - J_prev) <= cfg.epsilon) {
      result.stop = IraStop::Converged;
      return result;
    }
    J_prev = J;

    const int num_active = active.sum();
    if (num_active == 0) {
      result.stop = IraStop::AllInactive;
      return result;
    }
    if (num_active == active.size()) {
      result.stop = IraStop::AllActive;
      return result;
    }
    reallocate(alloc, delta_bar, active, rho, cfg);
    alloc.validate(cfg.delta_floor, cfg.delta_cap);
  }
  result.stop = IraStop::IterationLimit;
  return result;
}

}  // namespace cs
