#include "cs/validation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "cs/rng.hpp"

namespace cs {

namespace {

bool violates_column(const SteeringProblem& pb, const Eigen::VectorXd& x, int j) {
  if (std::holds_alternative<PolytopeCC>(pb.chance)) {
    const PolytopeCC& cc = std::get<PolytopeCC>(pb.chance);
    return cc.alpha.row(j).dot(x) > cc.beta[j];
  }
  const ConeCC& cc = std::get<ConeCC>(pb.chance);
  (void)j;
  return !cc.contains(x);
}

}  // namespace

RolloutStats rollout(const SteeringProblem& pb, const ControllerSolution& sol,
                     const RolloutOptions& opt) {
  if (sol.status != conic::SolveStatus::Optimal)
    throw std::invalid_argument("rollout: controller is not optimal");
  if (opt.samples <= 0) throw std::invalid_argument("rollout: samples <= 0");
  const int N = pb.sys.N, n = pb.sys.n, m = pb.sys.m, r = pb.sys.r;
  const int M = pb.chance_columns();
  const bool saturated = pb.saturation.has_value();

  const Eigen::MatrixXd L0 = psd_sqrt(pb.Sigma0);
  std::vector<Eigen::MatrixXd> Kb(static_cast<size_t>(N));
  for (int k = 0; k < N; ++k) Kb[static_cast<size_t>(k)] = sol.gain_block(k);

  RolloutStats st;
  st.samples = opt.samples;
  st.seed = opt.seed;
  st.constraint_freq = Eigen::MatrixXd::Zero(N, std::max(M, 1));
  st.violated.assign(static_cast<size_t>(opt.samples), 0);

  Eigen::VectorXd sum_xN = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd sum_outer = Eigen::MatrixXd::Zero(n, n);

  Eigen::VectorXd z0(n), x(n), y(n), zsig(n), u(m), w(r), xnext(n);
  for (long s = 0; s < opt.samples; ++s) {
    const auto su = static_cast<uint64_t>(s);
    {
      CounterRng rng(CounterRng::derive_key(opt.seed, su, 0));
      for (int i = 0; i < n; ++i) z0[i] = rng.normal();
    }
    y.noalias() = L0 * z0;
    x = pb.mu0 + y;
    if (saturated) zsig = saturate(y, pb.saturation->y_max);

    const bool keep = s < opt.keep_trajectories;
    Eigen::MatrixXd traj, uhist;
    if (keep) {
      traj.resize(N + 1, n);
      uhist.resize(N, m);
      traj.row(0) = x.transpose();
    }

    bool violated_any = false;
    bool input_bad = false;
    for (int k = 0; k < N; ++k) {
      u = sol.V.segment(k * m, m);
      u.noalias() += Kb[static_cast<size_t>(k)] * (saturated ? zsig : y);
      st.max_input_abs = std::max(st.max_input_abs, u.cwiseAbs().maxCoeff());
      if (saturated) {
        if (((pb.saturation->Hu * u - pb.saturation->hu).array() > 0.0).any())
          input_bad = true;
      }

      CounterRng rng(CounterRng::derive_key(opt.seed, su, 1 + static_cast<uint64_t>(k)));
      for (int i = 0; i < r; ++i) w[i] = rng.normal();

      xnext = pb.sys.A[k] * x + pb.sys.B[k] * u + pb.sys.D[k] * w;
      y = pb.sys.A[k] * y + pb.sys.D[k] * w;
      if (saturated)
        zsig = pb.sys.A[k] * zsig + pb.sys.D[k] * saturate(w, pb.saturation->y_max);
      x = xnext;
      if (keep) {
        traj.row(k + 1) = x.transpose();
        uhist.row(k) = u.transpose();
      }

      for (int j = 0; j < M; ++j) {
        if (violates_column(pb, x, j)) {
          st.constraint_freq(k, j) += 1.0;
          violated_any = true;
        }
      }
    }

    if (violated_any) st.violated[static_cast<size_t>(s)] = 1;
    if (input_bad) ++st.input_violations;
    sum_xN += x;
    sum_outer.noalias() += x * x.transpose();
    if (keep) {
      st.trajectories.push_back(std::move(traj));
      st.inputs.push_back(std::move(uhist));
    }
  }

  const double ns = static_cast<double>(opt.samples);
  long viol = 0;
  for (uint8_t b : st.violated) viol += b;
  st.joint_risk = static_cast<double>(viol) / ns;
  st.joint_risk_se = std::sqrt(std::max(st.joint_risk * (1.0 - st.joint_risk), 0.0) / ns);
  st.constraint_freq /= ns;
  st.mean_xN = sum_xN / ns;
  if (opt.samples > 1) {
    st.cov_xN = (sum_outer - ns * st.mean_xN * st.mean_xN.transpose()) / (ns - 1.0);
    st.cov_xN = 0.5 * (st.cov_xN + st.cov_xN.transpose()).eval();
  } else {
    st.cov_xN = Eigen::MatrixXd::Zero(n, n);
  }
  return st;
}

PairedDelta paired_risk_delta(const RolloutStats& a, const RolloutStats& b) {
  if (a.samples != b.samples || a.seed != b.seed)
    throw std::invalid_argument(
        "paired_risk_delta: rollouts must share seed and sample count");
  const long ns = a.samples;
  double sum = 0.0, sumsq = 0.0;
  for (long i = 0; i < ns; ++i) {
    const double d = static_cast<double>(a.violated[static_cast<size_t>(i)]) -
                     static_cast<double>(b.violated[static_cast<size_t>(i)]);
    sum += d;
    sumsq += d * d;
  }
  PairedDelta out;
  out.delta = sum / static_cast<double>(ns);
  const double var =
      std::max(sumsq - static_cast<double>(ns) * out.delta * out.delta, 0.0) /
      (static_cast<double>(ns) - 1.0);
  out.se = std::sqrt(var / static_cast<double>(ns));
  return out;
}

// ---------------------------------------------------------------------------
// Probability-law oracles
// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd random_pd(CounterRng& rng, int n) {
  Eigen::MatrixXd A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = rng.normal();
  return A * A.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Joint violation of an intersection of per-row events never exceeds the sum
// of the marginal violations (Boole). Rows are placed so each marginal risk
// is exactly its allocation, making the bound tight enough to exercise.
LawCheck check_union_bound(uint64_t seed) {
  LawCheck c{"union-bound-joint-risk", true, 1e300, ""};
  const long samples = 200000;
  for (int inst = 0; inst < 8; ++inst) {
    CounterRng setup(CounterRng::derive_key(seed, 1000 + static_cast<uint64_t>(inst), 0));
    const int n = 2 + inst % 2;
    const int rows = 3;
    const Eigen::MatrixXd Sigma = random_pd(setup, n);
    const Eigen::MatrixXd L = psd_sqrt(Sigma);
    Eigen::VectorXd mu(n);
    for (int i = 0; i < n; ++i) mu[i] = 0.3 * setup.normal();
    Eigen::MatrixXd alpha(rows, n);
    Eigen::VectorXd beta(rows), dj(rows);
    for (int j = 0; j < rows; ++j) {
      for (int i = 0; i < n; ++i) alpha(j, i) = setup.normal();
      dj[j] = 0.02 + 0.05 * setup.uniform();
      const double mean = alpha.row(j).dot(mu);
      const double sd = std::sqrt(alpha.row(j) * Sigma * alpha.row(j).transpose());
      beta[j] = mean + norm_quantile(1.0 - dj[j]) * sd;  // marginal risk exactly dj
    }
    long joint = 0;
    Eigen::VectorXd z(n), x(n);
    for (long s = 0; s < samples; ++s) {
      CounterRng rng(CounterRng::derive_key(seed, static_cast<uint64_t>(s),
                                            2000 + static_cast<uint64_t>(inst)));
      for (int i = 0; i < n; ++i) z[i] = rng.normal();
      x = mu + L * z;
      if (((alpha * x - beta).array() > 0.0).any()) ++joint;
    }
    const double p = static_cast<double>(joint) / static_cast<double>(samples);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    const double margin = dj.sum() + 3.0 * se - p;
    c.statistic = std::min(c.statistic, margin);
    if (margin < 0.0) {
      c.pass = false;
      c.detail = "joint risk " + fmt(p) + " above allocated " + fmt(dj.sum());
    }
  }
  return c;
}

// Per-row two-sided bounds P(|a_i' x + b_i| <= f_i) >= 1 - beta_i delta with
// sum beta_i = 1 imply P(||A x + b|| <= ||f||) >= 1 - delta.
LawCheck check_two_sided(uint64_t seed) {
  LawCheck c{"two-sided-decomposition", true, 1e300, ""};
  const long samples = 200000;
  const double delta = 0.1;
  for (int inst = 0; inst < 8; ++inst) {
    CounterRng setup(CounterRng::derive_key(seed, 3000 + static_cast<uint64_t>(inst), 0));
    const int n = 2 + inst % 2;
    const Eigen::MatrixXd Sigma = random_pd(setup, n);
    const Eigen::MatrixXd L = psd_sqrt(Sigma);
    Eigen::VectorXd mu(n);
    for (int i = 0; i < n; ++i) mu[i] = 0.5 * setup.normal();
    Eigen::MatrixXd A(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) A(i, j) = setup.normal();
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b[i] = 0.3 * setup.normal();

    // Per-row radius with exact two-sided coverage 1 - delta / n.
    Eigen::VectorXd f(n);
    const double q = norm_quantile(1.0 - delta / (2.0 * n));
    for (int i = 0; i < n; ++i) {
      const double mean = A.row(i).dot(mu) + b[i];
      const double sd = std::sqrt(A.row(i) * Sigma * A.row(i).transpose());
      f[i] = std::max(std::abs(mean - q * sd), std::abs(mean + q * sd));
    }
    const double radius = f.norm();
    long outside = 0;
    Eigen::VectorXd z(n), x(n);
    for (long s = 0; s < samples; ++s) {
      CounterRng rng(CounterRng::derive_key(seed, static_cast<uint64_t>(s),
                                            4000 + static_cast<uint64_t>(inst)));
      for (int i = 0; i < n; ++i) z[i] = rng.normal();
      x = mu + L * z;
      if ((A * x + b).norm() > radius) ++outside;
    }
    const double p = static_cast<double>(outside) / static_cast<double>(samples);
    const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(samples));
    const double margin = delta + 3.0 * se - p;
    c.statistic = std::min(c.statistic, margin);
    if (margin < 0.0) {
      c.pass = false;
      c.detail = "norm exceedance " + fmt(p) + " above budget " + fmt(delta);
    }
  }
  return c;
}

// On finite probability spaces the reversed union bound
// P(all A_i) >= sum P(A_i) - (count - 1) holds exactly, with equality on a
// Frechet-style worst case.
LawCheck check_finite_union(uint64_t seed) {
  LawCheck c{"finite-union-bound-exactness", true, 1e300, ""};
  for (int inst = 0; inst < 200; ++inst) {
    CounterRng rng(CounterRng::derive_key(seed, 5000 + static_cast<uint64_t>(inst), 0));
    const int atoms = 2 + static_cast<int>(rng.uniform() * 7.0);
    const int events = 2 + static_cast<int>(rng.uniform() * 3.0);
    Eigen::VectorXd p(atoms);
    for (int a = 0; a < atoms; ++a) p[a] = rng.uniform();
    p /= p.sum();
    std::vector<uint32_t> membership(static_cast<size_t>(events), 0);
    for (int e = 0; e < events; ++e)
      for (int a = 0; a < atoms; ++a)
        if (rng.uniform() < 0.7) membership[static_cast<size_t>(e)] |= 1u << a;
    double sum_pi = 0.0, p_all = 0.0;
    for (int e = 0; e < events; ++e) {
      double pe = 0.0;
      for (int a = 0; a < atoms; ++a)
        if (membership[static_cast<size_t>(e)] & (1u << a)) pe += p[a];
      sum_pi += pe;
    }
    uint32_t inter = membership[0];
    for (int e = 1; e < events; ++e) inter &= membership[static_cast<size_t>(e)];
    for (int a = 0; a < atoms; ++a)
      if (inter & (1u << a)) p_all += p[a];
    const double margin = p_all - (sum_pi - (events - 1));
    c.statistic = std::min(c.statistic, margin);
    if (margin < -1e-12) {
      c.pass = false;
      c.detail = "reversed union bound violated by " + fmt(-margin);
    }
  }
  // Equality case: two events of probability 0.9 overlapping minimally on a
  // two-atom refinement gives P(both) = 0.8 exactly.
  {
    const double p_all = 0.8, bound = 0.9 + 0.9 - 1.0;
    if (std::abs(p_all - bound) > 1e-15) {
      c.pass = false;
      c.detail = "sharpness case mismatch";
    }
  }
  return c;
}

// Squared Mahalanobis radius of a bivariate Gaussian is chi-squared with two
// degrees of freedom: P(inside ellipse of size a) = 1 - exp(-a^2 / 2).
LawCheck check_disk_law(uint64_t seed) {
  LawCheck c{"gaussian-disk-law", true, 1e300, ""};
  const long samples = 200000;
  const double levels[] = {0.5, 1.0, 2.0};
  for (int inst = 0; inst < 6; ++inst) {
    CounterRng setup(CounterRng::derive_key(seed, 6000 + static_cast<uint64_t>(inst), 0));
    const Eigen::MatrixXd Sigma = random_pd(setup, 2);
    const Eigen::MatrixXd L = psd_sqrt(Sigma);
    const Eigen::MatrixXd Sinv = Sigma.inverse();
    for (double a : levels) {
      long inside = 0;
      Eigen::Vector2d z, x;
      for (long s = 0; s < samples; ++s) {
        CounterRng rng(CounterRng::derive_key(seed, static_cast<uint64_t>(s),
                                              7000 + static_cast<uint64_t>(inst)));
        z << rng.normal(), rng.normal();
        x = L * z;
        if (x.dot(Sinv * x) <= a * a) ++inside;
      }
      const double p = static_cast<double>(inside) / static_cast<double>(samples);
      const double exact = disk_probability(a);
      const double se = std::sqrt(exact * (1.0 - exact) / static_cast<double>(samples));
      const double margin = 4.0 * se - std::abs(p - exact);
      c.statistic = std::min(c.statistic, margin);
      if (margin < 0.0) {
        c.pass = false;
        c.detail = "empirical " + fmt(p) + " vs exact " + fmt(exact);
      }
    }
  }
  return c;
}

// For a centered bivariate Gaussian with factor L (largest singular value
// sigma_max), ||L z|| <= sigma_max ||z||, so
// P(||x|| <= a sigma_max) >= 1 - exp(-a^2 / 2).
LawCheck check_norm_tail(uint64_t seed) {
  LawCheck c{"norm-tail-lower-bound", true, 1e300, ""};
  const long samples = 50000;
  for (int inst = 0; inst < 100; ++inst) {
    CounterRng setup(CounterRng::derive_key(seed, 8000 + static_cast<uint64_t>(inst), 0));
    const Eigen::MatrixXd Sigma = random_pd(setup, 2);
    const Eigen::MatrixXd L = psd_sqrt(Sigma);
    const double smax = L.jacobiSvd().singularValues()[0];
    const double a = 0.5 + 2.0 * setup.uniform();
    long inside = 0;
    Eigen::Vector2d z;
    for (long s = 0; s < samples; ++s) {
      CounterRng rng(CounterRng::derive_key(seed, static_cast<uint64_t>(s),
                                            9000 + static_cast<uint64_t>(inst)));
      z << rng.normal(), rng.normal();
      if ((L * z).norm() <= a * smax) ++inside;
    }
    const double p = static_cast<double>(inside) / static_cast<double>(samples);
    const double bound = disk_probability(a);
    const double se = std::sqrt(std::max(p * (1.0 - p), 1e-12) / static_cast<double>(samples));
    const double margin = p - (bound - 3.0 * se);
    c.statistic = std::min(c.statistic, margin);
    if (margin < 0.0) {
      c.pass = false;
      c.detail = "coverage " + fmt(p) + " below bound " + fmt(bound);
    }
  }
  return c;
}

}  // namespace

std::vector<LawCheck> probability_law_oracles(uint64_t seed) {
  std::vector<LawCheck> out;
  out.push_back(check_union_bound(seed));
  out.push_back(check_two_sided(seed));
  out.push_back(check_finite_union(seed));
  out.push_back(check_disk_law(seed));
  out.push_back(check_norm_tail(seed));
  return out;
}

bool all_pass(const std::vector<LawCheck>& checks) {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

}  // namespace cs
