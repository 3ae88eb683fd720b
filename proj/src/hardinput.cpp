#include "cs/hardinput.hpp"

#include <cmath>
#include <stdexcept>

#include "steering_detail.hpp"

namespace cs {

namespace {

// Eigenvalue clamp to the PSD cone with a tolerance sized for Monte Carlo
// moment error, returning a factor F with F F' equal to the projected matrix
// (which is written back in place). Columns for numerically zero eigenvalues
// are dropped: the stacked pair [Y; Z] is strongly rank-deficient, and the
// terminal LMI block grows with the column count, so keeping zero directions
// both bloats the cone and hands the solver a degenerate face.
Eigen::MatrixXd clamped_factor(Eigen::MatrixXd& S, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -rel_tol * scale)
    throw std::invalid_argument("stacked_moments: moment matrix is indefinite");
  const double drop = 1e-10 * scale;
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < ev.size(); ++i)
    if (ev[i] > drop) keep.push_back(i);
  Eigen::MatrixXd F(S.rows(), static_cast<Eigen::Index>(keep.size()));
  for (size_t c = 0; c < keep.size(); ++c)
    F.col(static_cast<Eigen::Index>(c)) =
        es.eigenvectors().col(keep[c]) * std::sqrt(ev[keep[c]]);
  S = F * F.transpose();
  S = 0.5 * (S + S.transpose()).eval();
  return F;
}

Eigen::MatrixXd tile_diag(const Eigen::MatrixXd& block, int count) {
  const int b = static_cast<int>(block.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(b * count, b * count);
  for (int k = 0; k < count; ++k) out.block(k * b, k * b, b, b) = block;
  return out;
}

// Terminal covariance bound in split Schur form. Only the K-quadratic term
// involves Sigma_ZZ, so the inner identity block needs a factor of Sigma_ZZ
// alone (well conditioned, rank nx) instead of the stacked pair matrix, whose
// spectrum collapses wherever the clamp is rarely active:
//   [ Sigmaf - E_N(S_YY + B K S_ZY + S_YZ K'B')E_N'   E_N B K Lz ]
//   [              (E_N B K Lz)'                         I       ]  >= 0.
void add_split_terminal_lmi(conic::Program& prog, const DecisionMap& map,
                            const Eigen::MatrixXd& Sigmaf, const Eigen::MatrixXd& S_yy,
                            const Eigen::MatrixXd& S_yz, const Eigen::MatrixXd& Lz) {
  const int N = map.N, n = map.n, m = map.m;
  const Eigen::MatrixXd Bn = map.calB.bottomRows(n);          // E_N calB
  const Eigen::MatrixXd S1 = S_yy.bottomRightCorner(n, n);    // E_N S_YY E_N'
  const Eigen::MatrixXd C = S_yz.transpose().rightCols(n);    // S_ZY E_N'
  const int qz = static_cast<int>(Lz.cols());

  const int dim = n + qz;
  std::vector<conic::AffineExpr> upper;
  upper.reserve(static_cast<size_t>(dim) * (dim + 1) / 2);
  for (int col = 0; col < dim; ++col) {
    for (int row = 0; row <= col; ++row) {
      conic::AffineExpr e;
      if (col < n) {
        e.add_constant(Sigmaf(row, col) - S1(row, col));
        for (int k = 0; k < N; ++k)
          for (int p = 0; p < m; ++p) {
            const double br = Bn(row, k * m + p);
            const double bc = Bn(col, k * m + p);
            if (br == 0.0 && bc == 0.0) continue;
            for (int q = 0; q < n; ++q) {
              const double coef = br * C(k * n + q, col) + bc * C(k * n + q, row);
              if (coef != 0.0) e.add(map.k_var(k, p, q), -coef);
            }
          }
      } else if (row < n) {
        const int c = col - n;
        for (int k = 0; k < N; ++k)
          for (int p = 0; p < m; ++p) {
            const double br = Bn(row, k * m + p);
            if (br == 0.0) continue;
            for (int q = 0; q < n; ++q) {
              const double coef = br * Lz(k * n + q, c);
              if (coef != 0.0) e.add(map.k_var(k, p, q), coef);
            }
          }
      } else {
        e.add_constant(row == col ? 1.0 : 0.0);
      }
      upper.push_back(std::move(e));
    }
  }
  prog.add_psd(dim, std::move(upper));
}

}  // namespace

StackedMoments stacked_moments(const LiftedSystem& lifted, const Eigen::MatrixXd& Sigma0,
                               const SaturationSpec& sat) {
  const int N = lifted.N, n = lifted.n, r = lifted.r;
  if (r != n)
    throw std::invalid_argument("stacked_moments: requires noise dimension r == n");
  const int nx = (N + 1) * n;

  const SaturatedMoments m0 =
      saturated_moments(Sigma0, sat.y_max, sat.moment_samples, sat.moment_seed);
  const SaturatedMoments mw = saturated_moments(Eigen::MatrixXd::Identity(r, r),
                                                sat.y_max, sat.moment_samples,
                                                sat.moment_seed + 1);

  const Eigen::MatrixXd crossW = tile_diag(mw.cross, N);
  const Eigen::MatrixXd outerW = tile_diag(mw.outer, N);

  Eigen::MatrixXd Sxx(2 * nx, 2 * nx);
  Sxx.topLeftCorner(nx, nx) = lifted.SigmaY;
  Sxx.topRightCorner(nx, nx) =
      lifted.calA * m0.cross * lifted.calA.transpose() +
      lifted.calD * crossW * lifted.calD.transpose();
  Sxx.bottomLeftCorner(nx, nx) = Sxx.topRightCorner(nx, nx).transpose();
  Sxx.bottomRightCorner(nx, nx) =
      lifted.calA * m0.outer * lifted.calA.transpose() +
      lifted.calD * outerW * lifted.calD.transpose();
  Sxx = 0.5 * (Sxx + Sxx.transpose()).eval();

  StackedMoments out;
  out.factor = clamped_factor(Sxx, 3e-3);
  out.SigmaYY = Sxx.topLeftCorner(nx, nx);
  out.SigmaYZ = Sxx.topRightCorner(nx, nx);
  out.SigmaZZ = Sxx.bottomRightCorner(nx, nx);
  return out;
}

Assembled assemble_hard(const SteeringProblem& pb, const RiskAllocation& alloc) {
  if (!pb.saturation) throw std::invalid_argument("assemble_hard: no saturation spec");
  const SaturationSpec& sat = *pb.saturation;

  Assembled out;
  out.lifted = lift(pb.sys, pb.Q, pb.R, pb.Sigma0);
  const LiftedSystem& lf = out.lifted;
  const int N = lf.N, n = lf.n, m = lf.m, r = lf.r;
  const int nx = (N + 1) * n;

  const StackedMoments mom = stacked_moments(lf, pb.Sigma0, sat);

  DecisionMap& map = out.map;
  map.N = N;
  map.n = n;
  map.m = m;
  map.zdim = 2 * nx;
  map.qz = static_cast<int>(mom.factor.cols());
  map.stacked = true;
  map.calB = lf.calB;
  map.xbar_base = lf.calA * pb.mu0;
  map.factor = mom.factor;
  map.v_offset = 0;
  map.k_offset = N * m;

  // Factor Sigma_ZZ for the split terminal bound. The objective must keep the
  // untruncated block: dropping eigendirections from the K-quadratic while the
  // cross term keeps them opens a costless descent ray for the feedback.
  Eigen::MatrixXd Szz = mom.SigmaZZ;
  const Eigen::MatrixXd Lz = clamped_factor(Szz, 3e-3);

  conic::Program& prog = out.program;
  prog.add_variables(N * m + map.num_k_vars());
  detail::set_objective(prog, map, lf, pb.mu0, mom.SigmaZZ, mom.SigmaYZ, mom.SigmaYY);
  detail::add_terminal_mean(prog, map, pb.terminal.muf);

  // Sampled clamp moments keep the iterates in a reduced-accuracy regime, so
  // tighten the terminal cap by a small scale-relative margin: solver slack
  // then lands on the feasible side of the nominal bound.
  const double tighten = 1e-5 * (pb.terminal.Sigmaf.trace() / n);
  const Eigen::MatrixXd Sigmaf_t =
      pb.terminal.Sigmaf - tighten * Eigen::MatrixXd::Identity(n, n);
  add_split_terminal_lmi(prog, map, Sigmaf_t, mom.SigmaYY, mom.SigmaYZ, Lz);
  out.cone_aux = detail::emit_chance(prog, map, pb.chance, alloc);

  // Robust input rows. With AD = [calA calD], z_k = (row block k of AD) xi
  // where xi stacks the clamped initial deviation and the clamped noises, so
  // every component of xi is supported on [-sigma_w, sigma_w]:
  //   sup_xi Hu_s (v_k + K_k z_k) = Hu_s v_k + sum_w sigma_w |g_w|,
  //   g_w = (Hu_s K AD)_w,
  // and |g_w| is dualized with a nonnegative pair (wp, wm), wp - wm = g_w.
  // Causality keeps only the first n + k r columns of AD nonzero in block k.
  Eigen::MatrixXd AD(nx, n + N * r);
  AD.leftCols(n) = lf.calA;
  AD.rightCols(N * r) = lf.calD;
  const int Nc = static_cast<int>(sat.Hu.rows());
  for (int k = 0; k < N; ++k) {
    const int Wk = n + k * r;
    for (int s = 0; s < Nc; ++s) {
      conic::AffineExpr total;
      for (int c = 0; c < m; ++c)
        if (sat.Hu(s, c) != 0.0) total.add(map.v_var(k, c), sat.Hu(s, c));
      for (int w = 0; w < Wk; ++w) {
        const double sigma_w = w < n ? sat.y_max[w] : sat.y_max[(w - n) % r];
        const int wp = prog.add_variable();
        const int wm = prog.add_variable();
        prog.add_linear(conic::AffineExpr::variable(wp, -1.0), conic::Sense::LessEqual);
        prog.add_linear(conic::AffineExpr::variable(wm, -1.0), conic::Sense::LessEqual);
        total.add(wp, sigma_w);
        total.add(wm, sigma_w);
        conic::AffineExpr eq;
        for (int c = 0; c < m; ++c) {
          if (sat.Hu(s, c) == 0.0) continue;
          for (int j = 0; j < n; ++j) {
            const double coef = sat.Hu(s, c) * AD(k * n + j, w);
            if (coef != 0.0) eq.add(map.k_var(k, c, j), coef);
          }
        }
        eq.add(wp, -1.0);
        eq.add(wm, 1.0);
        prog.add_linear(std::move(eq), conic::Sense::Equal);
      }
      // Small guard band so sampled inputs respect the stated bound exactly
      // despite the solver's feasibility tolerance.
      const double margin = 1e-6 * (1.0 + std::abs(sat.hu[s]));
      total.add_constant(-(sat.hu[s] - margin));
      prog.add_linear(std::move(total), conic::Sense::LessEqual);
    }
  }
  return out;
}

}  // namespace cs
