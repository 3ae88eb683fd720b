#include <cstdint>
#include <vector>

#include "cs/conic.hpp"

// C ABI of the Rust shim in solver/clarabel-ffi.
extern "C" {
struct ClarabelFfiSettings {
  uint32_t max_iter;
  double tol_gap_abs;
  double tol_gap_rel;
  double tol_feas;
  int32_t verbose;
  int32_t chordal;
};
int32_t clarabel_ffi_solve(size_t nvars, const size_t* p_colptr, const size_t* p_rowind,
                           const double* p_nzval, const double* q, size_t nrows,
                           const size_t* a_colptr, const size_t* a_rowind,
                           const double* a_nzval, const double* b, const int32_t* cone_tags,
                           const size_t* cone_dims, size_t ncones,
                           const ClarabelFfiSettings* settings, double* x_out,
                           double* obj_out, uint32_t* iters_out);
}

namespace cs::conic {

namespace {

struct Csc {
  std::vector<size_t> colptr, rowind;
  std::vector<double> nzval;
};

Csc to_csc(const Eigen::SparseMatrix<double>& M) {
  Csc out;
  out.colptr.resize(M.cols() + 1);
  out.rowind.resize(M.nonZeros());
  out.nzval.resize(M.nonZeros());
  for (int c = 0; c <= M.cols(); ++c) {
    out.colptr[c] = static_cast<size_t>(M.outerIndexPtr()[c]);
  }
  for (long i = 0; i < M.nonZeros(); ++i) {
    out.rowind[i] = static_cast<size_t>(M.innerIndexPtr()[i]);
    out.nzval[i] = M.valuePtr()[i];
  }
  return out;
}

}  // namespace

SolveResult solve_standard_form(const StandardForm& sf, const SolverOptions& opts) {
  Csc P = to_csc(sf.P);
  Csc A = to_csc(sf.A);
  std::vector<int32_t> tags;
  std::vector<size_t> dims;
  tags.reserve(sf.cones.size());
  dims.reserve(sf.cones.size());
  for (const auto& c : sf.cones) {
    tags.push_back(static_cast<int32_t>(c.cls));
    dims.push_back(static_cast<size_t>(c.dim));
  }
  ClarabelFfiSettings st{};
  st.max_iter = static_cast<uint32_t>(opts.max_iters);
  st.tol_gap_abs = opts.tol;
  st.tol_gap_rel = opts.tol;
  st.tol_feas = opts.tol;
  st.verbose = opts.verbose ? 1 : 0;
  st.chordal = opts.chordal ? 1 : 0;

  SolveResult res;
  res.x = Eigen::VectorXd::Zero(sf.nvars);
  double obj = 0.0;
  uint32_t iters = 0;
  int32_t rc = clarabel_ffi_solve(
      static_cast<size_t>(sf.nvars), P.colptr.data(), P.rowind.data(), P.nzval.data(),
      sf.q.data(), static_cast<size_t>(sf.A.rows()), A.colptr.data(), A.rowind.data(),
      A.nzval.data(), sf.b.data(), tags.data(), dims.data(), tags.size(), &st,
      res.x.data(), &obj, &iters);
  res.iterations = static_cast<int>(iters);
  res.objective = obj + sf.objective_constant;
  switch (rc) {
    case 0:
      res.status = SolveStatus::Optimal;
      break;
    case 1:
      res.status = SolveStatus::Optimal;
      res.reduced_accuracy = true;
      res.message = "backend stopped at reduced accuracy";
      break;
    case 2:
      res.status = SolveStatus::Infeasible;
      res.message = "primal infeasibility certificate";
      break;
    case 3:
      res.status = SolveStatus::Unbounded;
      res.message = "dual infeasibility certificate (objective unbounded below)";
      break;
    case 4:
      res.status = SolveStatus::NumericalFailure;
      res.message = "iteration or time limit reached";
      break;
    default:
      res.status = SolveStatus::NumericalFailure;
      res.message = "backend numerical failure";
      break;
  }
  return res;
}

}  // namespace cs::conic
