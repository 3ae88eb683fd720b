#include "cs/conic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace cs::conic {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

AffineExpr& AffineExpr::operator+=(const AffineExpr& o) {
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  constant_ += o.constant_;
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& o) {
  terms_.reserve(terms_.size() + o.terms_.size());
  for (const Term& t : o.terms_) terms_.push_back({t.var, -t.coef});
  constant_ -= o.constant_;
  return *this;
}

AffineExpr& AffineExpr::operator*=(double s) {
  for (Term& t : terms_) t.coef *= s;
  constant_ *= s;
  return *this;
}

double AffineExpr::evaluate(const Eigen::VectorXd& x) const {
  double v = constant_;
  for (const Term& t : terms_) v += t.coef * x[t.var];
  return v;
}

double AffineExpr::coef_scale() const {
  double s = 0.0;
  for (const Term& t : terms_) s = std::max(s, std::fabs(t.coef));
  return s;
}

AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
AffineExpr operator*(double s, AffineExpr a) { return a *= s; }

std::vector<int> Program::add_variables(int count) {
  std::vector<int> ids(count);
  for (int i = 0; i < count; ++i) ids[i] = add_variable();
  return ids;
}

void Program::add_linear(AffineExpr expr, Sense sense) {
  linear_.push_back({std::move(expr), sense});
}

void Program::add_soc(std::vector<AffineExpr> vec, AffineExpr rhs) {
  if (vec.empty()) {
    // ||()|| <= rhs degenerates to rhs >= 0.
    AffineExpr e = std::move(rhs);
    e *= -1.0;
    add_linear(std::move(e), Sense::LessEqual);
    return;
  }
  socs_.push_back({std::move(vec), std::move(rhs)});
}

void Program::add_psd(int dim, std::vector<AffineExpr> upper_col_major) {
  if (dim < 1) throw std::invalid_argument("add_psd: dim must be >= 1");
  if (static_cast<int>(upper_col_major.size()) != dim * (dim + 1) / 2) {
    throw std::invalid_argument("add_psd: entry count does not match dim");
  }
  psds_.push_back({dim, std::move(upper_col_major)});
}

void Program::set_objective(std::vector<Eigen::Triplet<double>> H, Eigen::VectorXd g,
                            double constant) {
  if (g.size() != nvars_) throw std::invalid_argument("set_objective: g size mismatch");
  for (const auto& t : H) {
    if (t.row() < 0 || t.row() >= nvars_ || t.col() < 0 || t.col() >= nvars_) {
      throw std::invalid_argument("set_objective: H index out of range");
    }
  }
  H_ = std::move(H);
  g_ = std::move(g);
  obj_constant_ = constant;
}

void Program::set_linear_objective(Eigen::VectorXd g, double constant) {
  set_objective({}, std::move(g), constant);
}

double Program::eval_objective(const Eigen::VectorXd& x) const {
  double v = obj_constant_;
  if (g_.size() > 0) v += g_.dot(x.head(g_.size()));
  for (const auto& t : H_) v += t.value() * x[t.row()] * x[t.col()];
  return v;
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

namespace {

// Collects the variables touched by H and the dense symmetric sub-matrix over
// them; validates symmetry and positive semidefiniteness. Returns the support
// ids and an eigen factorization F (rows) with Hsub = F' F.
struct QuadForm {
  std::vector<int> support;
  Eigen::MatrixXd Hsub;    // dense over support
  Eigen::MatrixXd factor;  // rank x |support|, Hsub = factor' factor
};

QuadForm analyze_quadratic(const Program& p) {
  QuadForm qf;
  const auto& H = p.quadratic();
  if (H.empty()) return qf;
  std::vector<int> ids;
  ids.reserve(H.size() * 2);
  for (const auto& t : H) {
    ids.push_back(t.row());
    ids.push_back(t.col());
  }
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  qf.support = ids;
  std::map<int, int> pos;
  for (size_t i = 0; i < ids.size(); ++i) pos[ids[i]] = static_cast<int>(i);
  const int s = static_cast<int>(ids.size());
  qf.Hsub = Eigen::MatrixXd::Zero(s, s);
  for (const auto& t : H) qf.Hsub(pos[t.row()], pos[t.col()]) += t.value();
  double scale = std::max(1.0, qf.Hsub.cwiseAbs().maxCoeff());
  if ((qf.Hsub - qf.Hsub.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale) {
    throw std::invalid_argument("objective: quadratic form is not symmetric");
  }
  qf.Hsub = 0.5 * (qf.Hsub + qf.Hsub.transpose().eval());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(qf.Hsub);
  const Eigen::VectorXd& ev = es.eigenvalues();
  double emax = std::max(0.0, ev.maxCoeff());
  if (ev.minCoeff() < -1e-8 * std::max(1.0, emax)) {
    throw std::invalid_argument("objective: quadratic form is not positive semidefinite");
  }
  int rank = 0;
  for (int i = 0; i < s; ++i) {
    if (ev[i] > 1e-12 * std::max(1.0, emax)) ++rank;
  }
  qf.factor = Eigen::MatrixXd::Zero(rank, s);
  int rrow = 0;
  for (int i = 0; i < s; ++i) {
    if (ev[i] > 1e-12 * std::max(1.0, emax)) {
      qf.factor.row(rrow++) = std::sqrt(ev[i]) * es.eigenvectors().col(i).transpose();
    }
  }
  return qf;
}

struct RowBuilder {
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> b;
  int row = 0;

  // Encodes s_row = b - A x = scale * (expr const + expr terms) by negating
  // the coefficients.
  void push(const AffineExpr& e, double scale = 1.0, bool negate_expr = false) {
    double sg = negate_expr ? -scale : scale;
    for (const Term& t : e.terms()) trips.emplace_back(row, t.var, -sg * t.coef);
    b.push_back(sg * e.constant());
    ++row;
  }
};

}  // namespace

StandardForm assemble(const Program& p, ObjectiveEncoding enc) {
  StandardForm sf;
  QuadForm qf = analyze_quadratic(p);
  const bool epigraph = (enc == ObjectiveEncoding::EpigraphSoc) && !qf.support.empty();
  const int nx = p.num_variables();
  sf.nvars = nx + (epigraph ? 1 : 0);
  sf.objective_constant = p.objective_constant();

  // Objective. Variables created after set_objective carry zero cost, so the
  // stored gradient may be shorter than the final variable count.
  sf.q = Eigen::VectorXd::Zero(sf.nvars);
  if (p.linear_cost().size() > 0) sf.q.head(p.linear_cost().size()) = p.linear_cost();
  std::vector<Eigen::Triplet<double>> ptrips;
  if (!qf.support.empty() && !epigraph) {
    for (size_t i = 0; i < qf.support.size(); ++i) {
      for (size_t j = i; j < qf.support.size(); ++j) {
        double v = qf.Hsub(static_cast<int>(i), static_cast<int>(j));
        if (v != 0.0) ptrips.emplace_back(qf.support[i], qf.support[j], 2.0 * v);
      }
    }
  }
  if (epigraph) sf.q[nx] = 1.0;  // minimize ... + t, with t >= x'Hx
  sf.P.resize(sf.nvars, sf.nvars);
  sf.P.setFromTriplets(ptrips.begin(), ptrips.end());
  sf.P.makeCompressed();

  // Rows: equalities, inequalities, SOCs, PSD blocks (in that order).
  RowBuilder rb;
  int neq = 0, nineq = 0;
  for (const auto& lc : p.linear()) {
    if (lc.sense == Sense::Equal) {
      rb.push(lc.expr, 1.0, true);  // s = -expr = 0
      ++neq;
    }
  }
  for (const auto& lc : p.linear()) {
    if (lc.sense == Sense::LessEqual) {
      rb.push(lc.expr, 1.0, true);  // s = -expr >= 0
      ++nineq;
    }
  }
  if (neq > 0) sf.cones.push_back({ConeClass::Zero, neq});
  if (nineq > 0) sf.cones.push_back({ConeClass::Nonnegative, nineq});

  for (const auto& soc : p.socs()) {
    rb.push(soc.rhs);  // s0 = rhs(x)
    for (const auto& e : soc.vec) rb.push(e);
    sf.cones.push_back({ConeClass::SecondOrder, static_cast<int>(soc.vec.size()) + 1});
  }

  if (epigraph) {
    // ||(2 F x, t - 1)|| <= t + 1  encodes  x'Hx <= t.
    AffineExpr rhs = AffineExpr::variable(nx);
    rhs.add_constant(1.0);
    rb.push(rhs);
    const int rank = static_cast<int>(qf.factor.rows());
    for (int rr = 0; rr < rank; ++rr) {
      AffineExpr e;
      for (size_t j = 0; j < qf.support.size(); ++j) {
        double c = qf.factor(rr, static_cast<int>(j));
        if (c != 0.0) e.add(qf.support[j], 2.0 * c);
      }
      rb.push(e);
    }
    AffineExpr last = AffineExpr::variable(nx);
    last.add_constant(-1.0);
    rb.push(last);
    sf.cones.push_back({ConeClass::SecondOrder, rank + 2});
  }

  const double sqrt2 = std::sqrt(2.0);
  for (const auto& psd : p.psds()) {
    int idx = 0;
    for (int j = 0; j < psd.dim; ++j) {
      for (int i = 0; i <= j; ++i) {
        double scale = (i == j) ? 1.0 : sqrt2;
        rb.push(psd.upper[idx++], scale);
      }
    }
    sf.cones.push_back({ConeClass::PsdTriangle, psd.dim});
  }

  sf.A.resize(rb.row, sf.nvars);
  sf.A.setFromTriplets(rb.trips.begin(), rb.trips.end());
  sf.A.makeCompressed();
  sf.b = Eigen::Map<Eigen::VectorXd>(rb.b.data(), rb.row);
  return sf;
}

std::vector<Violation> verify(const Program& p, const Eigen::VectorXd& x, double tol) {
  std::vector<Violation> out;
  auto note = [&](const std::string& what, double amount) {
    if (amount > tol) out.push_back({what, amount});
  };
  int li = 0;
  for (const auto& lc : p.linear()) {
    double v = lc.expr.evaluate(x);
    double scale = 1.0 + std::fabs(lc.expr.constant()) + lc.expr.coef_scale();
    double viol = (lc.sense == Sense::Equal) ? std::fabs(v) : std::max(0.0, v);
    note("linear[" + std::to_string(li) + "]", viol / scale);
    ++li;
  }
  int si = 0;
  for (const auto& soc : p.socs()) {
    double nrm = 0.0;
    for (const auto& e : soc.vec) {
      double v = e.evaluate(x);
      nrm += v * v;
    }
    nrm = std::sqrt(nrm);
    double rhs = soc.rhs.evaluate(x);
    note("soc[" + std::to_string(si) + "]",
         std::max(0.0, nrm - rhs) / (1.0 + std::fabs(rhs) + nrm));
    ++si;
  }
  int pi = 0;
  for (const auto& psd : p.psds()) {
    Eigen::MatrixXd M(psd.dim, psd.dim);
    int idx = 0;
    for (int j = 0; j < psd.dim; ++j) {
      for (int i = 0; i <= j; ++i) {
        double v = psd.upper[idx++].evaluate(x);
        M(i, j) = v;
        M(j, i) = v;
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    double lmin = es.eigenvalues().minCoeff();
    double scale = 1.0 + M.cwiseAbs().maxCoeff();
    note("psd[" + std::to_string(pi) + "]", std::max(0.0, -lmin) / scale);
    ++pi;
  }
  return out;
}

SolveResult solve(const Program& p, const SolverOptions& opts) {
  StandardForm sf = assemble(p, opts.objective_encoding);
  SolveResult res = solve_standard_form(sf, opts);
  if (static_cast<int>(res.x.size()) > p.num_variables()) {
    res.x.conservativeResize(p.num_variables());
  }
  if (res.status == SolveStatus::Optimal) {
    res.objective = p.eval_objective(res.x);
    if (opts.verify) {
      auto viols = verify(p, res.x, 0.0);
      double mx = 0.0;
      for (const auto& v : viols) mx = std::max(mx, v.amount);
      res.max_violation = mx;
      if (mx > opts.verify_tol) {
        res.status = SolveStatus::NumericalFailure;
        res.message = "post-solve verification failed (violation " + fmt17(mx) + ")";
      }
    }
  } else {
    res.objective = std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

std::string debug_dump(const StandardForm& sf) {
  std::ostringstream os;
  os << "covsteer-conic v1\n";
  os << "nvars " << sf.nvars << "\n";
  os << "objconst " << fmt17(sf.objective_constant) << "\n";
  os << "P " << sf.P.nonZeros() << "\n";
  for (int k = 0; k < sf.P.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sf.P, k); it; ++it) {
      os << it.row() << " " << it.col() << " " << fmt17(it.value()) << "\n";
    }
  }
  os << "q " << sf.q.size() << "\n";
  for (int i = 0; i < sf.q.size(); ++i) os << fmt17(sf.q[i]) << "\n";
  os << "A " << sf.A.rows() << " " << sf.A.cols() << " " << sf.A.nonZeros() << "\n";
  for (int k = 0; k < sf.A.outerSize(); ++k) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(sf.A, k); it; ++it) {
      os << it.row() << " " << it.col() << " " << fmt17(it.value()) << "\n";
    }
  }
  os << "b " << sf.b.size() << "\n";
  for (int i = 0; i < sf.b.size(); ++i) os << fmt17(sf.b[i]) << "\n";
  os << "cones " << sf.cones.size() << "\n";
  for (const auto& c : sf.cones) {
    const char* name = "";
    switch (c.cls) {
      case ConeClass::Zero: name = "zero"; break;
      case ConeClass::Nonnegative: name = "nonneg"; break;
      case ConeClass::SecondOrder: name = "soc"; break;
      case ConeClass::PsdTriangle: name = "psd"; break;
    }
    os << name << " " << c.dim << "\n";
  }
  return os.str();
}

StandardForm parse_debug_dump(const std::string& text) {
  std::istringstream is(text);
  std::string tok;
  StandardForm sf;
  auto expect = [&](const std::string& want) {
    is >> tok;
    if (tok != want) throw std::invalid_argument("parse_debug_dump: expected " + want);
  };
  expect("covsteer-conic");
  expect("v1");
  expect("nvars");
  is >> sf.nvars;
  expect("objconst");
  is >> sf.objective_constant;
  expect("P");
  long pnnz = 0;
  is >> pnnz;
  std::vector<Eigen::Triplet<double>> pt(static_cast<size_t>(pnnz));
  for (auto& t : pt) {
    int i, j;
    double v;
    is >> i >> j >> v;
    t = {i, j, v};
  }
  sf.P.resize(sf.nvars, sf.nvars);
  sf.P.setFromTriplets(pt.begin(), pt.end());
  sf.P.makeCompressed();
  expect("q");
  long qn = 0;
  is >> qn;
  sf.q.resize(qn);
  for (long i = 0; i < qn; ++i) is >> sf.q[i];
  expect("A");
  long ar, ac, annz;
  is >> ar >> ac >> annz;
  std::vector<Eigen::Triplet<double>> at(static_cast<size_t>(annz));
  for (auto& t : at) {
    int i, j;
    double v;
    is >> i >> j >> v;
    t = {i, j, v};
  }
  sf.A.resize(ar, ac);
  sf.A.setFromTriplets(at.begin(), at.end());
  sf.A.makeCompressed();
  expect("b");
  long bn = 0;
  is >> bn;
  sf.b.resize(bn);
  for (long i = 0; i < bn; ++i) is >> sf.b[i];
  expect("cones");
  long nc = 0;
  is >> nc;
  for (long i = 0; i < nc; ++i) {
    std::string name;
    int dim;
    is >> name >> dim;
    ConeClass cls;
    if (name == "zero") cls = ConeClass::Zero;
    else if (name == "nonneg") cls = ConeClass::Nonnegative;
    else if (name == "soc") cls = ConeClass::SecondOrder;
    else if (name == "psd") cls = ConeClass::PsdTriangle;
    else throw std::invalid_argument("parse_debug_dump: unknown cone " + name);
    sf.cones.push_back({cls, dim});
  }
  if (!is) throw std::invalid_argument("parse_debug_dump: truncated input");
  return sf;
}

}  // namespace cs::conic
