#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <string>
#include <vector>

// Small modeling layer for convex cone programs
//
//   minimize    x' H x + g' x + c
//   subject to  affine equalities / inequalities,
//               second-order cone constraints ||u(x)|| <= t(x),
//               linear matrix inequalities M(x) >= 0 (PSD),
//
// assembled into the standard conic form  min 0.5 x'Px + q'x  s.t. Ax + s = b,
// s in K, and handed to an interior point backend.

namespace cs::conic {

struct Term {
  int var = 0;
  double coef = 0.0;
};

// Sparse affine expression sum_i coef_i x_{var_i} + constant.
class AffineExpr {
 public:
  AffineExpr() = default;
  AffineExpr(double constant) : constant_(constant) {}  // NOLINT(implicit)
  static AffineExpr variable(int var, double coef = 1.0) {
    AffineExpr e;
    e.add(var, coef);
    return e;
  }

  AffineExpr& add(int var, double coef) {
    if (coef != 0.0) terms_.push_back({var, coef});
    return *this;
  }
  AffineExpr& add_constant(double c) {
    constant_ += c;
    return *this;
  }
  AffineExpr& operator+=(const AffineExpr& o);
  AffineExpr& operator-=(const AffineExpr& o);
  AffineExpr& operator*=(double s);

  const std::vector<Term>& terms() const { return terms_; }
  double constant() const { return constant_; }
  double evaluate(const Eigen::VectorXd& x) const;
  double coef_scale() const;  // max |coef| (0 when constant)

 private:
  std::vector<Term> terms_;
  double constant_ = 0.0;
};

AffineExpr operator+(AffineExpr a, const AffineExpr& b);
AffineExpr operator-(AffineExpr a, const AffineExpr& b);
AffineExpr operator*(double s, AffineExpr a);

enum class Sense { LessEqual, Equal };

struct LinearConstraint {
  AffineExpr expr;  // expr <= 0 or expr == 0
  Sense sense = Sense::LessEqual;
};

struct SocConstraint {
  std::vector<AffineExpr> vec;  // ||vec(x)||_2 <= rhs(x)
  AffineExpr rhs;
};

struct PsdConstraint {
  int dim = 0;
  // Upper triangle of the symmetric matrix, column major:
  // (0,0), (0,1), (1,1), (0,2), (1,2), (2,2), ...
  std::vector<AffineExpr> upper;
};

enum class ObjectiveEncoding { Native, EpigraphSoc };

class Program {
 public:
  int add_variable() { return nvars_++; }
  std::vector<int> add_variables(int count);
  int num_variables() const { return nvars_; }

  void add_linear(AffineExpr expr, Sense sense);
  void add_soc(std::vector<AffineExpr> vec, AffineExpr rhs);
  void add_psd(int dim, std::vector<AffineExpr> upper_col_major);

  // Objective x'Hx + g'x + c. H is given as triplets covering BOTH symmetric
  // sides (it is validated for symmetry and positive semidefiniteness).
  void set_objective(std::vector<Eigen::Triplet<double>> H, Eigen::VectorXd g,
                     double constant);
  void set_linear_objective(Eigen::VectorXd g, double constant = 0.0);

  const std::vector<LinearConstraint>& linear() const { return linear_; }
  const std::vector<SocConstraint>& socs() const { return socs_; }
  const std::vector<PsdConstraint>& psds() const { return psds_; }
  const std::vector<Eigen::Triplet<double>>& quadratic() const { return H_; }
  const Eigen::VectorXd& linear_cost() const { return g_; }
  double objective_constant() const { return obj_constant_; }
  double eval_objective(const Eigen::VectorXd& x) const;

 private:
  int nvars_ = 0;
  std::vector<LinearConstraint> linear_;
  std::vector<SocConstraint> socs_;
  std::vector<PsdConstraint> psds_;
  std::vector<Eigen::Triplet<double>> H_;
  Eigen::VectorXd g_;
  double obj_constant_ = 0.0;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(SolveStatus s);

struct SolverOptions {
  double tol = 1e-9;          // duality gap and feasibility target
  int max_iters = 200;
  bool verbose = false;
  bool chordal = true;        // backend chordal decomposition of PSD blocks
  ObjectiveEncoding objective_encoding = ObjectiveEncoding::Native;
  bool verify = true;         // independent post-solve feasibility audit
  double verify_tol = 1e-6;   // normalized violation threshold
};

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd x;         // original variables only
  double objective = 0.0;    // recomputed from x, includes constant term
  int iterations = 0;
  bool reduced_accuracy = false;  // backend stopped at an "almost" certificate
  double max_violation = 0.0;     // from the independent verifier
  std::string message;
};

enum class ConeClass : int { Zero = 0, Nonnegative = 1, SecondOrder = 2, PsdTriangle = 3 };

struct ConeBlock {
  ConeClass cls = ConeClass::Zero;
  int dim = 0;  // rows for Zero/Nonneg/SOC, matrix order for PsdTriangle
};

// min 0.5 x'Px + q'x + const  s.t.  Ax + s = b, s in K.
struct StandardForm {
  int nvars = 0;
  Eigen::SparseMatrix<double> P;  // upper triangle
  Eigen::VectorXd q;
  double objective_constant = 0.0;
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
  std::vector<ConeBlock> cones;
};

StandardForm assemble(const Program& p, ObjectiveEncoding enc);
SolveResult solve(const Program& p, const SolverOptions& opts = {});

struct Violation {
  std::string what;
  double amount = 0.0;  // normalized violation magnitude
};

// Independent feasibility audit at x; reports constraints whose normalized
// violation exceeds tol.
std::vector<Violation> verify(const Program& p, const Eigen::VectorXd& x, double tol);

// Deterministic, lossless text serialization of the assembled standard form.
std::string debug_dump(const StandardForm& sf);
StandardForm parse_debug_dump(const std::string& text);

// Backend entry point (Clarabel); exposed for tests.
SolveResult solve_standard_form(const StandardForm& sf, const SolverOptions& opts);

}  // namespace cs::conic
