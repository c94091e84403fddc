// conic.hpp
// Conic-program modeling layer: scalar and complex-Hermitian matrix
// variables, affine equalities/inequalities, second-order cones, and linear
// matrix inequalities, compiled to the real standard form consumed by the
// interior-point backend in ipm.hpp.  Hermitian data is realified to
// symmetric blocks ([[Re, -Im], [Im, Re]]), which preserves eigenvalues
// (doubled multiplicity) and hence PSD-ness.
#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "qisac/common.hpp"
#include "qisac/ipm.hpp"

namespace qisac {

/// Real affine expression over the builder's degrees of freedom:
/// sum_d coeff[d] * x_d + constant.
class Expr {
 public:
  Expr() = default;
  Expr(double constant) : constant_(constant) {}  // NOLINT: implicit by design

  static Expr variable(int dof, double coeff = 1.0) {
    Expr e;
    if (coeff != 0.0) e.coeffs_[dof] = coeff;
    return e;
  }

  Expr& operator+=(const Expr& o) {
    constant_ += o.constant_;
    for (const auto& [d, c] : o.coeffs_) add_coeff(d, c);
    return *this;
  }
  Expr& operator-=(const Expr& o) {
    constant_ -= o.constant_;
    for (const auto& [d, c] : o.coeffs_) add_coeff(d, -c);
    return *this;
  }
  Expr& operator*=(double a) {
    constant_ *= a;
    for (auto& [d, c] : coeffs_) c *= a;
    return *this;
  }

  friend Expr operator+(Expr a, const Expr& b) { return a += b; }
  friend Expr operator-(Expr a, const Expr& b) { return a -= b; }
  friend Expr operator*(double a, Expr e) { return e *= a; }
  friend Expr operator*(Expr e, double a) { return e *= a; }
  friend Expr operator-(Expr e) { return e *= -1.0; }

  void add_coeff(int dof, double c) {
    auto [it, inserted] = coeffs_.emplace(dof, c);
    if (!inserted) it->second += c;
  }

  double constant() const { return constant_; }
  const std::map<int, double>& coeffs() const { return coeffs_; }
  double eval(const VecR& dofs) const {
    double v = constant_;
    for (const auto& [d, c] : coeffs_) v += c * dofs(d);
    return v;
  }

 private:
  std::map<int, double> coeffs_;
  double constant_ = 0.0;
};

/// Complex affine expression (pair of real expressions).
struct CxExpr {
  Expr re, im;
  CxExpr() = default;
  CxExpr(Expr r, Expr i) : re(std::move(r)), im(std::move(i)) {}
  CxExpr(cxd c) : re(c.real()), im(c.imag()) {}  // NOLINT: implicit by design
};

inline CxExpr operator+(const CxExpr& a, const CxExpr& b) {
  return {a.re + b.re, a.im + b.im};
}
inline CxExpr operator-(const CxExpr& a, const CxExpr& b) {
  return {a.re - b.re, a.im - b.im};
}
inline CxExpr operator*(cxd a, const CxExpr& e) {
  return {a.real() * e.re - a.imag() * e.im,
          a.real() * e.im + a.imag() * e.re};
}
inline CxExpr conj(const CxExpr& e) { return {e.re, -e.im}; }

/// Handle to a scalar decision variable.
struct ScalarVar {
  int dof = -1;
};

/// Handle to a complex Hermitian matrix variable (dim x dim); its real
/// degrees of freedom are the diagonal plus (Re, Im) of the strict lower
/// triangle.
struct HermVar {
  int offset = -1;
  int dim = 0;
};

/// Hermitian-valued affine matrix for LMI constraints: set the upper
/// triangle (i <= j); the lower triangle is implied by conjugation.
class HermExprMat {
 public:
  explicit HermExprMat(int dim) : dim_(dim), entries_(dim * dim) {}

  /// i <= j required; for i == j the imaginary part must be identically zero.
  void set(int i, int j, const CxExpr& e);
  /// Entry with conjugate symmetry applied.
  CxExpr get(int i, int j) const;
  int dim() const { return dim_; }

 private:
  int dim_;
  std::vector<CxExpr> entries_;  // row-major, upper triangle populated
};

/// [[Re H, -Im H], [Im H, Re H]]; throws std::invalid_argument when H is not
/// Hermitian within 1e-10 (relative to its largest entry).
MatR realify_hermitian(const MatC& h);

using ConicOptions = IpmOptions;

/// Outcome of a conic solve, retaining the raw dof vector for extraction
/// through the builder that produced it.
struct ConicSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  VecR dofs;
  double objective = 0;        ///< in the builder's max sense
  double primal_residual = 0;  ///< max violation over original constraints
  int iterations = 0;
};

/// Single-owner problem builder.
class ConicBuilder {
 public:
  ScalarVar add_scalar(std::string name);
  HermVar add_hermitian(std::string name, int dim);
  int num_dofs() const { return n_dofs_; }

  // -- expression factories ------------------------------------------------
  Expr var(ScalarVar v) const { return Expr::variable(v.dof); }
  Expr diag(HermVar v, int i) const;
  /// Re / Im of entry (i, j); any (i, j), conjugate symmetry applied.
  Expr re(HermVar v, int i, int j) const;
  Expr im(HermVar v, int i, int j) const;
  CxExpr entry(HermVar v, int i, int j) const {
    return {re(v, i, j), im(v, i, j)};
  }
  Expr trace(HermVar v) const;
  /// Re tr(m P) for constant complex m (any square matrix, m P dims agree).
  Expr re_trace_product(const MatC& m, HermVar p) const;
  /// tr(m P) as a complex expression.
  CxExpr cx_trace_product(const MatC& m, HermVar p) const;
  /// v^H P v (real since P is Hermitian).
  Expr hquad(const VecC& v, HermVar p) const;

  // -- constraints -----------------------------------------------------------
  void add_eq(Expr e);    ///< e == 0
  void add_ineq(Expr e);  ///< e >= 0
  void add_soc(Expr t, std::vector<Expr> u);  ///< ||u||_2 <= t
  void add_lmi(HermExprMat m);                ///< m(vars) PSD
  void add_psd(HermVar v);                    ///< v PSD
  void set_objective_max(Expr e) { objective_ = std::move(e); }

  // -- solution access -------------------------------------------------------
  double value(ScalarVar v, const VecR& dofs) const { return dofs(v.dof); }
  MatC value(HermVar v, const VecR& dofs) const;
  /// Inverse of value(): write a point into a dof vector (for evaluating
  /// expressions or constraints at externally constructed points).
  void set_value(ScalarVar v, double x, VecR& dofs) const { dofs(v.dof) = x; }
  void set_value(HermVar v, const MatC& m, VecR& dofs) const;
  double objective_value(const VecR& dofs) const {
    return objective_.eval(dofs);
  }
  /// Max violation of all stored constraints at the given point.
  double max_violation(const VecR& dofs) const;

  /// Sparse-triplet text dump for offline debugging.
  std::string dump() const;

  /// Compile and solve with the interior-point backend.
  ConicSolution solve(const ConicOptions& opts = {}) const;

 private:
  friend struct CompiledProblem;
  struct Lmi {
    HermExprMat m;
  };
  int n_dofs_ = 0;
  std::vector<std::pair<std::string, ScalarVar>> scalars_;
  std::vector<std::pair<std::string, HermVar>> herms_;
  std::vector<Expr> eqs_, ineqs_;
  std::vector<std::vector<Expr>> socs_;  // [t, u...]
  std::vector<HermExprMat> lmis_;
  Expr objective_;
};

}  // namespace qisac
