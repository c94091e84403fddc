// conic.cpp
#include "qisac/conic.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace qisac {

void HermExprMat::set(int i, int j, const CxExpr& e) {
  if (i > j) throw std::invalid_argument("HermExprMat::set: need i <= j");
  if (i == j && (!e.im.coeffs().empty() || e.im.constant() != 0.0))
    throw std::invalid_argument(
        "HermExprMat::set: diagonal entries must have zero imaginary part");
  entries_[static_cast<size_t>(i) * dim_ + j] = e;
}

CxExpr HermExprMat::get(int i, int j) const {
  if (i <= j) return entries_[static_cast<size_t>(i) * dim_ + j];
  return conj(entries_[static_cast<size_t>(j) * dim_ + i]);
}

MatR realify_hermitian(const MatC& h) {
  const int n = static_cast<int>(h.rows());
  if (h.cols() != n) throw std::invalid_argument("realify_hermitian: not square");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("realify_hermitian: input is not Hermitian");
  MatR out(2 * n, 2 * n);
  const MatR re = h.real();
  const MatR im = h.imag();
  out.topLeftCorner(n, n) = re;
  out.bottomRightCorner(n, n) = re;
  out.bottomLeftCorner(n, n) = im;
  out.topRightCorner(n, n) = -im;
  // Exact symmetry despite rounding in the Hermitian check.
  return 0.5 * (out + out.transpose());
}

// ---------------------------------------------------------------------------
// Variable layout
// ---------------------------------------------------------------------------

ScalarVar ConicBuilder::add_scalar(std::string name) {
  ScalarVar v{n_dofs_};
  n_dofs_ += 1;
  scalars_.emplace_back(std::move(name), v);
  return v;
}

HermVar ConicBuilder::add_hermitian(std::string name, int dim) {
  if (dim < 1) throw std::invalid_argument("add_hermitian: dim must be >= 1");
  HermVar v{n_dofs_, dim};
  n_dofs_ += dim * dim;
  herms_.emplace_back(std::move(name), v);
  return v;
}

namespace {

// Strict-lower-triangle pair index, column-major: (i, j) with i > j.
int pair_index(int n, int i, int j) {
  return j * (n - 1) - j * (j - 1) / 2 + (i - j - 1);
}

int diag_dof(const HermVar& v, int i) { return v.offset + i; }
int re_dof(const HermVar& v, int i, int j) {  // i > j
  return v.offset + v.dim + 2 * pair_index(v.dim, i, j);
}
int im_dof(const HermVar& v, int i, int j) {  // i > j
  return re_dof(v, i, j) + 1;
}

}  // namespace

Expr ConicBuilder::diag(HermVar v, int i) const {
  return Expr::variable(diag_dof(v, i));
}

Expr ConicBuilder::re(HermVar v, int i, int j) const {
  if (i == j) return Expr::variable(diag_dof(v, i));
  return (i > j) ? Expr::variable(re_dof(v, i, j))
                 : Expr::variable(re_dof(v, j, i));
}

Expr ConicBuilder::im(HermVar v, int i, int j) const {
  if (i == j) return Expr(0.0);
  return (i > j) ? Expr::variable(im_dof(v, i, j))
                 : Expr::variable(im_dof(v, j, i), -1.0);
}

Expr ConicBuilder::trace(HermVar v) const {
  Expr e;
  for (int i = 0; i < v.dim; ++i) e += Expr::variable(diag_dof(v, i));
  return e;
}

Expr ConicBuilder::re_trace_product(const MatC& m, HermVar p) const {
  if (m.rows() != p.dim || m.cols() != p.dim)
    throw std::invalid_argument("re_trace_product: dimension mismatch");
  Expr e;
  for (int i = 0; i < p.dim; ++i) e.add_coeff(diag_dof(p, i), m(i, i).real());
  for (int j = 0; j < p.dim; ++j)
    for (int i = j + 1; i < p.dim; ++i) {
      // tr(MP) collects M(j,i) P(i,j) + M(i,j) P(j,i) with P(i,j) = r + i m,
      // P(j,i) = r - i m; the real part pairs r with Re M(i,j) + Re M(j,i)
      // and m with Im M(i,j) - Im M(j,i).
      const double cr = m(i, j).real() + m(j, i).real();
      const double cm = m(i, j).imag() - m(j, i).imag();
      if (cr != 0.0) e.add_coeff(re_dof(p, i, j), cr);
      if (cm != 0.0) e.add_coeff(im_dof(p, i, j), cm);
    }
  return e;
}

CxExpr ConicBuilder::cx_trace_product(const MatC& m, HermVar p) const {
  return {re_trace_product(m, p), re_trace_product(cxd(0.0, -1.0) * m, p)};
}

Expr ConicBuilder::hquad(const VecC& v, HermVar p) const {
  return re_trace_product(v * v.adjoint(), p);
}

MatC ConicBuilder::value(HermVar v, const VecR& dofs) const {
  MatC m(v.dim, v.dim);
  for (int i = 0; i < v.dim; ++i) m(i, i) = dofs(diag_dof(v, i));
  for (int j = 0; j < v.dim; ++j)
    for (int i = j + 1; i < v.dim; ++i) {
      const cxd val(dofs(re_dof(v, i, j)), dofs(im_dof(v, i, j)));
      m(i, j) = val;
      m(j, i) = std::conj(val);
    }
  return m;
}

void ConicBuilder::set_value(HermVar v, const MatC& m, VecR& dofs) const {
  if (m.rows() != v.dim || m.cols() != v.dim)
    throw std::invalid_argument("set_value: dimension mismatch");
  for (int i = 0; i < v.dim; ++i) dofs(diag_dof(v, i)) = m(i, i).real();
  for (int j = 0; j < v.dim; ++j)
    for (int i = j + 1; i < v.dim; ++i) {
      dofs(re_dof(v, i, j)) = m(i, j).real();
      dofs(im_dof(v, i, j)) = m(i, j).imag();
    }
}

// ---------------------------------------------------------------------------
// Constraints
// ---------------------------------------------------------------------------

void ConicBuilder::add_eq(Expr e) { eqs_.push_back(std::move(e)); }
void ConicBuilder::add_ineq(Expr e) { ineqs_.push_back(std::move(e)); }

void ConicBuilder::add_soc(Expr t, std::vector<Expr> u) {
  std::vector<Expr> block;
  block.reserve(u.size() + 1);
  block.push_back(std::move(t));
  for (auto& e : u) block.push_back(std::move(e));
  socs_.push_back(std::move(block));
}

void ConicBuilder::add_lmi(HermExprMat m) { lmis_.push_back(std::move(m)); }

void ConicBuilder::add_psd(HermVar v) {
  HermExprMat m(v.dim);
  for (int i = 0; i < v.dim; ++i)
    for (int j = i; j < v.dim; ++j) m.set(i, j, entry(v, i, j));
  add_lmi(std::move(m));
}

// ---------------------------------------------------------------------------
// Compilation to standard form
// ---------------------------------------------------------------------------

namespace {

struct Compiled {
  VecR c;
  MatR a;
  VecR b;
  MatR g;
  VecR h;
  ConeSpec cones;
};

// Coefficient matrices (constant term and per-dof) of an affine Hermitian
// matrix expression.
struct LmiCoeffs {
  MatC m0;
  std::map<int, MatC> md;
};

LmiCoeffs lmi_coeffs(const HermExprMat& m) {
  const int n = m.dim();
  LmiCoeffs lc;
  lc.m0 = MatC::Zero(n, n);
  auto md_at = [&](int dof) -> MatC& {
    auto [it, inserted] = lc.md.emplace(dof, MatC());
    if (inserted) it->second = MatC::Zero(n, n);
    return it->second;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const CxExpr e = m.get(i, j);
      const cxd c0(e.re.constant(), e.im.constant());
      lc.m0(i, j) += c0;
      if (i != j) lc.m0(j, i) += std::conj(c0);
      // Merge the dof sets of the real and imaginary parts.
      auto it_r = e.re.coeffs().begin();
      auto it_i = e.im.coeffs().begin();
      while (it_r != e.re.coeffs().end() || it_i != e.im.coeffs().end()) {
        int dof;
        double cr = 0, ci = 0;
        if (it_i == e.im.coeffs().end() ||
            (it_r != e.re.coeffs().end() && it_r->first < it_i->first)) {
          dof = it_r->first;
          cr = it_r->second;
          ++it_r;
        } else if (it_r == e.re.coeffs().end() || it_i->first < it_r->first) {
          dof = it_i->first;
          ci = it_i->second;
          ++it_i;
        } else {
          dof = it_r->first;
          cr = it_r->second;
          ci = it_i->second;
          ++it_r;
          ++it_i;
        }
        MatC& md = md_at(dof);
        const cxd cv(cr, ci);
        md(i, j) += cv;
        if (i != j) md(j, i) += std::conj(cv);
      }
    }
  return lc;
}

}  // namespace

double ConicBuilder::max_violation(const VecR& dofs) const {
  double worst = 0.0;
  auto expr_scale = [](const Expr& e) {
    double s = std::max(1.0, std::abs(e.constant()));
    for (const auto& [d, c] : e.coeffs()) s = std::max(s, std::abs(c));
    return s;
  };
  for (const auto& e : eqs_)
    worst = std::max(worst, std::abs(e.eval(dofs)) / expr_scale(e));
  for (const auto& e : ineqs_)
    worst = std::max(worst, -e.eval(dofs) / expr_scale(e));
  for (const auto& blk : socs_) {
    double scale = 1.0, sq = 0.0;
    for (const auto& e : blk) scale = std::max(scale, expr_scale(e));
    for (size_t i = 1; i < blk.size(); ++i) {
      const double u = blk[i].eval(dofs);
      sq += u * u;
    }
    worst = std::max(worst, (std::sqrt(sq) - blk[0].eval(dofs)) / scale);
  }
  for (const auto& m : lmis_) {
    const int n = m.dim();
    MatC val(n, n);
    double scale = 1.0;
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const CxExpr e = m.get(i, j);
        val(i, j) = cxd(e.re.eval(dofs), e.im.eval(dofs));
        if (i != j) val(j, i) = std::conj(val(i, j));
        scale = std::max({scale, expr_scale(e.re), expr_scale(e.im)});
      }
    Eigen::SelfAdjointEigenSolver<MatC> es(val, Eigen::EigenvaluesOnly);
    worst = std::max(worst, -es.eigenvalues().minCoeff() / scale);
  }
  return worst;
}

std::string ConicBuilder::dump() const {
  std::ostringstream os;
  os << "conic problem: dofs=" << n_dofs_ << " eqs=" << eqs_.size()
     << " ineqs=" << ineqs_.size() << " socs=" << socs_.size()
     << " lmis=" << lmis_.size() << "\n";
  for (const auto& [name, v] : scalars_)
    os << "scalar " << name << " dof " << v.dof << "\n";
  for (const auto& [name, v] : herms_)
    os << "herm " << name << " dim " << v.dim << " offset " << v.offset
       << "\n";
  auto put_expr = [&os](const Expr& e) {
    for (const auto& [d, c] : e.coeffs()) os << " " << d << ":" << c;
    os << " const:" << e.constant();
  };
  os << "objective(max):";
  put_expr(objective_);
  os << "\n";
  for (const auto& e : eqs_) {
    os << "eq:";
    put_expr(e);
    os << "\n";
  }
  for (const auto& e : ineqs_) {
    os << "ineq:";
    put_expr(e);
    os << "\n";
  }
  for (const auto& blk : socs_) {
    os << "soc dim " << blk.size() << "\n";
    for (const auto& e : blk) {
      os << "  row:";
      put_expr(e);
      os << "\n";
    }
  }
  for (const auto& m : lmis_) {
    os << "lmi dim " << m.dim() << "\n";
    for (int i = 0; i < m.dim(); ++i)
      for (int j = i; j < m.dim(); ++j) {
        const CxExpr e = m.get(i, j);
        os << "  entry " << i << "," << j << " re:";
        put_expr(e.re);
        os << " im:";
        put_expr(e.im);
        os << "\n";
      }
  }
  return os.str();
}

ConicSolution ConicBuilder::solve(const ConicOptions& opts) const {
  const int n = n_dofs_;
  Compiled cp;
  cp.c = VecR::Zero(n);
  for (const auto& [d, coef] : objective_.coeffs()) cp.c(d) = -coef;

  const int p = static_cast<int>(eqs_.size());
  cp.a = MatR::Zero(p, n);
  cp.b = VecR::Zero(p);
  for (int i = 0; i < p; ++i) {
    for (const auto& [d, coef] : eqs_[i].coeffs()) cp.a(i, d) = coef;
    cp.b(i) = -eqs_[i].constant();
  }

  int m_rows = static_cast<int>(ineqs_.size());
  cp.cones.nonneg = m_rows;
  for (const auto& blk : socs_) {
    cp.cones.soc.push_back(static_cast<int>(blk.size()));
    m_rows += static_cast<int>(blk.size());
  }
  std::vector<LmiCoeffs> lcs;
  lcs.reserve(lmis_.size());
  for (const auto& m : lmis_) {
    lcs.push_back(lmi_coeffs(m));
    const int side = 2 * m.dim();
    cp.cones.psd.push_back(side);
    m_rows += side * (side + 1) / 2;
  }
  const bool dummy_row = (m_rows == 0);
  if (dummy_row) {
    cp.cones.nonneg = 1;
    m_rows = 1;
  }
  cp.g = MatR::Zero(m_rows, n);
  cp.h = VecR::Zero(m_rows);
  int r = 0;
  if (dummy_row) {
    cp.h(0) = 1.0;
    r = 1;
  }
  for (const auto& e : ineqs_) {
    for (const auto& [d, coef] : e.coeffs()) cp.g(r, d) = -coef;
    cp.h(r) = e.constant();
    ++r;
  }
  for (const auto& blk : socs_)
    for (const auto& e : blk) {
      for (const auto& [d, coef] : e.coeffs()) cp.g(r, d) = -coef;
      cp.h(r) = e.constant();
      ++r;
    }
  for (const auto& lc : lcs) {
    const int side = 2 * static_cast<int>(lc.m0.rows());
    const int len = side * (side + 1) / 2;
    cp.h.segment(r, len) = sym_to_svec(realify_hermitian(lc.m0));
    for (const auto& [d, md] : lc.md)
      cp.g.col(d).segment(r, len) -= sym_to_svec(realify_hermitian(md));
    r += len;
  }

  // Block-uniform data equilibration (preserves cone membership and x).
  VecR row_scale = VecR::Ones(m_rows);
  {
    int rr = dummy_row ? 1 : 0;
    for (size_t i = 0; i < ineqs_.size(); ++i, ++rr) {
      const double f = std::max(
          {1e-8, cp.g.row(rr).cwiseAbs().maxCoeff(), std::abs(cp.h(rr))});
      row_scale(rr) = f;
    }
    for (const auto& blk : socs_) {
      const int len = static_cast<int>(blk.size());
      const double f = std::max(
          {1e-8, cp.g.middleRows(rr, len).cwiseAbs().maxCoeff(),
           cp.h.segment(rr, len).cwiseAbs().maxCoeff()});
      row_scale.segment(rr, len).setConstant(f);
      rr += len;
    }
    for (const auto& lc : lcs) {
      const int side = 2 * static_cast<int>(lc.m0.rows());
      const int len = side * (side + 1) / 2;
      const double f = std::max(
          {1e-8, cp.g.middleRows(rr, len).cwiseAbs().maxCoeff(),
           cp.h.segment(rr, len).cwiseAbs().maxCoeff()});
      row_scale.segment(rr, len).setConstant(f);
      rr += len;
    }
  }
  cp.g.array().colwise() /= row_scale.array();
  cp.h.array() /= row_scale.array();
  for (int i = 0; i < p; ++i) {
    const double f = std::max(
        {1e-8, cp.a.row(i).cwiseAbs().maxCoeff(), std::abs(cp.b(i))});
    cp.a.row(i) /= f;
    cp.b(i) /= f;
  }
  const double cs = std::max(1.0, cp.c.cwiseAbs().maxCoeff());
  cp.c /= cs;

  const IpmResult res = ipm_solve(cp.c, cp.a, cp.b, cp.g, cp.h, cp.cones, opts);

  ConicSolution sol;
  sol.status = res.status;
  sol.iterations = res.iterations;
  sol.dofs = res.x;
  if (res.status == SolveStatus::Optimal) {
    sol.objective = objective_.eval(res.x);
    sol.primal_residual = max_violation(res.x);
  }
  return sol;
}

}  // namespace qisac
