// ipm.cpp
// Homogeneous self-dual interior-point method with Nesterov-Todd scaling and
// Mehrotra predictor-corrector, dense linear algebra throughout.
#include "qisac/ipm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace qisac {

int ConeSpec::total_dim() const {
  int n = nonneg;
  for (int q : soc) n += q;
  for (int m : psd) n += m * (m + 1) / 2;
  return n;
}

int ConeSpec::barrier_degree() const {
  int nu = nonneg + static_cast<int>(soc.size());
  for (int m : psd) nu += m;
  return nu;
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

namespace {
const double kSqrt2 = std::sqrt(2.0);
const double kInf = std::numeric_limits<double>::infinity();
}  // namespace

VecR sym_to_svec(const MatR& s) {
  const int n = static_cast<int>(s.rows());
  VecR v(n * (n + 1) / 2);
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i)
      v(k++) = (i == j) ? s(i, j) : kSqrt2 * s(i, j);
  return v;
}

MatR svec_to_sym(const VecR& v, int side) {
  MatR s(side, side);
  int k = 0;
  for (int j = 0; j < side; ++j)
    for (int i = j; i < side; ++i) {
      const double val = (i == j) ? v(k) : v(k) / kSqrt2;
      s(i, j) = val;
      s(j, i) = val;
      ++k;
    }
  return s;
}

namespace {

// ---------------------------------------------------------------------------
// Cone block layout
// ---------------------------------------------------------------------------
struct SocView {
  int off, dim;
};
struct PsdView {
  int off, side, len;
};

struct Views {
  int nonneg = 0;  // occupies [0, nonneg)
  std::vector<SocView> socs;
  std::vector<PsdView> psds;
  int total = 0;
};

Views make_views(const ConeSpec& cones) {
  Views v;
  v.nonneg = cones.nonneg;
  int off = cones.nonneg;
  for (int q : cones.soc) {
    v.socs.push_back({off, q});
    off += q;
  }
  for (int m : cones.psd) {
    v.psds.push_back({off, m, m * (m + 1) / 2});
    off += m * (m + 1) / 2;
  }
  v.total = off;
  return v;
}

// Strict interiority check (all blocks).
bool in_interior(const VecR& s, const Views& vw) {
  if (vw.nonneg > 0 && s.head(vw.nonneg).minCoeff() <= 0.0) return false;
  for (const auto& b : vw.socs) {
    const double t = s(b.off);
    const double un = s.segment(b.off + 1, b.dim - 1).norm();
    if (t <= un) return false;
  }
  for (const auto& b : vw.psds) {
    const MatR m = svec_to_sym(s.segment(b.off, b.len), b.side);
    Eigen::LLT<MatR> llt(m);
    if (llt.info() != Eigen::Success) return false;
  }
  return true;
}

// Identity element of the cone product.
VecR cone_identity(const Views& vw) {
  VecR e = VecR::Zero(vw.total);
  e.head(vw.nonneg).setOnes();
  for (const auto& b : vw.socs) e(b.off) = 1.0;
  for (const auto& b : vw.psds)
    e.segment(b.off, b.len) = sym_to_svec(MatR::Identity(b.side, b.side));
  return e;
}

// ---------------------------------------------------------------------------
// Nesterov-Todd scaling: W z = W^{-T} s = lambda block-wise.
// ---------------------------------------------------------------------------
struct SocScale {
  double eta = 1.0;
  VecR wbar;  // unit-hyperbolic scaling point
};

struct PsdScale {
  MatR r, rinv;
  VecR lam_diag;
};

struct Scaling {
  VecR w_nn, lam_nn;
  std::vector<SocScale> socs;
  std::vector<PsdScale> psds;
  bool ok = false;
};

Scaling compute_scaling(const VecR& s, const VecR& z, const Views& vw) {
  Scaling sc;
  sc.w_nn = VecR(vw.nonneg);
  sc.lam_nn = VecR(vw.nonneg);
  for (int i = 0; i < vw.nonneg; ++i) {
    if (s(i) <= 0.0 || z(i) <= 0.0) return sc;
    sc.w_nn(i) = std::sqrt(s(i) / z(i));
    sc.lam_nn(i) = std::sqrt(s(i) * z(i));
  }
  for (const auto& b : vw.socs) {
    const VecR sb = s.segment(b.off, b.dim);
    const VecR zb = z.segment(b.off, b.dim);
    auto jnorm2 = [](const VecR& u) {
      return u(0) * u(0) - u.tail(u.size() - 1).squaredNorm();
    };
    const double sj = jnorm2(sb), zj = jnorm2(zb);
    if (sj <= 0.0 || zj <= 0.0 || sb(0) <= 0.0 || zb(0) <= 0.0) return sc;
    const VecR sbar = sb / std::sqrt(sj);
    const VecR zbar = zb / std::sqrt(zj);
    const double gamma = std::sqrt((1.0 + sbar.dot(zbar)) / 2.0);
    SocScale ss;
    ss.eta = std::pow(sj / zj, 0.25);
    ss.wbar = sbar;
    ss.wbar(0) += zbar(0);
    ss.wbar.tail(b.dim - 1) -= zbar.tail(b.dim - 1);
    ss.wbar /= 2.0 * gamma;
    sc.socs.push_back(std::move(ss));
  }
  for (const auto& b : vw.psds) {
    const MatR sm = svec_to_sym(s.segment(b.off, b.len), b.side);
    const MatR zm = svec_to_sym(z.segment(b.off, b.len), b.side);
    Eigen::LLT<MatR> ls(sm), lz(zm);
    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return sc;
    const MatR lsm = ls.matrixL();
    const MatR lzm = lz.matrixL();
    Eigen::JacobiSVD<MatR> svd(lzm.transpose() * lsm,
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VecR sig = svd.singularValues();
    if (sig.minCoeff() <= 0.0) return sc;
    PsdScale ps;
    const VecR sig_isqrt = sig.cwiseSqrt().cwiseInverse();
    ps.r = lsm * svd.matrixV() * sig_isqrt.asDiagonal();
    ps.rinv = sig.cwiseSqrt().asDiagonal() * svd.matrixV().transpose() *
              lsm.triangularView<Eigen::Lower>().solve(
                  MatR::Identity(b.side, b.side));
    ps.lam_diag = sig;
    sc.psds.push_back(std::move(ps));
  }
  sc.ok = true;
  return sc;
}

// V-matrix action for a SOC block: V u with V = [[w0, w1'],[w1, I + w1 w1'/(1+w0)]].
VecR soc_vmul(const VecR& wbar, const VecR& u) {
  const int d = static_cast<int>(u.size());
  const double w0 = wbar(0);
  VecR out(d);
  if (d == 1) {
    out(0) = w0 * u(0);
    return out;
  }
  const auto w1 = wbar.tail(d - 1);
  const auto u1 = u.tail(d - 1);
  const double w1u1 = w1.dot(u1);
  out(0) = w0 * u(0) + w1u1;
  out.tail(d - 1) = u(0) * w1 + u1 + (w1u1 / (1.0 + w0)) * w1;
  return out;
}

// J V J u  (the inverse of V, since V J V = J).
VecR soc_vinv_mul(const VecR& wbar, const VecR& u) {
  const int d = static_cast<int>(u.size());
  VecR ju = u;
  if (d > 1) ju.tail(d - 1) = -u.tail(d - 1);
  VecR vju = soc_vmul(wbar, ju);
  if (d > 1) vju.tail(d - 1) = -vju.tail(d - 1);
  return vju;
}

// W u (scaling applied to a z-like vector).
VecR apply_w(const Scaling& sc, const Views& vw, const VecR& u) {
  VecR out(vw.total);
  out.head(vw.nonneg) = sc.w_nn.cwiseProduct(u.head(vw.nonneg));
  for (size_t i = 0; i < vw.socs.size(); ++i) {
    const auto& b = vw.socs[i];
    out.segment(b.off, b.dim) =
        sc.socs[i].eta * soc_vmul(sc.socs[i].wbar, u.segment(b.off, b.dim));
  }
  for (size_t i = 0; i < vw.psds.size(); ++i) {
    const auto& b = vw.psds[i];
    const MatR um = svec_to_sym(u.segment(b.off, b.len), b.side);
    const MatR& r = sc.psds[i].r;
    out.segment(b.off, b.len) = sym_to_svec(r.transpose() * um * r);
  }
  return out;
}

// W' u (adjoint; differs from W only on PSD blocks).
VecR apply_wt(const Scaling& sc, const Views& vw, const VecR& u) {
  VecR out(vw.total);
  out.head(vw.nonneg) = sc.w_nn.cwiseProduct(u.head(vw.nonneg));
  for (size_t i = 0; i < vw.socs.size(); ++i) {
    const auto& b = vw.socs[i];
    out.segment(b.off, b.dim) =
        sc.socs[i].eta * soc_vmul(sc.socs[i].wbar, u.segment(b.off, b.dim));
  }
  for (size_t i = 0; i < vw.psds.size(); ++i) {
    const auto& b = vw.psds[i];
    const MatR um = svec_to_sym(u.segment(b.off, b.len), b.side);
    const MatR& r = sc.psds[i].r;
    out.segment(b.off, b.len) = sym_to_svec(r * um * r.transpose());
  }
  return out;
}

// W^{-T} u (applied to an s-like vector).
VecR apply_winvt(const Scaling& sc, const Views& vw, const VecR& u) {
  VecR out(vw.total);
  out.head(vw.nonneg) =
      u.head(vw.nonneg).cwiseQuotient(sc.w_nn);
  for (size_t i = 0; i < vw.socs.size(); ++i) {
    const auto& b = vw.socs[i];
    out.segment(b.off, b.dim) =
        soc_vinv_mul(sc.socs[i].wbar, u.segment(b.off, b.dim)) /
        sc.socs[i].eta;
  }
  for (size_t i = 0; i < vw.psds.size(); ++i) {
    const auto& b = vw.psds[i];
    const MatR um = svec_to_sym(u.segment(b.off, b.len), b.side);
    const MatR& ri = sc.psds[i].rinv;
    out.segment(b.off, b.len) = sym_to_svec(ri * um * ri.transpose());
  }
  return out;
}

// H u = W'(W u).
VecR apply_h(const Scaling& sc, const Views& vw, const VecR& u) {
  return apply_wt(sc, vw, apply_w(sc, vw, u));
}

// H^{-1} u = W^{-1}(W^{-T} u); nonneg and SOC blocks use the closed form.
VecR apply_hinv(const Scaling& sc, const Views& vw, const VecR& u) {
  VecR out(vw.total);
  out.head(vw.nonneg) =
      u.head(vw.nonneg).cwiseQuotient(sc.w_nn.cwiseAbs2());
  for (size_t i = 0; i < vw.socs.size(); ++i) {
    const auto& b = vw.socs[i];
    // H^{-1} = eta^{-2} (2 (J wbar)(J wbar)' - J)
    const VecR ub = u.segment(b.off, b.dim);
    const VecR& wb = sc.socs[i].wbar;
    VecR jw = wb;
    if (b.dim > 1) jw.tail(b.dim - 1) = -wb.tail(b.dim - 1);
    VecR ju = ub;
    if (b.dim > 1) ju.tail(b.dim - 1) = -ub.tail(b.dim - 1);
    out.segment(b.off, b.dim) =
        (2.0 * jw.dot(ub) * jw - ju) / (sc.socs[i].eta * sc.socs[i].eta);
  }
  for (size_t i = 0; i < vw.psds.size(); ++i) {
    const auto& b = vw.psds[i];
    const MatR um = svec_to_sym(u.segment(b.off, b.len), b.side);
    const MatR sw_inv = sc.psds[i].rinv.transpose() * sc.psds[i].rinv;
    out.segment(b.off, b.len) = sym_to_svec(sw_inv * um * sw_inv);
  }
  return out;
}

// lambda as a full vector.
VecR lambda_vec(const Scaling& sc, const Views& vw, const VecR& z) {
  VecR lam(vw.total);
  lam.head(vw.nonneg) = sc.lam_nn;
  for (size_t i = 0; i < vw.socs.size(); ++i) {
    const auto& b = vw.socs[i];
    lam.segment(b.off, b.dim) =
        sc.socs[i].eta * soc_vmul(sc.socs[i].wbar, z.segment(b.off, b.dim));
  }
  for (size_t i = 0; i < vw.psds.size(); ++i) {
    const auto& b = vw.psds[i];
    lam.segment(b.off, b.len) =
        sym_to_svec(MatR(sc.psds[i].lam_diag.asDiagonal()));
  }
  return lam;
}

// Jordan product u o v, blockwise.
VecR jordan_mul(const Views& vw, const VecR& u, const VecR& v) {
  VecR out(vw.total);
  out.head(vw.nonneg) =
      u.head(vw.nonneg).cwiseProduct(v.head(vw.nonneg));
  for (const auto& b : vw.socs) {
    const VecR ub = u.segment(b.off, b.dim);
    const VecR vb = v.segment(b.off, b.dim);
    out(b.off) = ub.dot(vb);
    if (b.dim > 1)
      out.segment(b.off + 1, b.dim - 1) =
          ub(0) * vb.tail(b.dim - 1) + vb(0) * ub.tail(b.dim - 1);
  }
  for (const auto& b : vw.psds) {
    const MatR um = svec_to_sym(u.segment(b.off, b.len), b.side);
    const MatR vm = svec_to_sym(v.segment(b.off, b.len), b.side);
    out.segment(b.off, b.len) = sym_to_svec(0.5 * (um * vm + vm * um));
  }
  return out;
}

// Jordan division lambda \ d given the full lambda vector.  SOC blocks invert
// the arrow matrix Arw(lam); PSD blocks exploit that lambda is diagonal, so
// the Sylvester solve is elementwise.
VecR jordan_div_lambda(const Scaling& sc, const Views& vw, const VecR& lam,
                       const VecR& d) {
  VecR out(vw.total);
  out.head(vw.nonneg) =
      d.head(vw.nonneg).cwiseQuotient(lam.head(vw.nonneg));
  for (const auto& b : vw.socs) {
    const VecR lb = lam.segment(b.off, b.dim);
    const VecR db = d.segment(b.off, b.dim);
    if (b.dim == 1) {
      out(b.off) = db(0) / lb(0);
      continue;
    }
    const auto l1 = lb.tail(b.dim - 1);
    const double det = lb(0) * lb(0) - l1.squaredNorm();
    const double u0 = (lb(0) * db(0) - l1.dot(db.tail(b.dim - 1))) / det;
    out(b.off) = u0;
    out.segment(b.off + 1, b.dim - 1) =
        (db.tail(b.dim - 1) - u0 * l1) / lb(0);
  }
  for (size_t i = 0; i < vw.psds.size(); ++i) {
    const auto& b = vw.psds[i];
    const MatR dm = svec_to_sym(d.segment(b.off, b.len), b.side);
    const VecR& ld = sc.psds[i].lam_diag;
    MatR um(b.side, b.side);
    for (int r = 0; r < b.side; ++r)
      for (int cidx = 0; cidx < b.side; ++cidx)
        um(r, cidx) = 2.0 * dm(r, cidx) / (ld(r) + ld(cidx));
    out.segment(b.off, b.len) = sym_to_svec(um);
  }
  return out;
}

// Largest step to the cone boundary from interior point p along dp.
double max_step(const Views& vw, const VecR& p, const VecR& dp) {
  double alpha = kInf;
  for (int i = 0; i < vw.nonneg; ++i)
    if (dp(i) < 0.0) alpha = std::min(alpha, -p(i) / dp(i));
  for (const auto& b : vw.socs) {
    const VecR pb = p.segment(b.off, b.dim);
    const VecR db = dp.segment(b.off, b.dim);
    const double t = pb(0), dt = db(0);
    double un2 = 0, udu = 0, du2 = 0;
    if (b.dim > 1) {
      un2 = pb.tail(b.dim - 1).squaredNorm();
      udu = pb.tail(b.dim - 1).dot(db.tail(b.dim - 1));
      du2 = db.tail(b.dim - 1).squaredNorm();
    }
    const double c0 = t * t - un2;
    const double c1 = 2.0 * (t * dt - udu);
    const double c2 = dt * dt - du2;
    double root = kInf;
    if (std::abs(c2) < 1e-300) {
      if (c1 < 0.0) root = -c0 / c1;
    } else {
      const double disc = c1 * c1 - 4.0 * c2 * c0;
      if (disc >= 0.0) {
        const double sq = std::sqrt(disc);
        // Stable smallest-positive-root selection.
        const double q = -0.5 * (c1 + (c1 >= 0 ? sq : -sq));
        double r1 = q / c2;
        double r2 = (std::abs(q) > 1e-300) ? c0 / q : kInf;
        if (r1 > r2) std::swap(r1, r2);
        if (r1 > 0.0)
          root = r1;
        else if (r2 > 0.0)
          root = r2;
      } else if (c2 < 0.0) {
        // c2<0 forces disc >= -4*c2*c0 > 0 for interior c0>0; unreachable.
        root = 0.0;
      }
    }
    if (dt < 0.0) root = std::min(root, -t / dt);
    alpha = std::min(alpha, root);
  }
  for (const auto& b : vw.psds) {
    const MatR pm = svec_to_sym(p.segment(b.off, b.len), b.side);
    const MatR dm = svec_to_sym(dp.segment(b.off, b.len), b.side);
    Eigen::GeneralizedSelfAdjointEigenSolver<MatR> ges(dm, pm);
    if (ges.info() != Eigen::Success) {
      alpha = std::min(alpha, 0.0);
      continue;
    }
    const double lmin = ges.eigenvalues().minCoeff();
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

// ---------------------------------------------------------------------------
// KKT solve:  [0 A' G'; A 0 0; G 0 -H] (dx,dy,dz) = (bx,by,bz)
// ---------------------------------------------------------------------------
struct KktFactors {
  MatR hinv_g;  // H^{-1} G
  Eigen::LDLT<MatR> qhat;
  MatR qinv_at;
  Eigen::LDLT<MatR> schur;
  bool ok = false;
};

KktFactors factor_kkt(const Scaling& sc, const Views& vw, const MatR& a,
                      const MatR& g) {
  KktFactors f;
  const int n = static_cast<int>(g.cols());
  const int p = static_cast<int>(a.rows());
  f.hinv_g = MatR(g.rows(), n);
  for (int j = 0; j < n; ++j)
    f.hinv_g.col(j) = apply_hinv(sc, vw, g.col(j));
  MatR qhat = g.transpose() * f.hinv_g;
  const double reg = 1e-12 * (1.0 + qhat.diagonal().cwiseAbs().maxCoeff());
  qhat.diagonal().array() += reg;
  f.qhat.compute(qhat);
  if (f.qhat.info() != Eigen::Success) return f;
  if (p > 0) {
    f.qinv_at = f.qhat.solve(a.transpose());
    MatR schur = a * f.qinv_at;
    schur.diagonal().array() +=
        1e-12 * (1.0 + schur.diagonal().cwiseAbs().maxCoeff());
    f.schur.compute(schur);
    if (f.schur.info() != Eigen::Success) return f;
  }
  f.ok = true;
  return f;
}

struct Kkt3 {
  VecR dx, dy, dz;
};

Kkt3 solve_kkt_once(const KktFactors& f, const Scaling& sc, const Views& vw,
                    const MatR& a, const MatR& g, const VecR& bx,
                    const VecR& by, const VecR& bz) {
  Kkt3 d;
  const int p = static_cast<int>(a.rows());
  const VecR r1 = bx + g.transpose() * apply_hinv(sc, vw, bz);
  if (p > 0) {
    const VecR rhs_y = a * f.qhat.solve(r1) - by;
    d.dy = f.schur.solve(rhs_y);
    d.dx = f.qhat.solve(r1 - a.transpose() * d.dy);
  } else {
    d.dy = VecR(0);
    d.dx = f.qhat.solve(r1);
  }
  d.dz = apply_hinv(sc, vw, g * d.dx - bz);
  return d;
}

Kkt3 solve_kkt(const KktFactors& f, const Scaling& sc, const Views& vw,
               const MatR& a, const MatR& g, const VecR& bx, const VecR& by,
               const VecR& bz) {
  Kkt3 d = solve_kkt_once(f, sc, vw, a, g, bx, by, bz);
  // Iterative refinement; the factorization loses accuracy as the scaling
  // degenerates near convergence, so refine while the residual still drops
  // and roll back a pass that makes it worse.
  const int p = static_cast<int>(a.rows());
  VecR rx, ry, rz;
  auto kkt_residual = [&](const Kkt3& t) {
    rx = bx - g.transpose() * t.dz;
    if (p > 0) rx -= a.transpose() * t.dy;
    ry = (p > 0) ? VecR(by - a * t.dx) : VecR(0);
    rz = bz - (g * t.dx - apply_h(sc, vw, t.dz));
    return std::sqrt(rx.squaredNorm() + ry.squaredNorm() + rz.squaredNorm());
  };
  double rn = kkt_residual(d);
  for (int pass = 0; pass < 3 && rn > 0.0; ++pass) {
    const Kkt3 corr = solve_kkt_once(f, sc, vw, a, g, rx, ry, rz);
    Kkt3 trial = d;
    trial.dx += corr.dx;
    if (p > 0) trial.dy += corr.dy;
    trial.dz += corr.dz;
    const double rn_trial = kkt_residual(trial);
    if (rn_trial >= rn) break;
    d = std::move(trial);
    const bool keep_going = rn_trial < 0.5 * rn;
    rn = rn_trial;
    if (!keep_going) break;
  }
  return d;
}

}  // namespace

IpmResult ipm_solve(const VecR& c, const MatR& a, const VecR& b, const MatR& g,
                    const VecR& h, const ConeSpec& cones,
                    const IpmOptions& opts) {
  const int n = static_cast<int>(c.size());
  const int p = static_cast<int>(a.rows());
  const int m = static_cast<int>(g.rows());
  if (a.cols() != n && p > 0)
    throw std::invalid_argument("ipm_solve: A column mismatch");
  if (g.cols() != n) throw std::invalid_argument("ipm_solve: G column mismatch");
  if (b.size() != p) throw std::invalid_argument("ipm_solve: b size mismatch");
  if (h.size() != m) throw std::invalid_argument("ipm_solve: h size mismatch");
  if (cones.total_dim() != m)
    throw std::invalid_argument("ipm_solve: cone dims do not match G rows");

  const Views vw = make_views(cones);
  const double nu = cones.barrier_degree();
  const VecR e = cone_identity(vw);

  VecR x = VecR::Zero(n), y = VecR::Zero(p);
  VecR s = e, z = e;
  double tau = 1.0, kappa = 1.0;

  IpmResult res;
  const double bnorm = 1.0 + b.norm();
  const double hnorm = 1.0 + h.norm();
  const double cnorm = 1.0 + c.norm();

  auto finalize_point = [&](SolveStatus st) {
    res.status = st;
    const double t = std::max(tau, 1e-300);
    res.x = x / t;
    res.y = y / t;
    res.z = z / t;
    res.s = s / t;
    res.objective = c.dot(res.x);
  };

  int consecutive_tiny = 0;
  // Most-converged iterate seen so far.  The scaled KKT system grows
  // ill-conditioned as mu -> 0, and a late step can corrupt an essentially
  // optimal iterate; on breakdown the best point is restored and accepted at
  // a relaxed tolerance instead of being discarded.
  double best_merit = kInf, best_pres = kInf, best_dres = kInf;
  double best_gap = kInf, best_gapm = kInf, best_feas = kInf;
  VecR best_x = x, best_y = y, best_z = z, best_s = s;
  double best_tau = tau, best_kappa = kappa;
  int best_iter = 0;

  for (int iter = 0; iter <= opts.max_iters; ++iter) {
    // Residuals of the homogeneous embedding.
    VecR rx = g.transpose() * z + c * tau;
    if (p > 0) rx += a.transpose() * y;
    const VecR ry = (p > 0) ? VecR(a * x - b * tau) : VecR(0);
    const VecR rz = s + g * x - h * tau;
    const double rtau = kappa + c.dot(x) + h.dot(z) + ((p > 0) ? b.dot(y) : 0.0);
    const double mu = (s.dot(z) + tau * kappa) / (nu + 1.0);

    // Convergence metrics at the de-homogenized point.
    const double pcost = c.dot(x) / tau;
    const double gap = s.dot(z) / (tau * tau);
    const double relgap = gap / std::max(1.0, std::abs(pcost));
    const double pres =
        std::max((p > 0) ? ry.norm() / (tau * bnorm) : 0.0,
                 rz.norm() / (tau * hnorm));
    const double dres = rx.norm() / (tau * cnorm);

    if (opts.verbose)
      std::printf(
          "ipm %3d: pres %.2e dres %.2e gap %.2e relgap %.2e mu %.2e tau "
          "%.2e kap %.2e\n",
          iter, pres, dres, gap, relgap, mu, tau, kappa);

    res.iterations = iter;
    res.primal_residual = pres;
    res.dual_residual = dres;
    res.gap = gap;
    if (pres <= opts.feas_tol && dres <= opts.feas_tol &&
        (gap <= opts.gap_tol || relgap <= opts.gap_tol)) {
      finalize_point(SolveStatus::Optimal);
      return res;
    }
    const double gapm = std::min(gap, relgap);
    const double merit = std::max({pres, dres, gapm});
    if (merit < best_merit) {
      best_merit = merit;
      best_pres = pres;
      best_dres = dres;
      best_gap = gap;
      best_gapm = gapm;
      best_x = x;
      best_y = y;
      best_z = z;
      best_s = s;
      best_tau = tau;
      best_kappa = kappa;
      best_iter = iter;
    }
    const double feas = std::max(pres, dres);
    if (feas < best_feas) {
      best_feas = feas;
    } else if (best_feas <= 1e3 * opts.feas_tol && feas > 100.0 * best_feas) {
      // A step from a near-converged iterate blew the residuals up: the
      // scaled KKT system has run out of precision.  Keep the best point.
      if (opts.verbose)
        std::printf("ipm: residuals diverged (%.2e vs best %.2e)\n", feas,
                    best_feas);
      break;
    }
    // Infeasibility certificates.
    const double bhz = h.dot(z) + ((p > 0) ? b.dot(y) : 0.0);
    if (bhz < 0.0) {
      VecR atgz = g.transpose() * z;
      if (p > 0) atgz += a.transpose() * y;
      if (atgz.norm() / cnorm <= opts.feas_tol * (-bhz)) {
        finalize_point(SolveStatus::Infeasible);
        return res;
      }
    }
    const double cx = c.dot(x);
    if (cx < 0.0) {
      const double r1n = (p > 0) ? (a * x).norm() / bnorm : 0.0;
      const double r2n = (g * x + s).norm() / hnorm;
      if (std::max(r1n, r2n) <= opts.feas_tol * (-cx)) {
        finalize_point(SolveStatus::Unbounded);
        return res;
      }
    }
    if (iter == opts.max_iters) break;

    const Scaling sc = compute_scaling(s, z, vw);
    if (!sc.ok) {
      if (opts.verbose) std::printf("ipm: scaling breakdown\n");
      break;
    }
    const KktFactors f = factor_kkt(sc, vw, a, g);
    if (!f.ok) {
      if (opts.verbose) std::printf("ipm: factorization breakdown\n");
      break;
    }
    const VecR lam = lambda_vec(sc, vw, z);
    const VecR lamsq = jordan_mul(vw, lam, lam);

    // Constant-rhs solve shared by both steps of this iteration.
    const Kkt3 v = solve_kkt(f, sc, vw, a, g, -c, b, h);
    const double denom_tau =
        c.dot(v.dx) + ((p > 0) ? b.dot(v.dy) : 0.0) + h.dot(v.dz) - kappa / tau;

    auto take_step = [&](double eta, double sigmu, const VecR& corr_s,
                         double corr_tk, VecR& dx, VecR& dy, VecR& dz, VecR& ds,
                         double& dtau, double& dkappa) {
      VecR d_s = sigmu * e - lamsq;
      if (corr_s.size() > 0) d_s -= corr_s;
      const VecR gvec = jordan_div_lambda(sc, vw, lam, d_s);
      const VecR bz = -eta * rz - apply_wt(sc, vw, gvec);
      const Kkt3 u = solve_kkt(f, sc, vw, a, g, -eta * rx,
                               (p > 0) ? VecR(-eta * ry) : VecR(0), bz);
      const double dk_e = sigmu - tau * kappa - corr_tk;
      const double num = -eta * rtau - dk_e / tau - c.dot(u.dx) -
                         ((p > 0) ? b.dot(u.dy) : 0.0) - h.dot(u.dz);
      dtau = num / denom_tau;
      dx = u.dx + dtau * v.dx;
      dy = (p > 0) ? VecR(u.dy + dtau * v.dy) : VecR(0);
      dz = u.dz + dtau * v.dz;
      ds = apply_wt(sc, vw, gvec - apply_w(sc, vw, dz));
      dkappa = (dk_e - kappa * dtau) / tau;
    };

    // Predictor (affine) step.
    VecR dx_a, dy_a, dz_a, ds_a;
    double dtau_a, dkap_a;
    take_step(1.0, 0.0, VecR(), 0.0, dx_a, dy_a, dz_a, ds_a, dtau_a, dkap_a);

    double alpha_aff = std::min(max_step(vw, s, ds_a), max_step(vw, z, dz_a));
    if (dtau_a < 0.0) alpha_aff = std::min(alpha_aff, -tau / dtau_a);
    if (dkap_a < 0.0) alpha_aff = std::min(alpha_aff, -kappa / dkap_a);
    alpha_aff = std::min(alpha_aff, 1.0);

    const double mu_aff =
        ((s + alpha_aff * ds_a).dot(z + alpha_aff * dz_a) +
         (tau + alpha_aff * dtau_a) * (kappa + alpha_aff * dkap_a)) /
        (nu + 1.0);
    double sigma = std::pow(std::max(0.0, mu_aff / mu), 3.0);
    sigma = std::min(1.0, sigma);

    // Corrector cross terms in the scaled space.
    const VecR corr_s = jordan_mul(vw, apply_winvt(sc, vw, ds_a),
                                   apply_w(sc, vw, dz_a));
    const double corr_tk = dtau_a * dkap_a;

    VecR dx, dy, dz, ds;
    double dtau, dkap;
    take_step(1.0 - sigma, sigma * mu, corr_s, corr_tk, dx, dy, dz, ds, dtau,
              dkap);

    double alpha = std::min(max_step(vw, s, ds), max_step(vw, z, dz));
    if (dtau < 0.0) alpha = std::min(alpha, -tau / dtau);
    if (dkap < 0.0) alpha = std::min(alpha, -kappa / dkap);
    alpha = std::min(0.99 * alpha, 1.0);

    if (!std::isfinite(alpha) || alpha <= 1e-10) {
      if (++consecutive_tiny >= 2) {
        if (opts.verbose) std::printf("ipm: step length collapsed\n");
        break;
      }
      alpha = std::max(alpha, 0.0);
    } else {
      consecutive_tiny = 0;
    }

    x += alpha * dx;
    if (p > 0) y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkap;

    if (!(tau > 0.0) || !(kappa > 0.0) || !in_interior(s, vw) ||
        !in_interior(z, vw)) {
      if (opts.verbose) std::printf("ipm: iterate left the cone interior\n");
      break;
    }
  }

  // Numerical breakdown (or iteration cap): report the best iterate, and
  // accept it as optimal when it is feasible and closed at a modestly
  // relaxed tolerance.
  if (std::isfinite(best_merit)) {
    x = best_x;
    y = best_y;
    z = best_z;
    s = best_s;
    tau = best_tau;
    kappa = best_kappa;
    res.iterations = best_iter;
    res.primal_residual = best_pres;
    res.dual_residual = best_dres;
    res.gap = best_gap;
    const double relax = 100.0;
    if (best_pres <= relax * opts.feas_tol && best_dres <= relax * opts.feas_tol &&
        best_gapm <= relax * opts.gap_tol) {
      finalize_point(SolveStatus::Optimal);
      return res;
    }
  }
  finalize_point(SolveStatus::NumericalFailure);
  return res;
}

}  // namespace qisac
