// optimizer.cpp
// Lifted-SDP precoder design: per-iteration convexified inner problems
// (slack-chain rate bounds, linearized log-interference, sensing LMI,
// rank-one penalty), Dinkelbach outer updates, baselines, and extraction.
#include "qisac/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <utility>

#include <Eigen/Dense>

#include "json.hpp"
#include "qisac/quantization.hpp"

namespace qisac {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Lifted variable bookkeeping: matrices ordered [P_c?, P_1..P_K, P_r?].

struct VarList {
  bool has_common = false;
  bool has_radar = false;
  int n_users = 0;

  int count() const {
    return n_users + (has_common ? 1 : 0) + (has_radar ? 1 : 0);
  }
  int common() const { return 0; }
  int user(int k) const { return (has_common ? 1 : 0) + k; }
  int radar() const { return (has_common ? 1 : 0) + n_users; }
  bool is_user(int v) const {
    return v >= (has_common ? 1 : 0) && v < (has_common ? 1 : 0) + n_users;
  }
};

const MatC& var_matrix(const LiftedPrecoders& p, const VarList& vl, int v) {
  if (vl.has_common && v == vl.common()) return p.p_c;
  if (vl.has_radar && v == vl.radar()) return p.p_r;
  return p.p_k[static_cast<std::size_t>(v - (vl.has_common ? 1 : 0))];
}

double re_tr(const MatC& m, const MatC& p) { return (m * p).trace().real(); }

// ---------------------------------------------------------------------------
// Static data of one design run (channel/quantization/sensing couplings).

struct ProblemData {
  VarList vars;
  int n = 0;
  int n_users = 0;  // users inside this problem (1 for an OMA slice)
  RadarSicMode mode = RadarSicMode::SicRadar;
  double psi = 0;
  double noise = 1;
  double p_t = 0;
  double r_th = 0;
  double kappa = 0.27;
  double p_rf_w = 0;
  double common_power_share = 0;  // 1/K weight of the common column's power
  bool radar_in_budget = true;
  double xi = 5e-3;
  VecR delta;
  MatC delta2;                    // diag(delta^2), complex
  std::vector<MatC> m_sig;        // Delta h_k h_k^H Delta
  std::vector<MatC> m_qn;         // quantization-noise coupling per user
  MatC m_dd, m_ad, m_aa;          // sensing trace coefficients
  double crb_rhs = 0;             // crb_scale / (2 rho snr_radar)
  double snr_radar = 0;
  double rho = 0;                 // angle-error bound, squared degrees
  double crb_scale = 1;           // raw trace ratio -> physical bound units
};

ProblemData make_problem_data(const SystemConfig& cfg, const ChannelSet& cs,
                              RadarSicMode mode, bool has_common,
                              const std::vector<int>& users,
                              const OptimizerConfig& ocfg) {
  ProblemData d;
  d.n = cfg.n_tx;
  d.n_users = static_cast<int>(users.size());
  d.mode = mode;
  d.psi = radar_psi(mode);
  d.vars.has_common = has_common;
  d.vars.has_radar = mode != RadarSicMode::NoRadar;
  d.vars.n_users = d.n_users;
  d.noise = cfg.noise_power;
  d.p_t = cfg.p_t;
  d.r_th = cfg.qos_rate;
  d.kappa = cfg.power.kappa;
  d.p_rf_w = p_rf(cfg.dac_bits, cfg.power, cfg.n_tx);
  d.common_power_share = has_common ? 1.0 / static_cast<double>(cs.h.cols()) : 0.0;
  d.radar_in_budget = ocfg.power_counts_radar_when_sic;
  d.xi = ocfg.xi;

  const QuantLossTable table = cfg.loss_table_path.empty()
                                   ? QuantLossTable::defaults()
                                   : QuantLossTable::from_file(cfg.loss_table_path);
  d.delta = QuantModel::uniform(cfg.n_tx, cfg.dac_bits, table).delta;
  d.delta2 = d.delta.array().square().matrix().cast<cxd>().asDiagonal();
  const MatC dl = d.delta.cast<cxd>().asDiagonal();
  const VecR leak = (d.delta.array() * (1.0 - d.delta.array())).matrix();

  d.m_sig.reserve(users.size());
  d.m_qn.reserve(users.size());
  for (int k : users) {
    const VecC hk = cs.h.col(k);
    const MatC hh = hk * hk.adjoint();
    d.m_sig.push_back(dl * hh * dl);
    if (cfg.quant_noise_diag) {
      const VecR diag = (leak.array() * hk.array().abs2()).matrix();
      d.m_qn.push_back(MatC(diag.cast<cxd>().asDiagonal()));
    } else {
      d.m_qn.push_back(hh * MatC(leak.cast<cxd>().asDiagonal()));
    }
  }

  const double theta = cfg.radar.theta_deg * kPi / 180.0;
  const MatC a_mat = cs.b_rx * cs.a_tx.transpose();
  const MatC adot = steering_derivative_outer(cfg.n_rx, cfg.n_tx,
                                              cfg.element_spacing, theta);
  d.m_dd = dl * adot.adjoint() * adot * dl;
  d.m_ad = dl * adot.adjoint() * a_mat * dl;
  d.m_aa = dl * a_mat.adjoint() * a_mat * dl;
  d.snr_radar = cs.snr_radar;
  d.rho = cfg.crb_bound;
  // The angle-error bound is a physical estimator variance in squared
  // degrees, while the trace identities below work in radians on the
  // budget-normalized transmit covariance (the echo SNR is defined at full
  // budget power).  Fold both conversions into one scale so the constraint
  // and every reported bound value live in the same units as the config.
  d.crb_scale = cfg.p_t * (180.0 / kPi) * (180.0 / kPi);
  d.crb_rhs = d.crb_scale / (2.0 * cfg.crb_bound * cs.snr_radar);
  return d;
}

// Coupling of the private interference I_k to lifted variable v (the
// pre-scale gradient dI_k/dP_v).  The radar column carries the SIC factor on
// its whole footprint — linear interference and distortion alike — since an
// ideal cancellation of the known sequence removes both.
MatC interf_coupling(const ProblemData& d, int k, int v) {
  if (d.vars.has_radar && v == d.vars.radar())
    return d.psi * (d.m_qn[static_cast<std::size_t>(k)] +
                    d.m_sig[static_cast<std::size_t>(k)]);
  MatC m = d.m_qn[static_cast<std::size_t>(k)];
  if (d.vars.is_user(v) && v != d.vars.user(k))
    m += d.m_sig[static_cast<std::size_t>(k)];
  return m;
}

// ---------------------------------------------------------------------------
// Exact lifted-domain evaluation.

struct PointEval {
  VecR s_c, i_c, rate_c;  // common stream (zero-size without one)
  VecR s_p, i_p, rate_p;  // private streams
  VecR chain;             // per-user chain power
  double budget = 0;      // power-constraint left-hand side
  double radiated = 0;    // all columns counted
};

PointEval eval_point(const ProblemData& d, const LiftedPrecoders& p) {
  const int K = d.n_users;
  PointEval ev;
  ev.s_p.resize(K);
  ev.i_p.resize(K);
  ev.rate_p.resize(K);
  ev.chain.resize(K);
  if (d.vars.has_common) {
    ev.s_c.resize(K);
    ev.i_c.resize(K);
    ev.rate_c.resize(K);
  }
  for (int k = 0; k < K; ++k) {
    const MatC& msig = d.m_sig[static_cast<std::size_t>(k)];
    const MatC& mqn = d.m_qn[static_cast<std::size_t>(k)];
    double interf = d.noise;
    for (int j = 0; j < K; ++j)
      if (j != k) interf += re_tr(msig, p.p_k[static_cast<std::size_t>(j)]);
    if (d.vars.has_radar && d.psi > 0)
      interf += d.psi * (re_tr(msig, p.p_r) + re_tr(mqn, p.p_r));
    for (int v = 0; v < d.vars.count(); ++v)
      if (!(d.vars.has_radar && v == d.vars.radar()))
        interf += re_tr(mqn, var_matrix(p, d.vars, v));
    ev.i_p(k) = interf;
    ev.s_p(k) = re_tr(msig, p.p_k[static_cast<std::size_t>(k)]);
    ev.rate_p(k) = std::log2(1.0 + ev.s_p(k) / ev.i_p(k));
    if (d.vars.has_common) {
      ev.i_c(k) = ev.i_p(k) + ev.s_p(k);
      ev.s_c(k) = re_tr(msig, p.p_c);
      ev.rate_c(k) = std::log2(1.0 + ev.s_c(k) / ev.i_c(k));
    }
    double ptx = re_tr(d.delta2, p.p_k[static_cast<std::size_t>(k)]);
    if (d.vars.has_common)
      ptx += d.common_power_share * re_tr(d.delta2, p.p_c);
    ev.chain(k) = d.p_rf_w + ptx / d.kappa;
  }
  for (int v = 0; v < d.vars.count(); ++v) {
    const double pv = re_tr(d.delta2, var_matrix(p, d.vars, v));
    ev.radiated += pv;
    const bool radar_col = d.vars.has_radar && v == d.vars.radar();
    if (!radar_col || d.radar_in_budget || d.psi > 0) ev.budget += pv;
  }
  return ev;
}

VecC fixed_phase(VecC v) {
  int idx = 0;
  const double mx = v.cwiseAbs().maxCoeff(&idx);
  if (mx > 0) v *= std::conj(v(idx) / mx) / (std::abs(v(idx)) / mx);
  return v;
}

VecC top_eigvec(const MatC& p, int n) {
  if (p.size() == 0 || p.norm() == 0) {
    VecC e = VecC::Zero(n);
    e(0) = 1.0;
    return e;
  }
  Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (p + p.adjoint()));
  return fixed_phase(es.eigenvectors().col(p.rows() - 1));
}

// Expansion point of one convexification: the previous iterate, its exact
// interference/signal terms, and the penalty eigvectors.
struct Expansion {
  LiftedPrecoders point;
  PointEval ev;
  VecR tau_c, tau_p;  // received-total slack values S + I
  VecC pen_c, pen_r;
  std::vector<VecC> pen_k;
};

Expansion make_expansion(const ProblemData& d, const LiftedPrecoders& p) {
  Expansion e;
  e.point = p;
  e.ev = eval_point(d, p);
  const int K = d.n_users;
  e.tau_p = e.ev.s_p + e.ev.i_p;
  if (d.vars.has_common) e.tau_c = e.ev.s_c + e.ev.i_c;
  if (d.vars.has_common) e.pen_c = top_eigvec(p.p_c, d.n);
  if (d.vars.has_radar) e.pen_r = top_eigvec(p.p_r, d.n);
  e.pen_k.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    e.pen_k.push_back(top_eigvec(p.p_k[static_cast<std::size_t>(k)], d.n));
  return e;
}

// ---------------------------------------------------------------------------
// Inner problem assembly.

struct InnerVars {
  HermVar pc, pr;
  std::vector<HermVar> pk;
  std::vector<ScalarVar> c, r, eta_c, beta_c, tau_c, eta_p, beta_p, tau_p;
  ScalarVar mu;
  bool has_mu = false;
};

Expr chain_power_expr(ConicBuilder& b, const InnerVars& v,
                      const ProblemData& d, int k) {
  Expr ptx = b.re_trace_product(d.delta2, v.pk[static_cast<std::size_t>(k)]);
  if (d.vars.has_common)
    ptx += d.common_power_share * b.re_trace_product(d.delta2, v.pc);
  return Expr(d.p_rf_w) + (1.0 / d.kappa) * ptx;
}

// Linearization of log2(I_k) around the expansion point.
Expr gtilde_expr(ConicBuilder& b, const InnerVars& v, const ProblemData& d,
                 const Expansion& e, int k) {
  const double it = e.ev.i_p(k);
  Expr g(std::log2(it));
  for (int vi = 0; vi < d.vars.count(); ++vi) {
    const MatC m = interf_coupling(d, k, vi) / (kLn2 * it);
    const HermVar hv = (d.vars.has_common && vi == d.vars.common()) ? v.pc
                       : (d.vars.has_radar && vi == d.vars.radar())
                           ? v.pr
                           : v.pk[static_cast<std::size_t>(
                                 vi - (d.vars.has_common ? 1 : 0))];
    g += b.re_trace_product(m, hv);
    g -= Expr(re_tr(m, var_matrix(e.point, d.vars, vi)));
  }
  return g;
}

void build_inner(ConicBuilder& b, InnerVars& v, const ProblemData& d,
                 const Expansion& e, Objective obj, double lambda) {
  const int K = d.n_users;
  if (d.vars.has_common) v.pc = b.add_hermitian("P_c", d.n);
  v.pk.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    v.pk.push_back(b.add_hermitian("P_" + std::to_string(k), d.n));
  if (d.vars.has_radar) v.pr = b.add_hermitian("P_r", d.n);
  auto scalars = [&](std::vector<ScalarVar>& dst, const char* stem) {
    dst.reserve(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k)
      dst.push_back(b.add_scalar(std::string(stem) + std::to_string(k)));
  };
  if (d.vars.has_common) {
    scalars(v.c, "C_");
    scalars(v.eta_c, "etac_");
    scalars(v.beta_c, "betac_");
    scalars(v.tau_c, "tauc_");
  }
  scalars(v.r, "r_");
  scalars(v.eta_p, "eta_");
  scalars(v.beta_p, "beta_");
  scalars(v.tau_p, "tau_");
  if (obj == Objective::MaxMinEE) {
    v.mu = b.add_scalar("mu");
    v.has_mu = true;
  }

  if (d.vars.has_common) b.add_psd(v.pc);
  for (int k = 0; k < K; ++k) b.add_psd(v.pk[static_cast<std::size_t>(k)]);
  if (d.vars.has_radar) b.add_psd(v.pr);

  // Transmit-power budget.
  Expr budget;
  if (d.vars.has_common) budget += b.re_trace_product(d.delta2, v.pc);
  for (int k = 0; k < K; ++k)
    budget += b.re_trace_product(d.delta2, v.pk[static_cast<std::size_t>(k)]);
  if (d.vars.has_radar && (d.radar_in_budget || d.psi > 0))
    budget += b.re_trace_product(d.delta2, v.pr);
  b.add_ineq(Expr(d.p_t) - budget);

  auto interf_private = [&](int k) {
    Expr s(d.noise);
    for (int j = 0; j < K; ++j)
      if (j != k)
        s += b.re_trace_product(d.m_sig[static_cast<std::size_t>(k)],
                                v.pk[static_cast<std::size_t>(j)]);
    if (d.vars.has_radar && d.psi > 0)
      s += d.psi *
           b.re_trace_product(MatC(d.m_sig[static_cast<std::size_t>(k)] +
                                   d.m_qn[static_cast<std::size_t>(k)]),
                              v.pr);
    if (d.vars.has_common)
      s += b.re_trace_product(d.m_qn[static_cast<std::size_t>(k)], v.pc);
    for (int j = 0; j < K; ++j)
      s += b.re_trace_product(d.m_qn[static_cast<std::size_t>(k)],
                              v.pk[static_cast<std::size_t>(j)]);
    return s;
  };
  // Concave-log lower bound eta <= ln(tau) as a rotated second-order cone
  // around tau0: ||(tau + eta - kap, 2 sqrt(tau0))|| <= tau - eta + kap with
  // kap = ln(tau0) + 1.
  auto log_soc = [&](ScalarVar eta, ScalarVar tau, double tau0) {
    const double kap = std::log(tau0) + 1.0;
    b.add_soc(b.var(tau) - b.var(eta) + Expr(kap),
              {b.var(tau) + b.var(eta) - Expr(kap),
               Expr(2.0 * std::sqrt(tau0))});
  };

  Expr sum_c;
  if (d.vars.has_common)
    for (int k = 0; k < K; ++k) sum_c += b.var(v.c[static_cast<std::size_t>(k)]);

  for (int k = 0; k < K; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const Expr ip = interf_private(k);
    const Expr sp = b.re_trace_product(d.m_sig[ku], v.pk[ku]);
    if (d.vars.has_common) {
      const Expr ic = ip + sp;
      const Expr sc = b.re_trace_product(d.m_sig[ku], v.pc);
      // Common-rate chain: eta - beta >= ln2 * sum C, exp-tangent bound on
      // the interference, received-total slack, log cone.
      b.add_ineq(b.var(v.eta_c[ku]) - b.var(v.beta_c[ku]) - kLn2 * sum_c);
      const double b0 = std::log(e.ev.i_c(k));
      b.add_ineq(std::exp(b0) * (b.var(v.beta_c[ku]) - Expr(b0) + Expr(1.0)) -
                 ic);
      b.add_ineq(sc + ic - b.var(v.tau_c[ku]));
      log_soc(v.eta_c[ku], v.tau_c[ku], e.tau_c(k));
      b.add_ineq(b.var(v.c[ku]));  // C_k >= 0
    }
    // Private-rate chain.
    b.add_ineq(b.var(v.eta_p[ku]) - b.var(v.beta_p[ku]) -
               kLn2 * b.var(v.r[ku]));
    const double b0 = std::log(e.ev.i_p(k));
    b.add_ineq(std::exp(b0) * (b.var(v.beta_p[ku]) - Expr(b0) + Expr(1.0)) -
               ip);
    b.add_ineq(sp + ip - b.var(v.tau_p[ku]));
    log_soc(v.eta_p[ku], v.tau_p[ku], e.tau_p(k));
    // Quality of service on the total rate claim.
    Expr qos = b.var(v.r[ku]) - Expr(d.r_th);
    if (d.vars.has_common) qos += b.var(v.c[ku]);
    b.add_ineq(qos);
  }

  // Sensing LMI: [[T_dd - crb_rhs, T_ad], [conj, T_aa]] PSD over the
  // quantized transmit covariance implied by all active columns; crb_rhs
  // carries the unit/normalization scale so PSD-ness is exactly the
  // angle-error variance bound.
  {
    Expr tdd, taa;
    CxExpr tad;
    auto accumulate = [&](HermVar hv) {
      tdd += b.re_trace_product(d.m_dd, hv);
      taa += b.re_trace_product(d.m_aa, hv);
      tad = tad + b.cx_trace_product(d.m_ad, hv);
    };
    if (d.vars.has_common) accumulate(v.pc);
    for (int k = 0; k < K; ++k) accumulate(v.pk[static_cast<std::size_t>(k)]);
    if (d.vars.has_radar) accumulate(v.pr);
    HermExprMat lmi(2);
    lmi.set(0, 0, CxExpr(tdd - Expr(d.crb_rhs), Expr()));
    lmi.set(0, 1, tad);
    lmi.set(1, 1, CxExpr(taa, Expr()));
    b.add_lmi(std::move(lmi));
  }

  // Rank-one penalty tr((I - m m^H) P) over the penalized columns.
  Expr pen;
  if (d.vars.has_common) pen += b.trace(v.pc) - b.hquad(e.pen_c, v.pc);
  for (int k = 0; k < K; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    pen += b.trace(v.pk[ku]) - b.hquad(e.pen_k[ku], v.pk[ku]);
  }
  if (d.vars.has_radar && d.psi > 0)
    pen += d.psi * (b.trace(v.pr) - b.hquad(e.pen_r, v.pr));

  // Objective family: per-user fractional rows for max-min, their sum for
  // total-EE, plain surrogate rates for sum-rate.
  auto rate_surrogate = [&](int k) {
    const auto ku = static_cast<std::size_t>(k);
    Expr s = (1.0 / kLn2) * b.var(v.eta_p[ku]) - gtilde_expr(b, v, d, e, k);
    if (d.vars.has_common) s += b.var(v.c[ku]);
    return s;
  };
  switch (obj) {
    case Objective::MaxMinEE: {
      for (int k = 0; k < K; ++k)
        b.add_ineq(rate_surrogate(k) - lambda * chain_power_expr(b, v, d, k) -
                   b.var(v.mu));
      b.set_objective_max(b.var(v.mu) - d.xi * pen);
      break;
    }
    case Objective::TotalEE: {
      Expr total;
      for (int k = 0; k < K; ++k)
        total += rate_surrogate(k) - lambda * chain_power_expr(b, v, d, k);
      b.set_objective_max(total - d.xi * pen);
      break;
    }
    case Objective::SumRate: {
      Expr total;
      for (int k = 0; k < K; ++k) total += rate_surrogate(k);
      b.set_objective_max(total - d.xi * pen);
      break;
    }
  }
}

LiftedPrecoders read_point(const ConicBuilder& b, const InnerVars& v,
                           const ProblemData& d, const VecR& dofs) {
  LiftedPrecoders p;
  const int K = d.n_users;
  if (d.vars.has_common) p.p_c = b.value(v.pc, dofs);
  if (d.vars.has_radar) p.p_r = b.value(v.pr, dofs);
  p.p_k.reserve(static_cast<std::size_t>(K));
  for (int k = 0; k < K; ++k)
    p.p_k.push_back(b.value(v.pk[static_cast<std::size_t>(k)], dofs));
  p.c = VecR::Zero(K);
  p.r = VecR::Zero(K);
  for (int k = 0; k < K; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    if (d.vars.has_common) p.c(k) = b.value(v.c[ku], dofs);
    p.r(k) = b.value(v.r[ku], dofs);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Debug-mode soundness sampling: convex combinations of the solution and the
// expansion-point anchor are inner-feasible by construction; verify they
// satisfy the exact (non-surrogate) constraints.

// Dof vector of the expansion point with slacks at their defining values.
VecR anchor_dofs(const ConicBuilder& b, const InnerVars& v,
                 const ProblemData& d, const Expansion& e, double lambda,
                 const VecR& like) {
  VecR dofs = like;
  const int K = d.n_users;
  if (d.vars.has_common) b.set_value(v.pc, e.point.p_c, dofs);
  for (int k = 0; k < K; ++k)
    b.set_value(v.pk[static_cast<std::size_t>(k)],
                e.point.p_k[static_cast<std::size_t>(k)], dofs);
  if (d.vars.has_radar) b.set_value(v.pr, e.point.p_r, dofs);
  double mu = kInf;
  for (int k = 0; k < K; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const double ck = d.vars.has_common ? e.point.c(k) : 0.0;
    if (d.vars.has_common) {
      b.set_value(v.c[ku], ck, dofs);
      b.set_value(v.beta_c[ku], std::log(e.ev.i_c(k)), dofs);
      b.set_value(v.tau_c[ku], e.tau_c(k), dofs);
      b.set_value(v.eta_c[ku], std::log(e.tau_c(k)), dofs);
    }
    b.set_value(v.r[ku], e.ev.rate_p(k), dofs);
    b.set_value(v.beta_p[ku], std::log(e.ev.i_p(k)), dofs);
    b.set_value(v.tau_p[ku], e.tau_p(k), dofs);
    b.set_value(v.eta_p[ku], std::log(e.tau_p(k)), dofs);
    mu = std::min(mu, ck + e.ev.rate_p(k) - lambda * e.ev.chain(k));
  }
  if (v.has_mu) b.set_value(v.mu, mu, dofs);
  return dofs;
}

bool exact_feasible(const ProblemData& d, const LiftedPrecoders& p,
                    double tol) {
  const PointEval ev = eval_point(d, p);
  if (ev.budget > d.p_t * (1.0 + tol) + tol) return false;
  double sum_c = 0;
  if (d.vars.has_common) sum_c = p.c.sum();
  for (int k = 0; k < d.n_users; ++k) {
    if (d.vars.has_common) {
      if (p.c(k) < -tol) return false;
      if (sum_c > ev.rate_c(k) + tol) return false;
    }
    if (p.r(k) > ev.rate_p(k) + tol) return false;
    const double ck = d.vars.has_common ? p.c(k) : 0.0;
    if (ck + p.r(k) < d.r_th - tol) return false;
  }
  for (int v = 0; v < d.vars.count(); ++v) {
    const MatC& m = var_matrix(p, d.vars, v);
    Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (m + m.adjoint()));
    const double tr = std::max(1.0, m.trace().real());
    if (es.eigenvalues()(0) < -tol * tr) return false;
  }
  double tdd = 0, taa = 0;
  cxd tad = 0;
  for (int v = 0; v < d.vars.count(); ++v) {
    const MatC& m = var_matrix(p, d.vars, v);
    tdd += re_tr(d.m_dd, m);
    taa += re_tr(d.m_aa, m);
    tad += (d.m_ad * m).trace();
  }
  const double bracket = tdd * taa - std::norm(tad);
  if (bracket <= 0) return false;
  const double crb = d.crb_scale * taa / (2.0 * d.snr_radar * bracket);
  return crb <= d.rho * (1.0 + tol);
}

void sample_soundness(const ConicBuilder& b, const InnerVars& v,
                      const ProblemData& d, const Expansion& e,
                      const VecR& sol_dofs, double lambda, int n_samples,
                      Rng& rng, int& samples, int& failures) {
  const VecR anchor = anchor_dofs(b, v, d, e, lambda, sol_dofs);
  if (b.max_violation(anchor) > 1e-7) return;  // pre-QoS initialization
  for (int i = 0; i < n_samples; ++i) {
    const double th = rng.uniform(0.0, 1.0);
    const VecR y = th * sol_dofs + (1.0 - th) * anchor;
    if (b.max_violation(y) > 1e-6) continue;  // not an inner-feasible draw
    ++samples;
    if (!exact_feasible(d, read_point(b, v, d, y), 1e-6)) ++failures;
  }
}

// ---------------------------------------------------------------------------
// Outer loop.

struct LoopResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  bool converged = false;
  LiftedPrecoders lifted;
  std::vector<double> lambda_trace, obj_trace;
  int iterations = 0;
  int sound_samples = 0, sound_failures = 0;
  std::vector<std::string> warnings;
  std::string detail;
};

LiftedPrecoders shape_lifted(const ProblemData& d, const Precoders& p) {
  LiftedPrecoders l;
  if (d.vars.has_common) l.p_c = p.p_c * p.p_c.adjoint();
  if (d.vars.has_radar) l.p_r = p.p_r * p.p_r.adjoint();
  l.p_k.reserve(static_cast<std::size_t>(d.n_users));
  for (int k = 0; k < d.n_users; ++k)
    l.p_k.push_back(p.p_k.col(k) * p.p_k.col(k).adjoint());
  l.c = VecR::Zero(d.n_users);
  l.r = VecR::Zero(d.n_users);
  return l;
}

LoopResult run_sca(const ProblemData& d, const LiftedPrecoders& init,
                   Objective obj, const OptimizerConfig& ocfg,
                   const std::string& trace_path) {
  LoopResult out;
  out.lifted = init;
  std::ofstream trace;
  if (!trace_path.empty()) trace.open(trace_path);
  Rng rng(0x51cab417u);
  LiftedPrecoders cur = init;
  double lambda = 0;
  double prev_val = 0;
  for (int t = 0; t < ocfg.t_max; ++t) {
    const Expansion e = make_expansion(d, cur);
    ConicBuilder b;
    InnerVars v;
    build_inner(b, v, d, e, obj, lambda);
    const ConicSolution sol = b.solve(ocfg.conic);
    if (sol.status != SolveStatus::Optimal) {
      out.status = (t == 0 && sol.status == SolveStatus::Infeasible)
                       ? SolveStatus::Infeasible
                       : SolveStatus::NumericalFailure;
      std::ostringstream os;
      os << "inner solve returned " << status_name(sol.status)
         << " at outer iteration " << t;
      out.detail = os.str();
      out.lifted = std::move(cur);  // last point that produced a clean solve
      return out;
    }
    LiftedPrecoders next = read_point(b, v, d, sol.dofs);
    const PointEval ev = eval_point(d, next);
    double new_lambda = 0;
    if (obj == Objective::MaxMinEE) {
      new_lambda = kInf;
      for (int k = 0; k < d.n_users; ++k)
        new_lambda =
            std::min(new_lambda, (next.c(k) + ev.rate_p(k)) / ev.chain(k));
    } else if (obj == Objective::TotalEE) {
      double rate = 0, power = 0;
      for (int k = 0; k < d.n_users; ++k) {
        rate += next.c(k) + ev.rate_p(k);
        power += ev.chain(k);
      }
      new_lambda = rate / power;
    } else {
      for (int k = 0; k < d.n_users; ++k) new_lambda += next.c(k) + ev.rate_p(k);
    }
    out.lambda_trace.push_back(new_lambda);
    out.obj_trace.push_back(sol.objective);
    out.iterations = t + 1;
    if (trace.is_open()) {
      nlohmann::json row{{"iteration", t},
                         {"lambda", lambda},
                         {"lambda_next", new_lambda},
                         {"objective", sol.objective},
                         {"primal_residual", sol.primal_residual},
                         {"power", ev.budget},
                         {"ipm_iterations", sol.iterations},
                         {"status", status_name(sol.status)}};
      trace << row.dump() << "\n";
    }
    if (ocfg.debug_inner_soundness)
      sample_soundness(b, v, d, e, sol.dofs, lambda, ocfg.soundness_samples,
                       rng, out.sound_samples, out.sound_failures);
    // Stop on the achieved objective: the ratio estimate for the Dinkelbach
    // modes, the attained sum rate otherwise.  The inner optimum is the wrong
    // signal -- it measures headroom, which can plateau mid-descent while the
    // objective is still climbing steadily.
    const bool conv = t > 0 && std::abs(new_lambda - prev_val) < ocfg.eps;
    prev_val = new_lambda;
    cur = std::move(next);
    if (obj != Objective::SumRate) lambda = new_lambda;
    if (conv) {
      out.converged = true;
      break;
    }
  }
  out.status = SolveStatus::Optimal;
  out.lifted = std::move(cur);
  if (!out.converged)
    out.warnings.push_back("outer loop hit the iteration cap before meeting "
                           "the stopping tolerance");
  return out;
}

// ---------------------------------------------------------------------------
// Report assembly.

const char* objective_scheme(Objective obj) {
  switch (obj) {
    case Objective::MaxMinEE: return "rsma-maxmin";
    case Objective::TotalEE: return "rsma-totalee";
    case Objective::SumRate: return "rsma-sumrate";
  }
  return "?";
}

// Transmitted radar sequence for a cancelled (psi = 0) radar column.  With
// the sequence removed at every receiver, nothing but the power budget and
// the sensing bound touches the radar matrix, so the interior point returns
// a spread high-rank matrix; sqrt(chi_max) times its top eigenvector would
// silently drop most of the angle information that matrix carries.  Keep the
// full quantized radar power tr(Delta^2 P_r) and point it along the best of
// a few closed-form beams -- the most angle-informative direction, the
// dominant direction of the lifted matrix, the conjugate transmit steering --
// ranked by the exact angle bound of the resulting transmit covariance.  The
// plain extraction stays in the running, so shaping never worsens the bound.
void shape_radar_sequence(const SystemConfig& cfg, const ChannelSet& cs,
                          const ProblemData& d, const MatC& lifted_pr,
                          Precoders& p) {
  if (!d.vars.has_radar || d.psi > 0 || lifted_pr.size() == 0) return;
  const double w = re_tr(d.delta2, lifted_pr);
  if (w <= 1e-8 * d.p_t) return;
  const int n = static_cast<int>(lifted_pr.rows());
  std::vector<VecC> cands;
  cands.push_back(p.p_r);
  cands.push_back(top_eigvec(d.m_dd, n));
  cands.push_back(top_eigvec(lifted_pr, n));
  cands.push_back(cs.a_tx.conjugate());
  const double theta = cfg.radar.theta_deg * kPi / 180.0;
  double best = kInf;
  VecC best_pr = p.p_r;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    VecC pr = cands[i];
    if (i > 0) {
      // Rescale so the quantized power matches the lifted matrix exactly;
      // candidate 0 is the as-extracted vector (less power, for reference).
      const double pw =
          (d.delta.array() * pr.array().abs()).matrix().squaredNorm();
      if (pw <= 0) continue;
      pr *= std::sqrt(w / pw);
    }
    Precoders trial = p;
    trial.p_r = pr;
    try {
      const double crb =
          crb_theta(tx_covariance(d.delta, trial.matrix()), theta,
                    cs.snr_radar, cfg.n_rx, cfg.n_tx, cfg.element_spacing);
      if (crb < best) {
        best = crb;
        best_pr = std::move(pr);
      }
    } catch (const std::domain_error&) {
      continue;  // singular information matrix: candidate unusable
    }
  }
  p.p_r = fixed_phase(std::move(best_pr));
}

SolveReport finalize_report(const SystemConfig& cfg, const ChannelSet& cs,
                            const ProblemData& d, RadarSicMode mode,
                            std::string scheme, LoopResult lr,
                            double wall_sec) {
  SolveReport rep;
  rep.status = lr.status;
  rep.mode = mode;
  rep.scheme = std::move(scheme);
  rep.iterations = lr.iterations;
  rep.converged = lr.converged;
  rep.lambda_trace = std::move(lr.lambda_trace);
  rep.objective_trace = std::move(lr.obj_trace);
  rep.lifted = std::move(lr.lifted);
  rep.soundness_samples = lr.sound_samples;
  rep.soundness_failures = lr.sound_failures;
  rep.warnings = std::move(lr.warnings);
  rep.detail = std::move(lr.detail);
  rep.wall_time_sec = wall_sec;
  if (rep.status != SolveStatus::Optimal) return rep;
  rep.lambda_final = rep.lambda_trace.empty() ? 0.0 : rep.lambda_trace.back();

  rep.precoders = extract_rank_one(rep.lifted, nullptr, &rep.warnings,
                                   1e-6 * d.p_t, d.psi > 0);
  shape_radar_sequence(cfg, cs, d, rep.lifted.p_r, rep.precoders);
  // Extraction residual over the penalized columns only: the radar column is
  // unpenalized when the users cancel the sequence (psi = 0), so its lifted
  // matrix carries no rank-one pressure.
  double worst = 0;
  if (rep.lifted.has_common())
    worst = std::max(worst, rank_one_residual(rep.lifted.p_c, 1e-6 * d.p_t));
  for (const MatC& pk : rep.lifted.p_k)
    worst = std::max(worst, rank_one_residual(pk, 1e-6 * d.p_t));
  if (rep.lifted.has_radar() && d.psi > 0)
    worst = std::max(worst, rank_one_residual(rep.lifted.p_r, 1e-6 * d.p_t));
  rep.max_rank_residual = worst;

  rep.common_share = rep.lifted.c;
  const MatC pmat = rep.precoders.matrix();
  const MatC sigma =
      comm_distortion_cov(d.delta, rep.precoders, mode, cfg.quant_noise_diag);
  rep.breakdown = rate_power_breakdown(cs.h, rep.precoders, d.delta, sigma,
                                       rep.common_share, mode, cfg.noise_power,
                                       cfg.power, cfg.dac_bits, cfg.n_tx);
  rep.min_ee = rep.breakdown.ee.minCoeff();
  rep.sum_rate = rep.breakdown.rate_total.sum();
  rep.qos_margin = rep.breakdown.rate_total.minCoeff() - cfg.qos_rate;
  rep.power_used = (d.delta.cast<cxd>().asDiagonal() * pmat).squaredNorm();
  rep.radar_power_fraction =
      (d.delta.array() * rep.precoders.p_r.array().abs()).matrix().squaredNorm() /
      cfg.p_t;
  const double theta = cfg.radar.theta_deg * kPi / 180.0;
  try {
    rep.crb = d.crb_scale *
              crb_theta(tx_covariance(d.delta, pmat), theta, cs.snr_radar,
                        cfg.n_rx, cfg.n_tx, cfg.element_spacing);
  } catch (const std::domain_error& ex) {
    rep.crb = kInf;
    rep.warnings.push_back(std::string("sensing CRB at extraction: ") +
                           ex.what());
  }
  return rep;
}

std::vector<int> all_users(const ChannelSet& cs) {
  std::vector<int> u(static_cast<std::size_t>(cs.h.cols()));
  for (std::size_t k = 0; k < u.size(); ++k) u[k] = static_cast<int>(k);
  return u;
}

SolveReport run_rsma(const SystemConfig& cfg, const ChannelSet& cs,
                     RadarSicMode mode, Objective obj, bool with_common,
                     std::string scheme, const OptimizerConfig& ocfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const ProblemData d =
      make_problem_data(cfg, cs, mode, with_common, all_users(cs), ocfg);
  const Precoders p0 =
      init_precoders(cs.h, cs.a_tx, cfg.p_t, mode, with_common);
  LoopResult lr = run_sca(d, shape_lifted(d, p0), obj, ocfg, ocfg.trace_path);
  const double wall =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return finalize_report(cfg, cs, d, mode, std::move(scheme), std::move(lr),
                         wall);
}

}  // namespace

// ---------------------------------------------------------------------------
// Public surface.

Precoders init_precoders(const MatC& h, const VecC& a_tx, double p_t,
                         RadarSicMode mode, bool with_common) {
  const int n = static_cast<int>(h.rows());
  const int K = static_cast<int>(h.cols());
  if (h.norm() == 0)
    throw std::invalid_argument("init_precoders: all-zero channel matrix");
  const bool radar = mode != RadarSicMode::NoRadar;
  const int streams = K + (with_common ? 1 : 0) + (radar ? 1 : 0);
  const double share = p_t / streams;
  Precoders p;
  p.p_c = VecC::Zero(n);
  p.p_r = VecC::Zero(n);
  p.p_k = MatC::Zero(n, K);
  for (int k = 0; k < K; ++k) {
    const double nrm = h.col(k).norm();
    if (nrm == 0)
      throw std::invalid_argument("init_precoders: all-zero user channel");
    p.p_k.col(k) = std::sqrt(share) / nrm * h.col(k);
  }
  if (with_common) {
    Eigen::JacobiSVD<MatC> svd(h, Eigen::ComputeThinU);
    p.p_c = std::sqrt(share) * svd.matrixU().col(0);
  }
  if (radar) p.p_r = std::sqrt(share) / a_tx.norm() * a_tx.conjugate();
  return p;
}

LiftedPrecoders lift_precoders(const Precoders& p) {
  LiftedPrecoders l;
  l.p_c = p.p_c * p.p_c.adjoint();
  l.p_r = p.p_r * p.p_r.adjoint();
  l.p_k.reserve(static_cast<std::size_t>(p.n_users()));
  for (int k = 0; k < p.n_users(); ++k)
    l.p_k.push_back(p.p_k.col(k) * p.p_k.col(k).adjoint());
  l.c = VecR::Zero(p.n_users());
  l.r = VecR::Zero(p.n_users());
  return l;
}

double rank_one_residual(const MatC& p, double floor) {
  if (p.size() == 0) return 0;
  const double tr = p.trace().real();
  if (tr <= floor) return 0;
  Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (p + p.adjoint()),
                                         Eigen::EigenvaluesOnly);
  return (tr - es.eigenvalues()(p.rows() - 1)) / tr;
}

Precoders extract_rank_one(const LiftedPrecoders& lifted,
                           double* max_residual_rel,
                           std::vector<std::string>* warnings,
                           double active_floor, bool radar_penalized) {
  if (lifted.p_k.empty())
    throw std::invalid_argument("extract_rank_one: no private matrices");
  const int n = static_cast<int>(lifted.p_k.front().rows());
  const int K = static_cast<int>(lifted.p_k.size());
  Precoders p;
  p.p_c = VecC::Zero(n);
  p.p_r = VecC::Zero(n);
  p.p_k = MatC::Zero(n, K);
  double worst = 0;
  auto grab = [&](const MatC& m, const std::string& name,
                  bool penalized) -> VecC {
    if (m.size() == 0 || m.norm() == 0) return VecC::Zero(n);
    Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (m + m.adjoint()));
    const double chi = std::max(es.eigenvalues()(n - 1), 0.0);
    if (penalized && m.trace().real() > active_floor) {
      const double res = rank_one_residual(m, active_floor);
      worst = std::max(worst, res);
      if (res > 1e-2 && warnings) {
        std::ostringstream os;
        os << "rank-one extraction of " << name << ": relative residual "
           << res;
        warnings->push_back(os.str());
      }
    }
    return std::sqrt(chi) * fixed_phase(es.eigenvectors().col(n - 1));
  };
  p.p_c = grab(lifted.p_c, "the common column", true);
  for (int k = 0; k < K; ++k)
    p.p_k.col(k) =
        grab(lifted.p_k[static_cast<std::size_t>(k)],
             "private column " + std::to_string(k), true);
  p.p_r = grab(lifted.p_r, "the radar column", radar_penalized);
  if (max_residual_rel) *max_residual_rel = worst;
  return p;
}

SolveReport solve_maxmin_ee(const SystemConfig& cfg, const ChannelSet& cs,
                            RadarSicMode mode, const OptimizerConfig& ocfg) {
  return run_rsma(cfg, cs, mode, Objective::MaxMinEE, true,
                  objective_scheme(Objective::MaxMinEE), ocfg);
}

SolveReport solve_total_ee(const SystemConfig& cfg, const ChannelSet& cs,
                           RadarSicMode mode, const OptimizerConfig& ocfg) {
  return run_rsma(cfg, cs, mode, Objective::TotalEE, true,
                  objective_scheme(Objective::TotalEE), ocfg);
}

SolveReport solve_sum_rate(const SystemConfig& cfg, const ChannelSet& cs,
                           RadarSicMode mode, const OptimizerConfig& ocfg) {
  return run_rsma(cfg, cs, mode, Objective::SumRate, true,
                  objective_scheme(Objective::SumRate), ocfg);
}

namespace {

SolveReport solve_oma(const SystemConfig& cfg, const ChannelSet& cs,
                      RadarSicMode mode, const OptimizerConfig& ocfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const int K = static_cast<int>(cs.h.cols());
  const int n = cfg.n_tx;
  SolveReport rep;
  rep.scheme = "oma";
  rep.mode = mode;
  rep.status = SolveStatus::Optimal;
  rep.converged = true;
  rep.precoders.p_c = VecC::Zero(n);
  rep.precoders.p_r = VecC::Zero(n);
  rep.precoders.p_k = MatC::Zero(n, K);
  rep.lifted.p_k.resize(static_cast<std::size_t>(K));
  rep.lifted.c = VecR::Zero(K);
  rep.lifted.r = VecR::Zero(K);
  rep.common_share = VecR::Zero(K);
  auto& bd = rep.breakdown;
  bd.gamma_c = VecR::Zero(K);
  bd.gamma_p = VecR::Zero(K);
  bd.rate_common = VecR::Zero(K);
  bd.rate_private = VecR::Zero(K);
  bd.common_share = VecR::Zero(K);
  bd.rate_total = VecR::Zero(K);
  bd.p_tx = VecR::Zero(K);
  bd.p_chain = VecR::Zero(K);
  bd.ee = VecR::Zero(K);
  double worst_crb = 0, worst_power = 0, qos_min = kInf;
  const QuantLossTable table = cfg.loss_table_path.empty()
                                   ? QuantLossTable::defaults()
                                   : QuantLossTable::from_file(cfg.loss_table_path);
  const VecR delta = QuantModel::uniform(cfg.n_tx, cfg.dac_bits, table).delta;
  const double theta = cfg.radar.theta_deg * kPi / 180.0;
  for (int k = 0; k < K; ++k) {
    const ProblemData dk = make_problem_data(cfg, cs, mode, false, {k}, ocfg);
    MatC hk = cs.h.col(k);
    Precoders p0 = init_precoders(hk, cs.a_tx, cfg.p_t, mode, false);
    const std::string trace = ocfg.trace_path.empty()
                                  ? std::string()
                                  : ocfg.trace_path + ".slice" +
                                        std::to_string(k);
    LoopResult lr =
        run_sca(dk, shape_lifted(dk, p0), Objective::TotalEE, ocfg, trace);
    rep.iterations += lr.iterations;
    rep.converged = rep.converged && lr.converged;
    for (auto& w : lr.warnings)
      rep.warnings.push_back("slice " + std::to_string(k) + ": " + w);
    if (lr.status != SolveStatus::Optimal) {
      rep.status = lr.status;
      rep.detail = "slice " + std::to_string(k) + ": " + lr.detail;
      return rep;
    }
    rep.slice_traces.push_back(lr.lambda_trace);
    rep.lambda_trace.push_back(lr.lambda_trace.back());

    Precoders px = extract_rank_one(lr.lifted, nullptr, &rep.warnings,
                                    1e-6 * cfg.p_t, dk.psi > 0);
    shape_radar_sequence(cfg, cs, dk, lr.lifted.p_r, px);
    rep.precoders.p_k.col(k) = px.p_k.col(0);
    if (k == 0) {
      rep.precoders.p_r = px.p_r;
      rep.lifted.p_r = lr.lifted.p_r;
      rep.radar_power_fraction =
          (delta.array() * px.p_r.array().abs()).matrix().squaredNorm() /
          cfg.p_t;
    }
    rep.lifted.p_k[static_cast<std::size_t>(k)] = lr.lifted.p_k[0];
    double resid = rank_one_residual(lr.lifted.p_k[0], 1e-6 * cfg.p_t);
    if (dk.psi > 0 && lr.lifted.has_radar())
      resid = std::max(resid, rank_one_residual(lr.lifted.p_r, 1e-6 * cfg.p_t));
    rep.max_rank_residual = std::max(rep.max_rank_residual, resid);

    // In-slice metrics at the extracted vectors: the slice transmits only
    // this user's stream plus the radar sequence.
    Precoders slice;
    slice.p_c = VecC::Zero(n);
    slice.p_k = px.p_k;
    slice.p_r = px.p_r;
    const MatC pmat = slice.matrix();
    const MatC sigma =
        comm_distortion_cov(delta, slice, mode, cfg.quant_noise_diag);
    const double gamma = sinr_private(0, hk, delta, sigma, slice, mode,
                                      cfg.noise_power);
    const double rate_slice = std::log2(1.0 + gamma);
    const double chain = p_chain_user(0, slice, delta, cfg.dac_bits,
                                      cfg.power, cfg.n_tx);
    bd.gamma_p(k) = gamma;
    bd.rate_private(k) = rate_slice / K;  // 1/K time share
    bd.rate_total(k) = rate_slice / K;
    bd.p_tx(k) = p_tx_user(0, slice, delta);
    bd.p_chain(k) = chain;
    bd.ee(k) = bd.rate_total(k) / chain;
    qos_min = std::min(qos_min, rate_slice);  // QoS holds within the slice
    worst_power = std::max(
        worst_power,
        (delta.cast<cxd>().asDiagonal() * pmat).squaredNorm());
    try {
      const double scale = cfg.p_t * (180.0 / kPi) * (180.0 / kPi);
      worst_crb =
          std::max(worst_crb, scale * crb_theta(tx_covariance(delta, pmat),
                                                theta, cs.snr_radar, cfg.n_rx,
                                                cfg.n_tx,
                                                cfg.element_spacing));
    } catch (const std::domain_error& ex) {
      worst_crb = kInf;
      rep.warnings.push_back("slice " + std::to_string(k) +
                             " sensing CRB: " + ex.what());
    }
  }
  bd.common_cap = 0;
  bd.shares_feasible = true;
  rep.min_ee = bd.ee.minCoeff();
  rep.sum_rate = bd.rate_total.sum();
  rep.lambda_final = rep.min_ee;
  rep.qos_margin = qos_min - cfg.qos_rate;
  rep.crb = worst_crb;
  rep.power_used = worst_power;
  rep.wall_time_sec =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

}  // namespace

SolveReport solve_baseline(const SystemConfig& cfg, const ChannelSet& cs,
                           BaselineScheme scheme, RadarSicMode mode,
                           const OptimizerConfig& ocfg) {
  if (scheme == BaselineScheme::Sdma)
    return run_rsma(cfg, cs, mode, Objective::TotalEE, false, "sdma", ocfg);
  return solve_oma(cfg, cs, mode, ocfg);
}

// ---------------------------------------------------------------------------
// SurrogateProbe.

struct SurrogateProbe::Impl {
  ProblemData d;
  Expansion e;
};

SurrogateProbe::SurrogateProbe(const SystemConfig& cfg, const ChannelSet& cs,
                               RadarSicMode mode, LiftedPrecoders expansion)
    : impl_(std::make_unique<Impl>()) {
  const OptimizerConfig ocfg;
  impl_->d = make_problem_data(cfg, cs, mode, expansion.has_common(),
                               all_users(cs), ocfg);
  impl_->e = make_expansion(impl_->d, expansion);
}

SurrogateProbe::~SurrogateProbe() = default;
SurrogateProbe::SurrogateProbe(SurrogateProbe&&) noexcept = default;
SurrogateProbe& SurrogateProbe::operator=(SurrogateProbe&&) noexcept = default;

double SurrogateProbe::private_signal(int k, const LiftedPrecoders& at) const {
  return re_tr(impl_->d.m_sig[static_cast<std::size_t>(k)],
               at.p_k[static_cast<std::size_t>(k)]);
}

double SurrogateProbe::private_interference(int k,
                                            const LiftedPrecoders& at) const {
  return eval_point(impl_->d, at).i_p(k);
}

double SurrogateProbe::common_signal(int k, const LiftedPrecoders& at) const {
  return re_tr(impl_->d.m_sig[static_cast<std::size_t>(k)], at.p_c);
}

double SurrogateProbe::common_interference(int k,
                                           const LiftedPrecoders& at) const {
  const PointEval ev = eval_point(impl_->d, at);
  return ev.i_c(k);
}

double SurrogateProbe::exact_private_rate(int k,
                                          const LiftedPrecoders& at) const {
  return eval_point(impl_->d, at).rate_p(k);
}

double SurrogateProbe::exact_common_rate(int k,
                                         const LiftedPrecoders& at) const {
  return eval_point(impl_->d, at).rate_c(k);
}

double SurrogateProbe::exact_total_rate(int k,
                                        const LiftedPrecoders& at) const {
  const double c = at.c.size() > k ? at.c(k) : 0.0;
  return c + eval_point(impl_->d, at).rate_p(k);
}

double SurrogateProbe::chain_power(int k, const LiftedPrecoders& at) const {
  return eval_point(impl_->d, at).chain(k);
}

double SurrogateProbe::gtilde(int k, const LiftedPrecoders& at) const {
  const ProblemData& d = impl_->d;
  const Expansion& e = impl_->e;
  const double it = e.ev.i_p(k);
  double g = std::log2(it);
  for (int v = 0; v < d.vars.count(); ++v) {
    const MatC m = interf_coupling(d, k, v) / (kLn2 * it);
    g += re_tr(m, var_matrix(at, d.vars, v)) -
         re_tr(m, var_matrix(e.point, d.vars, v));
  }
  return g;
}

double SurrogateProbe::surrogate_total_rate(int k,
                                            const LiftedPrecoders& at) const {
  const PointEval ev = eval_point(impl_->d, at);
  const double c = at.c.size() > k ? at.c(k) : 0.0;
  return c + std::log2(ev.s_p(k) + ev.i_p(k)) - gtilde(k, at);
}

std::vector<MatC> SurrogateProbe::gtilde_gradients(int k) const {
  const ProblemData& d = impl_->d;
  const double it = impl_->e.ev.i_p(k);
  std::vector<MatC> grads;
  grads.reserve(static_cast<std::size_t>(d.vars.count()));
  for (int v = 0; v < d.vars.count(); ++v)
    grads.push_back(interf_coupling(d, k, v) / (kLn2 * it));
  return grads;
}

MatC SurrogateProbe::crb_m_aa() const { return impl_->d.m_aa; }
MatC SurrogateProbe::crb_m_dd() const { return impl_->d.m_dd; }
MatC SurrogateProbe::crb_m_ad() const { return impl_->d.m_ad; }

}  // namespace qisac
