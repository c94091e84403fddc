// metrics.cpp
#include "qisac/metrics.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>

#include "qisac/quantization.hpp"

namespace qisac {

double radar_psi(RadarSicMode mode) {
  return mode == RadarSicMode::NoSic ? 1.0 : 0.0;
}

MatC Precoders::matrix() const {
  const int n = static_cast<int>(p_c.size());
  MatC m(n, n_users() + 2);
  m.col(0) = p_c;
  m.middleCols(1, n_users()) = p_k;
  m.col(n_users() + 1) = p_r;
  return m;
}

namespace {

// Shared denominator pieces: |h_k^H Delta p|^2 terms plus quantization noise
// plus thermal noise.
double beam_power(const VecC& hk, const VecR& delta, const VecC& p) {
  if (p.size() == 0) return 0.0;
  const cxd v = hk.dot(delta.cast<cxd>().asDiagonal() * p);
  return std::norm(v);
}

double noise_floor(const VecC& hk, const MatC& sigma, double noise_power) {
  return hk.dot(sigma * hk).real() + noise_power;
}

}  // namespace

double sinr_common(int k, const MatC& h, const VecR& delta, const MatC& sigma,
                   const Precoders& p, RadarSicMode mode, double noise_power) {
  const VecC hk = h.col(k);
  double den = noise_floor(hk, sigma, noise_power);
  for (int j = 0; j < p.n_users(); ++j)
    den += beam_power(hk, delta, p.p_k.col(j));
  den += radar_psi(mode) * beam_power(hk, delta, p.p_r);
  return beam_power(hk, delta, p.p_c) / den;
}

double sinr_private(int k, const MatC& h, const VecR& delta, const MatC& sigma,
                    const Precoders& p, RadarSicMode mode,
                    double noise_power) {
  const VecC hk = h.col(k);
  double den = noise_floor(hk, sigma, noise_power);
  for (int j = 0; j < p.n_users(); ++j)
    if (j != k) den += beam_power(hk, delta, p.p_k.col(j));
  den += radar_psi(mode) * beam_power(hk, delta, p.p_r);
  return beam_power(hk, delta, p.p_k.col(k)) / den;
}

double p_dac(int bits, double f_s) {
  return 1.5e-5 * std::pow(2.0, bits) + 9e-12 * f_s * bits;
}

double p_rf(int bits, const PowerModel& pm, int n_tx) {
  return 2.0 * p_dac(bits, pm.f_s) + 2.0 * pm.p_lp + 2.0 * pm.p_m + pm.p_h +
         pm.p_lo / n_tx;
}

double p_tx_user(int k, const Precoders& p, const VecR& delta) {
  const auto d = delta.cast<cxd>().asDiagonal();
  const double own = (d * p.p_k.col(k)).squaredNorm();
  const double common =
      p.p_c.size() ? (d * p.p_c).squaredNorm() / p.n_users() : 0.0;
  return own + common;
}

double p_chain_user(int k, const Precoders& p, const VecR& delta, int bits,
                    const PowerModel& pm, int n_tx) {
  if (pm.kappa <= 0.0)
    throw std::invalid_argument("p_chain_user: kappa must be positive");
  return p_rf(bits, pm, n_tx) + p_tx_user(k, p, delta) / pm.kappa;
}

MatC comm_distortion_cov(const VecR& delta, const Precoders& p,
                         RadarSicMode mode, bool diag_model) {
  MatC r_x = p.p_k * p.p_k.adjoint();
  if (p.p_c.size()) r_x += p.p_c * p.p_c.adjoint();
  if (p.p_r.size()) r_x += radar_psi(mode) * (p.p_r * p.p_r.adjoint()).eval();
  return quant_noise_cov(delta, r_x, diag_model);
}

RatePowerBreakdown rate_power_breakdown(const MatC& h, const Precoders& p,
                                        const VecR& delta, const MatC& sigma,
                                        const VecR& common_share,
                                        RadarSicMode mode, double noise_power,
                                        const PowerModel& pm, int bits,
                                        int n_tx) {
  const int k_users = p.n_users();
  RatePowerBreakdown out;
  out.gamma_c = VecR(k_users);
  out.gamma_p = VecR(k_users);
  out.rate_common = VecR(k_users);
  out.rate_private = VecR(k_users);
  out.common_share = common_share;
  out.rate_total = VecR(k_users);
  out.p_tx = VecR(k_users);
  out.p_chain = VecR(k_users);
  out.ee = VecR(k_users);
  for (int k = 0; k < k_users; ++k) {
    out.gamma_c(k) = sinr_common(k, h, delta, sigma, p, mode, noise_power);
    out.gamma_p(k) = sinr_private(k, h, delta, sigma, p, mode, noise_power);
    out.rate_common(k) = std::log2(1.0 + out.gamma_c(k));
    out.rate_private(k) = std::log2(1.0 + out.gamma_p(k));
    out.rate_total(k) = common_share(k) + out.rate_private(k);
    out.p_tx(k) = p_tx_user(k, p, delta);
    out.p_chain(k) = p_chain_user(k, p, delta, bits, pm, n_tx);
    out.ee(k) = out.rate_total(k) / out.p_chain(k);
  }
  out.common_cap = out.rate_common.minCoeff();
  out.shares_feasible = common_share.sum() <= out.common_cap + 1e-9;
  return out;
}

RadarTraces radar_traces(double theta, const MatC& r_q, int n_rx, int n_tx,
                         double spacing) {
  const VecC b = steering(n_rx, spacing, theta);
  const VecC a = steering(n_tx, spacing, theta);
  const MatC amat = b * a.transpose();
  const MatC adot = steering_derivative_outer(n_rx, n_tx, spacing, theta);
  RadarTraces t;
  t.t_aa = (amat * r_q * amat.adjoint()).trace().real();
  t.t_dd = (adot * r_q * adot.adjoint()).trace().real();
  t.t_ad = (amat * r_q * adot.adjoint()).trace();
  return t;
}

Eigen::Matrix3d SensingMetrics::fim() const {
  Eigen::Matrix3d j;
  j(0, 0) = j_tt;
  j.block<1, 2>(0, 1) = j_ta;
  j.block<2, 1>(1, 0) = j_ta.transpose();
  j.block<2, 2>(1, 1) = j_aa;
  return j;
}

SensingMetrics fim(double theta, cxd alpha, const MatC& r_q, double sigma_r2,
                   int n_symbols, int n_rx, int n_tx, double spacing) {
  Eigen::SelfAdjointEigenSolver<MatC> es(0.5 * (r_q + r_q.adjoint()),
                                         Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw std::domain_error("fim: r_q is not PSD");
  const RadarTraces t = radar_traces(theta, r_q, n_rx, n_tx, spacing);
  const double base = 2.0 * n_symbols / sigma_r2;
  SensingMetrics m;
  m.j_tt = base * std::norm(alpha) * t.t_dd;
  const cxd z = std::conj(alpha) * t.t_ad;
  m.j_ta << base * z.real(), -base * z.imag();
  m.j_aa = base * t.t_aa * Eigen::Matrix2d::Identity();
  const double schur = m.j_tt - m.j_ta.dot(m.j_aa.inverse() * m.j_ta.transpose());
  if (schur <= 1e-12 * std::max(m.j_tt, 1e-300))
    throw std::domain_error("fim: unidentifiable angle (degenerate Schur complement)");
  m.crb_theta = 1.0 / schur;
  return m;
}

double crb_theta(const MatC& r_q, double theta, double snr_radar, int n_rx,
                 int n_tx, double spacing) {
  const RadarTraces t = radar_traces(theta, r_q, n_rx, n_tx, spacing);
  const double bracket = t.t_dd * t.t_aa - std::norm(t.t_ad);
  const double den = 2.0 * snr_radar * bracket;
  if (den <= 1e-12 * std::max(2.0 * snr_radar * t.t_dd * t.t_aa, 1e-300))
    throw std::domain_error("crb_theta: unidentifiable angle");
  return t.t_aa / den;
}

VecR beampattern(const VecC& p, const VecR& delta, const VecR& theta_grid,
                 double spacing) {
  const int n = static_cast<int>(p.size());
  const VecC dp = delta.cast<cxd>().asDiagonal() * p;
  VecR out(theta_grid.size());
  for (Eigen::Index i = 0; i < theta_grid.size(); ++i) {
    const VecC a = steering(n, spacing, theta_grid(i));
    out(i) = std::norm(cxd((a.array() * dp.array()).sum()));
  }
  return out;
}

}  // namespace qisac
