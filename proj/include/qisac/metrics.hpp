// metrics.hpp
// Communication-side SINRs/rates/power/energy-efficiency and sensing-side
// Fisher information / CRB / beampattern, all evaluated on explicit precoder
// vectors (the optimizer's lifted counterparts live in optimizer.cpp).
#pragma once

#include <Eigen/Dense>

#include "qisac/channel.hpp"
#include "qisac/common.hpp"

namespace qisac {

/// Receiver-processing mode for the radar sequence.
enum class RadarSicMode {
  SicRadar,  ///< users cancel the known radar sequence (psi = 0)
  NoSic,     ///< radar sequence is residual interference (psi = 1)
  NoRadar,   ///< no radar sequence transmitted (psi = 0, p_r = 0)
};

/// Interference indicator psi for the mode.
double radar_psi(RadarSicMode mode);

/// Beamforming vectors for one solution: common stream, per-user private
/// streams (columns), radar sequence.
struct Precoders {
  VecC p_c;  ///< n_tx
  MatC p_k;  ///< n_tx x K
  VecC p_r;  ///< n_tx (all-zero in NoRadar mode)

  int n_users() const { return static_cast<int>(p_k.cols()); }
  /// Stacked beamforming matrix [p_c, p_1, ..., p_K, p_r], n_tx x (K+2).
  MatC matrix() const;
};

/// Common-stream SINR at user k (column k of h), including the quantization
/// noise power h_k^H sigma h_k and the mode-dependent radar interference.
double sinr_common(int k, const MatC& h, const VecR& delta, const MatC& sigma,
                   const Precoders& p, RadarSicMode mode, double noise_power);

/// Private-stream SINR at user k, after common-stream (and mode-dependent
/// radar) cancellation.
double sinr_private(int k, const MatC& h, const VecR& delta, const MatC& sigma,
                    const Precoders& p, RadarSicMode mode, double noise_power);

/// Per-user rate, power, and energy-efficiency summary.
struct RatePowerBreakdown {
  VecR gamma_c;       ///< common-stream SINRs
  VecR gamma_p;       ///< private-stream SINRs
  VecR rate_common;   ///< log2(1 + gamma_c)
  VecR rate_private;  ///< log2(1 + gamma_p)
  VecR common_share;  ///< C_k, the agreed split of the common rate
  double common_cap = 0;        ///< min_k rate_common(k)
  bool shares_feasible = true;  ///< sum_k C_k <= common_cap (1e-9 slack)
  VecR rate_total;              ///< C_k + rate_private(k)
  VecR p_tx;     ///< per-user radiated power share [W]
  VecR p_chain;  ///< P_RF + p_tx/kappa [W]
  VecR ee;       ///< rate_total / p_chain [bit/s/Hz/W]
};

/// DAC power draw 1.5e-5 * 2^b + 9e-12 * f_s * b [W].
double p_dac(int bits, double f_s);

/// Per-chain RF front-end power 2*P_DAC + 2*P_LP + 2*P_M + P_H + P_LO/n_tx.
double p_rf(int bits, const PowerModel& pm, int n_tx);

/// Radiated power attributed to user k: ||delta .* p_k||^2 plus an equal
/// 1/K share of ||delta .* p_c||^2.
double p_tx_user(int k, const Precoders& p, const VecR& delta);

/// Full chain power for user k: p_rf + p_tx_user/kappa.  Throws
/// std::invalid_argument for kappa <= 0.
double p_chain_user(int k, const Precoders& p, const VecR& delta, int bits,
                    const PowerModel& pm, int n_tx);

/// Quantization-distortion covariance as seen by the comm receivers: the
/// transmit covariance feeding the distortion model carries the radar column
/// weighted by the SIC factor, because an ideal cancellation of the known
/// radar sequence removes its whole footprint (linear and distortion parts).
MatC comm_distortion_cov(const VecR& delta, const Precoders& p,
                         RadarSicMode mode, bool diag_model);

/// Assemble the complete per-user breakdown for given precoders and common
/// shares c (length K, entries >= 0).
RatePowerBreakdown rate_power_breakdown(const MatC& h, const Precoders& p,
                                        const VecR& delta, const MatC& sigma,
                                        const VecR& common_share,
                                        RadarSicMode mode, double noise_power,
                                        const PowerModel& pm, int bits,
                                        int n_tx);

/// The three quadratic traces of the rank-one radar model A = b a^T and its
/// angle derivative against a transmit covariance R_q.
struct RadarTraces {
  double t_aa = 0;  ///< tr(A R_q A^H), real >= 0
  double t_dd = 0;  ///< tr(Adot R_q Adot^H), real >= 0
  cxd t_ad;         ///< tr(A R_q Adot^H)
};

RadarTraces radar_traces(double theta, const MatC& r_q, int n_rx, int n_tx,
                         double spacing);

/// Fisher information of (theta, Re alpha, Im alpha) for the coherent echo
/// model, plus the Schur-complement CRB on theta.
struct SensingMetrics {
  double j_tt = 0;                ///< (theta, theta) information
  Eigen::RowVector2d j_ta;        ///< (theta, alpha) cross terms
  Eigen::Matrix2d j_aa;           ///< complex-amplitude block
  double crb_theta = 0;           ///< [J_tt - J_ta J_aa^{-1} J_ta^T]^{-1}
  Eigen::Matrix3d fim() const;    ///< assembled symmetric 3x3 matrix
};

/// FIM blocks for L coherent snapshots with transmit covariance r_q and echo
/// noise power sigma_r2.  Throws std::domain_error for non-PSD r_q and
/// std::domain_error("unidentifiable angle") when the Schur complement
/// degenerates.
SensingMetrics fim(double theta, cxd alpha, const MatC& r_q, double sigma_r2,
                   int n_symbols, int n_rx, int n_tx, double spacing);

/// Closed-form angle CRB
///   t_aa / (2 * snr_radar * (t_dd * t_aa - |t_ad|^2)),
/// the same quantity the sensing LMI bounds.  The echo SNR is defined at the
/// full power budget, so this equals the FIM-based bound (radians^2) when
/// r_q is the budget-normalized transmit covariance; with an unnormalized
/// covariance, multiply by the budget to recover the physical bound.  Throws
/// std::domain_error("unidentifiable angle") when the denominator is not
/// positive (relative threshold 1e-12).
double crb_theta(const MatC& r_q, double theta, double snr_radar, int n_rx,
                 int n_tx, double spacing);

/// Transmit beampattern |a(theta)^T Delta p|^2 over a grid of angles [rad].
VecR beampattern(const VecC& p, const VecR& delta, const VecR& theta_grid,
                 double spacing);

}  // namespace qisac
