// channel.hpp
// Satellite downlink and monostatic radar channel synthesis: tapered-aperture
// beam gains, free-space/noise-normalized path coefficients, log-normal rain
// draws, ULA steering vectors and their angle derivative, radar two-way
// amplitude and Doppler.
#pragma once

#include <cstdint>
#include <string>

#include "qisac/common.hpp"

namespace qisac {

/// Analog power-consumption model of one RF transmit chain.
struct PowerModel {
  double p_lp = 14e-3;   ///< low-pass filter [W]
  double p_m = 0.3e-3;   ///< mixer [W]
  double p_lo = 22.5e-3; ///< local oscillator, shared across chains [W]
  double p_h = 3e-3;     ///< phase shifter [W]
  double kappa = 0.27;   ///< power-amplifier efficiency
  double f_s = 25e6;     ///< DAC sampling rate [Hz]
};

/// Radar scene: a single point target probed through the same aperture.
struct RadarSceneConfig {
  double theta_deg = 0.0;   ///< target angle off boresight
  double range_m = 2000.0;  ///< target range
  double velocity_mps = 10; ///< radial velocity
  double rcs_m2 = 1.0;      ///< radar cross-section
  double snr_db = 40.0;     ///< integrated radar SNR, sets the echo noise floor
  int n_symbols = 1024;     ///< coherent processing interval length L
  int n_pulses = 64;        ///< slow-time pulses carved out of the interval
};

/// User placement generator: feeds form beams on a uniform angular grid and
/// users are scattered uniformly over the full field of view, with a minimum
/// pairwise angular separation (co-channel users scheduled together are
/// spatially distinct).
struct GeometryConfig {
  double beam_spacing_3db = 1.0; ///< beam-center spacing in 3 dB beamwidths
  double min_sep_3db = 0.25;     ///< minimum user separation in 3 dB beamwidths
};

/// Full system description.  Defaults are the desk-scale reference setup
/// used throughout the tests and shipped experiment specs.
struct SystemConfig {
  int n_tx = 4;
  int n_rx = 4;
  int n_users = 5;
  double f_c = 20e9;            ///< carrier [Hz]
  double bandwidth = 25e6;      ///< [Hz]
  double light_speed = 2.998e8; ///< [m/s]
  double element_spacing = 0.5; ///< ULA spacing in wavelengths
  double d_sat = 600e3;         ///< satellite altitude / slant range [m]
  double g_max_dbi = 30.0;      ///< per-beam peak gain
  double g_user_dbi = 17.0;     ///< lumped user-side antenna gain
  double t_sys = 517.0;         ///< receiver system temperature [K]
  double boltzmann = 1.38e-23;  ///< [J/K]
  double theta_3db_deg = 0.4;   ///< beam 3 dB half-angle
  double rain_mu = -2.6;        ///< log-normal rain parameter (mean of ln dB)
  double rain_sigma2 = 1.63;    ///< log-normal rain parameter (variance of ln dB)
  bool rain_attenuation_convention = false; ///< true: q = zeta^(-1/2)
  double noise_power = 1.0;     ///< per-user noise after thermal normalization
  double p_t = 100.0;           ///< transmit power budget (noise-normalized)
  int dac_bits = 2;             ///< DAC resolution b (uniform across chains)
  bool quant_noise_diag = false; ///< true: keep only diag of E[xx^H] in Sigma
  std::string loss_table_path;  ///< optional override for the b<=5 loss table
  double qos_rate = 1.0;        ///< per-user minimum total rate [b/s/Hz]
  double crb_bound = 1e-2;      ///< angle-CRB ceiling rho [rad^2]
  PowerModel power;
  RadarSceneConfig radar;
  GeometryConfig geometry;
};

/// Downlink user channels plus the radar-side quantities derived from the
/// scene, all noise-normalized and ready for the optimizer.
struct ChannelSet {
  MatC h;           ///< n_tx x n_users; column k is user k's channel
  VecC a_tx;        ///< transmit steering at the target angle
  VecC b_rx;        ///< receive steering at the target angle
  double alpha = 0; ///< two-way radar amplitude
  double doppler_hz = 0;
  double sigma_r2 = 0;  ///< radar receiver noise power
  double snr_radar = 0; ///< P_t * L * alpha^2 / sigma_r2
};

/// Tapered-aperture beam gain (linear) at off-axis angle theta_off:
/// g_max * (J1(u)/(2u) + 36*J3(u)/u^3)^2 with
/// u = 2.07123 sin(theta_off)/sin(theta_3db).  Angles in radians.
double beam_gain(double theta_off, double theta_3db, double g_max);

/// Amplitude coupling of one feed: sqrt(G_u * G_beam) over free-space loss,
/// normalized by the thermal noise floor sqrt(boltzmann * t_sys * bandwidth).
/// Gains linear, distance in meters, wavelength in meters.
double path_coeff(double g_user, double g_beam, double distance,
                  double wavelength, double boltzmann, double t_sys,
                  double bandwidth);

/// One rain draw: ln(zeta_dB) ~ N(mu, sigma2), zeta = 10^(zeta_dB/20); the
/// returned amplitude factor is zeta^(1/2), or zeta^(-1/2) when the
/// conventional attenuation flag is set.
double sample_rain(double mu, double sigma2, bool attenuation, Rng& rng);

/// ULA steering vector [1, e^{j2 pi w sin θ}, ..., e^{j2 pi (n-1) w sin θ}].
VecC steering(int n, double spacing, double theta);

/// Angle derivative of the rank-one radar matrix A(θ) = b(θ) a(θ)^T:
/// dA/dθ = j 2 pi w cos θ (diag(0..n_rx-1) b a^T + b a^T diag(0..n_tx-1)).
MatC steering_derivative_outer(int n_rx, int n_tx, double spacing,
                               double theta);

/// Two-way radar amplitude sqrt(lambda^2 * rcs / ((4 pi)^3 r^4)).
double radar_alpha(double wavelength, double rcs, double range);

/// Doppler shift 2 v f_c / c.
double doppler_shift(double velocity, double f_c, double light_speed);

/// Synthesize the full channel set for one seed: beam-grid geometry, rain
/// and phase draws per user/feed, radar steering/amplitude/Doppler, and the
/// radar noise floor implied by the configured integrated SNR.
ChannelSet build_channel_set(const SystemConfig& cfg, std::uint64_t seed);

}  // namespace qisac
