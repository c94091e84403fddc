// channel.cpp
#include "qisac/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qisac/bessel.hpp"

namespace qisac {

double beam_gain(double theta_off, double theta_3db, double g_max) {
  const double u = 2.07123 * std::sin(theta_off) / std::sin(theta_3db);
  // Boresight: J1(u)/(2u) -> 1/4 and 36 J3(u)/u^3 -> 3/4, so the bracket is 1.
  if (std::abs(u) < 1e-6) return g_max;
  const double j1 = bessel_j(1, u);
  const double j3 = bessel_j(3, u);
  const double pattern = j1 / (2.0 * u) + 36.0 * j3 / (u * u * u);
  return g_max * pattern * pattern;
}

double path_coeff(double g_user, double g_beam, double distance,
                  double wavelength, double boltzmann, double t_sys,
                  double bandwidth) {
  const double num = std::sqrt(g_user * g_beam);
  const double den = 4.0 * kPi * (distance / wavelength) *
                     std::sqrt(boltzmann * t_sys * bandwidth);
  return num / den;
}

double sample_rain(double mu, double sigma2, bool attenuation, Rng& rng) {
  const double ln_zeta_db = mu + std::sqrt(sigma2) * rng.normal();
  const double zeta_db = std::exp(ln_zeta_db);
  const double zeta = std::pow(10.0, zeta_db / 20.0);
  return attenuation ? 1.0 / std::sqrt(zeta) : std::sqrt(zeta);
}

VecC steering(int n, double spacing, double theta) {
  VecC a(n);
  const double phase = 2.0 * kPi * spacing * std::sin(theta);
  for (int m = 0; m < n; ++m) a(m) = std::polar(1.0, phase * m);
  return a;
}

MatC steering_derivative_outer(int n_rx, int n_tx, double spacing,
                               double theta) {
  const VecC b = steering(n_rx, spacing, theta);
  const VecC a = steering(n_tx, spacing, theta);
  const cxd jfac(0.0, 2.0 * kPi * spacing * std::cos(theta));
  MatC d(n_rx, n_tx);
  for (int m = 0; m < n_rx; ++m)
    for (int n = 0; n < n_tx; ++n)
      d(m, n) = jfac * static_cast<double>(m + n) * b(m) * a(n);
  return d;
}

double radar_alpha(double wavelength, double rcs, double range) {
  const double fourpi = 4.0 * kPi;
  return std::sqrt(wavelength * wavelength * rcs /
                   (fourpi * fourpi * fourpi * range * range * range * range));
}

double doppler_shift(double velocity, double f_c, double light_speed) {
  return 2.0 * velocity * f_c / light_speed;
}

ChannelSet build_channel_set(const SystemConfig& cfg, std::uint64_t seed) {
  if (cfg.n_tx < 1 || cfg.n_users < 1)
    throw std::invalid_argument("build_channel_set: empty array or user set");
  Rng rng(seed);
  ChannelSet cs;
  const double lambda_c = cfg.light_speed / cfg.f_c;
  const double theta_3db = cfg.theta_3db_deg * kPi / 180.0;
  const double g_max = db_to_lin(cfg.g_max_dbi);
  const double g_user = db_to_lin(cfg.g_user_dbi);

  // Feed-beam centers on a uniform angular grid centered at boresight; users
  // are scattered uniformly over the field of view spanned by the grid, with
  // a minimum pairwise separation (redrawn as a batch when violated).
  const double spacing_rad = cfg.geometry.beam_spacing_3db * 2.0 * theta_3db;
  const double half_span = 0.5 * (cfg.n_tx - 1) * spacing_rad;
  const double edge = half_span + 0.5 * spacing_rad;
  const double min_sep = cfg.geometry.min_sep_3db * 2.0 * theta_3db;
  std::vector<double> theta_user(cfg.n_users);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (double& t : theta_user) t = rng.uniform(-edge, edge);
    bool ok = true;
    for (int i = 0; i < cfg.n_users && ok; ++i)
      for (int j = i + 1; j < cfg.n_users && ok; ++j)
        ok = std::abs(theta_user[i] - theta_user[j]) >= min_sep;
    if (ok) break;
  }

  cs.h = MatC(cfg.n_tx, cfg.n_users);
  for (int k = 0; k < cfg.n_users; ++k) {
    const double theta_k = theta_user[k];
    const double rain_amp = sample_rain(cfg.rain_mu, cfg.rain_sigma2,
                                        cfg.rain_attenuation_convention, rng);
    for (int n = 0; n < cfg.n_tx; ++n) {
      const double feed_center = -half_span + n * spacing_rad;
      const double off = theta_k - feed_center;
      const double g_beam = beam_gain(off, theta_3db, g_max);
      const double b = path_coeff(g_user, g_beam, cfg.d_sat, lambda_c,
                                  cfg.boltzmann, cfg.t_sys, cfg.bandwidth);
      const double phi = rng.uniform(0.0, 2.0 * kPi);
      cs.h(n, k) = b * rain_amp * std::polar(1.0, phi);
    }
  }

  const double theta_r = cfg.radar.theta_deg * kPi / 180.0;
  cs.a_tx = steering(cfg.n_tx, cfg.element_spacing, theta_r);
  cs.b_rx = steering(cfg.n_rx, cfg.element_spacing, theta_r);
  cs.alpha = radar_alpha(lambda_c, cfg.radar.rcs_m2, cfg.radar.range_m);
  cs.doppler_hz =
      doppler_shift(cfg.radar.velocity_mps, cfg.f_c, cfg.light_speed);
  // The configured integrated radar SNR P_t L alpha^2 / sigma_r^2 pins the
  // echo noise floor for the given scene.
  cs.snr_radar = db_to_lin(cfg.radar.snr_db);
  cs.sigma_r2 = cfg.p_t * cfg.radar.n_symbols * cs.alpha * cs.alpha /
                cs.snr_radar;
  return cs;
}

}  // namespace qisac
