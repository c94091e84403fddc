// radarpipe.cpp
#include "qisac/radarpipe.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "json.hpp"
#include "qisac/quantization.hpp"

namespace qisac {
namespace {

// Unit-energy QPSK alphabet.
cxd qpsk(Rng& rng) {
  static const double s = 1.0 / std::sqrt(2.0);
  switch (rng.index(4)) {
    case 0: return {s, s};
    case 1: return {s, -s};
    case 2: return {-s, s};
    default: return {-s, -s};
  }
}

}  // namespace

RadarScene make_scene(const SystemConfig& cfg, const ChannelSet& cs) {
  RadarScene sc;
  sc.a_tx = cs.a_tx;
  sc.b_rx = cs.b_rx;
  sc.alpha = cs.alpha;
  sc.doppler_hz = cs.doppler_hz;
  sc.sigma_r2 = cs.sigma_r2;
  sc.bandwidth = cfg.bandwidth;
  sc.light_speed = cfg.light_speed;
  sc.f_c = cfg.f_c;
  sc.range_m = cfg.radar.range_m;
  return sc;
}

Frame gen_frame(const Precoders& p, const VecR& delta, bool quant_noise_diag,
                Rng& rng, int length) {
  if (length < 1) throw std::invalid_argument("gen_frame: length < 1");
  const int K = p.n_users();
  const int n_streams = K + 2;
  Frame f;
  f.symbols.resize(n_streams, length);
  for (int l = 0; l < length; ++l)
    for (int s = 0; s < n_streams; ++s) f.symbols(s, l) = qpsk(rng);
  const MatC pmat = p.matrix();
  const MatC sigma =
      quant_noise_cov(delta, pmat * pmat.adjoint(), quant_noise_diag);
  const MatC x = pmat * f.symbols;
  f.x_q.resize(pmat.rows(), length);
  for (int l = 0; l < length; ++l)
    f.x_q.col(l) = apply_aqnm(x.col(l), delta, sigma, rng);
  return f;
}

MatC synth_echo(const Frame& frame, const RadarScene& scene, Rng& rng) {
  const int L = frame.length();
  const int n_rx = static_cast<int>(scene.b_rx.size());
  const double t_samp = 1.0 / scene.bandwidth;
  const int n_d = static_cast<int>(
      std::lround(2.0 * scene.range_m / (scene.light_speed * t_samp)));
  if (n_d >= L) throw std::domain_error("target beyond unambiguous range");
  const double noise_amp = std::sqrt(scene.sigma_r2);
  MatC z(n_rx, L);
  for (int l = 0; l < L; ++l) {
    VecC sample = VecC::Zero(n_rx);
    if (l >= n_d) {
      const cxd rot =
          std::polar(scene.alpha, 2.0 * kPi * scene.doppler_hz * l * t_samp);
      const cxd tx = (scene.a_tx.array() * frame.x_q.col(l - n_d).array()).sum();
      sample = rot * tx * scene.b_rx;
    }
    for (int m = 0; m < n_rx; ++m) sample(m) += noise_amp * rng.cnormal();
    z.col(l) = sample;
  }
  return z;
}

RangeDopplerMap range_doppler_map(const MatC& echo, const Frame& frame,
                                  const Precoders& p, const VecR& delta,
                                  const RadarScene& scene,
                                  const RdGridConfig& grid) {
  const int L = frame.length();
  if (static_cast<int>(echo.cols()) != L)
    throw std::invalid_argument("range_doppler_map: echo/frame length mismatch");
  const int n_p = grid.n_pulses;
  if (n_p < 1 || L % n_p != 0)
    throw std::invalid_argument(
        "range_doppler_map: pulses must evenly divide the frame");
  const int lp = L / n_p;

  // Beamformed fast-time stream and the scalar transmit reference.
  const VecC w = scene.b_rx / scene.b_rx.norm();
  Eigen::RowVectorXcd y = w.adjoint() * echo;
  Eigen::RowVectorXcd ref(L);
  if (grid.radar_only_reference) {
    const cxd gain = (scene.a_tx.array() * delta.cast<cxd>().array() *
                      p.p_r.array())
                         .sum();
    ref = gain * frame.symbols.row(frame.n_streams() - 1);
  } else {
    ref = scene.a_tx.transpose() * frame.x_q;
  }

  // Per-pulse range compression, then DFT across pulses.
  RangeDopplerMap map;
  map.magnitude = MatR::Zero(L, n_p);
  MatC pulse_corr(n_p, L);  // one row per pulse, one column per delay
  for (int pi = 0; pi < n_p; ++pi)
    for (int n = 0; n < L; ++n) {
      cxd acc = 0;
      for (int m = 0; m < lp; ++m) {
        const int l = pi * lp + m;
        const int src = l - n;
        if (src >= 0) acc += y(l) * std::conj(ref(src));
      }
      pulse_corr(pi, n) = acc;
    }
  for (int n = 0; n < L; ++n)
    for (int q = 0; q < n_p; ++q) {
      cxd acc = 0;
      for (int pi = 0; pi < n_p; ++pi)
        acc += pulse_corr(pi, n) *
               std::polar(1.0, -2.0 * kPi * pi * q / n_p);
      map.magnitude(n, q) = std::abs(acc);
    }

  const double t_samp = 1.0 / scene.bandwidth;
  map.range_m.resize(L);
  for (int n = 0; n < L; ++n)
    map.range_m(n) = n * scene.light_speed * t_samp / 2.0;
  map.velocity_mps.resize(n_p);
  const double prf = 1.0 / (lp * t_samp);
  for (int q = 0; q < n_p; ++q) {
    const double fd = (q <= n_p / 2 ? q : q - n_p) * prf / n_p;
    map.velocity_mps(q) = fd * scene.light_speed / (2.0 * scene.f_c);
  }
  return map;
}

PeakDetection detect_peak(const RangeDopplerMap& map) {
  if (map.magnitude.size() == 0)
    throw std::invalid_argument("detect_peak: empty map");
  PeakDetection pk;
  pk.value = -1;
  for (int q = 0; q < map.magnitude.cols(); ++q)
    for (int n = 0; n < map.magnitude.rows(); ++n) {
      const double v = map.magnitude(n, q);
      // Strict > keeps the lowest range bin on ties (n scans upward).
      if (v > pk.value) {
        pk.value = v;
        pk.range_bin = n;
        pk.doppler_bin = q;
      }
    }
  pk.range_m = map.range_m(pk.range_bin);
  pk.velocity_mps = map.velocity_mps(pk.doppler_bin);
  return pk;
}

void true_bins(const RadarScene& scene, int frame_length, int n_pulses,
               int* range_bin, int* doppler_bin) {
  const double t_samp = 1.0 / scene.bandwidth;
  if (range_bin)
    *range_bin = static_cast<int>(
        std::lround(2.0 * scene.range_m / (scene.light_speed * t_samp)));
  if (doppler_bin) {
    const int lp = frame_length / n_pulses;
    const double prf = 1.0 / (lp * t_samp);
    int q = static_cast<int>(std::lround(scene.doppler_hz / (prf / n_pulses)));
    q = ((q % n_pulses) + n_pulses) % n_pulses;
    *doppler_bin = q;
  }
}

void write_map_csv(const RangeDopplerMap& map, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_map_csv: cannot open " + path);
  os << "range_m";
  for (int q = 0; q < map.velocity_mps.size(); ++q)
    os << ",v_" << map.velocity_mps(q);
  os << "\n";
  for (int n = 0; n < map.magnitude.rows(); ++n) {
    os << map.range_m(n);
    for (int q = 0; q < map.magnitude.cols(); ++q)
      os << "," << map.magnitude(n, q);
    os << "\n";
  }
}

void write_peak_json(const PeakDetection& peak, const std::string& path) {
  nlohmann::json j{{"range_bin", peak.range_bin},
                   {"doppler_bin", peak.doppler_bin},
                   {"range_m", peak.range_m},
                   {"velocity_mps", peak.velocity_mps},
                   {"value", peak.value}};
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_peak_json: cannot open " + path);
  os << j.dump(2) << "\n";
}

}  // namespace qisac
