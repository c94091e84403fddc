// radarpipe.hpp
// Desk-scale pulse-Doppler validation: quantized multi-stream transmit frames,
// delayed/Doppler-shifted point-target echoes, and a beamform + range-compress
// + slow-time DFT range-Doppler map with peak detection.
#pragma once

#include <string>

#include "qisac/channel.hpp"
#include "qisac/common.hpp"
#include "qisac/metrics.hpp"

namespace qisac {

/// One coherent processing interval of transmitted data.
struct Frame {
  MatC symbols;  ///< (K+2) x L unit-energy QPSK streams, radar stream last
  MatC x_q;      ///< n_tx x L quantized transmit samples

  int n_streams() const { return static_cast<int>(symbols.rows()); }
  int length() const { return static_cast<int>(symbols.cols()); }
};

/// Physical echo parameters derived from a system config and channel set.
struct RadarScene {
  VecC a_tx;  ///< transmit steering at the (tracked) target angle
  VecC b_rx;  ///< receive steering
  double alpha = 0;       ///< two-way amplitude
  double doppler_hz = 0;  ///< target Doppler shift
  double sigma_r2 = 0;    ///< echo noise power per receive element
  double bandwidth = 0;   ///< fast-time sampling rate [Hz]
  double light_speed = 0;
  double f_c = 0;
  double range_m = 0;
};

RadarScene make_scene(const SystemConfig& cfg, const ChannelSet& cs);

/// Map-formation knobs.
struct RdGridConfig {
  int n_pulses = 64;  ///< slow-time segmentation of the frame
  /// Correlate against the radar stream's contribution only instead of the
  /// full known transmit waveform (ablation mode).
  bool radar_only_reference = false;
};

/// Magnitude map over (range bin, Doppler bin) with physical axes.
struct RangeDopplerMap {
  MatR magnitude;     ///< range bins x Doppler bins, nonnegative
  VecR range_m;       ///< axis, monotone
  VecR velocity_mps;  ///< axis (DFT bins unwrapped to signed velocities)
};

/// Located peak in physical units.
struct PeakDetection {
  int range_bin = 0;
  int doppler_bin = 0;
  double range_m = 0;
  double velocity_mps = 0;
  double value = 0;
};

/// Draw one frame: unit-energy QPSK streams (radar stream last, deterministic
/// for a fixed rng), x = P s per symbol, then the linearized quantizer with
/// noise covariance implied by the precoders.
Frame gen_frame(const Precoders& p, const VecR& delta, bool quant_noise_diag,
                Rng& rng, int length);

/// Point-target echo z[l] = alpha e^{j 2 pi f_d l T} b a^T x_q[l - n_d] +
/// CN(0, sigma_r2 I), integer delay n_d = round(2 r / (c T)), T = 1/B;
/// out-of-range samples contribute zero.  Throws std::domain_error
/// ("target beyond unambiguous range") when n_d >= frame length.
MatC synth_echo(const Frame& frame, const RadarScene& scene, Rng& rng);

/// Beamform with b^H/||b||, range-compress each slow-time pulse against the
/// known transmit reference a^T x_q (or the radar stream's share of it), then
/// DFT across pulses.  Throws std::invalid_argument on length mismatch.
RangeDopplerMap range_doppler_map(const MatC& echo, const Frame& frame,
                                  const Precoders& p, const VecR& delta,
                                  const RadarScene& scene,
                                  const RdGridConfig& grid = {});

/// Argmax cell in physical units; ties resolve to the lowest range bin.
PeakDetection detect_peak(const RangeDopplerMap& map);

/// True (range, Doppler) bin indices for a scene under the map's gridding.
void true_bins(const RadarScene& scene, int frame_length, int n_pulses,
               int* range_bin, int* doppler_bin);

/// CSV export, one row per range bin: range_m, then one magnitude column per
/// Doppler bin (header carries the velocity axis).
void write_map_csv(const RangeDopplerMap& map, const std::string& path);

/// JSON export of a peak record.
void write_peak_json(const PeakDetection& peak, const std::string& path);

}  // namespace qisac
