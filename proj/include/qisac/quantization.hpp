// quantization.hpp
// Additive quantization noise model (AQNM) for low-resolution DACs: per-chain
// linear gain, quantization-noise covariance, transmit covariance, and a
// sample-level linearized quantizer for simulation.
#pragma once

#include <map>
#include <string>
#include <vector>

#include "qisac/common.hpp"

namespace qisac {

/// Distortion factors ϱ(b) for coarse resolutions (b <= 5).  Values for the
/// optimal scalar uniform quantizer; user-replaceable via a plain-text file
/// with one `b loss` pair per line.
struct QuantLossTable {
  std::map<int, double> loss;

  /// Built-in defaults for b = 1..5.
  static QuantLossTable defaults();
  /// Parse `b whitespace loss` lines; '#' starts a comment.  Throws
  /// std::runtime_error on unreadable files or a table that is not
  /// nonincreasing in b.
  static QuantLossTable from_file(const std::string& path);
};

/// Linear quantization gain delta(b) = 1 - rho(b): table lookup for b <= 5,
/// closed form rho = (pi*sqrt(3)/2) * 2^(-2b) above.  Throws
/// std::invalid_argument for b < 1.
double quant_gain(int bits, const QuantLossTable& table);

/// Per-chain gains Δ = diag(delta_m) plus the bits that produced them.
struct QuantModel {
  std::vector<int> bits;
  VecR delta;  ///< diagonal of Δ, entries in (0,1]

  /// All chains at the same resolution.
  static QuantModel uniform(int n_chains, int bits, const QuantLossTable& t);
  /// Per-chain resolutions.
  static QuantModel per_chain(const std::vector<int>& bits,
                              const QuantLossTable& t);
};

/// Quantization-noise covariance Σ = Δ(I−Δ) r_x with the Hermitian part of
/// r_x enforced; `diag_only` instead applies Δ(I−Δ) diag(r_x).  Throws
/// std::domain_error when r_x has an eigenvalue below -1e-9.
MatC quant_noise_cov(const VecR& delta, const MatC& r_x,
                     bool diag_only = false);

/// Transmit covariance of the quantized waveform, R_q = Δ P Pᴴ Δᴴ, for a
/// precoder matrix P with one column per stream.
MatC tx_covariance(const VecR& delta, const MatC& p);

/// PSD square-root factor F with F Fᴴ = sigma (eigendecomposition with
/// negative eigenvalues below -1e-9 rejected, smaller ones clamped to zero).
MatC cov_factor(const MatC& sigma);

/// Linearized quantizer sample: x_q = Δx + ε, ε ~ CN(0, sigma) drawn through
/// cov_factor.  Deterministic for a fixed rng state.
VecC apply_aqnm(const VecC& x, const VecR& delta, const MatC& sigma, Rng& rng);

}  // namespace qisac
