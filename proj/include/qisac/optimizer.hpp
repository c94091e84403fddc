// optimizer.hpp
// Precoder design: lifted-SDP inner problems assembled per successive-convex-
// approximation iteration, a Dinkelbach outer loop on the fractional
// energy-efficiency objectives, baselines (total-EE, sum-rate, SDMA, OMA),
// and rank-one extraction of the beamforming vectors.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "qisac/channel.hpp"
#include "qisac/common.hpp"
#include "qisac/conic.hpp"
#include "qisac/metrics.hpp"

namespace qisac {

/// Rank-relaxed solution state: PSD matrices standing in for the outer
/// products of the beamforming vectors, plus the common-rate shares and the
/// private-rate auxiliaries.
struct LiftedPrecoders {
  MatC p_c;               ///< common stream (0x0 when the scheme has none)
  MatC p_r;               ///< radar sequence (0x0 in NoRadar mode)
  std::vector<MatC> p_k;  ///< per-user private streams
  VecR c;                 ///< common-rate shares C_k >= 0
  VecR r;                 ///< private-rate auxiliaries r_k

  bool has_common() const { return p_c.size() > 0; }
  bool has_radar() const { return p_r.size() > 0; }
};

/// Inner-problem objective family.
enum class Objective { MaxMinEE, TotalEE, SumRate };

/// Baseline multiple-access schemes.
enum class BaselineScheme { Sdma, Oma };

/// Knobs of the outer loops.  Defaults follow the reference algorithm
/// parameters (penalty 0.5e-2, tolerance 1e-3, 100 outer iterations).
struct OptimizerConfig {
  double xi = 0.5e-2;  ///< rank-one penalty factor
  double eps = 1e-3;   ///< outer stop: achieved-objective change below this
  int t_max = 100;     ///< outer iteration cap
  /// Count the radar column in the transmit-power budget even when the users
  /// cancel it (the lifted formulation's literal form).  Switching this off
  /// reproduces the pre-lifting statement where the radar term enters the
  /// budget only with psi = 1.
  bool power_counts_radar_when_sic = true;
  /// Per-iteration sampling of surrogate-feasible points verified against the
  /// exact (non-surrogate) constraints; results land in SolveReport.
  bool debug_inner_soundness = false;
  int soundness_samples = 100;
  std::string trace_path;  ///< JSON-lines per-iteration trace when nonempty
  ConicOptions conic;
};

/// Outcome of one precoder design run.
struct SolveReport {
  SolveStatus status = SolveStatus::NumericalFailure;
  RadarSicMode mode = RadarSicMode::SicRadar;
  std::string scheme;  ///< "rsma-maxmin", "rsma-totalee", "rsma-sumrate",
                       ///< "sdma", "oma"
  int iterations = 0;
  bool converged = false;  ///< outer loop met the eps criterion before t_max
  /// Dinkelbach parameter after each outer iteration (exact-rate update);
  /// for the sum-rate objective this holds the exact sum rate instead, and
  /// for OMA the final per-slice ratio (one entry per slice).
  std::vector<double> lambda_trace;
  /// OMA only: the full Dinkelbach trace of each time slice.
  std::vector<std::vector<double>> slice_traces;
  /// Inner (surrogate) objective value per outer iteration.
  std::vector<double> objective_trace;
  LiftedPrecoders lifted;
  Precoders precoders;  ///< rank-one extraction of `lifted`
  VecR common_share;
  double lambda_final = 0;
  RatePowerBreakdown breakdown;  ///< metrics at the extracted vectors
  double min_ee = 0;
  double sum_rate = 0;
  double crb = 0;  ///< angle CRB at extraction, squared degrees (same units
                   ///< as the configured bound)
  double power_used = 0;  ///< tr of the quantized transmit covariance
  double radar_power_fraction = 0;  ///< ||delta .* p_r||^2 / P_t
  double max_rank_residual = 0;  ///< worst relative extraction residual over
                                 ///< the penalized active matrices
  double qos_margin = 0;         ///< min_k (C_k + R_k) - R_th
  double wall_time_sec = 0;
  int soundness_samples = 0;
  int soundness_failures = 0;
  std::vector<std::string> warnings;
  std::string detail;  ///< failure diagnostics
};

/// Matched-filter initialization: private precoders along the user channels,
/// common precoder along the dominant left singular vector of the channel
/// matrix, radar precoder along conj(a_tx), power split uniformly over the
/// active streams to sum to p_t.  Throws std::invalid_argument on an all-zero
/// channel.
Precoders init_precoders(const MatC& h, const VecC& a_tx, double p_t,
                         RadarSicMode mode, bool with_common = true);

/// Outer products of the vectors (rank-one lifted point).
LiftedPrecoders lift_precoders(const Precoders& p);

/// Relative rank-one defect (tr(P) - lambda_max(P)) / tr(P), zero for a
/// matrix with trace below `floor`.
double rank_one_residual(const MatC& p, double floor = 1e-300);

/// EVD-based extraction p = sqrt(chi_max) * m_max per matrix.  When
/// `max_residual_rel` is non-null it receives the worst tr(P) - chi_max
/// relative to tr(P) over matrices with tr(P) > active_floor; a warning
/// string is appended per matrix exceeding 1e-2.  Pass `radar_penalized =
/// false` to exempt the radar matrix from the residual bookkeeping: a
/// sequence the receivers cancel carries no rank-one pressure, so its lifted
/// matrix is spread by design.
Precoders extract_rank_one(const LiftedPrecoders& lifted,
                           double* max_residual_rel = nullptr,
                           std::vector<std::string>* warnings = nullptr,
                           double active_floor = 1e-10,
                           bool radar_penalized = true);

/// Max-min fairness EE design (auxiliary min-ratio variable + per-user
/// Dinkelbach rows).
SolveReport solve_maxmin_ee(const SystemConfig& cfg, const ChannelSet& cs,
                            RadarSicMode mode, const OptimizerConfig& ocfg = {});

/// Total-EE design (summed Dinkelbach objective, single ratio update).
SolveReport solve_total_ee(const SystemConfig& cfg, const ChannelSet& cs,
                           RadarSicMode mode, const OptimizerConfig& ocfg = {});

/// Sum-rate design (pure SCA, no fractional outer loop).
SolveReport solve_sum_rate(const SystemConfig& cfg, const ChannelSet& cs,
                           RadarSicMode mode, const OptimizerConfig& ocfg = {});

/// SDMA (common stream removed, total-EE machinery) and OMA (per-user time
/// slices at full power, rates scaled by 1/K) baselines.
SolveReport solve_baseline(const SystemConfig& cfg, const ChannelSet& cs,
                           BaselineScheme scheme,
                           RadarSicMode mode = RadarSicMode::SicRadar,
                           const OptimizerConfig& ocfg = {});

/// Test instrumentation: evaluate the SCA rate surrogate, its ingredients,
/// and the exact lifted-domain quantities around a fixed expansion point.
class SurrogateProbe {
 public:
  SurrogateProbe(const SystemConfig& cfg, const ChannelSet& cs,
                 RadarSicMode mode, LiftedPrecoders expansion);
  ~SurrogateProbe();
  SurrogateProbe(SurrogateProbe&&) noexcept;
  SurrogateProbe& operator=(SurrogateProbe&&) noexcept;

  /// Exact lifted quantities at an arbitrary point.
  double private_signal(int k, const LiftedPrecoders& at) const;
  double private_interference(int k, const LiftedPrecoders& at) const;
  double common_signal(int k, const LiftedPrecoders& at) const;
  double common_interference(int k, const LiftedPrecoders& at) const;
  double exact_private_rate(int k, const LiftedPrecoders& at) const;
  double exact_common_rate(int k, const LiftedPrecoders& at) const;
  double exact_total_rate(int k, const LiftedPrecoders& at) const;
  double chain_power(int k, const LiftedPrecoders& at) const;

  /// Linearized log-interference g~_k and the full rate surrogate
  /// C_k(at) + f_k(at) - g~_k(at) around the stored expansion point.
  double gtilde(int k, const LiftedPrecoders& at) const;
  double surrogate_total_rate(int k, const LiftedPrecoders& at) const;

  /// Gradient coefficient matrices of g~_k, ordered like the point's
  /// variable list: [p_c (if any), p_1..p_K, p_r (if any)].
  std::vector<MatC> gtilde_gradients(int k) const;

  /// Sensing LMI coefficient matrices (shared across lifted variables): the
  /// traces Re tr(M . P_v), summed over v, reproduce the radar traces of the
  /// quantized transmit covariance.
  MatC crb_m_aa() const;
  MatC crb_m_dd() const;
  MatC crb_m_ad() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace qisac
