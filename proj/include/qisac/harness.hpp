// harness.hpp
// Experiment runner: JSON experiment specs, seeded Monte Carlo sweeps over a
// worker pool, JSON-lines result records, and CSV figure-data emission.
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qisac/channel.hpp"
#include "qisac/metrics.hpp"
#include "qisac/optimizer.hpp"

namespace qisac {

/// Sweep over one scalar knob of the system configuration.
struct SweepSpec {
  /// "snr_db" (transmit SNR, sets p_t = 10^(v/10)), "bits" (DAC resolution),
  /// "rho" (angle-CRB bound), or "none" (single point).
  std::string axis = "none";
  std::vector<double> values;
};

/// One experiment: a resolved system configuration, the sweep, the precoder
/// design modes to compare, and the Monte Carlo seeds.
struct ExperimentSpec {
  int schema_version = 1;
  std::string name = "experiment";
  SystemConfig system;
  SweepSpec sweep;
  /// Mode strings: family "maxmin" | "totalee" | "sumrate" | "sdma" | "oma",
  /// optionally suffixed "-sic" (default), "-nosic", or "-noradar".
  std::vector<std::string> modes;
  std::vector<std::uint64_t> seeds;
  /// Run the pulse-Doppler pipeline on each successful solve and record the
  /// detected vs. true range/Doppler bins.
  bool run_radar_pipeline = false;
  /// On an infeasible solve, bisect the per-user rate floor down to the
  /// largest feasible value and record the floor actually used.
  bool qos_auto_scale = false;
  OptimizerConfig optimizer;
};

/// Parsed mode string.
struct ModeSelector {
  enum class Family { MaxMin, TotalEE, SumRate, Sdma, Oma };
  Family family = Family::MaxMin;
  RadarSicMode sic = RadarSicMode::SicRadar;
};

/// Parse a mode string such as "maxmin-nosic".  Throws std::runtime_error
/// with the offending token on an unknown family or suffix.
ModeSelector parse_mode(const std::string& name);

/// Serialize / parse the full system configuration.  Parsing is strict: an
/// unknown key raises a diagnostic naming the field.
nlohmann::json system_to_json(const SystemConfig& cfg);
SystemConfig system_from_json(const nlohmann::json& j,
                              const std::string& context = "system.");

/// Parse an experiment spec from JSON (strict keys, field diagnostics) or
/// load one from a file (adds parse-location context).
ExperimentSpec parse_spec(const nlohmann::json& j);
ExperimentSpec load_spec(const std::string& path);

/// Return a copy of `cfg` with one sweep value applied; axis "none" returns
/// the configuration unchanged.
SystemConfig apply_sweep(const SystemConfig& cfg, const std::string& axis,
                         double value);

/// One row of the results file: everything needed to aggregate the figures
/// and to re-synthesize beampatterns and range-Doppler maps offline.
struct ResultRecord {
  int schema_version = 1;
  std::string experiment;
  std::string mode;
  std::string axis;
  double sweep_value = 0;
  std::uint64_t seed = 0;
  std::string status;  ///< "optimal", "infeasible", "unbounded",
                       ///< "numerical_failure", or "error"
  std::string detail;  ///< failure diagnostics
  bool converged = false;
  int iterations = 0;
  double lambda = 0;  ///< final Dinkelbach parameter / objective ratio
  double min_ee = 0;
  double sum_rate = 0;
  double crb = 0;
  double qos_margin = 0;
  double qos_rate_used = 0;  ///< rate floor after any auto-scaling
  double power_used = 0;
  double radar_power_fraction = 0;
  double max_rank_residual = 0;
  double wall_time_sec = 0;
  std::vector<double> ee;           ///< per-user energy efficiency
  std::vector<double> rate;         ///< per-user total rate C_k + R_k
  std::vector<double> power_alloc;  ///< per-column ||Delta p||^2:
                                    ///< [common, user_1..K, radar]
  std::vector<double> lambda_trace;
  std::vector<double> objective_trace;
  std::vector<std::vector<double>> slice_traces;  ///< OMA per-slice traces
  MatC precoders;  ///< stacked [p_c, p_1..K, p_r], n_tx x (K+2)
  VecR delta;      ///< DAC gains the solve used
  nlohmann::json system;  ///< resolved (post-sweep) system configuration
  bool rd_ran = false;    ///< pulse-Doppler pipeline fields follow
  int rd_range_bin = 0;
  int rd_doppler_bin = 0;
  int rd_true_range_bin = 0;
  int rd_true_doppler_bin = 0;
  double rd_peak_value = 0;
  bool rd_hit = false;  ///< within +/-1 bin on both axes (Doppler circular)
  std::vector<std::string> warnings;
};

/// Record <-> JSON round-trip (parse(serialize(r)) == r field for field).
nlohmann::json record_to_json(const ResultRecord& rec);
ResultRecord record_from_json(const nlohmann::json& j);

/// Read a JSON-lines records file; throws with the line number on a parse
/// or schema failure.
std::vector<ResultRecord> load_records(const std::string& path);

/// Run-time overrides from the command line.
struct RunOptions {
  std::optional<int> seed_count;  ///< replace the spec's seeds with 1..N
  std::string trace_dir;          ///< per-solve optimizer traces when nonempty
  std::string out = "records.jsonl";
};

struct RunSummary {
  int n_records = 0;
  int n_failed = 0;  ///< records with a non-"optimal" status
  std::string out_path;
};

/// Solve one (mode, sweep value, seed) cell and assemble its record.  Never
/// throws for solver-side failures: those come back as a record with a
/// failure status and the run continues.
ResultRecord run_cell(const ExperimentSpec& spec, const std::string& mode,
                      double sweep_value, std::uint64_t seed,
                      const std::string& trace_dir = "");

/// Run the full sweep across a worker pool (QISAC_WORKERS overrides the
/// thread count) and append the records to opts.out in deterministic
/// (mode, sweep value, seed) order.
RunSummary run_experiment(const ExperimentSpec& spec,
                          const RunOptions& opts = {});

/// Figure names accepted by emit_figure.
const std::vector<std::string>& figure_names();

/// Aggregate records into one figure's CSV data (means and standard errors
/// across seeds).  "range_doppler" re-synthesizes the map per mode and writes
/// one CSV per mode next to `out_path`; the others write `out_path` itself.
/// Throws std::runtime_error on an empty or axis-mismatched record set.
void emit_figure(const std::string& figure,
                 const std::vector<ResultRecord>& records,
                 const std::string& out_path);

}  // namespace qisac
