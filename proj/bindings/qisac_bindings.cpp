// qisac_bindings.cpp
// Python module exposing the main operations: channel synthesis, DAC
// quantization model, link/sensing metrics, precoder solvers, the
// pulse-Doppler pipeline, and the experiment runner.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qisac/harness.hpp"
#include "qisac/quantization.hpp"
#include "qisac/radarpipe.hpp"

namespace py = pybind11;
using namespace qisac;

namespace {

VecR default_delta(const SystemConfig& cfg) {
  const QuantLossTable table =
      cfg.loss_table_path.empty() ? QuantLossTable::defaults()
                                  : QuantLossTable::from_file(cfg.loss_table_path);
  return QuantModel::uniform(cfg.n_tx, cfg.dac_bits, table).delta;
}

SolveReport solve_dispatch(const SystemConfig& cfg, const ChannelSet& cs,
                           const std::string& mode,
                           const OptimizerConfig& ocfg) {
  const ModeSelector sel = parse_mode(mode);
  switch (sel.family) {
    case ModeSelector::Family::MaxMin:
      return solve_maxmin_ee(cfg, cs, sel.sic, ocfg);
    case ModeSelector::Family::TotalEE:
      return solve_total_ee(cfg, cs, sel.sic, ocfg);
    case ModeSelector::Family::SumRate:
      return solve_sum_rate(cfg, cs, sel.sic, ocfg);
    case ModeSelector::Family::Sdma:
      return solve_baseline(cfg, cs, BaselineScheme::Sdma, sel.sic, ocfg);
    case ModeSelector::Family::Oma:
      return solve_baseline(cfg, cs, BaselineScheme::Oma, sel.sic, ocfg);
  }
  throw std::logic_error("unreachable mode family");
}

}  // namespace

PYBIND11_MODULE(_qisac, m) {
  m.doc() =
      "Quantized RSMA ISAC precoder design: satellite channel synthesis, "
      "AQNM quantization, energy-efficiency optimization, and pulse-Doppler "
      "sensing validation.";

  py::class_<PowerModel>(m, "PowerModel")
      .def(py::init<>())
      .def_readwrite("p_lp", &PowerModel::p_lp)
      .def_readwrite("p_m", &PowerModel::p_m)
      .def_readwrite("p_lo", &PowerModel::p_lo)
      .def_readwrite("p_h", &PowerModel::p_h)
      .def_readwrite("kappa", &PowerModel::kappa)
      .def_readwrite("f_s", &PowerModel::f_s);

  py::class_<RadarSceneConfig>(m, "RadarSceneConfig")
      .def(py::init<>())
      .def_readwrite("theta_deg", &RadarSceneConfig::theta_deg)
      .def_readwrite("range_m", &RadarSceneConfig::range_m)
      .def_readwrite("velocity_mps", &RadarSceneConfig::velocity_mps)
      .def_readwrite("rcs_m2", &RadarSceneConfig::rcs_m2)
      .def_readwrite("snr_db", &RadarSceneConfig::snr_db)
      .def_readwrite("n_symbols", &RadarSceneConfig::n_symbols)
      .def_readwrite("n_pulses", &RadarSceneConfig::n_pulses);

  py::class_<GeometryConfig>(m, "GeometryConfig")
      .def(py::init<>())
      .def_readwrite("beam_spacing_3db", &GeometryConfig::beam_spacing_3db)
      .def_readwrite("min_sep_3db", &GeometryConfig::min_sep_3db);

  py::class_<SystemConfig>(m, "SystemConfig")
      .def(py::init<>())
      .def_readwrite("n_tx", &SystemConfig::n_tx)
      .def_readwrite("n_rx", &SystemConfig::n_rx)
      .def_readwrite("n_users", &SystemConfig::n_users)
      .def_readwrite("f_c", &SystemConfig::f_c)
      .def_readwrite("bandwidth", &SystemConfig::bandwidth)
      .def_readwrite("light_speed", &SystemConfig::light_speed)
      .def_readwrite("element_spacing", &SystemConfig::element_spacing)
      .def_readwrite("d_sat", &SystemConfig::d_sat)
      .def_readwrite("g_max_dbi", &SystemConfig::g_max_dbi)
      .def_readwrite("g_user_dbi", &SystemConfig::g_user_dbi)
      .def_readwrite("t_sys", &SystemConfig::t_sys)
      .def_readwrite("boltzmann", &SystemConfig::boltzmann)
      .def_readwrite("theta_3db_deg", &SystemConfig::theta_3db_deg)
      .def_readwrite("rain_mu", &SystemConfig::rain_mu)
      .def_readwrite("rain_sigma2", &SystemConfig::rain_sigma2)
      .def_readwrite("rain_attenuation_convention",
                     &SystemConfig::rain_attenuation_convention)
      .def_readwrite("noise_power", &SystemConfig::noise_power)
      .def_readwrite("p_t", &SystemConfig::p_t)
      .def_readwrite("dac_bits", &SystemConfig::dac_bits)
      .def_readwrite("quant_noise_diag", &SystemConfig::quant_noise_diag)
      .def_readwrite("loss_table_path", &SystemConfig::loss_table_path)
      .def_readwrite("qos_rate", &SystemConfig::qos_rate)
      .def_readwrite("crb_bound", &SystemConfig::crb_bound)
      .def_readwrite("power", &SystemConfig::power)
      .def_readwrite("radar", &SystemConfig::radar)
      .def_readwrite("geometry", &SystemConfig::geometry);

  py::class_<ChannelSet>(m, "ChannelSet")
      .def_readonly("h", &ChannelSet::h)
      .def_readonly("a_tx", &ChannelSet::a_tx)
      .def_readonly("b_rx", &ChannelSet::b_rx)
      .def_readonly("alpha", &ChannelSet::alpha)
      .def_readonly("doppler_hz", &ChannelSet::doppler_hz)
      .def_readonly("sigma_r2", &ChannelSet::sigma_r2)
      .def_readonly("snr_radar", &ChannelSet::snr_radar);

  m.def("build_channel_set", &build_channel_set, py::arg("cfg"),
        py::arg("seed"),
        "Synthesize the satellite downlink channels and the radar scene "
        "parameters for one Monte Carlo seed.");

  m.def(
      "quant_delta",
      [](const SystemConfig& cfg) { return default_delta(cfg); },
      py::arg("cfg"),
      "Per-chain DAC gains delta = 1 - rho(b) for the configured resolution.");
  m.def("quant_gain", [](int bits) { return quant_gain(bits, QuantLossTable::defaults()); },
        py::arg("bits"), "Quantization gain 1 - rho(b) from the default loss table.");
  m.def("quant_noise_cov", &quant_noise_cov, py::arg("delta"), py::arg("r_x"),
        py::arg("diag_only") = false,
        "AQNM quantization-noise covariance Delta (I - Delta) herm(R_x).");

  m.def("p_dac", &p_dac, py::arg("bits"), py::arg("f_s"),
        "DAC power draw [W].");
  m.def("p_rf", &p_rf, py::arg("bits"), py::arg("power"), py::arg("n_tx"),
        "Per-chain RF front-end power draw [W].");
  m.def("crb_theta", &crb_theta, py::arg("r_q"), py::arg("theta"),
        py::arg("snr_radar"), py::arg("n_rx"), py::arg("n_tx"),
        py::arg("spacing"),
        "Angle CRB at the given quantized transmit covariance.");
  m.def("beampattern", &beampattern, py::arg("p"), py::arg("delta"),
        py::arg("theta_grid"), py::arg("spacing"),
        "Transmit beampattern |a(theta)^T Delta p|^2 over a grid [rad].");

  py::enum_<RadarSicMode>(m, "RadarSicMode")
      .value("SicRadar", RadarSicMode::SicRadar)
      .value("NoSic", RadarSicMode::NoSic)
      .value("NoRadar", RadarSicMode::NoRadar);

  py::class_<Precoders>(m, "Precoders")
      .def(py::init<>())
      .def_readwrite("p_c", &Precoders::p_c)
      .def_readwrite("p_k", &Precoders::p_k)
      .def_readwrite("p_r", &Precoders::p_r)
      .def("matrix", &Precoders::matrix,
           "Stacked beamforming matrix [p_c, p_1..K, p_r].");

  py::class_<RatePowerBreakdown>(m, "RatePowerBreakdown")
      .def_readonly("gamma_c", &RatePowerBreakdown::gamma_c)
      .def_readonly("gamma_p", &RatePowerBreakdown::gamma_p)
      .def_readonly("rate_common", &RatePowerBreakdown::rate_common)
      .def_readonly("rate_private", &RatePowerBreakdown::rate_private)
      .def_readonly("common_share", &RatePowerBreakdown::common_share)
      .def_readonly("common_cap", &RatePowerBreakdown::common_cap)
      .def_readonly("shares_feasible", &RatePowerBreakdown::shares_feasible)
      .def_readonly("rate_total", &RatePowerBreakdown::rate_total)
      .def_readonly("p_tx", &RatePowerBreakdown::p_tx)
      .def_readonly("p_chain", &RatePowerBreakdown::p_chain)
      .def_readonly("ee", &RatePowerBreakdown::ee);

  py::class_<SolveReport>(m, "SolveReport")
      .def_property_readonly(
          "status", [](const SolveReport& r) { return status_name(r.status); })
      .def_readonly("scheme", &SolveReport::scheme)
      .def_readonly("iterations", &SolveReport::iterations)
      .def_readonly("converged", &SolveReport::converged)
      .def_readonly("lambda_trace", &SolveReport::lambda_trace)
      .def_readonly("objective_trace", &SolveReport::objective_trace)
      .def_readonly("precoders", &SolveReport::precoders)
      .def_readonly("common_share", &SolveReport::common_share)
      .def_readonly("lambda_final", &SolveReport::lambda_final)
      .def_readonly("breakdown", &SolveReport::breakdown)
      .def_readonly("min_ee", &SolveReport::min_ee)
      .def_readonly("sum_rate", &SolveReport::sum_rate)
      .def_readonly("crb", &SolveReport::crb)
      .def_readonly("power_used", &SolveReport::power_used)
      .def_readonly("radar_power_fraction", &SolveReport::radar_power_fraction)
      .def_readonly("max_rank_residual", &SolveReport::max_rank_residual)
      .def_readonly("qos_margin", &SolveReport::qos_margin)
      .def_readonly("wall_time_sec", &SolveReport::wall_time_sec)
      .def_readonly("warnings", &SolveReport::warnings)
      .def_readonly("detail", &SolveReport::detail);

  m.def(
      "solve",
      [](const SystemConfig& cfg, const ChannelSet& cs, const std::string& mode,
         double xi, double eps, int t_max, const std::string& trace_path) {
        OptimizerConfig ocfg;
        ocfg.xi = xi;
        ocfg.eps = eps;
        ocfg.t_max = t_max;
        ocfg.trace_path = trace_path;
        return solve_dispatch(cfg, cs, mode, ocfg);
      },
      py::arg("cfg"), py::arg("channels"), py::arg("mode") = "maxmin-sic",
      py::arg("xi") = OptimizerConfig{}.xi,
      py::arg("eps") = OptimizerConfig{}.eps,
      py::arg("t_max") = OptimizerConfig{}.t_max, py::arg("trace_path") = "",
      "Design precoders for one channel draw.  Mode strings: maxmin, "
      "totalee, sumrate, sdma, oma, each optionally suffixed -sic (default), "
      "-nosic, or -noradar.");

  m.def(
      "range_doppler",
      [](const SystemConfig& cfg, const ChannelSet& cs, const Precoders& p,
         std::uint64_t seed, bool radar_only_reference) {
        const VecR delta = default_delta(cfg);
        Rng rng(seed * 2654435761ULL + 1ULL);
        const Frame frame = gen_frame(p, delta, cfg.quant_noise_diag, rng,
                                      cfg.radar.n_symbols);
        const RadarScene scene = make_scene(cfg, cs);
        const MatC echo = synth_echo(frame, scene, rng);
        RdGridConfig grid;
        grid.n_pulses = cfg.radar.n_pulses;
        grid.radar_only_reference = radar_only_reference;
        const RangeDopplerMap map =
            range_doppler_map(echo, frame, p, delta, scene, grid);
        const PeakDetection pk = detect_peak(map);
        int true_range = 0, true_doppler = 0;
        true_bins(scene, frame.length(), grid.n_pulses, &true_range,
                  &true_doppler);
        py::dict peak;
        peak["range_bin"] = pk.range_bin;
        peak["doppler_bin"] = pk.doppler_bin;
        peak["range_m"] = pk.range_m;
        peak["velocity_mps"] = pk.velocity_mps;
        peak["value"] = pk.value;
        peak["true_range_bin"] = true_range;
        peak["true_doppler_bin"] = true_doppler;
        return py::make_tuple(map.magnitude, map.range_m, map.velocity_mps,
                              peak);
      },
      py::arg("cfg"), py::arg("channels"), py::arg("precoders"),
      py::arg("seed"), py::arg("radar_only_reference") = false,
      "Transmit one quantized frame, synthesize the echo, and build the "
      "range-Doppler map.  Returns (magnitude, range_axis_m, velocity_axis, "
      "peak dict).  Seeding matches the experiment runner's per-record "
      "pipeline.");

  m.def(
      "run_experiment",
      [](const std::string& spec_path, const std::string& out, int seeds,
         const std::string& trace_dir) {
        const ExperimentSpec spec = load_spec(spec_path);
        RunOptions opts;
        if (seeds > 0) opts.seed_count = seeds;
        opts.out = out;
        opts.trace_dir = trace_dir;
        const RunSummary s = run_experiment(spec, opts);
        return py::make_tuple(s.n_records, s.n_failed);
      },
      py::arg("spec_path"), py::arg("out") = "records.jsonl",
      py::arg("seeds") = 0, py::arg("trace_dir") = "",
      "Run an experiment spec, appending JSON-lines records to `out`.  "
      "Returns (n_records, n_failed).");

  m.def(
      "emit_figure",
      [](const std::string& figure, const std::string& records_path,
         const std::string& out) {
        emit_figure(figure, load_records(records_path), out);
      },
      py::arg("figure"), py::arg("records_path"), py::arg("out"),
      "Aggregate a records file into one figure's CSV data.");

  m.def("figure_names", [] { return figure_names(); },
        "Figure names accepted by emit_figure.");
}
