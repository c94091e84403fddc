// harness.cpp
#include "qisac/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "qisac/quantization.hpp"
#include "qisac/radarpipe.hpp"

namespace qisac {
namespace {

using nlohmann::json;

// --- strict JSON field extraction ------------------------------------------

[[noreturn]] void field_error(const std::string& ctx, const std::string& key,
                              const std::string& what) {
  throw std::runtime_error("spec field '" + ctx + key + "': " + what);
}

double take_number(json& obj, const std::string& ctx, const char* key,
                   double dflt) {
  const auto it = obj.find(key);
  if (it == obj.end()) return dflt;
  if (!it->is_number()) field_error(ctx, key, "expected a number");
  const double v = it->get<double>();
  obj.erase(it);
  return v;
}

int take_int(json& obj, const std::string& ctx, const char* key, int dflt) {
  const auto it = obj.find(key);
  if (it == obj.end()) return dflt;
  if (!it->is_number_integer()) field_error(ctx, key, "expected an integer");
  const int v = it->get<int>();
  obj.erase(it);
  return v;
}

bool take_bool(json& obj, const std::string& ctx, const char* key, bool dflt) {
  const auto it = obj.find(key);
  if (it == obj.end()) return dflt;
  if (!it->is_boolean()) field_error(ctx, key, "expected a boolean");
  const bool v = it->get<bool>();
  obj.erase(it);
  return v;
}

std::string take_string(json& obj, const std::string& ctx, const char* key,
                        std::string dflt) {
  const auto it = obj.find(key);
  if (it == obj.end()) return dflt;
  if (!it->is_string()) field_error(ctx, key, "expected a string");
  std::string v = it->get<std::string>();
  obj.erase(it);
  return v;
}

json take_object(json& obj, const std::string& ctx, const char* key) {
  const auto it = obj.find(key);
  if (it == obj.end()) return json::object();
  if (!it->is_object()) field_error(ctx, key, "expected an object");
  json v = std::move(*it);
  obj.erase(it);
  return v;
}

void reject_unknown(const json& obj, const std::string& ctx) {
  if (!obj.empty()) field_error(ctx, obj.begin().key(), "unknown key");
}

// --- record (de)serialization helpers ---------------------------------------

// JSON has no literals for non-finite numbers; encode them as strings so the
// record round-trips instead of degrading to null.
json dump_num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double read_num(const json& j, const char* key, double dflt = 0.0) {
  const auto it = j.find(key);
  if (it == j.end() || it->is_null()) return dflt;
  if (it->is_number()) return it->get<double>();
  if (it->is_string()) {
    const std::string s = it->get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw std::runtime_error(std::string("record field '") + key +
                           "': expected a number");
}

std::vector<double> read_num_array(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) return {};
  if (!it->is_array())
    throw std::runtime_error(std::string("record field '") + key +
                             "': expected an array");
  std::vector<double> out;
  out.reserve(it->size());
  for (const auto& e : *it) out.push_back(e.get<double>());
  return out;
}

std::vector<double> to_std(const VecR& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

json columns_json(const MatC& m, bool imag) {
  json cols = json::array();
  for (int c = 0; c < m.cols(); ++c) {
    json col = json::array();
    for (int r = 0; r < m.rows(); ++r)
      col.push_back(imag ? m(r, c).imag() : m(r, c).real());
    cols.push_back(std::move(col));
  }
  return cols;
}

// --- figure aggregation helpers ---------------------------------------------

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double stderr_of(const std::vector<double>& v) {
  const auto n = v.size();
  if (n < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(n - 1)) /
         std::sqrt(static_cast<double>(n));
}

std::vector<std::string> ordered_modes(const std::vector<ResultRecord>& recs) {
  std::vector<std::string> modes;
  for (const auto& r : recs)
    if (std::find(modes.begin(), modes.end(), r.mode) == modes.end())
      modes.push_back(r.mode);
  return modes;
}

// Successful records grouped mode -> sweep value -> records.
using Groups =
    std::map<std::string, std::map<double, std::vector<const ResultRecord*>>>;

Groups group_optimal(const std::vector<ResultRecord>& recs) {
  Groups g;
  for (const auto& r : recs)
    if (r.status == "optimal") g[r.mode][r.sweep_value].push_back(&r);
  if (g.empty())
    throw std::runtime_error("no successful records to aggregate");
  return g;
}

void require_axis(const std::vector<ResultRecord>& recs,
                  const std::string& want, const std::string& figure) {
  for (const auto& r : recs)
    if (r.axis != want)
      throw std::runtime_error("record axis '" + r.axis +
                               "' does not match figure '" + figure +
                               "' (want '" + want + "')");
}

std::ofstream open_csv(const std::string& path, const std::string& figure) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open output file " + path);
  os << std::setprecision(12);
  os << "# figure=" << figure << " schema_version=1\n";
  return os;
}

Precoders precoders_from_matrix(const MatC& m) {
  Precoders p;
  const int k = static_cast<int>(m.cols()) - 2;
  if (k < 0) throw std::runtime_error("record precoder matrix too narrow");
  p.p_c = m.col(0);
  p.p_k = m.middleCols(1, k);
  p.p_r = m.col(k + 1);
  return p;
}

VecR dac_gains(const SystemConfig& cfg) {
  const QuantLossTable table =
      cfg.loss_table_path.empty() ? QuantLossTable::defaults()
                                  : QuantLossTable::from_file(cfg.loss_table_path);
  return QuantModel::uniform(cfg.n_tx, cfg.dac_bits, table).delta;
}

// Insert "_<tag>" before the extension of `path`.
std::string tagged_path(const std::string& path, const std::string& tag) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return path + "_" + tag;
  return path.substr(0, dot) + "_" + tag + path.substr(dot);
}

void emit_ee_axis(const std::string& figure, const std::string& axis,
                  const std::vector<ResultRecord>& recs,
                  const std::string& out_path) {
  require_axis(recs, axis, figure);
  const Groups groups = group_optimal(recs);
  auto os = open_csv(out_path, figure);
  os << "mode," << axis
     << ",n_seeds,min_ee_mean,min_ee_stderr,sum_rate_mean,sum_rate_stderr\n";
  for (const auto& mode : ordered_modes(recs)) {
    const auto git = groups.find(mode);
    if (git == groups.end()) continue;
    for (const auto& [value, group] : git->second) {
      std::vector<double> ee, sr;
      for (const auto* r : group) {
        ee.push_back(r->min_ee);
        sr.push_back(r->sum_rate);
      }
      os << mode << ',' << value << ',' << group.size() << ',' << mean_of(ee)
         << ',' << stderr_of(ee) << ',' << mean_of(sr) << ','
         << stderr_of(sr) << '\n';
    }
  }
}

void emit_power_alloc(const std::vector<ResultRecord>& recs,
                      const std::string& out_path) {
  const Groups groups = group_optimal(recs);
  std::size_t n_cols = 0;
  for (const auto& [mode, by_value] : groups)
    for (const auto& [value, group] : by_value)
      for (const auto* r : group) {
        if (n_cols == 0) n_cols = r->power_alloc.size();
        if (r->power_alloc.size() != n_cols)
          throw std::runtime_error(
              "records disagree on the number of precoder columns");
      }
  if (n_cols < 2)
    throw std::runtime_error("records carry no power allocation columns");
  auto os = open_csv(out_path, "power_alloc");
  os << "mode,sweep_value,n_seeds,p_common";
  for (std::size_t k = 1; k + 1 < n_cols; ++k) os << ",p_user_" << k;
  os << ",p_radar,radar_fraction_mean\n";
  for (const auto& mode : ordered_modes(recs)) {
    const auto git = groups.find(mode);
    if (git == groups.end()) continue;
    for (const auto& [value, group] : git->second) {
      std::vector<double> col(n_cols, 0.0);
      double frac = 0;
      for (const auto* r : group) {
        for (std::size_t c = 0; c < n_cols; ++c) col[c] += r->power_alloc[c];
        frac += r->radar_power_fraction;
      }
      const double n = static_cast<double>(group.size());
      os << mode << ',' << value << ',' << group.size();
      for (std::size_t c = 0; c < n_cols; ++c) os << ',' << col[c] / n;
      os << ',' << frac / n << '\n';
    }
  }
}

void emit_beampattern(const std::vector<ResultRecord>& recs,
                      const std::string& out_path) {
  const Groups groups = group_optimal(recs);
  // Compare all modes at the lowest sweep value present.
  double value = std::numeric_limits<double>::infinity();
  for (const auto& [mode, by_value] : groups)
    value = std::min(value, by_value.begin()->first);
  const int n_theta = 361;  // -90..90 deg, half-degree grid
  VecR grid_deg(n_theta), grid_rad(n_theta);
  for (int i = 0; i < n_theta; ++i) {
    grid_deg(i) = -90.0 + 0.5 * i;
    grid_rad(i) = grid_deg(i) * kPi / 180.0;
  }
  const std::vector<std::string> modes = ordered_modes(recs);
  std::vector<std::pair<std::string, VecR>> patterns;
  for (const auto& mode : modes) {
    const auto git = groups.find(mode);
    if (git == groups.end()) continue;
    const auto vit = git->second.find(value);
    if (vit == git->second.end()) continue;
    VecR acc = VecR::Zero(n_theta);
    for (const auto* r : vit->second) {
      const double spacing = r->system.value("element_spacing", 0.5);
      for (int c = 0; c < r->precoders.cols(); ++c)
        acc += beampattern(r->precoders.col(c), r->delta, grid_rad, spacing);
    }
    patterns.emplace_back(mode, acc / static_cast<double>(vit->second.size()));
  }
  if (patterns.empty())
    throw std::runtime_error("no successful records at the lowest sweep value");
  auto os = open_csv(out_path, "beampattern");
  os << "theta_deg";
  for (const auto& [mode, pat] : patterns) os << ',' << mode;
  os << '\n';
  for (int i = 0; i < n_theta; ++i) {
    os << grid_deg(i);
    for (const auto& [mode, pat] : patterns) os << ',' << pat(i);
    os << '\n';
  }
}

void emit_range_doppler(const std::vector<ResultRecord>& recs,
                        const std::string& out_path) {
  const Groups groups = group_optimal(recs);
  bool wrote = false;
  for (const auto& mode : ordered_modes(recs)) {
    const auto git = groups.find(mode);
    if (git == groups.end()) continue;
    // Lowest sweep value, then lowest seed: one representative map per mode.
    const auto& group = git->second.begin()->second;
    const ResultRecord* rec = group.front();
    for (const auto* r : group)
      if (r->seed < rec->seed) rec = r;
    const SystemConfig cfg = system_from_json(rec->system, "record.system.");
    const ChannelSet cs = build_channel_set(cfg, rec->seed);
    const Precoders p = precoders_from_matrix(rec->precoders);
    Rng rng(rec->seed * 2654435761ULL + 1ULL);
    Frame frame = gen_frame(p, rec->delta, cfg.quant_noise_diag, rng,
                            cfg.radar.n_symbols);
    const RadarScene scene = make_scene(cfg, cs);
    const MatC echo = synth_echo(frame, scene, rng);
    RdGridConfig grid;
    grid.n_pulses = cfg.radar.n_pulses;
    const RangeDopplerMap map =
        range_doppler_map(echo, frame, p, rec->delta, scene, grid);
    write_map_csv(map, tagged_path(out_path, mode));
    write_peak_json(detect_peak(map),
                    tagged_path(out_path, mode + "_peak") + ".json");
    wrote = true;
  }
  if (!wrote) throw std::runtime_error("no successful records to aggregate");
}

void emit_convergence(const std::vector<ResultRecord>& recs,
                      const std::string& out_path) {
  const Groups groups = group_optimal(recs);
  auto os = open_csv(out_path, "convergence");
  os << "mode,iteration,n_seeds,lambda_mean,objective_mean\n";
  for (const auto& mode : ordered_modes(recs)) {
    const auto git = groups.find(mode);
    if (git == groups.end()) continue;
    std::vector<const ResultRecord*> all;
    for (const auto& [value, group] : git->second)
      all.insert(all.end(), group.begin(), group.end());
    std::size_t max_len = 0;
    for (const auto* r : all)
      max_len = std::max({max_len, r->lambda_trace.size(),
                          r->objective_trace.size()});
    for (std::size_t it = 0; it < max_len; ++it) {
      std::vector<double> lam, obj;
      for (const auto* r : all) {
        if (it < r->lambda_trace.size()) lam.push_back(r->lambda_trace[it]);
        if (it < r->objective_trace.size())
          obj.push_back(r->objective_trace[it]);
      }
      os << mode << ',' << it << ',' << std::max(lam.size(), obj.size())
         << ',' << mean_of(lam) << ',' << mean_of(obj) << '\n';
    }
  }
}

}  // namespace

// --- mode strings ------------------------------------------------------------

ModeSelector parse_mode(const std::string& name) {
  std::string family = name, suffix = "sic";
  if (const auto pos = name.find('-'); pos != std::string::npos) {
    family = name.substr(0, pos);
    suffix = name.substr(pos + 1);
  }
  ModeSelector sel;
  if (family == "maxmin") {
    sel.family = ModeSelector::Family::MaxMin;
  } else if (family == "totalee") {
    sel.family = ModeSelector::Family::TotalEE;
  } else if (family == "sumrate") {
    sel.family = ModeSelector::Family::SumRate;
  } else if (family == "sdma") {
    sel.family = ModeSelector::Family::Sdma;
  } else if (family == "oma") {
    sel.family = ModeSelector::Family::Oma;
  } else {
    throw std::runtime_error("unknown mode family '" + family + "' in mode '" +
                             name + "'");
  }
  if (suffix == "sic") {
    sel.sic = RadarSicMode::SicRadar;
  } else if (suffix == "nosic") {
    sel.sic = RadarSicMode::NoSic;
  } else if (suffix == "noradar") {
    sel.sic = RadarSicMode::NoRadar;
  } else {
    throw std::runtime_error("unknown mode suffix '" + suffix + "' in mode '" +
                             name + "'");
  }
  return sel;
}

// --- system config (de)serialization ------------------------------------------

json system_to_json(const SystemConfig& cfg) {
  return json{
      {"n_tx", cfg.n_tx},
      {"n_rx", cfg.n_rx},
      {"n_users", cfg.n_users},
      {"f_c", cfg.f_c},
      {"bandwidth", cfg.bandwidth},
      {"light_speed", cfg.light_speed},
      {"element_spacing", cfg.element_spacing},
      {"d_sat", cfg.d_sat},
      {"g_max_dbi", cfg.g_max_dbi},
      {"g_user_dbi", cfg.g_user_dbi},
      {"t_sys", cfg.t_sys},
      {"boltzmann", cfg.boltzmann},
      {"theta_3db_deg", cfg.theta_3db_deg},
      {"rain_mu", cfg.rain_mu},
      {"rain_sigma2", cfg.rain_sigma2},
      {"rain_attenuation_convention", cfg.rain_attenuation_convention},
      {"noise_power", cfg.noise_power},
      {"p_t", cfg.p_t},
      {"dac_bits", cfg.dac_bits},
      {"quant_noise_diag", cfg.quant_noise_diag},
      {"loss_table_path", cfg.loss_table_path},
      {"qos_rate", cfg.qos_rate},
      {"crb_bound", cfg.crb_bound},
      {"power",
       {{"p_lp", cfg.power.p_lp},
        {"p_m", cfg.power.p_m},
        {"p_lo", cfg.power.p_lo},
        {"p_h", cfg.power.p_h},
        {"kappa", cfg.power.kappa},
        {"f_s", cfg.power.f_s}}},
      {"radar",
       {{"theta_deg", cfg.radar.theta_deg},
        {"range_m", cfg.radar.range_m},
        {"velocity_mps", cfg.radar.velocity_mps},
        {"rcs_m2", cfg.radar.rcs_m2},
        {"snr_db", cfg.radar.snr_db},
        {"n_symbols", cfg.radar.n_symbols},
        {"n_pulses", cfg.radar.n_pulses}}},
      {"geometry",
       {{"beam_spacing_3db", cfg.geometry.beam_spacing_3db},
        {"min_sep_3db", cfg.geometry.min_sep_3db}}}};
}

SystemConfig system_from_json(const json& jin, const std::string& ctx) {
  if (!jin.is_object())
    throw std::runtime_error("spec field '" + ctx + "': expected an object");
  json j = jin;
  SystemConfig cfg;
  cfg.n_tx = take_int(j, ctx, "n_tx", cfg.n_tx);
  cfg.n_rx = take_int(j, ctx, "n_rx", cfg.n_rx);
  cfg.n_users = take_int(j, ctx, "n_users", cfg.n_users);
  cfg.f_c = take_number(j, ctx, "f_c", cfg.f_c);
  cfg.bandwidth = take_number(j, ctx, "bandwidth", cfg.bandwidth);
  cfg.light_speed = take_number(j, ctx, "light_speed", cfg.light_speed);
  cfg.element_spacing = take_number(j, ctx, "element_spacing",
                                    cfg.element_spacing);
  cfg.d_sat = take_number(j, ctx, "d_sat", cfg.d_sat);
  cfg.g_max_dbi = take_number(j, ctx, "g_max_dbi", cfg.g_max_dbi);
  cfg.g_user_dbi = take_number(j, ctx, "g_user_dbi", cfg.g_user_dbi);
  cfg.t_sys = take_number(j, ctx, "t_sys", cfg.t_sys);
  cfg.boltzmann = take_number(j, ctx, "boltzmann", cfg.boltzmann);
  cfg.theta_3db_deg = take_number(j, ctx, "theta_3db_deg", cfg.theta_3db_deg);
  cfg.rain_mu = take_number(j, ctx, "rain_mu", cfg.rain_mu);
  cfg.rain_sigma2 = take_number(j, ctx, "rain_sigma2", cfg.rain_sigma2);
  cfg.rain_attenuation_convention = take_bool(
      j, ctx, "rain_attenuation_convention", cfg.rain_attenuation_convention);
  cfg.noise_power = take_number(j, ctx, "noise_power", cfg.noise_power);
  cfg.p_t = take_number(j, ctx, "p_t", cfg.p_t);
  cfg.dac_bits = take_int(j, ctx, "dac_bits", cfg.dac_bits);
  cfg.quant_noise_diag = take_bool(j, ctx, "quant_noise_diag",
                                   cfg.quant_noise_diag);
  cfg.loss_table_path = take_string(j, ctx, "loss_table_path",
                                    cfg.loss_table_path);
  cfg.qos_rate = take_number(j, ctx, "qos_rate", cfg.qos_rate);
  cfg.crb_bound = take_number(j, ctx, "crb_bound", cfg.crb_bound);
  json pw = take_object(j, ctx, "power");
  const std::string pctx = ctx + "power.";
  cfg.power.p_lp = take_number(pw, pctx, "p_lp", cfg.power.p_lp);
  cfg.power.p_m = take_number(pw, pctx, "p_m", cfg.power.p_m);
  cfg.power.p_lo = take_number(pw, pctx, "p_lo", cfg.power.p_lo);
  cfg.power.p_h = take_number(pw, pctx, "p_h", cfg.power.p_h);
  cfg.power.kappa = take_number(pw, pctx, "kappa", cfg.power.kappa);
  cfg.power.f_s = take_number(pw, pctx, "f_s", cfg.power.f_s);
  reject_unknown(pw, pctx);
  json rd = take_object(j, ctx, "radar");
  const std::string rctx = ctx + "radar.";
  cfg.radar.theta_deg = take_number(rd, rctx, "theta_deg",
                                    cfg.radar.theta_deg);
  cfg.radar.range_m = take_number(rd, rctx, "range_m", cfg.radar.range_m);
  cfg.radar.velocity_mps = take_number(rd, rctx, "velocity_mps",
                                       cfg.radar.velocity_mps);
  cfg.radar.rcs_m2 = take_number(rd, rctx, "rcs_m2", cfg.radar.rcs_m2);
  cfg.radar.snr_db = take_number(rd, rctx, "snr_db", cfg.radar.snr_db);
  cfg.radar.n_symbols = take_int(rd, rctx, "n_symbols", cfg.radar.n_symbols);
  cfg.radar.n_pulses = take_int(rd, rctx, "n_pulses", cfg.radar.n_pulses);
  reject_unknown(rd, rctx);
  json ge = take_object(j, ctx, "geometry");
  const std::string gctx = ctx + "geometry.";
  cfg.geometry.beam_spacing_3db = take_number(ge, gctx, "beam_spacing_3db",
                                              cfg.geometry.beam_spacing_3db);
  cfg.geometry.min_sep_3db = take_number(ge, gctx, "min_sep_3db",
                                        cfg.geometry.min_sep_3db);
  reject_unknown(ge, gctx);
  reject_unknown(j, ctx);
  return cfg;
}

// --- experiment spec ----------------------------------------------------------

ExperimentSpec parse_spec(const json& jin) {
  if (!jin.is_object())
    throw std::runtime_error("spec root: expected an object");
  json j = jin;
  ExperimentSpec spec;
  spec.schema_version = take_int(j, "", "schema_version", 1);
  if (spec.schema_version != 1)
    field_error("", "schema_version",
                "unsupported version " + std::to_string(spec.schema_version));
  spec.name = take_string(j, "", "name", spec.name);
  if (const auto it = j.find("system"); it != j.end()) {
    spec.system = system_from_json(*it, "system.");
    j.erase(it);
  }
  json sw = take_object(j, "", "sweep");
  spec.sweep.axis = take_string(sw, "sweep.", "axis", "none");
  if (spec.sweep.axis != "snr_db" && spec.sweep.axis != "bits" &&
      spec.sweep.axis != "rho" && spec.sweep.axis != "none")
    field_error("sweep.", "axis",
                "expected one of snr_db, bits, rho, none; got '" +
                    spec.sweep.axis + "'");
  if (const auto it = sw.find("values"); it != sw.end()) {
    if (!it->is_array()) field_error("sweep.", "values", "expected an array");
    for (const auto& e : *it) {
      if (!e.is_number())
        field_error("sweep.", "values", "expected numeric entries");
      spec.sweep.values.push_back(e.get<double>());
    }
    sw.erase(it);
  }
  reject_unknown(sw, "sweep.");
  if (spec.sweep.axis == "none" && !spec.sweep.values.empty())
    field_error("sweep.", "values", "axis 'none' takes no values");
  if (spec.sweep.axis != "none" && spec.sweep.values.empty())
    field_error("sweep.", "values",
                "a swept axis requires at least one value");
  if (const auto it = j.find("modes"); it != j.end()) {
    if (!it->is_array()) field_error("", "modes", "expected an array");
    for (const auto& e : *it) {
      if (!e.is_string()) field_error("", "modes", "expected mode strings");
      spec.modes.push_back(e.get<std::string>());
      parse_mode(spec.modes.back());  // fail fast on typos
    }
    j.erase(it);
  }
  if (spec.modes.empty())
    field_error("", "modes", "at least one mode is required");
  if (const auto it = j.find("seeds"); it != j.end()) {
    if (it->is_number_integer()) {
      const int n = it->get<int>();
      if (n < 1) field_error("", "seeds", "seed count must be >= 1");
      for (int s = 1; s <= n; ++s)
        spec.seeds.push_back(static_cast<std::uint64_t>(s));
    } else if (it->is_array()) {
      for (const auto& e : *it) {
        if (!e.is_number_integer() || e.get<long long>() < 0)
          field_error("", "seeds", "expected nonnegative integer seeds");
        spec.seeds.push_back(e.get<std::uint64_t>());
      }
    } else {
      field_error("", "seeds", "expected an integer count or an array");
    }
    j.erase(it);
  } else {
    for (int s = 1; s <= 5; ++s)
      spec.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (spec.seeds.empty()) field_error("", "seeds", "at least one seed");
  if (std::set<std::uint64_t>(spec.seeds.begin(), spec.seeds.end()).size() !=
      spec.seeds.size())
    field_error("", "seeds", "seeds must be distinct");
  spec.run_radar_pipeline = take_bool(j, "", "run_radar_pipeline",
                                      spec.run_radar_pipeline);
  spec.qos_auto_scale = take_bool(j, "", "qos_auto_scale",
                                  spec.qos_auto_scale);
  json op = take_object(j, "", "optimizer");
  const std::string octx = "optimizer.";
  spec.optimizer.xi = take_number(op, octx, "xi", spec.optimizer.xi);
  spec.optimizer.eps = take_number(op, octx, "eps", spec.optimizer.eps);
  spec.optimizer.t_max = take_int(op, octx, "t_max", spec.optimizer.t_max);
  spec.optimizer.power_counts_radar_when_sic =
      take_bool(op, octx, "power_counts_radar_when_sic",
                spec.optimizer.power_counts_radar_when_sic);
  spec.optimizer.debug_inner_soundness = take_bool(
      op, octx, "debug_inner_soundness", spec.optimizer.debug_inner_soundness);
  spec.optimizer.soundness_samples = take_int(
      op, octx, "soundness_samples", spec.optimizer.soundness_samples);
  spec.optimizer.conic.feas_tol = take_number(op, octx, "feas_tol",
                                              spec.optimizer.conic.feas_tol);
  spec.optimizer.conic.gap_tol = take_number(op, octx, "gap_tol",
                                             spec.optimizer.conic.gap_tol);
  spec.optimizer.conic.max_iters = take_int(op, octx, "ipm_max_iters",
                                            spec.optimizer.conic.max_iters);
  reject_unknown(op, octx);
  reject_unknown(j, "");
  return spec;
}

ExperimentSpec load_spec(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open spec file " + path);
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("spec '" + path + "': " + e.what());
  }
  try {
    return parse_spec(j);
  } catch (const std::exception& e) {
    throw std::runtime_error("spec '" + path + "': " + e.what());
  }
}

SystemConfig apply_sweep(const SystemConfig& cfg, const std::string& axis,
                         double value) {
  SystemConfig out = cfg;
  if (axis == "snr_db") {
    out.p_t = std::pow(10.0, value / 10.0);
  } else if (axis == "bits") {
    out.dac_bits = static_cast<int>(std::lround(value));
  } else if (axis == "rho") {
    out.crb_bound = value;
  } else if (axis != "none") {
    throw std::runtime_error("unknown sweep axis '" + axis + "'");
  }
  return out;
}

// --- result records -----------------------------------------------------------

json record_to_json(const ResultRecord& r) {
  json j;
  j["schema_version"] = r.schema_version;
  j["experiment"] = r.experiment;
  j["mode"] = r.mode;
  j["axis"] = r.axis;
  j["sweep_value"] = r.sweep_value;
  j["seed"] = r.seed;
  j["status"] = r.status;
  j["detail"] = r.detail;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["lambda"] = dump_num(r.lambda);
  j["min_ee"] = dump_num(r.min_ee);
  j["sum_rate"] = dump_num(r.sum_rate);
  j["crb"] = dump_num(r.crb);
  j["qos_margin"] = dump_num(r.qos_margin);
  j["qos_rate_used"] = dump_num(r.qos_rate_used);
  j["power_used"] = dump_num(r.power_used);
  j["radar_power_fraction"] = dump_num(r.radar_power_fraction);
  j["max_rank_residual"] = dump_num(r.max_rank_residual);
  j["wall_time_sec"] = dump_num(r.wall_time_sec);
  j["ee"] = r.ee;
  j["rate"] = r.rate;
  j["power_alloc"] = r.power_alloc;
  j["lambda_trace"] = r.lambda_trace;
  j["objective_trace"] = r.objective_trace;
  j["slice_traces"] = r.slice_traces;
  j["precoders_re"] = columns_json(r.precoders, false);
  j["precoders_im"] = columns_json(r.precoders, true);
  j["delta"] = to_std(r.delta);
  j["system"] = r.system;
  j["rd_ran"] = r.rd_ran;
  j["rd_range_bin"] = r.rd_range_bin;
  j["rd_doppler_bin"] = r.rd_doppler_bin;
  j["rd_true_range_bin"] = r.rd_true_range_bin;
  j["rd_true_doppler_bin"] = r.rd_true_doppler_bin;
  j["rd_peak_value"] = dump_num(r.rd_peak_value);
  j["rd_hit"] = r.rd_hit;
  j["warnings"] = r.warnings;
  return j;
}

ResultRecord record_from_json(const json& j) {
  if (!j.is_object())
    throw std::runtime_error("record: expected a JSON object");
  ResultRecord r;
  r.schema_version = j.value("schema_version", 1);
  if (r.schema_version != 1)
    throw std::runtime_error("record schema_version " +
                             std::to_string(r.schema_version) +
                             " is not supported");
  r.experiment = j.value("experiment", std::string());
  r.mode = j.value("mode", std::string());
  r.axis = j.value("axis", std::string("none"));
  r.sweep_value = read_num(j, "sweep_value");
  r.seed = j.value("seed", std::uint64_t{0});
  r.status = j.value("status", std::string());
  r.detail = j.value("detail", std::string());
  r.converged = j.value("converged", false);
  r.iterations = j.value("iterations", 0);
  r.lambda = read_num(j, "lambda");
  r.min_ee = read_num(j, "min_ee");
  r.sum_rate = read_num(j, "sum_rate");
  r.crb = read_num(j, "crb");
  r.qos_margin = read_num(j, "qos_margin");
  r.qos_rate_used = read_num(j, "qos_rate_used");
  r.power_used = read_num(j, "power_used");
  r.radar_power_fraction = read_num(j, "radar_power_fraction");
  r.max_rank_residual = read_num(j, "max_rank_residual");
  r.wall_time_sec = read_num(j, "wall_time_sec");
  r.ee = read_num_array(j, "ee");
  r.rate = read_num_array(j, "rate");
  r.power_alloc = read_num_array(j, "power_alloc");
  r.lambda_trace = read_num_array(j, "lambda_trace");
  r.objective_trace = read_num_array(j, "objective_trace");
  if (const auto it = j.find("slice_traces"); it != j.end()) {
    if (!it->is_array())
      throw std::runtime_error("record field 'slice_traces': expected arrays");
    for (const auto& row : *it)
      r.slice_traces.push_back(row.get<std::vector<double>>());
  }
  const auto re = j.find("precoders_re");
  const auto im = j.find("precoders_im");
  if (re != j.end() && im != j.end() && re->is_array() && im->is_array() &&
      re->size() == im->size() && !re->empty()) {
    const auto cols = static_cast<int>(re->size());
    const auto rows = static_cast<int>((*re)[0].size());
    r.precoders.resize(rows, cols);
    for (int c = 0; c < cols; ++c)
      for (int row = 0; row < rows; ++row)
        r.precoders(row, c) = cxd((*re)[c][row].get<double>(),
                                  (*im)[c][row].get<double>());
  }
  const std::vector<double> delta = read_num_array(j, "delta");
  r.delta = Eigen::Map<const VecR>(delta.data(),
                                   static_cast<Eigen::Index>(delta.size()));
  r.system = j.value("system", json::object());
  r.rd_ran = j.value("rd_ran", false);
  r.rd_range_bin = j.value("rd_range_bin", 0);
  r.rd_doppler_bin = j.value("rd_doppler_bin", 0);
  r.rd_true_range_bin = j.value("rd_true_range_bin", 0);
  r.rd_true_doppler_bin = j.value("rd_true_doppler_bin", 0);
  r.rd_peak_value = read_num(j, "rd_peak_value");
  r.rd_hit = j.value("rd_hit", false);
  if (const auto it = j.find("warnings"); it != j.end())
    for (const auto& w : *it) r.warnings.push_back(w.get<std::string>());
  return r;
}

std::vector<ResultRecord> load_records(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open records file " + path);
  std::vector<ResultRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(record_from_json(json::parse(line)));
    } catch (const std::exception& e) {
      throw std::runtime_error("records file '" + path + "' line " +
                               std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// --- running -------------------------------------------------------------------

ResultRecord run_cell(const ExperimentSpec& spec, const std::string& mode,
                      double sweep_value, std::uint64_t seed,
                      const std::string& trace_dir) {
  ResultRecord rec;
  rec.experiment = spec.name;
  rec.mode = mode;
  rec.axis = spec.sweep.axis;
  rec.sweep_value = sweep_value;
  rec.seed = seed;
  try {
    const ModeSelector sel = parse_mode(mode);
    const SystemConfig cfg = apply_sweep(spec.system, spec.sweep.axis,
                                         sweep_value);
    rec.system = system_to_json(cfg);
    rec.qos_rate_used = cfg.qos_rate;
    const ChannelSet cs = build_channel_set(cfg, seed);
    OptimizerConfig ocfg = spec.optimizer;
    if (!trace_dir.empty()) {
      std::ostringstream name;
      name << trace_dir << '/' << spec.name << '-' << mode << "-v"
           << sweep_value << "-s" << seed << ".jsonl";
      ocfg.trace_path = name.str();
    }
    const auto solve = [&](const SystemConfig& c) -> SolveReport {
      switch (sel.family) {
        case ModeSelector::Family::MaxMin:
          return solve_maxmin_ee(c, cs, sel.sic, ocfg);
        case ModeSelector::Family::TotalEE:
          return solve_total_ee(c, cs, sel.sic, ocfg);
        case ModeSelector::Family::SumRate:
          return solve_sum_rate(c, cs, sel.sic, ocfg);
        case ModeSelector::Family::Sdma:
          return solve_baseline(c, cs, BaselineScheme::Sdma, sel.sic, ocfg);
        case ModeSelector::Family::Oma:
          return solve_baseline(c, cs, BaselineScheme::Oma, sel.sic, ocfg);
      }
      throw std::logic_error("unreachable mode family");
    };
    SolveReport rep = solve(cfg);
    if (spec.qos_auto_scale && rep.status == SolveStatus::Infeasible) {
      SystemConfig scaled = cfg;
      scaled.qos_rate = 0.0;
      SolveReport floor = solve(scaled);
      if (floor.status == SolveStatus::Optimal) {
        double lo = 0.0, hi = cfg.qos_rate;
        for (int i = 0; i < 8; ++i) {
          scaled.qos_rate = 0.5 * (lo + hi);
          SolveReport trial = solve(scaled);
          if (trial.status == SolveStatus::Optimal) {
            lo = scaled.qos_rate;
            floor = std::move(trial);
          } else {
            hi = scaled.qos_rate;
          }
        }
        rep = std::move(floor);
        rec.qos_rate_used = lo;
        std::ostringstream msg;
        msg << "qos auto-scale lowered the rate floor from " << cfg.qos_rate
            << " to " << lo;
        rec.warnings.push_back(msg.str());
      }
    }
    rec.status = status_name(rep.status);
    rec.detail = rep.detail;
    rec.converged = rep.converged;
    rec.iterations = rep.iterations;
    rec.lambda = rep.lambda_final;
    rec.min_ee = rep.min_ee;
    rec.sum_rate = rep.sum_rate;
    rec.crb = rep.crb;
    rec.qos_margin = rep.qos_margin;
    rec.power_used = rep.power_used;
    rec.radar_power_fraction = rep.radar_power_fraction;
    rec.max_rank_residual = rep.max_rank_residual;
    rec.wall_time_sec = rep.wall_time_sec;
    rec.ee = to_std(rep.breakdown.ee);
    rec.rate = to_std(rep.breakdown.rate_total);
    rec.lambda_trace = rep.lambda_trace;
    rec.objective_trace = rep.objective_trace;
    rec.slice_traces = rep.slice_traces;
    for (const auto& w : rep.warnings) rec.warnings.push_back(w);
    const VecR delta = dac_gains(cfg);
    rec.delta = delta;
    if (rep.precoders.p_k.size() > 0) {
      rec.precoders = rep.precoders.matrix();
      rec.power_alloc.resize(static_cast<std::size_t>(rec.precoders.cols()));
      for (int c = 0; c < rec.precoders.cols(); ++c)
        rec.power_alloc[static_cast<std::size_t>(c)] =
            (delta.asDiagonal() * rec.precoders.col(c)).squaredNorm();
    }
    if (spec.run_radar_pipeline && rep.status == SolveStatus::Optimal) {
      try {
        Rng rng(seed * 2654435761ULL + 1ULL);
        const Frame frame = gen_frame(rep.precoders, delta,
                                      cfg.quant_noise_diag, rng,
                                      cfg.radar.n_symbols);
        const RadarScene scene = make_scene(cfg, cs);
        const MatC echo = synth_echo(frame, scene, rng);
        RdGridConfig grid;
        grid.n_pulses = cfg.radar.n_pulses;
        const RangeDopplerMap map =
            range_doppler_map(echo, frame, rep.precoders, delta, scene, grid);
        const PeakDetection pk = detect_peak(map);
        int true_range = 0, true_doppler = 0;
        true_bins(scene, frame.length(), grid.n_pulses, &true_range,
                  &true_doppler);
        rec.rd_ran = true;
        rec.rd_range_bin = pk.range_bin;
        rec.rd_doppler_bin = pk.doppler_bin;
        rec.rd_true_range_bin = true_range;
        rec.rd_true_doppler_bin = true_doppler;
        rec.rd_peak_value = pk.value;
        int dq = std::abs(pk.doppler_bin - true_doppler);
        dq = std::min(dq, grid.n_pulses - dq);
        rec.rd_hit = std::abs(pk.range_bin - true_range) <= 1 && dq <= 1;
      } catch (const std::exception& e) {
        rec.warnings.push_back(std::string("pulse-Doppler pipeline: ") +
                               e.what());
      }
    }
  } catch (const std::exception& e) {
    rec.status = "error";
    rec.detail = e.what();
  }
  return rec;
}

RunSummary run_experiment(const ExperimentSpec& spec, const RunOptions& opts) {
  if (spec.modes.empty())
    throw std::runtime_error("spec field 'modes': at least one mode required");
  for (const auto& m : spec.modes) parse_mode(m);  // surface typos up front
  std::vector<std::uint64_t> seeds = spec.seeds;
  if (opts.seed_count) {
    if (*opts.seed_count < 1)
      throw std::runtime_error("seed count override must be >= 1");
    seeds.clear();
    for (int s = 1; s <= *opts.seed_count; ++s)
      seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (seeds.empty())
    throw std::runtime_error("spec field 'seeds': at least one seed required");
  const std::vector<double> values = spec.sweep.axis == "none"
                                         ? std::vector<double>{0.0}
                                         : spec.sweep.values;
  if (values.empty())
    throw std::runtime_error("spec field 'sweep.values': empty sweep");

  struct Task {
    const std::string* mode;
    double value;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  tasks.reserve(spec.modes.size() * values.size() * seeds.size());
  for (const auto& m : spec.modes)
    for (const double v : values)
      for (const auto s : seeds) tasks.push_back({&m, v, s});

  int n_workers = static_cast<int>(std::thread::hardware_concurrency());
  if (const char* env = std::getenv("QISAC_WORKERS")) {
    n_workers = std::atoi(env);
    if (n_workers < 1)
      throw std::runtime_error("QISAC_WORKERS must be a positive integer");
  }
  n_workers = std::clamp(n_workers, 1, static_cast<int>(tasks.size()));

  std::vector<ResultRecord> results(tasks.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      results[i] = run_cell(spec, *tasks[i].mode, tasks[i].value,
                            tasks[i].seed, opts.trace_dir);
    }
  };
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::ofstream os(opts.out, std::ios::app);
  if (!os) throw std::runtime_error("cannot open records file " + opts.out);
  RunSummary summary;
  summary.out_path = opts.out;
  for (const auto& r : results) {
    os << record_to_json(r).dump() << '\n';
    ++summary.n_records;
    if (r.status != "optimal") ++summary.n_failed;
  }
  return summary;
}

// --- figures --------------------------------------------------------------------

const std::vector<std::string>& figure_names() {
  static const std::vector<std::string> names = {
      "ee_vs_snr",   "ee_vs_bits",    "ee_vs_rho",  "power_alloc",
      "beampattern", "range_doppler", "convergence"};
  return names;
}

void emit_figure(const std::string& figure,
                 const std::vector<ResultRecord>& records,
                 const std::string& out_path) {
  if (records.empty())
    throw std::runtime_error("no records for figure '" + figure + "'");
  if (figure == "ee_vs_snr") {
    emit_ee_axis(figure, "snr_db", records, out_path);
  } else if (figure == "ee_vs_bits") {
    emit_ee_axis(figure, "bits", records, out_path);
  } else if (figure == "ee_vs_rho") {
    emit_ee_axis(figure, "rho", records, out_path);
  } else if (figure == "power_alloc") {
    emit_power_alloc(records, out_path);
  } else if (figure == "beampattern") {
    emit_beampattern(records, out_path);
  } else if (figure == "range_doppler") {
    emit_range_doppler(records, out_path);
  } else if (figure == "convergence") {
    emit_convergence(records, out_path);
  } else {
    std::string names;
    for (const auto& n : figure_names()) names += (names.empty() ? "" : ", ") + n;
    throw std::runtime_error("unknown figure '" + figure + "' (expected " +
                             names + ")");
  }
}

}  // namespace qisac
