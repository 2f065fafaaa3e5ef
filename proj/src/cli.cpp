#include "stirap_lab/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "stirap_lab/csv.hpp"
#include "stirap_lab/dark_resonance.hpp"
#include "stirap_lab/fitters.hpp"
#include "stirap_lab/rotor_stark.hpp"
#include "stirap_lab/stirap.hpp"
#include "stirap_lab/units.hpp"

namespace stirap_lab {
namespace {

// ---------------------------------------------------------------------------
// key registry and validation

enum class Kind { number, integer, boolean, choice, path };

struct KeySpec {
  std::string key;
  Kind kind = Kind::number;
  bool required = false;
  std::string default_value;  // empty string = absent when not required
  double min = -1e308;
  bool min_exclusive = false;
  std::string choices;  // comma separated, for Kind::choice
};

class Params {
 public:
  Params(const std::map<std::string, std::string>& user,
         const std::vector<KeySpec>& specs, const std::string& command) {
    for (const auto& [key, value] : user) {
      if (std::find_if(specs.begin(), specs.end(), [&](const KeySpec& s) {
            return s.key == key;
          }) == specs.end())
        throw ConfigError("unknown key '" + key + "' for command '" + command + "'");
      values_[key] = value;
    }
    for (const auto& spec : specs) {
      auto it = values_.find(spec.key);
      if (it == values_.end()) {
        if (spec.required)
          throw ConfigError("missing required key '" + spec.key + "' for command '" +
                            command + "'");
        if (!spec.default_value.empty()) values_[spec.key] = spec.default_value;
        continue;
      }
      check(spec, it->second);
    }
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  double number(const std::string& key) const { return parse_number(key, at(key)); }
  int integer(const std::string& key) const {
    return static_cast<int>(std::llround(parse_number(key, at(key))));
  }
  bool flag(const std::string& key) const {
    const std::string& v = at(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("invalid value for key '" + key + "': expected true/false");
  }
  const std::string& text(const std::string& key) const { return at(key); }

  const std::map<std::string, std::string>& resolved() const { return values_; }

 private:
  const std::string& at(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end())
      throw ConfigError("key '" + key + "' was not provided");
    return it->second;
  }

  static double parse_number(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double value = 0.0;
    try {
      value = std::stod(v, &pos);
    } catch (const std::exception&) {
      throw ConfigError("invalid value for key '" + key + "': not a number ('" + v +
                        "')");
    }
    if (pos != v.size())
      throw ConfigError("invalid value for key '" + key + "': trailing characters");
    return value;
  }

  void check(const KeySpec& spec, const std::string& v) const {
    switch (spec.kind) {
      case Kind::number:
      case Kind::integer: {
        const double value = parse_number(spec.key, v);
        const bool ok = spec.min_exclusive ? value > spec.min : value >= spec.min;
        if (!ok)
          throw ConfigError("invalid value for key '" + spec.key + "': must be " +
                            (spec.min_exclusive ? "> " : ">= ") +
                            format_number(spec.min) + " (got " + v + ")");
        if (spec.kind == Kind::integer &&
            value != std::floor(value))
          throw ConfigError("invalid value for key '" + spec.key +
                            "': must be an integer");
        break;
      }
      case Kind::boolean:
        if (v != "true" && v != "false" && v != "0" && v != "1")
          throw ConfigError("invalid value for key '" + spec.key +
                            "': expected true/false");
        break;
      case Kind::choice: {
        std::stringstream ss(spec.choices);
        std::string option;
        while (std::getline(ss, option, ','))
          if (v == option) return;
        throw ConfigError("invalid value for key '" + spec.key + "': '" + v +
                          "' is not one of {" + spec.choices + "}");
      }
      case Kind::path:
        if (v.empty())
          throw ConfigError("invalid value for key '" + spec.key + "': empty path");
        break;
    }
  }

  std::map<std::string, std::string> values_;
};

// unit helpers: *_mhz keys are ordinary frequencies, dynamics wants rad/s
double mhz_to_rad(double mhz) { return two_pi * 1e6 * mhz; }
double rad_to_mhz(double rad) { return rad / (two_pi * 1e6); }
double khz_to_rad(double khz) { return two_pi * 1e3 * khz; }

// ---------------------------------------------------------------------------
// threading

int thread_budget(std::size_t points) {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("STIRAP_LAB_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end && *end == '\0' && cap >= 1) n = std::min<unsigned>(n, cap);
  }
  return static_cast<int>(std::min<std::size_t>(n, points));
}

/// Fan the index range [0, n) over the thread budget; results must be
/// written to preassigned slots so the output is order-deterministic.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& work) {
  const int threads = thread_budget(n);
  if (threads <= 1) {
    for (std::size_t k = 0; k < n; ++k) work(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t k = next.fetch_add(1); k < n; k = next.fetch_add(1)) {
        try {
          work(k);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---------------------------------------------------------------------------
// shared builders

std::vector<std::string> header_comments(const ExperimentConfig& config,
                                         const Params& params) {
  std::vector<std::string> comments;
  comments.push_back("stirap-lab output");
  comments.push_back("command = " + config.command);
  if (config.seed) comments.push_back("seed = " + std::to_string(*config.seed));
  for (const auto& [key, value] : params.resolved())
    comments.push_back(key + " = " + value);
  return comments;
}

const std::vector<KeySpec> dynamics_keys = {
    {"delta_two_photon_mhz", Kind::number, false, "0"},
    {"delta_one_photon_mhz", Kind::number, false, "0"},
    {"gamma_e_mhz", Kind::number, false, "6", 0.0},
    {"gamma_g_per_s", Kind::number, false, "0", 0.0},
    {"dephasing_khz", Kind::number, false, "0", 0.0},
    {"rtol", Kind::number, false, "1e-9", 0.0, true},
    {"atol", Kind::number, false, "1e-12", 0.0, true},
};

LambdaSystem system_from(const Params& p) {
  LambdaSystem sys;
  sys.delta_two_photon = mhz_to_rad(p.number("delta_two_photon_mhz"));
  sys.delta_one_photon = mhz_to_rad(p.number("delta_one_photon_mhz"));
  sys.gamma_e = mhz_to_rad(p.number("gamma_e_mhz"));
  sys.gamma_g = p.number("gamma_g_per_s");
  sys.laser_dephasing = khz_to_rad(p.number("dephasing_khz"));
  return sys;
}

EvolveOptions evolve_options_from(const Params& p) {
  EvolveOptions opts;
  opts.rtol = p.number("rtol");
  opts.atol = p.number("atol");
  return opts;
}

/// Rabi frequency of one leg: either a direct omega key or the
/// power/waist/dipole triple run through the beam-intensity chain.
double leg_rabi(const Params& p, const std::string& omega_key,
                const std::string& prefix) {
  const std::string power_key = prefix + "_power_uw";
  const std::string waist_key = prefix + "_waist_um";
  const std::string dipole_key = prefix + "_dipole_ea0";
  const bool direct = p.has(omega_key);
  const bool beam = p.has(power_key) || p.has(waist_key) || p.has(dipole_key);
  if (direct && beam)
    throw ConfigError("give either '" + omega_key + "' or the " + prefix +
                      "_power/waist/dipole keys, not both");
  if (direct) return mhz_to_rad(p.number(omega_key));
  if (!beam)
    throw ConfigError("missing required key '" + omega_key + "' (or the " + prefix +
                      "_power/waist/dipole keys)");
  for (const auto& key : {power_key, waist_key, dipole_key})
    if (!p.has(key)) throw ConfigError("missing required key '" + key + "'");
  return rabi_frequency(p.number(dipole_key), p.number(power_key) * 1e-6,
                        p.number(waist_key) * 1e-6);
}

PulseSchedule schedule_from(const Params& p) {
  PulseSchedule schedule;
  const std::string shape = p.text("pulse_shape");
  schedule.shape = shape == "gaussian"       ? PulseShape::gaussian
                   : shape == "sine_squared" ? PulseShape::sine_squared
                                             : PulseShape::constant;
  schedule.duration = p.number("pulse_duration_us") * 1e-6;
  schedule.hold = p.number("hold_us") * 1e-6;
  if (p.has("pulse_sigma_us")) schedule.sigma = p.number("pulse_sigma_us") * 1e-6;
  if (p.has("pulse_delay_us")) {
    schedule.delay = p.number("pulse_delay_us") * 1e-6;
  } else {
    schedule.delay = schedule.shape == PulseShape::gaussian
                         ? 1.5 * schedule.effective_sigma()
                         : schedule.duration / 3.0;
  }
  return schedule;
}

// ---------------------------------------------------------------------------
// commands

void cmd_stirap(const ExperimentConfig& config) {
  std::vector<KeySpec> keys = dynamics_keys;
  keys.push_back({"omega1_peak_mhz", Kind::number, true, "", 0.0});
  keys.push_back({"omega2_peak_mhz", Kind::number, true, "", 0.0});
  keys.push_back({"pulse_shape", Kind::choice, false, "gaussian", 0, false,
                  "gaussian,sine_squared"});
  keys.push_back({"pulse_duration_us", Kind::number, true, "", 0.0, true});
  keys.push_back({"pulse_delay_us", Kind::number, false, "", 0.0});
  keys.push_back({"pulse_sigma_us", Kind::number, false, "", 0.0, true});
  keys.push_back({"hold_us", Kind::number, false, "10", 0.0});
  keys.push_back({"sample_points", Kind::integer, false, "400", 2});
  const Params p(config.parameters, keys, config.command);

  LambdaSystem sys = system_from(p);
  sys.omega1_peak = mhz_to_rad(p.number("omega1_peak_mhz"));
  sys.omega2_peak = mhz_to_rad(p.number("omega2_peak_mhz"));
  const PulseSchedule schedule = schedule_from(p);
  const double total = 2.0 * schedule.sequence_duration() + schedule.hold;
  const double sample_dt = total / p.integer("sample_points");

  const TransferResult result =
      stirap_transfer(sys, schedule, sample_dt, evolve_options_from(p));

  Table table;
  table.comments = header_comments(config, p);
  table.comments.push_back("efficiency = " + format_number(result.efficiency));
  table.comments.push_back("roundtrip = " + format_number(result.roundtrip));
  table.comments.push_back("max_e_pop = " + format_number(result.max_e_pop));
  table.columns = {"time [us]", "pop_i", "pop_e", "pop_g", "lost"};
  table.data.resize(static_cast<Eigen::Index>(result.samples.size()), 5);
  for (std::size_t k = 0; k < result.samples.size(); ++k) {
    const auto& s = result.samples[k];
    table.data(static_cast<Eigen::Index>(k), 0) = s.t * 1e6;
    table.data(static_cast<Eigen::Index>(k), 1) = s.state.population(Level::i);
    table.data(static_cast<Eigen::Index>(k), 2) = s.state.population(Level::e);
    table.data(static_cast<Eigen::Index>(k), 3) = s.state.population(Level::g);
    table.data(static_cast<Eigen::Index>(k), 4) = s.state.lost;
  }
  write_csv(config.output_path, table);
}

void cmd_darkres(const ExperimentConfig& config) {
  std::vector<KeySpec> keys = dynamics_keys;
  keys.push_back({"omega1_peak_mhz", Kind::number, false, "", 0.0});
  keys.push_back({"probe_power_uw", Kind::number, false, "", 0.0});
  keys.push_back({"probe_waist_um", Kind::number, false, "", 0.0, true});
  keys.push_back({"probe_dipole_ea0", Kind::number, false, "", 0.0});
  keys.push_back({"omega2_peak_mhz", Kind::number, false, "", 0.0});
  keys.push_back({"pump_power_uw", Kind::number, false, "", 0.0});
  keys.push_back({"pump_waist_um", Kind::number, false, "", 0.0, true});
  keys.push_back({"pump_dipole_ea0", Kind::number, false, "", 0.0});
  keys.push_back({"pulse_duration_us", Kind::number, true, "", 0.0, true});
  keys.push_back({"scan_axis", Kind::choice, false, "two_photon", 0, false,
                  "two_photon,one_photon"});
  keys.push_back({"scan_min_mhz", Kind::number, true, ""});
  keys.push_back({"scan_max_mhz", Kind::number, true, ""});
  keys.push_back({"scan_points", Kind::integer, true, "", 2});
  keys.push_back({"report_width", Kind::boolean, false, "false"});
  const Params p(config.parameters, keys, config.command);

  LambdaSystem sys = system_from(p);
  sys.omega1_peak = leg_rabi(p, "omega1_peak_mhz", "probe");
  sys.omega2_peak = leg_rabi(p, "omega2_peak_mhz", "pump");
  sys.validate();

  const double lo = p.number("scan_min_mhz"), hi = p.number("scan_max_mhz");
  if (!(hi > lo)) throw ConfigError("scan_max_mhz must exceed scan_min_mhz");
  const int n = p.integer("scan_points");
  const double duration = p.number("pulse_duration_us") * 1e-6;
  const ScanAxis axis = p.text("scan_axis") == "two_photon" ? ScanAxis::two_photon
                                                            : ScanAxis::one_photon;
  const EvolveOptions evolve_opts = evolve_options_from(p);

  std::vector<double> detunings(n);
  for (int k = 0; k < n; ++k)
    detunings[k] = mhz_to_rad(lo + (hi - lo) * k / (n - 1.0));

  std::vector<double> remaining(n);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t k) {
    const auto point = dark_resonance_scan(sys, duration, {detunings[k]}, axis,
                                           evolve_opts);
    remaining[k] = point.front().remaining;
  });

  Table table;
  table.comments = header_comments(config, p);
  if (p.flag("report_width")) {
    const double width = dark_resonance_width(sys, duration, evolve_opts);
    table.comments.push_back("fwhm_khz = " + format_number(width / 1e3));
  }
  table.columns = {"detuning [MHz]", "remaining"};
  table.data.resize(n, 2);
  for (int k = 0; k < n; ++k) {
    table.data(k, 0) = rad_to_mhz(detunings[k]);
    table.data(k, 1) = remaining[k];
  }
  write_csv(config.output_path, table);
}

std::vector<KeySpec> starkmap_keys() {
  return {
      {"b_rot_ghz", Kind::number, true, "", 0.0, true},
      {"dipole_debye", Kind::number, true, "", 0.0},
      {"n_max", Kind::integer, false, "10", 3},
      {"n_branches", Kind::integer, false, "2", 0},
      {"field_min_kv_per_cm", Kind::number, false, "0", 0.0},
      {"field_max_kv_per_cm", Kind::number, true, "", 0.0, true},
      {"field_points", Kind::integer, true, "", 2},
  };
}

Table starkmap_table(const ExperimentConfig& config, const Params& p) {
  if (p.number("field_min_kv_per_cm") != 0.0)
    throw ConfigError("invalid value for key 'field_min_kv_per_cm': adiabatic "
                      "tracking starts at zero field");
  StarkModel model;
  model.b_rot = p.number("b_rot_ghz") * 1e9;
  model.dipole = p.number("dipole_debye");
  model.n_max = p.integer("n_max");
  const int n_branches = p.integer("n_branches");
  if (n_branches > model.n_max)
    throw ConfigError("invalid value for key 'n_branches': exceeds n_max");

  const int n_fields = p.integer("field_points");
  const double f_max = p.number("field_max_kv_per_cm") * 1e5;
  std::vector<double> fields(n_fields);
  for (int k = 0; k < n_fields; ++k) fields[k] = f_max * k / (n_fields - 1.0);

  const auto levels = stark_map(model, fields, n_branches);

  Table table;
  table.comments = header_comments(config, p);
  table.columns.push_back("field [kV/cm]");
  for (const auto& level : levels)
    table.columns.push_back("n" + std::to_string(level.n_label) + "_m" +
                            std::to_string(level.m_abs) + " [MHz]");
  table.data.resize(n_fields, static_cast<Eigen::Index>(levels.size()) + 1);
  for (int f = 0; f < n_fields; ++f) {
    table.data(f, 0) = fields[f] / 1e5;
    for (std::size_t b = 0; b < levels.size(); ++b)
      table.data(f, static_cast<Eigen::Index>(b) + 1) =
          levels[b].energies[f].second / 1e6;
  }
  return table;
}

void cmd_starkmap(const ExperimentConfig& config) {
  const Params p(config.parameters, starkmap_keys(), config.command);
  write_csv(config.output_path, starkmap_table(config, p));
}

ScanData read_scan(const std::string& path, AxisKind axis, double x_scale,
                   double y_scale, int y_column, int sigma_column) {
  const Table table = read_csv(path);
  if (table.data.rows() < 3)
    throw ConfigError("input '" + path + "' has fewer than 3 data rows");
  if (y_column >= table.data.cols())
    throw ConfigError("input '" + path + "' lacks column index " +
                      std::to_string(y_column));
  ScanData data;
  data.axis = axis;
  for (Eigen::Index r = 0; r < table.data.rows(); ++r) {
    data.x.push_back(table.data(r, 0) * x_scale);
    data.y.push_back(table.data(r, y_column) * y_scale);
    if (sigma_column >= 0) {
      if (sigma_column >= table.data.cols())
        throw ConfigError("input '" + path + "' lacks column index " +
                          std::to_string(sigma_column));
      data.sigma_y.push_back(table.data(r, sigma_column) * y_scale);
    }
  }
  return data;
}

void cmd_fit_dipole(const ExperimentConfig& config) {
  std::vector<KeySpec> keys = {
      {"input", Kind::path, true, ""},
      {"b_rot_ghz", Kind::number, true, "", 0.0, true},
      {"n", Kind::integer, false, "0", 0},
      {"m", Kind::integer, false, "0", 0},
      {"field_sys_frac", Kind::number, false, "0", 0.0},
      {"values", Kind::choice, false, "absolute", 0, false, "absolute,shift"},
      {"n_max", Kind::integer, false, "10", 3},
      {"chi2_gate", Kind::number, false, "10", 0.0, true},
      {"y_column", Kind::integer, false, "1", 1},
  };
  const Params p(config.parameters, keys, config.command);

  const double b_rot = p.number("b_rot_ghz") * 1e9;
  const int n = p.integer("n"), m = p.integer("m");
  // CSV convention: fields in kV/cm, energies in MHz
  ScanData data = read_scan(p.text("input"), AxisKind::field, 1e5, 1e6,
                            p.integer("y_column"), -1);
  if (p.text("values") == "absolute") {
    const double e0 = rotational_energy(b_rot, n);
    for (double& y : data.y) y -= e0;
  }

  FitDipoleOptions opts;
  opts.field_sys_frac = p.number("field_sys_frac");
  opts.n_max = p.integer("n_max");
  opts.chi2_gate = p.number("chi2_gate");
  const FitResult fit = fit_dipole(data, b_rot, n, m, opts);

  Table table;
  table.comments = header_comments(config, p);
  table.comments.push_back("fitted_dipole_debye = " + format_number(fit.value));
  table.comments.push_back("stat_err_debye = " + format_number(fit.stat_err));
  if (fit.sys_err)
    table.comments.push_back("sys_err_debye = " + format_number(*fit.sys_err));
  table.comments.push_back("chi2_reduced = " + format_number(fit.chi2_reduced));
  table.comments.push_back(std::string("converged = ") +
                           (fit.converged ? "true" : "false"));
  for (const auto& w : fit.warnings) table.comments.push_back("warning: " + w);

  const auto model =
      stark_branch_shifts(b_rot, fit.value, n, m, data.x, opts.n_max);
  table.columns = {"field [kV/cm]", "shift [MHz]", "model [MHz]"};
  table.data.resize(static_cast<Eigen::Index>(data.x.size()), 3);
  for (std::size_t k = 0; k < data.x.size(); ++k) {
    table.data(static_cast<Eigen::Index>(k), 0) = data.x[k] / 1e5;
    table.data(static_cast<Eigen::Index>(k), 1) = data.y[k] / 1e6;
    table.data(static_cast<Eigen::Index>(k), 2) = model[k] / 1e6;
  }
  write_csv(config.output_path, table);
}

void cmd_fit_lifetime(const ExperimentConfig& config) {
  std::vector<KeySpec> keys = {
      {"input", Kind::path, true, ""},
      {"sigma_column", Kind::integer, false, "", 0},
  };
  const Params p(config.parameters, keys, config.command);
  // CSV convention: time in us, counts dimensionless
  const ScanData data =
      read_scan(p.text("input"), AxisKind::time, 1e-6, 1.0, 1,
                p.has("sigma_column") ? p.integer("sigma_column") : -1);
  const FitResult fit = fit_lifetime(data);

  Table table;
  table.comments = header_comments(config, p);
  table.comments.push_back("tau_us = " + format_number(fit.value * 1e6));
  table.comments.push_back("stat_err_us = " + format_number(fit.stat_err * 1e6));
  table.comments.push_back("chi2_reduced = " + format_number(fit.chi2_reduced));
  table.columns = {"time [us]", "counts", "model"};
  // rebuild the model through the public fit: N0 = y-intercept estimate
  // from the fitted tau and a linear amplitude solve
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < data.x.size(); ++k) {
    const double e = std::exp(-data.x[k] / fit.value);
    num += data.y[k] * e;
    den += e * e;
  }
  const double n0 = den > 0.0 ? num / den : 0.0;
  table.data.resize(static_cast<Eigen::Index>(data.x.size()), 3);
  for (std::size_t k = 0; k < data.x.size(); ++k) {
    table.data(static_cast<Eigen::Index>(k), 0) = data.x[k] * 1e6;
    table.data(static_cast<Eigen::Index>(k), 1) = data.y[k];
    table.data(static_cast<Eigen::Index>(k), 2) =
        n0 * std::exp(-data.x[k] / fit.value);
  }
  write_csv(config.output_path, table);
}

void cmd_fit_darkres(const ExperimentConfig& config) {
  std::vector<KeySpec> keys = dynamics_keys;
  keys.push_back({"input", Kind::path, true, ""});
  keys.push_back({"omega1_peak_mhz", Kind::number, true, "", 0.0});
  keys.push_back({"pulse_duration_us", Kind::number, true, "", 0.0, true});
  keys.push_back({"omega2_init_mhz", Kind::number, false, "0", 0.0});
  keys.push_back({"fit_gamma_e", Kind::boolean, false, "false"});
  const Params p(config.parameters, keys, config.command);

  LambdaSystem sys = system_from(p);
  sys.omega1_peak = mhz_to_rad(p.number("omega1_peak_mhz"));
  // CSV convention: detuning in MHz
  const ScanData data = read_scan(p.text("input"), AxisKind::detuning, 1e6, 1.0, 1, -1);

  FitDarkResonanceOptions opts;
  opts.pulse_duration = p.number("pulse_duration_us") * 1e-6;
  opts.fit_gamma_e = p.flag("fit_gamma_e");
  opts.omega2_init = mhz_to_rad(p.number("omega2_init_mhz"));
  opts.evolve = evolve_options_from(p);
  const FitResult fit = fit_dark_resonance(data, sys, opts);

  Table table;
  table.comments = header_comments(config, p);
  table.comments.push_back("omega2_peak_mhz = " + format_number(rad_to_mhz(fit.value)));
  table.comments.push_back("stat_err_mhz = " + format_number(rad_to_mhz(fit.stat_err)));
  table.comments.push_back("chi2_reduced = " + format_number(fit.chi2_reduced));
  table.comments.push_back(std::string("converged = ") +
                           (fit.converged ? "true" : "false"));
  for (const auto& w : fit.warnings) table.comments.push_back("warning: " + w);
  table.columns = {"detuning [MHz]", "remaining"};
  table.data.resize(static_cast<Eigen::Index>(data.x.size()), 2);
  for (std::size_t k = 0; k < data.x.size(); ++k) {
    table.data(static_cast<Eigen::Index>(k), 0) = data.x[k] / 1e6;
    table.data(static_cast<Eigen::Index>(k), 1) = data.y[k];
  }
  write_csv(config.output_path, table);
}

void cmd_resonances(const ExperimentConfig& config) {
  std::vector<KeySpec> keys = {
      {"input", Kind::path, true, ""},
      {"prominence_frac", Kind::number, false, "0.2", 0.0, true},
  };
  const Params p(config.parameters, keys, config.command);
  const ScanData data = read_scan(p.text("input"), AxisKind::detuning, 1e6, 1.0, 1, -1);
  FindResonancesOptions opts;
  opts.prominence_frac = p.number("prominence_frac");
  const auto peaks = find_resonances(data, opts);

  Table table;
  table.comments = header_comments(config, p);
  table.comments.push_back("peaks_found = " + std::to_string(peaks.size()));
  table.columns = {"center [MHz]", "height", "width [MHz]"};
  table.data.resize(static_cast<Eigen::Index>(peaks.size()), 3);
  for (std::size_t k = 0; k < peaks.size(); ++k) {
    table.data(static_cast<Eigen::Index>(k), 0) = peaks[k].center / 1e6;
    table.data(static_cast<Eigen::Index>(k), 1) = peaks[k].height;
    table.data(static_cast<Eigen::Index>(k), 2) = peaks[k].width / 1e6;
  }
  write_csv(config.output_path, table);
}

// ---------------------------------------------------------------------------
// bundled recipes

std::string strip_csv_suffix(const std::string& path) {
  if (path.size() > 4 && path.substr(path.size() - 4) == ".csv")
    return path.substr(0, path.size() - 4);
  return path;
}

void reproduce_starkmap_pair(const std::string& figure, const std::string& out,
                             std::optional<std::uint64_t> seed,
                             const std::string& b_rot_ghz,
                             const std::string& dipole_debye,
                             const std::string& field_max) {
  ExperimentConfig config;
  config.command = "starkmap";
  config.seed = seed;
  config.parameters = {{"b_rot_ghz", b_rot_ghz},
                       {"dipole_debye", dipole_debye},
                       {"field_max_kv_per_cm", field_max},
                       {"field_points", "61"},
                       {"n_branches", "2"}};
  const Params p(config.parameters, starkmap_keys(), config.command);
  const Table full = starkmap_table(config, p);

  auto subset = [&](int n_label) {
    Table table;
    table.comments = full.comments;
    table.comments.insert(table.comments.begin() + 1, "recipe = " + figure);
    std::vector<Eigen::Index> cols = {0};
    const std::string prefix = "n" + std::to_string(n_label) + "_";
    for (std::size_t c = 1; c < full.columns.size(); ++c)
      if (full.columns[c].rfind(prefix, 0) == 0)
        cols.push_back(static_cast<Eigen::Index>(c));
    for (Eigen::Index c : cols) table.columns.push_back(full.columns[c]);
    table.data.resize(full.data.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c)
      table.data.col(static_cast<Eigen::Index>(c)) = full.data.col(cols[c]);
    return table;
  };

  const std::string base = strip_csv_suffix(out);
  write_csv(base + "_n0.csv", subset(0));
  write_csv(base + "_n2.csv", subset(2));
}

void reproduce_fig3b(const std::string& out, std::optional<std::uint64_t> seed) {
  const std::uint64_t s = seed.value_or(1);
  std::mt19937_64 rng(s);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double tau = 170e-6, n0 = 3e4;
  const int points = 12;
  std::vector<double> t(points), y(points);
  for (int k = 0; k < points; ++k) {
    t[k] = 400e-6 * k / (points - 1.0);
    y[k] = std::max(n0 * std::exp(-t[k] / tau) * (1.0 + 0.1 * gauss(rng)), 0.0);
  }

  ScanData data;
  data.axis = AxisKind::time;
  data.x = t;
  data.y = y;
  const FitResult fit = fit_lifetime(data);

  Table table;
  table.comments = {"stirap-lab output", "recipe = fig3b",
                    "seed = " + std::to_string(s),
                    "true_tau_us = 170", "noise_frac = 0.1",
                    "tau_us = " + format_number(fit.value * 1e6),
                    "stat_err_us = " + format_number(fit.stat_err * 1e6)};
  table.columns = {"time [us]", "counts", "model"};
  table.data.resize(points, 3);
  for (int k = 0; k < points; ++k) {
    table.data(k, 0) = t[k] * 1e6;
    table.data(k, 1) = y[k];
    table.data(k, 2) = n0 * std::exp(-t[k] / fit.value);
  }
  write_csv(out, table);
}

void reproduce_fig5c(const std::string& out, std::optional<std::uint64_t> seed) {
  LambdaSystem sys;
  sys.omega1_peak = mhz_to_rad(4.0);
  sys.omega2_peak = mhz_to_rad(7.0);
  sys.gamma_e = mhz_to_rad(6.0);
  const PulseSchedule schedule = PulseSchedule::stirap_gaussian(4e-6, 10e-6);

  const int n = 41;
  std::vector<double> detuning_mhz(n), oneway(n), roundtrip(n);
  parallel_for(n, [&](std::size_t k) {
    detuning_mhz[k] = -1.0 + 2.0 * k / (n - 1.0);
    LambdaSystem s = sys;
    s.delta_two_photon = mhz_to_rad(detuning_mhz[k]);
    const TransferResult r = stirap_transfer(s, schedule);
    roundtrip[k] = r.roundtrip;
    oneway[k] = 1.0 - r.efficiency;  // |i> signal is dark after transfer
  });

  Table table;
  table.comments = {"stirap-lab output", "recipe = fig5c",
                    "omega1_peak_mhz = 4", "omega2_peak_mhz = 7",
                    "gamma_e_mhz = 6", "pulse_duration_us = 4", "hold_us = 10"};
  if (seed) table.comments.push_back("seed = " + std::to_string(*seed));
  table.columns = {"detuning [MHz]", "oneway_untransferred", "roundtrip_remaining"};
  table.data.resize(n, 3);
  for (int k = 0; k < n; ++k) {
    table.data(k, 0) = detuning_mhz[k];
    table.data(k, 1) = oneway[k];
    table.data(k, 2) = roundtrip[k];
  }
  write_csv(out, table);
}

void run_recipe(const std::string& figure, const std::string& command,
                std::map<std::string, std::string> parameters,
                const std::string& out, std::optional<std::uint64_t> seed) {
  ExperimentConfig config;
  config.command = command;
  config.parameters = std::move(parameters);
  config.seed = seed;
  config.output_path = out;
  (void)figure;
  run(config);
}

}  // namespace

// ---------------------------------------------------------------------------

std::map<std::string, std::string> parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file: " + path);
  std::map<std::string, std::string> values;
  std::string line;
  int line_no = 0;
  auto trim = [](std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) +
                        " is not key = value: '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(line_no) +
                        " has an empty key or value");
    values[key] = value;
  }
  return values;
}

void run(const ExperimentConfig& config) {
  if (config.output_path.empty()) throw ConfigError("no output path given");
  if (config.command == "stirap") return cmd_stirap(config);
  if (config.command == "darkres") return cmd_darkres(config);
  if (config.command == "starkmap") return cmd_starkmap(config);
  if (config.command == "fit-dipole") return cmd_fit_dipole(config);
  if (config.command == "fit-lifetime") return cmd_fit_lifetime(config);
  if (config.command == "fit-darkres") return cmd_fit_darkres(config);
  if (config.command == "resonances") return cmd_resonances(config);
  throw ConfigError("unknown command '" + config.command + "'");
}

void reproduce(const std::string& figure_id, const std::string& output_path,
               std::optional<std::uint64_t> seed) {
  if (output_path.empty()) throw ConfigError("no output path given");
  if (figure_id == "fig2b") {
    return run_recipe(figure_id, "darkres",
                      {{"omega1_peak_mhz", "0.5"},
                       {"omega2_peak_mhz", "8"},
                       {"gamma_e_mhz", "6"},
                       {"pulse_duration_us", "12"},
                       {"scan_axis", "one_photon"},
                       {"scan_min_mhz", "-15"},
                       {"scan_max_mhz", "15"},
                       {"scan_points", "121"}},
                      output_path, seed);
  }
  if (figure_id == "fig3a") {
    return run_recipe(figure_id, "stirap",
                      {{"omega1_peak_mhz", "4"},
                       {"omega2_peak_mhz", "8"},
                       {"gamma_e_mhz", "6"},
                       {"gamma_g_per_s", "5882.352941176471"},  // 1/170 us
                       {"pulse_duration_us", "16"},
                       {"hold_us", "10"},
                       {"sample_points", "600"}},
                      output_path, seed);
  }
  if (figure_id == "fig3b") return reproduce_fig3b(output_path, seed);
  if (figure_id == "fig4")
    return reproduce_starkmap_pair(figure_id, output_path, seed, "0.5264", "0.052",
                                   "2");
  if (figure_id == "fig5c") return reproduce_fig5c(output_path, seed);
  if (figure_id == "fig6")
    return reproduce_starkmap_pair(figure_id, output_path, seed, "1.1139", "0.566",
                                   "3");
  throw ConfigError("unknown figure id '" + figure_id + "'");
}

int run_cli(int argc, const char* const* argv) {
  try {
    std::string command, config_path, out_path, figure;
    std::optional<std::uint64_t> seed;
    std::map<std::string, std::string> overrides;

    std::vector<std::string> args(argv + 1, argv + argc);
    for (std::size_t k = 0; k < args.size(); ++k) {
      const std::string& arg = args[k];
      auto next = [&]() -> const std::string& {
        if (k + 1 >= args.size())
          throw ConfigError("flag " + arg + " needs an argument");
        return args[++k];
      };
      if (arg == "--config") {
        config_path = next();
      } else if (arg == "--out") {
        out_path = next();
      } else if (arg == "--seed") {
        const std::string& v = next();
        try {
          seed = std::stoull(v);
        } catch (const std::exception&) {
          throw ConfigError("invalid --seed value '" + v + "'");
        }
      } else if (arg == "--help" || arg == "-h") {
        std::cout
            << "usage: stirap_lab <command> [key=value ...] [--config file] "
               "[--out file] [--seed n]\n"
               "commands: stirap darkres starkmap fit-dipole fit-lifetime "
               "fit-darkres resonances reproduce <figure>\n"
               "figures:  fig2b fig3a fig3b fig4 fig5c fig6\n";
        return 0;
      } else if (arg.rfind("--", 0) == 0) {
        throw ConfigError("unknown flag " + arg);
      } else if (arg.find('=') != std::string::npos) {
        const auto eq = arg.find('=');
        overrides[arg.substr(0, eq)] = arg.substr(eq + 1);
      } else if (command.empty()) {
        command = arg;
      } else if (command == "reproduce" && figure.empty()) {
        figure = arg;
      } else {
        throw ConfigError("unexpected argument '" + arg + "'");
      }
    }
    if (command.empty()) throw ConfigError("no command given (see --help)");
    if (out_path.empty()) throw ConfigError("no --out path given");

    if (command == "reproduce") {
      if (figure.empty()) throw ConfigError("reproduce needs a figure id");
      if (!overrides.empty() || !config_path.empty())
        throw ConfigError("reproduce takes no config keys");
      reproduce(figure, out_path, seed);
      return 0;
    }

    ExperimentConfig config;
    config.command = command;
    if (!config_path.empty()) config.parameters = parse_config_file(config_path);
    for (const auto& [key, value] : overrides) config.parameters[key] = value;

    if (auto it = config.parameters.find("command"); it != config.parameters.end()) {
      if (it->second != command)
        throw ConfigError("config file command '" + it->second +
                          "' conflicts with '" + command + "'");
      config.parameters.erase(it);
    }
    if (auto it = config.parameters.find("seed"); it != config.parameters.end()) {
      if (!seed) {
        try {
          seed = std::stoull(it->second);
        } catch (const std::exception&) {
          throw ConfigError("invalid seed value '" + it->second + "'");
        }
      }
      config.parameters.erase(it);
    }
    config.seed = seed;
    config.output_path = out_path;
    run(config);
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace stirap_lab
