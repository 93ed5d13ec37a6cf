// Copyright 2026 The tbgen Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Registered scenarios: configuration, evaluation and tabular output.

#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "tbgen/config.hpp"
#include "tbgen/cycle_map.hpp"
#include "tbgen/errors.hpp"
#include "tbgen/parallel.hpp"
#include "tbgen/params.hpp"
#include "tbgen/perturbation.hpp"
#include "tbgen/protocol.hpp"
#include "tbgen/pulse_dynamics.hpp"
#include "tbgen/version.hpp"
#include "tbgen/waveguide.hpp"

namespace tbgen {

inline const std::array<std::string, 5>& scenario_names() {
  static const std::array<std::string, 5> names{"detuning_sweep", "photon_scaling", "pulse_optimization",
                                                "echo_demo", "branching_map"};
  return names;
}

struct SweepAxis {
  std::string name = "b_field";  ///< b_field (T) or delta_ghz
  double min = 0.5;
  double max = 6.0;
  int points = 12;
  bool log_scale = false;

  std::vector<double> values() const {
    std::vector<double> v(points);
    for (int i = 0; i < points; ++i) {
      const double t = static_cast<double>(i) / (points - 1);
      v[i] = log_scale ? std::exp(std::log(min) + t * (std::log(max) - std::log(min))) : min + t * (max - min);
    }
    v.back() = max;
    return v;
  }
};

struct ScenarioConfig {
  std::string scenario;
  PhysicalParams params;
  bool indistinguishability_explicit = false;
  SweepAxis sweep;
  std::vector<int> photons{3};
  std::vector<double> n_g_list;  ///< empty: params.n_g only
  TargetKind kind = TargetKind::ghz;
  bool numeric = false;
  ExcitationModel excitation = ExcitationModel::analytic;
  bool filter_on = true;
  std::vector<double> sigma_list;  ///< empty: {0, sqrt(2)/T2*}
  bool drift = false;
  int samples = 32;
  std::vector<double> delta_over_gamma_list{30.0, 100.0, 300.0};
  std::vector<PulseShape> shapes{PulseShape::square};
  std::string mode = "fixture";  ///< "fixture" or a mode-field file path
  int map_points = 21;
  double map_n_g = 20.0;
  double leak_fraction = 0.1;
  std::uint64_t seed = 1;
  std::string out;
  std::vector<std::pair<std::string, std::string>> echo;  ///< config entries as given

  void validate() const {
    std::vector<ValidationError::Field> bad;
    bool known = false;
    for (const auto& n : scenario_names()) known = known || n == scenario;
    if (!known) bad.push_back({"scenario", "'" + scenario + "' is not a registered scenario"});
    if (sweep.name != "b_field" && sweep.name != "delta_ghz") bad.push_back({"sweep_axis", "must be b_field or delta_ghz"});
    if (!(sweep.min < sweep.max)) bad.push_back({"sweep_min", "must be < sweep_max"});
    if (sweep.points < 2) bad.push_back({"sweep_points", "must be >= 2"});
    if (sweep.log_scale && !(sweep.min > 0.0)) bad.push_back({"sweep_min", "must be > 0 on a log axis"});
    if (photons.empty()) bad.push_back({"photons", "must not be empty"});
    for (int n : photons) {
      if (n < 1 || n > kMaxPhotons) bad.push_back({"photons", "entries must lie in [1, " + std::to_string(kMaxPhotons) + "]"});
    }
    for (double g : n_g_list) {
      if (!(g > 0.0)) bad.push_back({"n_g_list", "entries must be > 0"});
    }
    for (double s : sigma_list) {
      if (!(s >= 0.0)) bad.push_back({"sigma_list", "entries must be >= 0"});
    }
    for (double r : delta_over_gamma_list) {
      if (!(r > 0.0)) bad.push_back({"delta_over_gamma_list", "entries must be > 0"});
    }
    if (samples < 1) bad.push_back({"samples", "must be >= 1"});
    if (map_points < 2) bad.push_back({"map_points", "must be >= 2"});
    if (!(map_n_g > 0.0)) bad.push_back({"map_n_g", "must be > 0"});
    if (!(leak_fraction >= 0.0)) bad.push_back({"leak_fraction", "must be >= 0"});
    if (!bad.empty()) throw ValidationError(std::move(bad));
  }
};

namespace detail {

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    out.emplace_back(trim(std::string_view(s).substr(start, comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

inline bool parse_flag(const KeyValueFile& kv, const KeyValueFile::Entry& e) {
  if (e.value == "true" || e.value == "on" || e.value == "1") return true;
  if (e.value == "false" || e.value == "off" || e.value == "0") return false;
  throw ParseError(kv.source(), e.line, "'" + e.key + "' expects true/false");
}

}  // namespace detail

/// Reads a scenario configuration. Keys are either PhysicalParams fields
/// (see params_from_config) or the scenario keys below; anything else is an
/// error.
inline ScenarioConfig scenario_config_from(const KeyValueFile& kv, const std::string& scenario) {
  static const std::vector<std::string> param_keys{
      "preset", "gamma", "gamma_d", "delta", "delta_ghz", "branching", "eta", "t_cycle", "t2_star",
      "t2", "g_factor", "b_field", "n_g", "gamma_bulk", "indistinguishability"};
  ScenarioConfig c;
  c.scenario = scenario;
  c.params = params_from_config(kv, presets::reference(), false);
  for (const auto& e : kv.entries()) {
    c.echo.emplace_back(e.key, e.value);
    const std::string& k = e.key;
    if (std::find(param_keys.begin(), param_keys.end(), k) != param_keys.end()) {
      if (k == "indistinguishability" && e.value != "derived") c.indistinguishability_explicit = true;
      continue;
    }
    auto number = [&] { return kv.get_double(e); };
    auto integer = [&]() -> std::int64_t {
      const double v = number();
      if (v != std::floor(v)) throw ParseError(kv.source(), e.line, "'" + k + "' must be an integer");
      return static_cast<std::int64_t>(v);
    };
    if (k == "scenario") {
      if (e.value != scenario) {
        throw ParseError(kv.source(), e.line, "config is for scenario '" + e.value + "', not '" + scenario + "'");
      }
    } else if (k == "kind") {
      c.kind = target_kind_from_string(e.value);
    } else if (k == "photons") {
      c.photons.clear();
      const std::vector<double> values = *kv.get_list(k);
      for (double v : values) {
        if (v != std::floor(v)) throw ParseError(kv.source(), e.line, "photons must be integers");
        c.photons.push_back(static_cast<int>(v));
      }
    } else if (k == "n_g_list") {
      c.n_g_list = *kv.get_list(k);
    } else if (k == "sweep_axis") {
      c.sweep.name = e.value;
    } else if (k == "sweep_min") {
      c.sweep.min = number();
    } else if (k == "sweep_max") {
      c.sweep.max = number();
    } else if (k == "sweep_points") {
      c.sweep.points = static_cast<int>(integer());
    } else if (k == "sweep_scale") {
      if (e.value != "linear" && e.value != "log") throw ParseError(kv.source(), e.line, "sweep_scale must be linear or log");
      c.sweep.log_scale = e.value == "log";
    } else if (k == "numeric") {
      c.numeric = detail::parse_flag(kv, e);
    } else if (k == "excitation_model") {
      if (e.value == "ideal") c.excitation = ExcitationModel::ideal;
      else if (e.value == "analytic") c.excitation = ExcitationModel::analytic;
      else if (e.value == "integrated") c.excitation = ExcitationModel::integrated;
      else throw ParseError(kv.source(), e.line, "excitation_model must be ideal, analytic or integrated");
    } else if (k == "filter") {
      c.filter_on = detail::parse_flag(kv, e);
    } else if (k == "sigma_list") {
      c.sigma_list = *kv.get_list(k);
    } else if (k == "drift") {
      c.drift = detail::parse_flag(kv, e);
    } else if (k == "samples") {
      c.samples = static_cast<int>(integer());
    } else if (k == "delta_over_gamma_list") {
      c.delta_over_gamma_list = *kv.get_list(k);
    } else if (k == "shapes") {
      c.shapes.clear();
      for (const auto& s : detail::split_list(e.value)) {
        if (s == "square") c.shapes.push_back(PulseShape::square);
        else if (s == "gaussian") c.shapes.push_back(PulseShape::gaussian);
        else throw ParseError(kv.source(), e.line, "unknown pulse shape '" + s + "'");
      }
    } else if (k == "mode") {
      c.mode = e.value;
    } else if (k == "map_points") {
      c.map_points = static_cast<int>(integer());
    } else if (k == "map_n_g") {
      c.map_n_g = number();
    } else if (k == "leak_fraction") {
      c.leak_fraction = number();
    } else if (k == "seed") {
      c.seed = static_cast<std::uint64_t>(integer());
    } else if (k == "out") {
      c.out = e.value;
    } else {
      throw ParseError(kv.source(), e.line, "unknown key '" + k + "'");
    }
  }
  c.validate();
  return c;
}

// ---------------------------------------------------------------------------
// Tables

using Cell = std::variant<double, std::string>;

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
  std::vector<std::string> warnings;

  std::size_t column(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
      if (columns[i] == name) return i;
    throw DomainError("Table: no column '" + name + "'");
  }

  double number(std::size_t row, const std::string& name) const { return std::get<double>(rows.at(row).at(column(name))); }
};

/// Shortest text that reads back to the same double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::string format_cell(const Cell& c) {
  if (const auto* d = std::get_if<double>(&c)) return format_number(*d);
  return std::get<std::string>(c);
}

struct RunMetadata {
  std::string scenario;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  PhysicalParams params;
};

inline std::vector<std::pair<std::string, std::string>> params_echo(const PhysicalParams& p) {
  std::vector<std::pair<std::string, std::string>> out{
      {"gamma", format_number(p.gamma)},           {"gamma_d", format_number(p.gamma_d)},
      {"delta", format_number(p.delta)},           {"branching", format_number(p.branching)},
      {"eta", format_number(p.eta)},               {"t_cycle", format_number(p.t_cycle)},
      {"t2_star", format_number(p.t2_star)},       {"t2", format_number(p.t2)},
      {"g_factor", format_number(p.g_factor)},     {"b_field", format_number(p.b_field)},
      {"n_g", format_number(p.n_g)},               {"gamma_bulk", format_number(p.gamma_bulk)},
      {"indistinguishability", p.indistinguishability ? format_number(*p.indistinguishability) : "derived"}};
  return out;
}

inline void write_csv(std::ostream& os, const Table& t, const RunMetadata& meta) {
  os << "# tbgen " << kVersion << '\n';
  os << "# scenario=" << meta.scenario << '\n';
  os << "# seed=" << meta.seed << '\n';
  for (const auto& [k, v] : meta.config) os << "# config." << k << '=' << v << '\n';
  for (const auto& [k, v] : params_echo(meta.params)) os << "# params." << k << '=' << v << '\n';
  for (const auto& w : t.warnings) os << "# warning: " << w << '\n';
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << format_cell(r[i]);
    os << '\n';
  }
}

// ---------------------------------------------------------------------------
// Scenarios

namespace detail {

inline RunSpec run_spec_for(const PhysicalParams& p, const ScenarioConfig& c, int n) {
  RunSpec spec;
  spec.params = p;
  spec.kind = c.kind;
  spec.n_photons = n;
  spec.cycle.excitation = excitation_ledger(p, c.excitation);
  spec.cycle.filter_on = c.filter_on;
  return spec;
}

inline const std::vector<std::string>& sweep_columns() {
  static const std::vector<std::string> cols{
      "n_g", "axis_value", "delta", "n_photons", "gamma", "indistinguishability", "e_ph", "e_exc", "e_br",
      "total_first_order", "total_asymptote", "numeric_infidelity", "success_probability", "generation_rate"};
  return cols;
}

}  // namespace detail

/// Numeric fields left empty are reported as nan.
inline std::vector<Cell> sweep_row(double n_g, double axis_value, const PhysicalParams& p, int n,
                                   const std::optional<HybridState>& numeric, double numeric_fidelity) {
  const InfidelityBudget b = infidelity_first_order(p, n);
  PhysicalParams far = p;
  far.delta = kInfinity;
  const InfidelityBudget asym = infidelity_first_order(far, n);
  const double nan = std::nan("");
  return {n_g,
          axis_value,
          p.delta,
          static_cast<double>(n),
          p.gamma,
          p.effective_indistinguishability(),
          b.e_ph,
          b.e_exc,
          b.e_br,
          b.total,
          asym.total,
          numeric ? 1.0 - numeric_fidelity : nan,
          numeric ? numeric->success_probability : nan,
          generation_rate(p.eta, p.t_cycle, n)};
}

/// Infidelity versus magnetic field (or detuning) for each group index;
/// gamma follows the group index through the lookup table.
inline Table scenario_detuning_sweep(const ScenarioConfig& c, unsigned workers = default_workers()) {
  if (c.sweep.name != "b_field" && c.sweep.name != "delta_ghz") {
    throw DomainError("detuning_sweep: invalid sweep axis '" + c.sweep.name + "'");
  }
  Table t;
  t.columns = detail::sweep_columns();
  const std::vector<double> ngs = c.n_g_list.empty() ? std::vector<double>{c.params.n_g} : c.n_g_list;
  const std::vector<double> axis = c.sweep.values();
  struct Point {
    PhysicalParams p;
    double n_g, x;
    int n;
  };
  std::vector<Point> points;
  for (double n_g : ngs) {
    const GammaLookup g = gamma_of_group_index(n_g);
    if (g.extrapolated) t.warnings.push_back(g.warning);
    PhysicalParams p = c.params;
    p.n_g = n_g;
    p.gamma = g.gamma;
    if (!c.indistinguishability_explicit) p.indistinguishability.reset();
    for (double x : axis) {
      PhysicalParams q = p;
      if (c.sweep.name == "b_field") {
        q.b_field = x;
        q.delta = zeeman_detuning(q.g_factor, x);
      } else {
        q.delta = kTwoPi * x;
      }
      validate_params(q);
      for (int n : c.photons) points.push_back({q, n_g, x, n});
    }
  }
  t.rows.resize(points.size());
  parallel_for(
      points.size(),
      [&](std::size_t i) {
        const Point& pt = points[i];
        std::optional<HybridState> s;
        double f = 0.0;
        if (c.numeric) {
          s = run_protocol(detail::run_spec_for(pt.p, c, pt.n));
          f = conditional_fidelity(*s, ideal_target(pt.n, c.kind));
        }
        t.rows[i] = sweep_row(pt.n_g, pt.x, pt.p, pt.n, s, f);
      },
      workers);
  return t;
}

/// Error budget, numeric conditional infidelity and rate against N.
inline Table scenario_photon_scaling(const ScenarioConfig& c, unsigned workers = default_workers()) {
  Table t;
  t.columns = detail::sweep_columns();
  t.rows.resize(c.photons.size());
  const ExcitationLedger ledger = excitation_ledger(c.params, c.excitation);
  parallel_for(
      c.photons.size(),
      [&](std::size_t i) {
        const int n = c.photons[i];
        RunSpec spec = detail::run_spec_for(c.params, c, n);
        spec.cycle.excitation = ledger;
        const HybridState s = run_protocol(spec);
        const double f = conditional_fidelity(s, ideal_target(n, c.kind));
        t.rows[i] = sweep_row(c.params.n_g, static_cast<double>(n), c.params, n, s, f);
      },
      workers);
  return t;
}

/// Optimal pulse duration and per-pulse error for each Delta / gamma.
inline Table scenario_pulse_optimization(const ScenarioConfig& c, unsigned workers = default_workers()) {
  Table t;
  t.columns = {"shape", "delta_over_gamma", "duration_opt", "error_min", "coefficient", "analytic_coefficient",
               "off_resonant", "re_excitation", "incomplete_inversion", "in_pulse_scattering", "status"};
  struct Job {
    PulseShape shape;
    double ratio;
  };
  std::vector<Job> jobs;
  for (PulseShape s : c.shapes)
    for (double r : c.delta_over_gamma_list) jobs.push_back({s, r});
  t.rows.resize(jobs.size());
  parallel_for(
      jobs.size(),
      [&](std::size_t i) {
        const Job& j = jobs[i];
        const std::string shape = j.shape == PulseShape::square ? "square" : "gaussian";
        const double nan = std::nan("");
        const LevelSystem sys = LevelSystem::from_betas(c.params.gamma, j.ratio * c.params.gamma,
                                                        BranchingBetas::from_branching(c.params.branching),
                                                        c.params.gamma_d);
        try {
          const PulseOptimum o = optimize_pulse_duration(sys, j.shape, default_duration_bounds(sys));
          t.rows[i] = {shape,
                       j.ratio,
                       o.duration_opt,
                       o.error_min,
                       o.error_min * j.ratio,
                       kExcitationCoefficient,
                       o.errors.off_resonant,
                       o.errors.re_excitation,
                       o.errors.incomplete_inversion,
                       o.errors.in_pulse_scattering,
                       std::string("ok")};
        } catch (const BracketingError&) {
          t.rows[i] = {shape, j.ratio, nan, nan, nan, kExcitationCoefficient, nan, nan, nan, nan,
                       std::string("bracketing_error")};
        }
      },
      workers);
  return t;
}

/// Quasi-static Overhauser noise with and without the built-in echo. All
/// other imperfections are switched off so the two columns differ only by
/// the refocusing.
inline Table scenario_echo_demo(const ScenarioConfig& c, unsigned workers = default_workers()) {
  Table t;
  t.columns = {"n_photons", "sigma_overhauser", "fidelity_echo", "std_error_echo", "fidelity_no_echo",
               "std_error_no_echo"};
  const std::vector<double> sigmas =
      c.sigma_list.empty() ? std::vector<double>{0.0, std::numbers::sqrt2 / c.params.t2_star} : c.sigma_list;
  for (int n : c.photons) {
    for (double sigma : sigmas) {
      NoiseConfig noise;
      noise.overhauser_sigma = sigma;
      noise.drift_diffusion = c.drift ? NoiseConfig::from_times(c.params.t2_star, c.params.t2, 1, 0).drift_diffusion : 0.0;
      noise.sample_count = c.samples;
      noise.rng_seed = c.seed;
      RunSpec spec;
      spec.params = c.params;
      spec.kind = c.kind;
      spec.n_photons = n;
      spec.cycle = CycleOptions::ideal();
      const NoiseAverage echo = overhauser_average(spec, noise, workers);
      spec.cycle.echo = false;
      const NoiseAverage plain = overhauser_average(spec, noise, workers);
      t.rows.push_back({static_cast<double>(n), sigma, echo.mean_fidelity, echo.std_error, plain.mean_fidelity,
                        plain.std_error});
    }
  }
  return t;
}

/// B and beta_total over the unit cell plus the single-photon branching
/// infidelity 1 / (4 (B + 1)).
inline Table scenario_branching_map(const ScenarioConfig& c, unsigned workers = default_workers()) {
  const ModeField mode = c.mode == "fixture" ? synthetic_w1_mode(c.map_n_g) : load_mode_field(c.mode);
  Table t;
  t.columns = {"x", "y", "B", "beta_total", "infidelity"};
  for (const MapPoint& p : branching_map(mode, c.map_points, c.map_points, c.params.gamma_bulk, c.leak_fraction, workers)) {
    t.rows.push_back({p.x, p.y, p.branching, p.beta_total, 1.0 / (4.0 * (p.branching + 1.0))});
  }
  return t;
}

inline Table run_scenario(const ScenarioConfig& c, unsigned workers = default_workers()) {
  if (c.scenario == "detuning_sweep") return scenario_detuning_sweep(c, workers);
  if (c.scenario == "photon_scaling") return scenario_photon_scaling(c, workers);
  if (c.scenario == "pulse_optimization") return scenario_pulse_optimization(c, workers);
  if (c.scenario == "echo_demo") return scenario_echo_demo(c, workers);
  if (c.scenario == "branching_map") return scenario_branching_map(c, workers);
  throw DomainError("unknown scenario '" + c.scenario + "'");
}

}  // namespace tbgen
