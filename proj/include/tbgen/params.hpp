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

// Physical parameters of the emitter/waveguide system and the closed-form
// scalars derived from them.
//
// Unit conventions (used everywhere in tbgen):
//   rates          1/ns          (gamma = 3.2 means 3.2 ns^-1)
//   detunings      rad/ns        (2*pi x 16 GHz is stored as 2*pi*16)
//   times          ns
//   magnetic field Tesla

#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tbgen/config.hpp"
#include "tbgen/errors.hpp"

namespace tbgen {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Bohr magneton over Planck's constant, GHz/T (CODATA, rounded).
inline constexpr double kBohrMagnetonOverPlanck = 13.996;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

struct PhysicalParams {
  double gamma = 3.2;             ///< vertical-transition decay rate, 1/ns
  double gamma_d = 0.06;          ///< pure dephasing rate, 1/ns
  double delta = kTwoPi * 16.0;   ///< off-resonant trion detuning, rad/ns
  double branching = 15.0;        ///< B >= 0, may be +inf (fully cycling)
  double eta = 0.84;              ///< outcoupling/detection efficiency
  double t_cycle = 27.0;          ///< ns
  double t2_star = 2.0;           ///< ns
  double t2 = 2700.0;             ///< ns
  double g_factor = 0.6;          ///< |g_e| + |g_h|
  double b_field = 2.0;           ///< T
  double n_g = 20.0;              ///< group index
  double gamma_bulk = 1.0;        ///< 1/ns

  /// Measured indistinguishability. When set it replaces gamma/(gamma + 2 gamma_d);
  /// the published parameter sets quote I directly and gamma_d only to rounding.
  std::optional<double> indistinguishability;

  double effective_indistinguishability() const;
};

struct BranchingBetas {
  double beta_par = 1.0;        ///< vertical, into waveguide
  double beta_perp = 0.0;       ///< diagonal, into waveguide
  double beta_par_leak = 0.0;   ///< vertical, out of waveguide
  double beta_perp_leak = 0.0;  ///< diagonal, out of waveguide

  double vertical() const { return beta_par + beta_par_leak; }
  double diagonal() const { return beta_perp + beta_perp_leak; }
  double sum() const { return beta_par + beta_perp + beta_par_leak + beta_perp_leak; }

  /// Betas with no out-of-waveguide emission and the given branching parameter.
  static BranchingBetas from_branching(double b) {
    if (!(b >= 0.0)) throw DomainError("branching parameter must be >= 0");
    if (std::isinf(b)) return {1.0, 0.0, 0.0, 0.0};
    return {b / (b + 1.0), 1.0 / (b + 1.0), 0.0, 0.0};
  }

  void check(double tol = 1e-12) const {
    for (double v : {beta_par, beta_perp, beta_par_leak, beta_perp_leak}) {
      if (!(v >= 0.0 && v <= 1.0)) throw DomainError("beta outside [0, 1]");
    }
    if (std::abs(sum() - 1.0) > tol) throw DomainError("betas do not sum to 1");
  }
};

/// Result of B = (beta_par + beta_par') / (beta_perp + beta_perp') when the
/// diagonal weight vanishes.
struct FullyCycling {
  bool operator==(const FullyCycling&) const = default;
};

using BranchingRatio = std::variant<double, FullyCycling>;

inline double indistinguishability(double gamma, double gamma_d) {
  if (!(gamma > 0.0)) throw DomainError("indistinguishability: gamma must be > 0");
  if (!(gamma_d >= 0.0)) throw DomainError("indistinguishability: gamma_d must be >= 0");
  return gamma / (gamma + 2.0 * gamma_d);
}

inline double PhysicalParams::effective_indistinguishability() const {
  return indistinguishability.value_or(tbgen::indistinguishability(gamma, gamma_d));
}

/// Trion detuning produced by a Zeeman field, rad/ns.
inline double zeeman_detuning(double g_factor, double b_field) {
  if (!(g_factor > 0.0)) throw DomainError("zeeman_detuning: g_factor must be > 0");
  if (!(b_field >= 0.0)) throw DomainError("zeeman_detuning: b_field must be >= 0");
  return kTwoPi * g_factor * kBohrMagnetonOverPlanck * b_field;
}

inline BranchingRatio branching_from_betas(const BranchingBetas& betas) {
  const double diag = betas.diagonal();
  if (diag <= 0.0) return FullyCycling{};
  return betas.vertical() / diag;
}

inline double branching_value(const BranchingRatio& b) {
  if (const auto* v = std::get_if<double>(&b)) return *v;
  return kInfinity;
}

/// Throws ValidationError naming every offending field.
inline PhysicalParams validate_params(const PhysicalParams& p) {
  std::vector<ValidationError::Field> bad;
  auto positive = [&](const char* name, double v) {
    if (!(v > 0.0)) bad.push_back({name, "must be > 0"});
  };
  positive("gamma", p.gamma);
  if (!(p.gamma_d >= 0.0) || std::isinf(p.gamma_d)) bad.push_back({"gamma_d", "must be finite and >= 0"});
  positive("delta", p.delta);
  if (!(p.branching >= 0.0)) bad.push_back({"branching", "must be >= 0"});
  if (!(p.eta >= 0.0 && p.eta <= 1.0)) bad.push_back({"eta", "must lie in [0, 1]"});
  positive("t_cycle", p.t_cycle);
  positive("t2_star", p.t2_star);
  positive("t2", p.t2);
  positive("g_factor", p.g_factor);
  if (!(p.b_field >= 0.0)) bad.push_back({"b_field", "must be >= 0"});
  positive("n_g", p.n_g);
  positive("gamma_bulk", p.gamma_bulk);
  if (p.indistinguishability && !(*p.indistinguishability > 0.0 && *p.indistinguishability <= 1.0)) {
    bad.push_back({"indistinguishability", "must lie in (0, 1]"});
  }
  if (std::isinf(p.gamma) || std::isinf(p.t_cycle)) bad.push_back({"gamma/t_cycle", "must be finite"});
  if (!bad.empty()) throw ValidationError(std::move(bad));
  return p;
}

namespace presets {

/// Experimentally measured parameter set: B = 15, Delta = 2pi x 16 GHz,
/// gamma = 3.2 / ns, I = 0.96 (gamma_d = 0.06 / ns), eta = 0.84, T_cycle = 27 ns.
inline PhysicalParams reference() {
  PhysicalParams p;
  p.gamma = 3.2;
  p.gamma_d = 0.06;
  p.delta = kTwoPi * 16.0;
  p.branching = 15.0;
  p.eta = 0.84;
  p.t_cycle = 27.0;
  p.n_g = 20.0;
  p.indistinguishability = 0.96;
  return p;
}

/// Improved waveguide design: B = 140 at n_g = 56, Delta = 2pi x 64 GHz,
/// gamma = 5.3 / ns, I = 0.98.
inline PhysicalParams improved() {
  PhysicalParams p = reference();
  p.gamma = 5.3;
  p.delta = kTwoPi * 64.0;
  p.branching = 140.0;
  p.n_g = 56.0;
  p.indistinguishability = 0.98;
  return p;
}

/// Imperfection-free limit (I = 1, Delta -> inf, B -> inf, lossless).
inline PhysicalParams ideal() {
  PhysicalParams p = reference();
  p.gamma_d = 0.0;
  p.delta = kInfinity;
  p.branching = kInfinity;
  p.eta = 1.0;
  p.indistinguishability = 1.0;
  return p;
}

inline PhysicalParams by_name(const std::string& name) {
  if (name == "reference") return reference();
  if (name == "improved") return improved();
  if (name == "ideal") return ideal();
  throw DomainError("unknown preset '" + name + "' (expected reference, improved or ideal)");
}

}  // namespace presets

/// Applies `key = value` overrides whose keys are PhysicalParams field names.
/// `preset = <name>` selects the starting point; `delta_ghz` is accepted as
/// delta / 2pi. Keys not naming a parameter are ignored unless `strict`.
inline PhysicalParams params_from_config(const KeyValueFile& kv, PhysicalParams base = presets::reference(),
                                         bool strict = true) {
  if (auto name = kv.get("preset")) base = presets::by_name(*name);
  struct Field {
    const char* key;
    double PhysicalParams::*member;
  };
  static constexpr Field fields[] = {
      {"gamma", &PhysicalParams::gamma},         {"gamma_d", &PhysicalParams::gamma_d},
      {"delta", &PhysicalParams::delta},         {"branching", &PhysicalParams::branching},
      {"eta", &PhysicalParams::eta},             {"t_cycle", &PhysicalParams::t_cycle},
      {"t2_star", &PhysicalParams::t2_star},     {"t2", &PhysicalParams::t2},
      {"g_factor", &PhysicalParams::g_factor},   {"b_field", &PhysicalParams::b_field},
      {"n_g", &PhysicalParams::n_g},             {"gamma_bulk", &PhysicalParams::gamma_bulk},
  };
  for (const auto& e : kv.entries()) {
    if (e.key == "preset") continue;
    bool known = false;
    for (const auto& f : fields) {
      if (e.key == f.key) {
        base.*(f.member) = kv.get_double(e);
        known = true;
      }
    }
    if (e.key == "delta_ghz") {
      base.delta = kTwoPi * kv.get_double(e);
      known = true;
    } else if (e.key == "indistinguishability") {
      if (e.value == "derived") {
        base.indistinguishability.reset();
      } else {
        base.indistinguishability = kv.get_double(e);
      }
      known = true;
    }
    if (!known && strict) throw ParseError(kv.source(), e.line, "unknown parameter '" + e.key + "'");
  }
  return validate_params(base);
}

}  // namespace tbgen
