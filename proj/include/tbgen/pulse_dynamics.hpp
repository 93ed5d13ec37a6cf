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

// Driven four-level emitter: Lindblad evolution during an optical pulse and the
// following decay window, photon-counting bookkeeping of excitation errors, and
// pulse-duration optimisation.
//
// Basis order: |G-down>, |G-up> (hole spin), |T-down>, |T-up> (trion). The
// laser drives |G-down> <-> |T-down>; the same polarisation drives the
// |G-up> <-> |T-up> transition off-resonantly, detuned by delta. Cross
// transitions are not driven.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "tbgen/errors.hpp"
#include "tbgen/integrator.hpp"
#include "tbgen/params.hpp"

namespace tbgen {

using cd = std::complex<double>;
using Matrix4cd = Eigen::Matrix4cd;

enum Level : int { kGroundDown = 0, kGroundUp = 1, kTrionDown = 2, kTrionUp = 3 };

struct LevelSystem {
  /// Decay rates out of either trion, split by polarisation and destination.
  struct ChannelRates {
    double vertical_wg = 0.0;
    double vertical_leak = 0.0;
    double diagonal_wg = 0.0;
    double diagonal_leak = 0.0;

    double vertical() const { return vertical_wg + vertical_leak; }
    double diagonal() const { return diagonal_wg + diagonal_leak; }
    double total() const { return vertical() + diagonal(); }
  };

  double ground_splitting = 0.0;  ///< rad/ns, |G-up> sits at +ground_splitting/2
  double delta = 0.0;             ///< off-resonant detuning, rad/ns
  ChannelRates rates;
  double dephasing = 0.0;  ///< pure dephasing of trion coherences, 1/ns

  double gamma() const { return rates.total(); }

  BranchingBetas betas() const {
    const double g = gamma();
    return {rates.vertical_wg / g, rates.diagonal_wg / g, rates.vertical_leak / g, rates.diagonal_leak / g};
  }

  static LevelSystem from_betas(double gamma, double delta, const BranchingBetas& b, double dephasing = 0.0) {
    if (!(gamma > 0.0)) throw DomainError("LevelSystem: gamma must be > 0");
    b.check(1e-12);
    LevelSystem s;
    s.delta = delta;
    s.dephasing = dephasing;
    s.rates = {gamma * b.beta_par, gamma * b.beta_par_leak, gamma * b.beta_perp, gamma * b.beta_perp_leak};
    return s;
  }

  static LevelSystem from_params(const PhysicalParams& p, std::optional<BranchingBetas> betas = std::nullopt) {
    return from_betas(p.gamma, p.delta, betas.value_or(BranchingBetas::from_branching(p.branching)), p.gamma_d);
  }
};

enum class PulseShape { square, gaussian };

/// Optical excitation pulse starting at t = 0.
///
/// `duration` is the full width for square pulses and the FWHM for Gaussian
/// pulses; Gaussian envelopes are truncated at +-3 sigma, so they occupy
/// [0, 6 sigma].
struct Pulse {
  PulseShape shape = PulseShape::square;
  double duration = 0.0;
  double peak_rabi = 0.0;  ///< rad/ns
  double carrier_detuning = 0.0;

  static constexpr double kTruncation = 3.0;

  double sigma() const { return duration / (2.0 * std::sqrt(2.0 * std::numbers::ln2)); }

  double end_time() const { return shape == PulseShape::square ? duration : 2.0 * kTruncation * sigma(); }

  double rabi(double t) const {
    if (t < 0.0 || t > end_time()) return 0.0;
    if (shape == PulseShape::square) return peak_rabi;
    const double x = (t - kTruncation * sigma()) / sigma();
    return peak_rabi * std::exp(-0.5 * x * x);
  }

  /// Area per unit peak Rabi frequency.
  double unit_area() const {
    if (shape == PulseShape::square) return duration;
    return sigma() * std::sqrt(2.0 * std::numbers::pi) * std::erf(kTruncation / std::numbers::sqrt2);
  }

  double area() const { return peak_rabi * unit_area(); }

  /// Pulse of the given shape and duration whose (truncated) area equals `area`.
  static Pulse with_area(PulseShape shape, double duration, double area = std::numbers::pi,
                         double carrier_detuning = 0.0) {
    if (!(duration > 0.0)) throw DomainError("Pulse: duration must be > 0");
    Pulse p{shape, duration, 0.0, carrier_detuning};
    p.peak_rabi = area / p.unit_area();
    return p;
  }

  /// Zero-amplitude placeholder, used for free evolution.
  static Pulse none() { return Pulse{PulseShape::square, 0.0, 0.0, 0.0}; }
};

namespace detail {

inline Matrix4cd hamiltonian(const LevelSystem& s, const Pulse& pulse, double t) {
  Matrix4cd h = Matrix4cd::Zero();
  const double half_g = 0.5 * s.ground_splitting;
  h(kGroundDown, kGroundDown) = -half_g;
  h(kGroundUp, kGroundUp) = half_g;
  h(kTrionDown, kTrionDown) = -half_g - pulse.carrier_detuning;
  h(kTrionUp, kTrionUp) = half_g + s.delta - pulse.carrier_detuning;
  const double half_rabi = 0.5 * pulse.rabi(t);
  h(kTrionDown, kGroundDown) = h(kGroundDown, kTrionDown) = half_rabi;
  h(kTrionUp, kGroundUp) = h(kGroundUp, kTrionUp) = half_rabi;
  return h;
}

/// Photon-counting Lindblad generator. Sector k holds the (unnormalised)
/// state conditioned on k emissions; the last sector absorbs k >= Sectors-1.
template <int Sectors>
struct CountingGenerator {
  using State = Eigen::Matrix<cd, 4, 4 * Sectors>;

  const LevelSystem* system;
  const Pulse* pulse;

  State operator()(double t, const State& y) const {
    const Matrix4cd h = hamiltonian(*system, *pulse, t);
    const auto& r = system->rates;
    const double gv = r.vertical();
    const double gd = r.diagonal();
    const double decay = 0.5 * (gv + gd);
    const double deph = system->dephasing;

    State out;
    for (int k = 0; k < Sectors; ++k) {
      const auto rho = y.template middleCols<4>(4 * k);
      Matrix4cd d = cd(0.0, -1.0) * (h * rho - rho * h);
      // anticommutator with sum_j L_j^dag L_j = gamma (P_Td + P_Tu), plus
      // pure dephasing of ground-trion coherences at rate `deph`
      for (int i = 0; i < 4; ++i) {
        for (int j = 0; j < 4; ++j) {
          const bool ti = i >= kTrionDown;
          const bool tj = j >= kTrionDown;
          double rate = decay * (ti + tj);
          if (ti != tj) rate += deph;
          d(i, j) -= rate * rho(i, j);
        }
      }
      out.template middleCols<4>(4 * k) = d;
    }
    // jumps feed sector k+1 (the last sector feeds itself); the four decay
    // channels end in distinct photon modes, so they only move population
    for (int k = 0; k < Sectors; ++k) {
      const auto rho = y.template middleCols<4>(4 * k);
      const int dst = std::min(k + 1, Sectors - 1);
      auto target = out.template middleCols<4>(4 * dst);
      target(kGroundDown, kGroundDown) += gv * rho(kTrionDown, kTrionDown) + gd * rho(kTrionUp, kTrionUp);
      target(kGroundUp, kGroundUp) += gd * rho(kTrionDown, kTrionDown) + gv * rho(kTrionUp, kTrionUp);
    }
    return out;
  }
};

inline void check_density_operator(const Matrix4cd& rho, double tol = 1e-12) {
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) {
    throw DomainError("initial state is not Hermitian");
  }
  if (std::abs(rho.trace() - 1.0) > tol) throw DomainError("initial state does not have unit trace");
  Eigen::SelfAdjointEigenSolver<Matrix4cd> es(rho);
  if (es.eigenvalues().minCoeff() < -tol) throw DomainError("initial state is not positive semidefinite");
}

}  // namespace detail

struct MasterEquationOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double sample_dt = 0.0;  ///< 0 records only the pulse end and the horizon
};

struct MasterEquationTrace {
  std::vector<double> times;
  std::vector<Matrix4cd> states;
  double pulse_end = 0.0;
};

/// Integrates the Lindblad master equation from t = 0 to `horizon`.
/// `horizon` must cover the pulse and at least 8/gamma of decay.
inline MasterEquationTrace integrate_master_equation(const LevelSystem& system, const Pulse& pulse,
                                                     const Matrix4cd& initial, double horizon,
                                                     const MasterEquationOptions& options = {}) {
  detail::check_density_operator(initial);
  const double pulse_end = pulse.end_time();
  if (horizon < pulse_end + 8.0 / system.gamma() - 1e-12) {
    throw DomainError("integrate_master_equation: horizon must cover the pulse plus 8/gamma");
  }
  using Gen = detail::CountingGenerator<1>;
  Gen gen{&system, &pulse};
  Gen::State y = initial;

  std::vector<double> marks;
  if (options.sample_dt > 0.0) {
    for (double t = options.sample_dt; t < horizon - 1e-12; t += options.sample_dt) marks.push_back(t);
  }
  if (pulse_end > 0.0) marks.push_back(pulse_end);
  marks.push_back(horizon);
  std::sort(marks.begin(), marks.end());
  marks.erase(std::unique(marks.begin(), marks.end(), [](double a, double b) { return std::abs(a - b) < 1e-12; }),
              marks.end());

  ode::AdaptiveOptions ao;
  ao.rtol = options.rtol;
  ao.atol = options.atol;
  MasterEquationTrace trace;
  trace.pulse_end = pulse_end;
  trace.times.push_back(0.0);
  trace.states.push_back(initial);
  double t = 0.0;
  double h = 0.0;
  for (double mark : marks) {
    // do not step across the pulse edge
    ode::integrate_dopri5(gen, y, t, mark, ao, &h);
    t = mark;
    trace.times.push_back(t);
    trace.states.push_back(y);
  }
  return trace;
}

/// CSV dump: `# time_ns, rho_00_re, rho_00_im, rho_01_re, ...` (row-major).
inline void write_trace_csv(std::ostream& out, const MasterEquationTrace& trace) {
  out << "# time_ns";
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) out << ",rho_" << i << j << "_re,rho_" << i << j << "_im";
  out << "\n";
  out.precision(12);
  for (std::size_t n = 0; n < trace.times.size(); ++n) {
    out << trace.times[n];
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) out << "," << trace.states[n](i, j).real() << "," << trace.states[n](i, j).imag();
    out << "\n";
  }
}

struct ExcitationErrors {
  double off_resonant = 0.0;          ///< G-up branch: real excitation left at pulse end, then emitted
  double re_excitation = 0.0;         ///< G-down branch: two or more emissions
  double incomplete_inversion = 0.0;  ///< G-down branch: never excited, no emission
  double total = 0.0;                 ///< sum of the three above
  /// G-up branch: emission while the pulse is on (dressed-state scattering).
  /// Reported separately and not part of `total`.
  double in_pulse_scattering = 0.0;
};

namespace detail {

template <int Sectors>
Eigen::Matrix<cd, 4, 4 * Sectors> counting_initial(Level level) {
  Eigen::Matrix<cd, 4, 4 * Sectors> y = Eigen::Matrix<cd, 4, 4 * Sectors>::Zero();
  y(level, level) = 1.0;
  return y;
}

template <int Sectors>
double sector_trace(const Eigen::Matrix<cd, 4, 4 * Sectors>& y, int k) {
  return y.template middleCols<4>(4 * k).trace().real();
}

}  // namespace detail

/// Per-pulse error probabilities with emission-count bookkeeping.
///
/// After the pulse the Hamiltonian is diagonal and every jump maps basis
/// states to basis states, so populations decouple from coherences; the
/// decay window is integrated on the dephased state, which leaves every
/// reported probability unchanged.
inline ExcitationErrors excitation_error_probability(const LevelSystem& system, const Pulse& pulse,
                                                     const ode::AdaptiveOptions& opt = {}) {
  if (std::abs(pulse.area() - std::numbers::pi) > 1e-6) {
    throw DomainError("excitation_error_probability: pulse area must be pi");
  }
  constexpr int kSectors = 3;
  using Gen = detail::CountingGenerator<kSectors>;
  const double t_end = pulse.end_time();
  const double horizon = t_end + 8.0 / system.gamma();
  Gen gen{&system, &pulse};

  auto window = [&](Gen::State y) {
    for (int k = 0; k < kSectors; ++k) {
      Matrix4cd block = y.template middleCols<4>(4 * k);
      y.template middleCols<4>(4 * k) = Matrix4cd(block.diagonal().asDiagonal());
    }
    double h = 0.0;
    ode::integrate_dopri5(gen, y, t_end, horizon, opt, &h);
    return y;
  };

  ExcitationErrors e;
  {
    auto y = detail::counting_initial<kSectors>(kGroundDown);
    double h = 0.0;
    ode::integrate_dopri5(gen, y, 0.0, t_end, opt, &h);
    e.incomplete_inversion = y(kGroundDown, kGroundDown).real();
    const auto end = window(y);
    e.re_excitation = detail::sector_trace<kSectors>(end, 2);
  }
  {
    auto y = detail::counting_initial<kSectors>(kGroundUp);
    double h = 0.0;
    ode::integrate_dopri5(gen, y, 0.0, t_end, opt, &h);
    const double dark_at_end = detail::sector_trace<kSectors>(y, 0);
    e.in_pulse_scattering = 1.0 - dark_at_end;
    const auto end = window(y);
    e.off_resonant = dark_at_end - detail::sector_trace<kSectors>(end, 0);
  }
  e.total = e.off_resonant + e.re_excitation + e.incomplete_inversion;
  return e;
}

struct DurationBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// [1/delta, 1/gamma]: from well inside the bandwidth-limited regime to
/// pulses as long as the radiative lifetime.
inline DurationBounds default_duration_bounds(const LevelSystem& system) {
  return {1.0 / system.delta, 1.0 / system.gamma()};
}

struct OptimizeOptions {
  int scan_points = 96;
  double rel_tol = 1e-3;
};

struct PulseOptimum {
  double duration_opt = 0.0;
  double error_min = 0.0;
  ExcitationErrors errors;
};

/// Minimises the total per-pulse excitation error over the pulse duration at
/// fixed area pi: a log-spaced scan locates the global basin, golden-section
/// search refines it. Throws BracketingError if the best scan point is an
/// endpoint of `bounds`.
inline PulseOptimum optimize_pulse_duration(const LevelSystem& system, PulseShape shape, DurationBounds bounds,
                                            const OptimizeOptions& options = {}) {
  if (!(bounds.lower > 0.0 && bounds.upper > bounds.lower)) throw DomainError("optimize: invalid duration bounds");
  auto cost = [&](double duration) {
    return excitation_error_probability(system, Pulse::with_area(shape, duration)).total;
  };
  const int n = std::max(options.scan_points, 3);
  std::vector<double> grid(n), values(n);
  const double log_lo = std::log(bounds.lower);
  const double log_hi = std::log(bounds.upper);
  for (int i = 0; i < n; ++i) {
    grid[i] = std::exp(log_lo + (log_hi - log_lo) * i / (n - 1));
    values[i] = cost(grid[i]);
  }
  const auto best = static_cast<int>(std::min_element(values.begin(), values.end()) - values.begin());
  if (best == 0 || best == n - 1) {
    throw BracketingError("no interior minimum of the excitation error in [" + std::to_string(bounds.lower) + ", " +
                          std::to_string(bounds.upper) + "] ns");
  }

  constexpr double kInvPhi = 0.6180339887498949;
  double a = grid[best - 1];
  double b = grid[best + 1];
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = cost(c);
  double fd = cost(d);
  while ((b - a) > options.rel_tol * 0.5 * (a + b)) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = cost(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = cost(d);
    }
  }
  PulseOptimum opt;
  opt.duration_opt = 0.5 * (a + b);
  opt.errors = excitation_error_probability(system, Pulse::with_area(shape, opt.duration_opt));
  opt.error_min = opt.errors.total;
  if (values[best] < opt.error_min) {
    opt.duration_opt = grid[best];
    opt.errors = excitation_error_probability(system, Pulse::with_area(shape, grid[best]));
    opt.error_min = opt.errors.total;
  }
  return opt;
}

}  // namespace tbgen
