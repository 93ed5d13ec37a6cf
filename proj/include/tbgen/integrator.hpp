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

// Explicit Runge-Kutta integrators for Eigen-valued states.
//
// `State` must support `a + b`, `double * a` and `.cwiseAbs()` (any dense
// Eigen matrix or array works). The right-hand side has signature
// `State f(double t, const State& y)`.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <sstream>

#include "tbgen/errors.hpp"

namespace tbgen::ode {

struct AdaptiveOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double initial_step = 0.0;  ///< 0 picks (t1 - t0) / 100
  double min_step = 1e-14;
  std::size_t max_steps = 5'000'000;
};

struct Stats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  double last_step = 0.0;
};

/// Classic fixed-step fourth-order Runge-Kutta.
template <class State, class Rhs>
void integrate_rk4(Rhs&& f, State& y, double t0, double t1, std::size_t steps) {
  const double h = (t1 - t0) / static_cast<double>(steps);
  double t = t0;
  for (std::size_t i = 0; i < steps; ++i) {
    const State k1 = f(t, y);
    const State k2 = f(t + 0.5 * h, State(y + (0.5 * h) * k1));
    const State k3 = f(t + 0.5 * h, State(y + (0.5 * h) * k2));
    const State k4 = f(t + h, State(y + h * k3));
    y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t = t0 + (i + 1) * h;
  }
}

/// Dormand-Prince 5(4) with proportional step control. Advances `y` from t0
/// to t1 exactly; `h` carries the suggested step size between calls.
template <class State, class Rhs>
Stats integrate_dopri5(Rhs&& f, State& y, double t0, double t1, const AdaptiveOptions& opt, double* h_io = nullptr) {
  constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  constexpr double a21 = 1.0 / 5;
  constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                   a65 = -5103.0 / 18656;
  constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // b - b*, embedded fourth-order difference
  constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                   e6 = 22.0 / 525, e7 = -1.0 / 40;

  Stats stats;
  const double span = t1 - t0;
  if (span <= 0.0) return stats;
  double h = (h_io && *h_io > 0.0) ? *h_io : (opt.initial_step > 0.0 ? opt.initial_step : span / 100.0);
  double t = t0;
  State k1 = f(t, y);
  while (t < t1) {
    bool last = false;
    if (t + h >= t1) {
      h = t1 - t;
      last = true;
    }
    const State k2 = f(t + c2 * h, State(y + h * (a21 * k1)));
    const State k3 = f(t + c3 * h, State(y + h * (a31 * k1 + a32 * k2)));
    const State k4 = f(t + c4 * h, State(y + h * (a41 * k1 + a42 * k2 + a43 * k3)));
    const State k5 = f(t + c5 * h, State(y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)));
    const State k6 = f(t + h, State(y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)));
    const State y_new = y + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    const State k7 = f(t + h, y_new);
    const State err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

    const auto scale = (opt.atol + opt.rtol * y.cwiseAbs().cwiseMax(y_new.cwiseAbs()).array()).eval();
    const double err_norm = (err.cwiseAbs().array() / scale).maxCoeff();

    if (err_norm <= 1.0) {
      t = last ? t1 : t + h;
      y = y_new;
      k1 = k7;
      ++stats.accepted;
      stats.last_step = h;
      const double grow = err_norm == 0.0 ? 5.0 : std::min(5.0, 0.9 * std::pow(err_norm, -0.2));
      if (!last) h *= std::max(1.0, grow);
    } else {
      ++stats.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err_norm, -0.2));
    }
    if (h < opt.min_step && t < t1) {
      std::ostringstream msg;
      msg << "step size underflow at t = " << t << " (h = " << h << ", error norm " << err_norm << ")";
      throw IntegrationError(msg.str());
    }
    if (stats.accepted + stats.rejected > opt.max_steps) {
      std::ostringstream msg;
      msg << "step budget exhausted at t = " << t << " after " << opt.max_steps << " steps";
      throw IntegrationError(msg.str());
    }
  }
  if (h_io) *h_io = stats.last_step > 0.0 ? stats.last_step : h;
  return stats;
}

}  // namespace tbgen::ode
