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

// First-order error budget of the time-bin GHZ / linear-cluster protocol.

#pragma once

#include <cmath>
#include <numbers>

#include "tbgen/errors.hpp"
#include "tbgen/params.hpp"

namespace tbgen {

/// sqrt(3) pi / 8: optimal square-pulse excitation error per photon in units of gamma/Delta.
inline constexpr double kExcitationCoefficient = std::numbers::sqrt3 * std::numbers::pi / 8.0;

struct InfidelityBudget {
  double e_ph = 0.0;   ///< phonon dephasing
  double e_exc = 0.0;  ///< excitation errors
  double e_br = 0.0;   ///< imperfect branching, N/(2(B+1)) - 1/(4(B+1))
  double total = 0.0;
};

struct PerQubitInfidelity {
  double single_qubit = 0.0;
  double two_qubit = 0.0;
  double total = 0.0;
};

namespace detail {

inline double gamma_over_delta(const PhysicalParams& p) { return std::isinf(p.delta) ? 0.0 : p.gamma / p.delta; }

inline double inverse_b_plus_one(const PhysicalParams& p) {
  return std::isinf(p.branching) ? 0.0 : 1.0 / (p.branching + 1.0);
}

}  // namespace detail

/// Conditional infidelity of an N-photon GHZ or cluster state to first order.
/// Identical for both target kinds.
inline InfidelityBudget infidelity_first_order(const PhysicalParams& params, int n_photons) {
  if (n_photons < 1) throw DomainError("infidelity_first_order: n_photons must be >= 1");
  const double n = n_photons;
  const double inv_b = detail::inverse_b_plus_one(params);
  InfidelityBudget b;
  b.e_ph = n * (1.0 - params.effective_indistinguishability()) / 2.0;
  b.e_exc = n * kExcitationCoefficient * detail::gamma_over_delta(params);
  b.e_br = n * inv_b / 2.0 - inv_b / 4.0;
  b.total = b.e_ph + b.e_exc + b.e_br;
  return b;
}

/// Large-N slope of the budget, split into single-qubit (dephasing +
/// excitation) and two-qubit (branching) errors.
inline PerQubitInfidelity per_qubit_infidelity(const PhysicalParams& params) {
  PerQubitInfidelity q;
  q.single_qubit = (1.0 - params.effective_indistinguishability()) / 2.0 +
                   kExcitationCoefficient * detail::gamma_over_delta(params);
  q.two_qubit = detail::inverse_b_plus_one(params) / 2.0;
  q.total = q.single_qubit + q.two_qubit;
  return q;
}

/// Residual slow-noise error N * c_model * (T_cycle / T2)^2. The constant is
/// model dependent; 1/2 corresponds to a Gaussian phase variance convention.
inline double t2_drift_error(double t_cycle, double t2, int n_photons, double c_model = 0.5) {
  if (!(t2 > 0.0)) throw DomainError("t2_drift_error: t2 must be > 0");
  if (std::isinf(t2)) return 0.0;
  const double r = t_cycle / t2;
  return n_photons * c_model * r * r;
}

/// State generation rate eta^N / (N T_cycle), Hz for t_cycle in ns.
inline double generation_rate(double eta, double t_cycle, int n_photons) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("generation_rate: eta must lie in [0, 1]");
  if (n_photons < 1) throw DomainError("generation_rate: n_photons must be >= 1");
  if (!(t_cycle > 0.0)) throw DomainError("generation_rate: t_cycle must be > 0");
  return std::pow(eta, n_photons) / (n_photons * t_cycle * 1e-9);
}

}  // namespace tbgen
