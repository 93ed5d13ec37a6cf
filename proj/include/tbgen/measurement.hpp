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

// Time-bin measurement model: a Z measurement sends photons through one
// interferometer arm, an XPhase(phi) measurement interferes early and late
// components with relative phase phi. Detection efficiency eta is a uniform
// per-photon loss. The spin, when measured, is read out without loss in the
// same basis conventions (early <-> G-down).

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "tbgen/errors.hpp"
#include "tbgen/parallel.hpp"
#include "tbgen/protocol.hpp"

namespace tbgen {

enum class Basis { z, xphase };
enum class Routing { active, passive };
enum class Outcome { early, late, plus, minus, no_click };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::early: return "early";
    case Outcome::late: return "late";
    case Outcome::plus: return "plus";
    case Outcome::minus: return "minus";
    case Outcome::no_click: return "no_click";
  }
  return "?";
}

struct BasisSetting {
  Basis basis = Basis::z;
  double phase = 0.0;  ///< rad, XPhase only
  Routing routing = Routing::active;

  static BasisSetting z() { return {}; }
  static BasisSetting xphase(double phi) { return {Basis::xphase, phi, Routing::active}; }
  static BasisSetting x() { return xphase(0.0); }
  static BasisSetting y() { return xphase(0.5 * std::numbers::pi); }
  static BasisSetting passive(double phi) { return {Basis::xphase, phi, Routing::passive}; }

  void check() const {
    if (!(phase >= 0.0 && phase < 2.0 * std::numbers::pi)) throw DomainError("BasisSetting: phase must lie in [0, 2 pi)");
  }

  /// Whether `o` can be produced under this setting.
  bool allows(Outcome o) const {
    if (o == Outcome::no_click) return true;
    const bool z_outcome = o == Outcome::early || o == Outcome::late;
    if (routing == Routing::passive) return true;
    return basis == Basis::z ? z_outcome : !z_outcome;
  }
};

struct PovmElement {
  Outcome outcome;
  Eigen::Matrix2cd op;
};

/// Positive operators of one time-bin qubit for a setting; they sum to the
/// identity. Passive routing splits every click evenly between the Z and
/// XPhase arms.
inline std::vector<PovmElement> povm_elements(const BasisSetting& s, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw DomainError("povm_elements: eta must lie in [0, 1]");
  s.check();
  auto proj = [](const Eigen::Vector2cd& v) -> Eigen::Matrix2cd { return v * v.adjoint(); };
  const Eigen::Vector2cd e(1.0, 0.0), l(0.0, 1.0);
  const cd ph = std::polar(1.0, s.phase);
  const Eigen::Vector2cd plus = (e + ph * l) / std::numbers::sqrt2;
  const Eigen::Vector2cd minus = (e - ph * l) / std::numbers::sqrt2;
  std::vector<PovmElement> out;
  const bool z_arm = s.routing == Routing::passive || s.basis == Basis::z;
  const bool x_arm = s.routing == Routing::passive || s.basis == Basis::xphase;
  const double w = s.routing == Routing::passive ? 0.5 * eta : eta;
  if (z_arm) {
    out.push_back({Outcome::early, w * proj(e)});
    out.push_back({Outcome::late, w * proj(l)});
  }
  if (x_arm) {
    out.push_back({Outcome::plus, w * proj(plus)});
    out.push_back({Outcome::minus, w * proj(minus)});
  }
  out.push_back({Outcome::no_click, (1.0 - eta) * Eigen::Matrix2cd::Identity()});
  return out;
}

/// +1 / -1 eigenvalue of a click, 0 for no click.
inline int outcome_sign(Outcome o) {
  switch (o) {
    case Outcome::early:
    case Outcome::plus: return 1;
    case Outcome::late:
    case Outcome::minus: return -1;
    default: return 0;
  }
}

struct DetectionRecord {
  std::uint64_t shot = 0;
  std::string setting;
  std::vector<Outcome> outcomes;  ///< photons in emission order, then the spin if measured
  bool spin_measured = false;

  bool all_click() const {
    return std::none_of(outcomes.begin(), outcomes.end(), [](Outcome o) { return o == Outcome::no_click; });
  }
};

/// Joint outcome distribution of a product measurement.
struct OutcomeDistribution {
  std::vector<std::vector<Outcome>> outcomes;
  std::vector<double> probabilities;
};

namespace detail {

inline void enumerate_outcomes(const Eigen::MatrixXcd& m, const std::vector<std::vector<PovmElement>>& povms,
                               std::size_t q, std::vector<Outcome>& prefix, OutcomeDistribution& out) {
  if (q == povms.size()) {
    out.outcomes.push_back(prefix);
    out.probabilities.push_back(std::max(0.0, m(0, 0).real()));
    return;
  }
  const Eigen::Index h = m.rows() / 2;
  for (const auto& el : povms[q]) {
    // partial trace of (E (x) 1) m over the leading qubit
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(h, h);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        if (el.op(j, i) != 0.0) r += el.op(j, i) * m.block(i * h, j * h, h, h);
    prefix.push_back(el.outcome);
    enumerate_outcomes(r, povms, q + 1, prefix, out);
    prefix.pop_back();
  }
}

}  // namespace detail

/// Density operator seen by the detectors: the coherent part plus the
/// orthogonal-error mass, spread uniformly over the complement of `target`
/// (or over the whole space when no target is given).
inline Eigen::MatrixXcd detected_density(const HybridState& state, const Eigen::VectorXcd* target = nullptr) {
  const Eigen::Index d = state.dim();
  Eigen::MatrixXcd rho = state.rho;
  if (state.orthogonal_error_mass > 0.0) {
    Eigen::MatrixXcd fill = Eigen::MatrixXcd::Identity(d, d);
    if (target != nullptr) {
      if (target->size() != d) throw DomainError("detected_density: target dimension mismatch");
      fill -= (*target) * target->adjoint() / target->squaredNorm();
      fill /= static_cast<double>(d - 1);
    } else {
      fill /= static_cast<double>(d);
    }
    rho += state.orthogonal_error_mass * fill;
  }
  return rho / rho.trace().real();
}

/// Exact joint distribution for `settings`: one per photon, plus one for the
/// spin if settings.size() == N + 1 (otherwise the spin is traced out).
inline OutcomeDistribution outcome_distribution(const HybridState& state, const std::vector<BasisSetting>& settings,
                                                double eta, const Eigen::VectorXcd* target = nullptr) {
  const auto n = static_cast<std::size_t>(state.photon_count);
  if (settings.size() != n && settings.size() != n + 1) {
    throw DomainError("outcome_distribution: expected " + std::to_string(n) + " or " + std::to_string(n + 1) +
                      " settings, got " + std::to_string(settings.size()));
  }
  Eigen::MatrixXcd rho = detected_density(state, target);
  if (settings.size() == n) {
    const Eigen::Index h = rho.rows() / 2;
    Eigen::MatrixXcd r(h, h);
    for (Eigen::Index a = 0; a < h; ++a)
      for (Eigen::Index b = 0; b < h; ++b) r(a, b) = rho(2 * a, 2 * b) + rho(2 * a + 1, 2 * b + 1);
    rho = std::move(r);
  }
  std::vector<std::vector<PovmElement>> povms;
  for (std::size_t q = 0; q < settings.size(); ++q) povms.push_back(povm_elements(settings[q], q < n ? eta : 1.0));
  OutcomeDistribution out;
  std::vector<Outcome> prefix;
  detail::enumerate_outcomes(rho, povms, 0, prefix, out);
  return out;
}

/// i.i.d. shots from the joint distribution. Shot i draws from a seed
/// derived from (seed, i), so records do not depend on thread scheduling.
inline std::vector<DetectionRecord> sample_measurements(const HybridState& state,
                                                        const std::vector<BasisSetting>& settings, std::uint64_t shots,
                                                        std::uint64_t seed, double eta = 1.0,
                                                        const std::string& label = "",
                                                        const Eigen::VectorXcd* target = nullptr) {
  if (shots < 1) throw DomainError("sample_measurements: shots must be >= 1");
  const OutcomeDistribution dist = outcome_distribution(state, settings, eta, target);
  std::vector<double> cdf(dist.probabilities.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < cdf.size(); ++i) cdf[i] = (acc += dist.probabilities[i]);
  const bool spin = settings.size() == static_cast<std::size_t>(state.photon_count) + 1;
  std::vector<DetectionRecord> out(shots);
  parallel_for(shots, [&](std::size_t i) {
    const double u = static_cast<double>(mix_seed(seed, i) >> 11) * 0x1.0p-53 * acc;
    const auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    out[i] = {i, label, dist.outcomes[std::min(k, cdf.size() - 1)], spin};
  });
  return out;
}

inline void write_records_csv(std::ostream& os, const std::vector<DetectionRecord>& records) {
  os << "shot,setting,qubit,outcome\n";
  for (const auto& r : records) {
    for (std::size_t q = 0; q < r.outcomes.size(); ++q) {
      os << r.shot << ',' << r.setting << ',' << q << ',' << to_string(r.outcomes[q]) << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// GHZ population + parity witness

inline std::string ghz_setting_label(int k) { return k < 0 ? "Z" : "parity" + std::to_string(k); }

/// Settings of the witness: all-Z plus XPhase(k pi / n) on every qubit for
/// k = 0 .. 2n-1.
inline std::vector<std::pair<std::string, std::vector<BasisSetting>>> ghz_witness_settings(int n_qubits) {
  if (n_qubits < 1) throw DomainError("ghz_witness_settings: n_qubits must be >= 1");
  std::vector<std::pair<std::string, std::vector<BasisSetting>>> out;
  out.emplace_back(ghz_setting_label(-1), std::vector<BasisSetting>(n_qubits, BasisSetting::z()));
  for (int k = 0; k < 2 * n_qubits; ++k) {
    const double phi = k * std::numbers::pi / n_qubits;
    out.emplace_back(ghz_setting_label(k), std::vector<BasisSetting>(n_qubits, BasisSetting::xphase(phi)));
  }
  return out;
}

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};

namespace detail {

struct GhzTallies {
  double all_early = 0, all_late = 0, z_shots = 0;
  std::vector<double> parity_sum, parity_shots;
};

inline double ghz_from_tallies(const GhzTallies& t, int n, double parity_sign) {
  if (t.z_shots <= 0) return std::nan("");
  double osc = 0.0;
  for (int k = 0; k < 2 * n; ++k) {
    if (t.parity_shots[k] <= 0) return std::nan("");
    osc += ((k % 2) ? -1.0 : 1.0) * t.parity_sum[k] / t.parity_shots[k];
  }
  osc /= 2.0 * n;
  return 0.5 * ((t.all_early + t.all_late) / t.z_shots + parity_sign * osc);
}

}  // namespace detail

/// Fidelity with (|0..0> + parity_sign |1..1>)/sqrt(2) from all-click shots,
/// with a delete-one-block jackknife error over `blocks` shot blocks.
inline Estimate estimate_ghz_fidelity(const std::vector<DetectionRecord>& records, int n_qubits,
                                      double parity_sign = 1.0, int blocks = 20) {
  if (n_qubits < 1) throw DomainError("estimate_ghz_fidelity: n_qubits must be >= 1");
  std::map<std::string, int> index{{ghz_setting_label(-1), -1}};
  for (int k = 0; k < 2 * n_qubits; ++k) index[ghz_setting_label(k)] = k;
  std::vector<bool> seen(2 * n_qubits + 1, false);
  auto empty = [&] {
    detail::GhzTallies t;
    t.parity_sum.assign(2 * n_qubits, 0.0);
    t.parity_shots.assign(2 * n_qubits, 0.0);
    return t;
  };
  std::vector<detail::GhzTallies> per_block(blocks, empty());
  for (const auto& r : records) {
    auto it = index.find(r.setting);
    if (it == index.end()) continue;
    if (static_cast<int>(r.outcomes.size()) != n_qubits) {
      throw DomainError("estimate_ghz_fidelity: record with wrong qubit count");
    }
    seen[it->second + 1] = true;
    if (!r.all_click()) continue;
    auto& t = per_block[r.shot % blocks];
    if (it->second < 0) {
      t.z_shots += 1;
      if (std::all_of(r.outcomes.begin(), r.outcomes.end(), [](Outcome o) { return o == Outcome::early; })) {
        t.all_early += 1;
      }
      if (std::all_of(r.outcomes.begin(), r.outcomes.end(), [](Outcome o) { return o == Outcome::late; })) {
        t.all_late += 1;
      }
    } else {
      int sign = 1;
      for (Outcome o : r.outcomes) sign *= outcome_sign(o);
      t.parity_sum[it->second] += sign;
      t.parity_shots[it->second] += 1;
    }
  }
  std::vector<std::string> missing;
  if (!seen[0]) missing.push_back("Z");
  for (int k = 0; k < 2 * n_qubits; ++k) {
    if (!seen[k + 1]) missing.push_back("phi_" + std::to_string(k) + "=" + std::to_string(k) + "pi/" + std::to_string(n_qubits));
  }
  if (!missing.empty()) throw EstimatorError("estimate_ghz_fidelity: missing settings", missing);

  auto sum_except = [&](int skip) {
    detail::GhzTallies t = empty();
    for (int b = 0; b < blocks; ++b) {
      if (b == skip) continue;
      const auto& s = per_block[b];
      t.all_early += s.all_early;
      t.all_late += s.all_late;
      t.z_shots += s.z_shots;
      for (int k = 0; k < 2 * n_qubits; ++k) {
        t.parity_sum[k] += s.parity_sum[k];
        t.parity_shots[k] += s.parity_shots[k];
      }
    }
    return t;
  };
  Estimate out;
  out.value = detail::ghz_from_tallies(sum_except(-1), n_qubits, parity_sign);
  if (std::isnan(out.value)) throw EstimatorError("estimate_ghz_fidelity: no all-click shots for", {"some setting"});
  if (blocks > 1) {
    std::vector<double> loo(blocks);
    double mean = 0.0;
    for (int b = 0; b < blocks; ++b) mean += (loo[b] = detail::ghz_from_tallies(sum_except(b), n_qubits, parity_sign));
    mean /= blocks;
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    out.std_error = std::sqrt((blocks - 1.0) / blocks * ss);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Stabilizer sampling (diagnostic)

struct StabilizerSampling {
  std::vector<Estimate> expectations;  ///< frame-corrected, one per generator
  double fidelity_lower_bound = 0.0;   ///< 1 - sum_i (1 - <K_i>) / 2
};

/// Measures each frame-corrected generator in its own product eigenbasis
/// (X where the generator has X, Z elsewhere) on all N photons and the spin.
inline StabilizerSampling stabilizer_sampling(const HybridState& state, TargetKind kind, std::uint64_t shots,
                                              std::uint64_t seed, double eta = 1.0, bool echo = true,
                                              const Eigen::VectorXcd* target = nullptr) {
  const StabilizerFrame frame = stabilizer_frame(state.photon_count, kind, echo);
  StabilizerSampling out;
  out.fidelity_lower_bound = 1.0;
  for (std::size_t g = 0; g < frame.generators.size(); ++g) {
    const PauliString& p = frame.generators[g];
    std::vector<BasisSetting> settings;
    for (char c : p) settings.push_back(c == 'X' ? BasisSetting::x() : BasisSetting::z());
    const auto records = sample_measurements(state, settings, shots, mix_seed(seed, g), eta, p, target);
    double sum = 0.0, sum2 = 0.0, n = 0.0;
    for (const auto& r : records) {
      if (!r.all_click()) continue;
      int sign = 1;
      for (std::size_t q = 0; q < p.size(); ++q)
        if (p[q] != 'I') sign *= outcome_sign(r.outcomes[q]);
      sum += sign;
      sum2 += 1.0;
      n += 1.0;
    }
    Estimate e;
    if (n > 0) {
      const double mean = sum / n;
      e.value = frame.signs[g] * mean;
      e.std_error = n > 1 ? std::sqrt(std::max(0.0, (sum2 / n - mean * mean) / (n - 1))) : 0.0;
    }
    out.expectations.push_back(e);
    out.fidelity_lower_bound -= 0.5 * (1.0 - e.value);
  }
  return out;
}

}  // namespace tbgen
