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

// Sequential composition of cycle maps into spin (x) N photon states.
//
// Basis ordering: photon 1 is the most significant qubit and the spin is the
// least significant, so a state after N cycles has index
//   (p1 p2 ... pN s) read as a binary number, with 0 = early / G-down.
// Qubit labels used for stabilizers follow the same order: qubits 0..N-1 are
// photons and qubit N is the spin.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "tbgen/cycle_map.hpp"
#include "tbgen/errors.hpp"
#include "tbgen/parallel.hpp"
#include "tbgen/params.hpp"

namespace tbgen {

enum class TargetKind { ghz, cluster };

/// Inter-cycle ground-state rotation: pi for GHZ, pi/2 for linear clusters.
inline double rotation_angle(TargetKind kind) {
  return kind == TargetKind::ghz ? std::numbers::pi : 0.5 * std::numbers::pi;
}

inline std::string to_string(TargetKind kind) { return kind == TargetKind::ghz ? "ghz" : "cluster"; }

inline TargetKind target_kind_from_string(const std::string& s) {
  if (s == "ghz") return TargetKind::ghz;
  if (s == "cluster") return TargetKind::cluster;
  throw DomainError("unknown target kind '" + s + "' (expected ghz or cluster)");
}

inline constexpr int kMaxPhotons = 10;

/// Post-selected density operator on spin (x) N photons.
struct HybridState {
  Eigen::MatrixXcd rho;
  double success_probability = 1.0;
  double orthogonal_error_mass = 0.0;
  int photon_count = 0;

  Eigen::Index dim() const { return rho.rows(); }

  double trace() const { return rho.trace().real(); }

  /// Hermiticity, positivity, normalisation and dimension checks.
  void check(double tol = 1e-9) const {
    if (rho.rows() != (Eigen::Index{2} << photon_count) || rho.cols() != rho.rows()) {
      throw DomainError("HybridState: dimension does not match photon_count");
    }
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol) throw DomainError("HybridState: rho not Hermitian");
    const Eigen::MatrixXcd h = 0.5 * (rho + rho.adjoint());
    if (Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(h, Eigen::EigenvaluesOnly).eigenvalues().minCoeff() < -tol) {
      throw DomainError("HybridState: rho not positive");
    }
    if (std::abs(trace() + orthogonal_error_mass - 1.0) > tol) {
      throw DomainError("HybridState: trace + orthogonal_error_mass != 1");
    }
    if (orthogonal_error_mass < -tol) throw DomainError("HybridState: negative orthogonal_error_mass");
  }
};

/// Spin after the pi/2 initialisation pulse, no photons.
inline HybridState initial_state() {
  Eigen::Vector2cd psi = spin_rotation(0.5 * std::numbers::pi).col(kGroundDown);
  HybridState s;
  s.rho = psi * psi.adjoint();
  return s;
}

/// One more cycle: appends a photon qubit in front of the spin, drops the
/// all-lost branch and renormalises so that trace + orthogonal mass = 1.
/// Orthogonal mass already present survives the cycle's post-selection with
/// the spin-averaged detection probability.
inline HybridState apply_cycle(const HybridState& in, const CycleMap& map, int max_photons = kMaxPhotons) {
  if (in.photon_count + 1 > max_photons) {
    throw CapacityError("apply_cycle: photon count " + std::to_string(in.photon_count + 1) + " exceeds cap " +
                        std::to_string(max_photons));
  }
  const Eigen::Index d = in.dim() / 2;
  const Eigen::Matrix<cd, 16, 4> sup = map.superoperator();
  HybridState out;
  out.photon_count = in.photon_count + 1;
  out.rho = Eigen::MatrixXcd::Zero(4 * d, 4 * d);
  Eigen::Matrix2cd spin = Eigen::Matrix2cd::Zero();
  for (Eigen::Index b = 0; b < d; ++b) {
    for (Eigen::Index a = 0; a < d; ++a) {
      const Eigen::Matrix2cd block = in.rho.block<2, 2>(2 * a, 2 * b);
      if (a == b) spin += block;
      const Eigen::Matrix<cd, 16, 1> v = sup * block.reshaped();
      out.rho.block<4, 4>(4 * a, 4 * b) = v.reshaped(4, 4);
    }
  }
  const double fresh_orth = (map.orthogonal_effect * spin).trace().real();
  const double pass = 1.0 - 0.5 * map.loss_effect.trace().real();
  const double old_orth = in.orthogonal_error_mass * pass;
  const double total = out.trace() + fresh_orth + old_orth;
  if (!(total > 0.0)) throw DomainError("apply_cycle: no weight survives post-selection");
  out.rho /= total;
  out.orthogonal_error_mass = (fresh_orth + old_orth) / total;
  out.success_probability = in.success_probability * total;
  return out;
}

inline HybridState run_protocol(const std::vector<CycleMap>& cycles, int max_photons = kMaxPhotons) {
  if (cycles.empty()) throw DomainError("run_protocol: at least one cycle required");
  if (static_cast<int>(cycles.size()) > max_photons) {
    throw CapacityError("run_protocol: " + std::to_string(cycles.size()) + " photons exceeds cap " +
                        std::to_string(max_photons));
  }
  HybridState s = initial_state();
  for (const auto& c : cycles) s = apply_cycle(s, c, max_photons);
  return s;
}

inline HybridState run_protocol(const CycleMap& cycle, int n_photons, int max_photons = kMaxPhotons) {
  if (n_photons < 1) throw DomainError("run_protocol: n_photons must be >= 1");
  if (n_photons > max_photons) {
    throw CapacityError("run_protocol: " + std::to_string(n_photons) + " photons exceeds cap " +
                        std::to_string(max_photons));
  }
  HybridState s = initial_state();
  for (int i = 0; i < n_photons; ++i) s = apply_cycle(s, cycle, max_photons);
  return s;
}

/// Output of the imperfection-free protocol as a state vector.
inline Eigen::VectorXcd ideal_target(int n_photons, TargetKind kind, bool echo = true) {
  if (n_photons < 1) throw DomainError("ideal_target: n_photons must be >= 1");
  if (n_photons > kMaxPhotons) throw CapacityError("ideal_target: photon count exceeds cap");
  CycleOptions opt = CycleOptions::ideal();
  opt.echo = echo;
  const CycleMap map = build_cycle_map(presets::ideal(), rotation_angle(kind), opt);
  if (map.kraus.size() != 1) throw DomainError("ideal_target: ideal cycle is not an isometry");
  const KrausOp& k = map.kraus.front();
  Eigen::VectorXcd psi = spin_rotation(0.5 * std::numbers::pi).col(kGroundDown);
  for (int n = 0; n < n_photons; ++n) {
    const Eigen::Index d = psi.size() / 2;
    Eigen::VectorXcd next(4 * d);
    for (Eigen::Index a = 0; a < d; ++a) next.segment<4>(4 * a) = k * psi.segment<2>(2 * a);
    psi = std::move(next);
  }
  return psi.normalized();
}

/// Overlap with the target inside the detected sector.
inline double conditional_fidelity(const HybridState& state, const Eigen::VectorXcd& target) {
  if (target.size() != state.dim()) throw DomainError("conditional_fidelity: dimension mismatch");
  const double norm = state.trace() + state.orthogonal_error_mass;
  return (target.adjoint() * state.rho * target).value().real() / norm;
}

// ---------------------------------------------------------------------------
// Stabilizers

/// Tensor product of Paulis, one character per qubit from {I, X, Y, Z}.
using PauliString = std::string;

/// Tr(P rho) with P acting on qubits ordered as in the state index.
inline cd pauli_expectation(const Eigen::MatrixXcd& rho, const PauliString& p) {
  const int nq = static_cast<int>(p.size());
  if (rho.rows() != (Eigen::Index{1} << nq)) throw DomainError("pauli_expectation: dimension mismatch");
  Eigen::Index xmask = 0, zmask = 0;
  int ny = 0;
  for (int q = 0; q < nq; ++q) {
    const Eigen::Index bit = Eigen::Index{1} << (nq - 1 - q);
    switch (p[q]) {
      case 'I': break;
      case 'X': xmask |= bit; break;
      case 'Z': zmask |= bit; break;
      case 'Y': xmask |= bit; zmask |= bit; ++ny; break;
      default: throw DomainError("pauli_expectation: bad Pauli character");
    }
  }
  // Y = i X Z, so P|k> = i^ny (-1)^{|k & zmask|} |k ^ xmask>.
  static const cd kPow[4] = {1.0, cd(0.0, 1.0), -1.0, cd(0.0, -1.0)};
  cd sum = 0.0;
  for (Eigen::Index k = 0; k < rho.rows(); ++k) {
    const double sign = (__builtin_popcountll(static_cast<unsigned long long>(k & zmask)) & 1) ? -1.0 : 1.0;
    sum += sign * rho(k, k ^ xmask);
  }
  return kPow[ny % 4] * sum;
}

/// Canonical stabilizer generators on n_photons + 1 qubits. GHZ: the
/// all-X parity followed by neighbouring ZZ pairs. Cluster: Z X Z along the
/// chain photon 1 - ... - photon N - spin.
inline std::vector<PauliString> canonical_stabilizers(int n_photons, TargetKind kind) {
  const int nq = n_photons + 1;
  std::vector<PauliString> out;
  if (kind == TargetKind::ghz) {
    out.emplace_back(nq, 'X');
    for (int q = 1; q < nq; ++q) {
      PauliString s(nq, 'I');
      s[q - 1] = s[q] = 'Z';
      out.push_back(s);
    }
  } else {
    for (int q = 0; q < nq; ++q) {
      PauliString s(nq, 'I');
      s[q] = 'X';
      if (q > 0) s[q - 1] = 'Z';
      if (q + 1 < nq) s[q + 1] = 'Z';
      out.push_back(s);
    }
  }
  return out;
}

/// Canonical generators with the signs taken by the ideal protocol output.
/// The protocol's local frame differs from the canonical states only by
/// Pauli corrections; anything else is reported as an error.
struct StabilizerFrame {
  std::vector<PauliString> generators;
  std::vector<double> signs;
};

inline StabilizerFrame stabilizer_frame(int n_photons, TargetKind kind, bool echo = true) {
  const Eigen::VectorXcd psi = ideal_target(n_photons, kind, echo);
  const Eigen::MatrixXcd rho = psi * psi.adjoint();
  StabilizerFrame f;
  f.generators = canonical_stabilizers(n_photons, kind);
  for (const auto& g : f.generators) {
    const cd e = pauli_expectation(rho, g);
    if (std::abs(std::abs(e) - 1.0) > 1e-9 || std::abs(e.imag()) > 1e-9) {
      throw DomainError("stabilizer_frame: ideal output is not a signed stabilizer state of " + g);
    }
    f.signs.push_back(e.real() > 0 ? 1.0 : -1.0);
  }
  return f;
}

/// Frame-corrected stabilizer expectations; orthogonal mass counts as zero.
inline std::vector<double> stabilizer_expectations(const HybridState& state, TargetKind kind, bool echo = true) {
  const StabilizerFrame f = stabilizer_frame(state.photon_count, kind, echo);
  const double norm = state.trace() + state.orthogonal_error_mass;
  std::vector<double> out;
  for (std::size_t i = 0; i < f.generators.size(); ++i) {
    out.push_back(f.signs[i] * pauli_expectation(state.rho, f.generators[i]).real() / norm);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Noise

/// Quasi-static Overhauser shift plus optional Wiener drift of the ground
/// splitting.
struct NoiseConfig {
  double overhauser_sigma = 0.0;  ///< rad/ns
  double drift_diffusion = 0.0;   ///< rad^2/ns^3
  int sample_count = 1;
  std::uint64_t rng_seed = 0;

  /// sigma = sqrt(2) / T2*; drift calibrated so that the echo coherence of a
  /// spin left alone for time T2 has decayed to 1/e.
  static NoiseConfig from_times(double t2_star, double t2, int samples, std::uint64_t seed) {
    NoiseConfig n;
    n.overhauser_sigma = std::isinf(t2_star) ? 0.0 : std::numbers::sqrt2 / t2_star;
    n.drift_diffusion = std::isinf(t2) ? 0.0 : 24.0 / (t2 * t2 * t2);
    n.sample_count = samples;
    n.rng_seed = seed;
    n.check();
    return n;
  }

  void check() const {
    if (!(overhauser_sigma >= 0.0)) throw DomainError("NoiseConfig: overhauser_sigma must be >= 0");
    if (!(drift_diffusion >= 0.0)) throw DomainError("NoiseConfig: drift_diffusion must be >= 0");
    if (sample_count < 1) throw DomainError("NoiseConfig: sample_count must be >= 1");
  }
};

/// Everything needed to run the protocol from physical parameters.
struct RunSpec {
  PhysicalParams params;
  TargetKind kind = TargetKind::ghz;
  int n_photons = 1;
  CycleOptions cycle;  ///< excitation ledger, filter, echo, rotation error
};

/// Cycle maps for a ground detuning trajectory: quasi-static `detuning`
/// plus a Wiener drift drawn from `rng` when drift_diffusion > 0.
inline std::vector<CycleMap> cycle_maps(const RunSpec& spec, double detuning, double drift_diffusion = 0.0,
                                        std::mt19937_64* rng = nullptr) {
  if (spec.n_photons < 1) throw DomainError("cycle_maps: n_photons must be >= 1");
  if (spec.n_photons > kMaxPhotons) throw CapacityError("cycle_maps: photon count exceeds cap");
  const double tau = 0.5 * spec.params.t_cycle;
  const double angle = rotation_angle(spec.kind);
  std::normal_distribution<double> normal;
  auto half_phase = [&](double& delta) {
    if (drift_diffusion <= 0.0 || rng == nullptr) return delta * tau;
    const double dw = std::sqrt(drift_diffusion * tau) * normal(*rng);
    const double integral = 0.5 * dw * tau + std::sqrt(drift_diffusion * tau * tau * tau / 12.0) * normal(*rng);
    const double theta = delta * tau + integral;
    delta += dw;
    return theta;
  };
  std::vector<CycleMap> maps;
  double delta = detuning;
  const bool drifting = drift_diffusion > 0.0 && rng != nullptr;
  for (int n = 0; n < spec.n_photons; ++n) {
    CycleOptions opt = spec.cycle;
    opt.phase_first_half = half_phase(delta);
    opt.phase_second_half = half_phase(delta);
    if (!drifting && n > 0) {
      maps.push_back(maps.back());
      continue;
    }
    maps.push_back(build_cycle_map(spec.params, angle, opt));
  }
  return maps;
}

inline HybridState run_protocol(const RunSpec& spec, double detuning = 0.0) {
  return run_protocol(cycle_maps(spec, detuning));
}

/// Conditional fidelity of one noise sample; the sample index selects an
/// independent child seed.
inline double noisy_sample_fidelity(const RunSpec& spec, const NoiseConfig& noise, std::uint64_t index,
                                    const Eigen::VectorXcd& target) {
  std::mt19937_64 rng(mix_seed(noise.rng_seed, index));
  std::normal_distribution<double> normal;
  const double delta = noise.overhauser_sigma * normal(rng);
  return conditional_fidelity(run_protocol(cycle_maps(spec, delta, noise.drift_diffusion, &rng)), target);
}

struct NoiseAverage {
  double mean_fidelity = 0.0;
  double std_error = 0.0;
};

inline NoiseAverage overhauser_average(const RunSpec& spec, const NoiseConfig& noise,
                                       unsigned workers = default_workers()) {
  noise.check();
  const Eigen::VectorXcd target = ideal_target(spec.n_photons, spec.kind, spec.cycle.echo);
  std::vector<double> f(static_cast<std::size_t>(noise.sample_count));
  parallel_for(f.size(), [&](std::size_t i) { f[i] = noisy_sample_fidelity(spec, noise, i, target); }, workers);
  NoiseAverage out;
  for (double v : f) out.mean_fidelity += v;
  out.mean_fidelity /= static_cast<double>(f.size());
  if (f.size() > 1) {
    double ss = 0.0;
    for (double v : f) ss += (v - out.mean_fidelity) * (v - out.mean_fidelity);
    out.std_error = std::sqrt(ss / static_cast<double>(f.size() - 1) / static_cast<double>(f.size()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text dump

inline void write_state(std::ostream& os, const HybridState& s) {
  os << "# tbgen hybrid state\n" << std::setprecision(17);
  os << "photons " << s.photon_count << '\n';
  os << "success " << s.success_probability << '\n';
  os << "orthogonal " << s.orthogonal_error_mass << '\n';
  os << "dim " << s.dim() << '\n';
  for (Eigen::Index r = 0; r < s.dim(); ++r) {
    for (Eigen::Index c = 0; c < s.dim(); ++c) {
      if (c) os << ' ';
      os << s.rho(r, c).real() << ' ' << s.rho(r, c).imag();
    }
    os << '\n';
  }
}

inline HybridState read_state(std::istream& is, const std::string& source = "<stream>") {
  HybridState s;
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> std::string {
    while (std::getline(is, line)) {
      ++lineno;
      if (!line.empty() && line[0] != '#') return line;
    }
    throw ParseError(source, lineno, "unexpected end of state dump");
  };
  auto header = [&](const std::string& key) {
    std::istringstream ls(next_line());
    std::string k;
    double v = 0.0;
    if (!(ls >> k >> v) || k != key) throw ParseError(source, lineno, "expected '" + key + " <value>'");
    return v;
  };
  s.photon_count = static_cast<int>(header("photons"));
  s.success_probability = header("success");
  s.orthogonal_error_mass = header("orthogonal");
  const auto dim = static_cast<Eigen::Index>(header("dim"));
  if (dim != (Eigen::Index{2} << s.photon_count)) throw ParseError(source, lineno, "dim does not match photons");
  s.rho.resize(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    std::istringstream ls(next_line());
    for (Eigen::Index c = 0; c < dim; ++c) {
      double re = 0.0, im = 0.0;
      if (!(ls >> re >> im)) throw ParseError(source, lineno, "row " + std::to_string(r) + " is short");
      s.rho(r, c) = cd(re, im);
    }
  }
  return s;
}

}  // namespace tbgen
