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

// Completely positive map of one protocol cycle:
//
//   excite (early) -> emit (early bin) -> precess -> Raman pi flip
//   -> excite (late) -> emit (late bin) -> precess -> rotation R
//
// The map takes the spin (2-dim) to spin (x) one time-bin photon qubit and is
// stored as Kraus operators on the detected sector, plus two effect operators
// for the probability of an orthogonal-error event and of losing the photon.
// Output index is 2 * photon + spin with photon 0 = early, 1 = late and
// spin 0 = G-down, 1 = G-up.
//
// Kraus operators are assembled by enumerating quantum trajectories (decay
// path, phonon tag, rotation error) and summing amplitudes that leave the
// environment in the same record.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "tbgen/errors.hpp"
#include "tbgen/params.hpp"
#include "tbgen/pulse_dynamics.hpp"

namespace tbgen {

using Matrix2cd = Eigen::Matrix2cd;
using KrausOp = Eigen::Matrix<cd, 4, 2>;

/// Rotation of the spin about the y axis, exp(-i angle Y / 2).
inline Matrix2cd spin_rotation(double angle) {
  Matrix2cd r;
  const double c = std::cos(0.5 * angle);
  const double s = std::sin(0.5 * angle);
  r << c, -s, s, c;
  return r;
}

/// Fate of one trion decay, as weights of the branching betas.
struct EmissionChannel {
  double detected = 0.0;         ///< vertical photon in the waveguide, spin returns
  double lost_preserving = 0.0;  ///< vertical photon lost, spin returns
  double lost_flipping = 0.0;    ///< diagonal photon lost or filtered, spin flips
  double orthogonal = 0.0;       ///< unfiltered diagonal photon detected, spin flips
  double coherence = 1.0;        ///< early/late coherence factor of a detected photon

  double sum() const { return detected + lost_preserving + lost_flipping + orthogonal; }
};

inline EmissionChannel emission_channel(const BranchingBetas& betas, double indistinguishability, bool filter_on) {
  if (!(indistinguishability >= 0.0 && indistinguishability <= 1.0)) {
    throw DomainError("emission_channel: indistinguishability must lie in [0, 1]");
  }
  if (std::abs(betas.sum() - 1.0) > 1e-12) throw DomainError("emission_channel: betas do not sum to 1");
  EmissionChannel ch;
  ch.detected = betas.beta_par;
  ch.lost_preserving = betas.beta_par_leak;
  ch.lost_flipping = betas.beta_perp_leak + (filter_on ? betas.beta_perp : 0.0);
  ch.orthogonal = filter_on ? 0.0 : betas.beta_perp;
  ch.coherence = indistinguishability;
  return ch;
}

inline EmissionChannel emission_channel(const LevelSystem& system, double indistinguishability, bool filter_on) {
  return emission_channel(system.betas(), indistinguishability, filter_on);
}

/// Orthogonal-error probabilities per excitation pulse, for the branch that
/// is driven resonantly and for the one that is not.
struct ExcitationLedger {
  double driven = 0.0;
  double undriven = 0.0;

  static ExcitationLedger from_errors(const ExcitationErrors& e, bool include_in_pulse_scattering = false) {
    return {e.re_excitation + e.incomplete_inversion,
            e.off_resonant + (include_in_pulse_scattering ? e.in_pulse_scattering : 0.0)};
  }
};

struct CycleOptions {
  ExcitationLedger excitation;
  std::optional<BranchingBetas> betas;             ///< default: from params.branching, no leaks
  std::optional<double> indistinguishability;      ///< default: params.effective_indistinguishability()
  bool filter_on = true;
  double rotation_error_std = 0.0;  ///< Gaussian over-rotation of each Raman pulse, rad
  bool echo = true;                 ///< false: no flip, the late pulse drives G-up instead
  double phase_first_half = 0.0;    ///< spin precession angle accumulated in each half cycle, rad
  double phase_second_half = 0.0;

  /// Every imperfection disabled.
  static CycleOptions ideal() {
    CycleOptions o;
    o.betas = BranchingBetas{1.0, 0.0, 0.0, 0.0};
    o.indistinguishability = 1.0;
    return o;
  }
};

struct CycleMap {
  std::vector<KrausOp> kraus;
  Matrix2cd orthogonal_effect = Matrix2cd::Zero();
  Matrix2cd loss_effect = Matrix2cd::Zero();
  double rotation_angle = 0.0;
  bool echo = true;

  /// Liouville matrix of the detected sector: vec(out) = S vec(in), both
  /// column-major (4x4 output block, 2x2 input block).
  Eigen::Matrix<cd, 16, 4> superoperator() const {
    Eigen::Matrix<cd, 16, 4> s = Eigen::Matrix<cd, 16, 4>::Zero();
    for (const auto& k : kraus) {
      for (int t = 0; t < 2; ++t)
        for (int u = 0; u < 2; ++u)
          for (int r = 0; r < 4; ++r)
            for (int q = 0; q < 4; ++q) s(q + 4 * r, u + 2 * t) += k(q, u) * std::conj(k(r, t));
    }
    return s;
  }

  Eigen::Matrix4cd apply(const Matrix2cd& rho) const {
    Eigen::Matrix4cd out = Eigen::Matrix4cd::Zero();
    for (const auto& k : kraus) out += k * rho * k.adjoint();
    return out;
  }

  Matrix2cd detected_effect() const {
    Matrix2cd e = Matrix2cd::Zero();
    for (const auto& k : kraus) e += k.adjoint() * k;
    return e;
  }

  /// Sum of all effects; the identity for a trace-preserving cycle.
  Matrix2cd completeness() const { return detected_effect() + orthogonal_effect + loss_effect; }

  double detected_weight(const Matrix2cd& rho) const { return (detected_effect() * rho).trace().real(); }
  double orthogonal_weight(const Matrix2cd& rho) const { return (orthogonal_effect * rho).trace().real(); }
  double loss_weight(const Matrix2cd& rho) const { return (loss_effect * rho).trace().real(); }

  /// Choi matrix of the detected sector, sum_ij |i><j| (x) Phi(|i><j|).
  Eigen::Matrix<cd, 8, 8> choi() const {
    Eigen::Matrix<cd, 8, 8> c = Eigen::Matrix<cd, 8, 8>::Zero();
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        Matrix2cd e = Matrix2cd::Zero();
        e(i, j) = 1.0;
        c.block<4, 4>(4 * i, 4 * j) = apply(e);
      }
    }
    return c;
  }

  /// Smallest eigenvalue over the detected Choi matrix and the two effects
  /// (the orthogonal and loss outcomes are classical flags).
  double choi_min_eigenvalue() const {
    double m = Eigen::SelfAdjointEigenSolver<Eigen::Matrix<cd, 8, 8>>(choi()).eigenvalues().minCoeff();
    m = std::min(m, Eigen::SelfAdjointEigenSolver<Matrix2cd>(orthogonal_effect).eigenvalues().minCoeff());
    m = std::min(m, Eigen::SelfAdjointEigenSolver<Matrix2cd>(loss_effect).eigenvalues().minCoeff());
    return m;
  }

  double accounting_error() const { return (completeness() - Matrix2cd::Identity()).cwiseAbs().maxCoeff(); }
};

namespace detail {

// Rows: 2 * slot + spin_out with slot 0 = no detected photon, 1 = early, 2 = late.
using PathAmplitude = Eigen::Matrix<cd, 6, 2>;
using PathSet = std::map<std::string, PathAmplitude>;

inline void add_path(PathSet& paths, const std::string& env, const PathAmplitude& amp) {
  auto [it, inserted] = paths.try_emplace(env, amp);
  if (!inserted) it->second += amp;
}

class CycleBuilder {
 public:
  CycleBuilder(const EmissionChannel& emission, const ExcitationLedger& excitation)
      : emission_(emission), excitation_(excitation) {
    PathAmplitude start = PathAmplitude::Zero();
    start(0, 0) = 1.0;
    start(1, 1) = 1.0;
    paths_.emplace("", start);
  }

  /// Excitation pulse addressing spin `driven`, then decay into time bin `bin`.
  void excite_and_emit(int driven, int bin) {
    const int other = 1 - driven;
    const double keep_driven = std::sqrt(1.0 - excitation_.driven);
    const double keep_other = std::sqrt(1.0 - excitation_.undriven);
    const double plus = std::sqrt(0.5 * (1.0 + emission_.coherence));
    const double minus = std::sqrt(0.5 * (1.0 - emission_.coherence)) * (bin == 0 ? 1.0 : -1.0);
    const std::string b = std::to_string(bin);

    PathSet next;
    for (const auto& [env, amp] : paths_) {
      PathAmplitude idle = PathAmplitude::Zero();
      PathAmplitude lost_v = PathAmplitude::Zero();
      PathAmplitude lost_d = PathAmplitude::Zero();
      for (int slot = 0; slot < 3; ++slot) {
        const auto row_other = amp.row(2 * slot + other);
        const auto row_driven = amp.row(2 * slot + driven);
        idle.row(2 * slot + other) = keep_other * row_other;
        orthogonal_ += excitation_.undriven * row_other.adjoint() * row_other;
        orthogonal_ += excitation_.driven * row_driven.adjoint() * row_driven;
        const Eigen::Matrix<cd, 1, 2> excited = keep_driven * row_driven;

        if (slot == 0) {
          for (const auto& [tag, weight] : {std::pair{"a", plus}, std::pair{"b", minus}}) {
            if (weight == 0.0) continue;
            PathAmplitude p = PathAmplitude::Zero();
            p.row(2 * (1 + bin) + driven) = std::sqrt(emission_.detected) * weight * excited;
            add_path(next, env + "|v" + tag, p);
          }
        } else {
          // a second detected photon cannot be a valid cycle outcome
          orthogonal_ += emission_.detected * excited.adjoint() * excited;
        }
        lost_v.row(2 * slot + driven) = std::sqrt(emission_.lost_preserving) * excited;
        lost_d.row(2 * slot + other) = std::sqrt(emission_.lost_flipping) * excited;
        orthogonal_ += emission_.orthogonal * excited.adjoint() * excited;
      }
      add_path(next, env, idle);
      if (emission_.lost_preserving > 0.0) add_path(next, env + "|Lv" + b, lost_v);
      if (emission_.lost_flipping > 0.0) add_path(next, env + "|Ld" + b, lost_d);
    }
    paths_ = std::move(next);
  }

  /// Free precession: G-down acquires +angle/2, G-up -angle/2.
  void precess(double angle) {
    if (angle == 0.0) return;
    const cd down = std::polar(1.0, 0.5 * angle);
    const cd up = std::polar(1.0, -0.5 * angle);
    for (auto& [env, amp] : paths_) {
      for (int slot = 0; slot < 3; ++slot) {
        amp.row(2 * slot) *= down;
        amp.row(2 * slot + 1) *= up;
      }
    }
  }

  /// Raman rotation with a Gaussian over-rotation of standard deviation
  /// `error_std`. Averaged over the error the rotation is followed by a Y
  /// flip with probability (1 - exp(-s^2/2)) / 2.
  void rotate(double angle, double error_std, const std::string& label) {
    const Matrix2cd u = spin_rotation(angle);
    const double p_err = 0.5 * (1.0 - std::exp(-0.5 * error_std * error_std));
    Matrix2cd y_flip;
    y_flip << 0.0, cd(0.0, -1.0), cd(0.0, 1.0), 0.0;
    PathSet next;
    for (const auto& [env, amp] : paths_) {
      PathAmplitude ok = PathAmplitude::Zero();
      PathAmplitude bad = PathAmplitude::Zero();
      for (int slot = 0; slot < 3; ++slot) {
        const Eigen::Matrix<cd, 2, 2> block = amp.middleRows<2>(2 * slot);
        ok.middleRows<2>(2 * slot) = std::sqrt(1.0 - p_err) * (u * block);
        bad.middleRows<2>(2 * slot) = std::sqrt(p_err) * (y_flip * u * block);
      }
      add_path(next, env, ok);
      if (p_err > 0.0) add_path(next, env + "|" + label + "!", bad);
    }
    paths_ = std::move(next);
  }

  CycleMap finish(double rotation_angle, bool echo) const {
    CycleMap map;
    map.rotation_angle = rotation_angle;
    map.echo = echo;
    map.orthogonal_effect = orthogonal_;
    for (const auto& [env, amp] : paths_) {
      const Eigen::Matrix<cd, 2, 2> none = amp.topRows<2>();
      map.loss_effect += none.adjoint() * none;
      const KrausOp k = amp.bottomRows<4>();
      if (k.cwiseAbs().maxCoeff() > 0.0) map.kraus.push_back(k);
    }
    return map;
  }

 private:
  EmissionChannel emission_;
  ExcitationLedger excitation_;
  PathSet paths_;
  Matrix2cd orthogonal_ = Matrix2cd::Zero();
};

}  // namespace detail

/// Builds the cycle map from physical parameters and per-pulse excitation
/// error probabilities already stored in `options.excitation`.
inline CycleMap build_cycle_map(const PhysicalParams& params, double rotation_angle, const CycleOptions& options = {}) {
  const auto& ex = options.excitation;
  if (!(ex.driven >= 0.0 && ex.driven <= 1.0 && ex.undriven >= 0.0 && ex.undriven <= 1.0)) {
    throw DomainError("build_cycle_map: excitation error probabilities must lie in [0, 1]");
  }
  if (!(options.rotation_error_std >= 0.0)) throw DomainError("build_cycle_map: rotation_error_std must be >= 0");
  const BranchingBetas betas = options.betas.value_or(BranchingBetas::from_branching(params.branching));
  const double indist = options.indistinguishability.value_or(params.effective_indistinguishability());
  const EmissionChannel emission = emission_channel(betas, indist, options.filter_on);

  detail::CycleBuilder builder(emission, ex);
  builder.excite_and_emit(kGroundDown, 0);
  builder.precess(options.phase_first_half);
  if (options.echo) {
    builder.rotate(std::numbers::pi, options.rotation_error_std, "F");
    builder.excite_and_emit(kGroundDown, 1);
  } else {
    builder.excite_and_emit(kGroundUp, 1);
  }
  builder.precess(options.phase_second_half);
  builder.rotate(rotation_angle, options.rotation_error_std, "R");
  return builder.finish(rotation_angle, options.echo);
}

/// Same, with the excitation errors obtained by integrating `pulse`.
inline CycleMap build_cycle_map(const PhysicalParams& params, const Pulse& pulse, double rotation_angle,
                                CycleOptions options = {}) {
  const LevelSystem system = LevelSystem::from_params(params, options.betas);
  options.excitation = ExcitationLedger::from_errors(excitation_error_probability(system, pulse));
  return build_cycle_map(params, rotation_angle, options);
}

enum class ExcitationModel { ideal, analytic, integrated };

/// Per-pulse orthogonal-error probabilities for a parameter set.
///
/// `analytic` assigns the optimal square-pulse error sqrt(3) pi gamma /
/// (8 Delta) to the driven branch; `integrated` optimises a pulse of the
/// given shape numerically.
inline ExcitationLedger excitation_ledger(const PhysicalParams& params, ExcitationModel model,
                                          PulseShape shape = PulseShape::square,
                                          bool include_in_pulse_scattering = false) {
  if (model == ExcitationModel::ideal || std::isinf(params.delta)) return {};
  if (model == ExcitationModel::analytic) {
    return {std::numbers::sqrt3 * std::numbers::pi / 8.0 * params.gamma / params.delta, 0.0};
  }
  const LevelSystem system = LevelSystem::from_params(params);
  const auto opt = optimize_pulse_duration(system, shape, default_duration_bounds(system));
  return ExcitationLedger::from_errors(opt.errors, include_in_pulse_scattering);
}

}  // namespace tbgen
