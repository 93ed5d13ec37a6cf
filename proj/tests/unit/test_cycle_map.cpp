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

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "generators.hpp"
#include "tbgen/cycle_map.hpp"
#include "tbgen/protocol.hpp"

namespace {

using namespace tbgen;
constexpr double kPi = std::numbers::pi;

Matrix2cd plus_state() { return Matrix2cd::Constant(0.5); }

TEST(EmissionChannel, IdealEmission) {
  const EmissionChannel ch = emission_channel(BranchingBetas::from_branching(kInfinity), 1.0, true);
  EXPECT_DOUBLE_EQ(ch.detected, 1.0);
  EXPECT_DOUBLE_EQ(ch.lost_preserving + ch.lost_flipping + ch.orthogonal, 0.0);
  EXPECT_DOUBLE_EQ(ch.coherence, 1.0);
}

TEST(EmissionChannel, FilterRoutesDiagonalPhotons) {
  const BranchingBetas b = BranchingBetas::from_branching(15.0);
  const EmissionChannel on = emission_channel(b, 0.96, true);
  EXPECT_DOUBLE_EQ(on.lost_flipping, 1.0 / 16.0);
  EXPECT_DOUBLE_EQ(on.orthogonal, 0.0);
  const EmissionChannel off = emission_channel(b, 0.96, false);
  EXPECT_DOUBLE_EQ(off.orthogonal, 1.0 / 16.0);
  EXPECT_DOUBLE_EQ(off.lost_flipping, 0.0);
  EXPECT_DOUBLE_EQ(on.coherence, 0.96);
  EXPECT_NEAR(on.sum(), 1.0, 1e-15);
  EXPECT_NEAR(off.sum(), 1.0, 1e-15);
}

TEST(EmissionChannel, RejectsBadInputs) {
  EXPECT_THROW(emission_channel(BranchingBetas{0.5, 0.2, 0.0, 0.0}, 1.0, true), DomainError);
  EXPECT_THROW(emission_channel(BranchingBetas{}, 1.2, true), DomainError);
  EXPECT_THROW(emission_channel(BranchingBetas{}, -0.1, true), DomainError);
}

TEST(EmissionChannel, LeakLabelExchange) {
  gen::Engine g(17);
  for (int i = 0; i < 100; ++i) {
    const BranchingBetas b = gen::random_betas(g);
    BranchingBetas swapped = b;
    std::swap(swapped.beta_par_leak, swapped.beta_perp_leak);
    for (bool filter : {true, false}) {
      const EmissionChannel x = emission_channel(b, 0.9, filter);
      const EmissionChannel y = emission_channel(swapped, 0.9, filter);
      EXPECT_DOUBLE_EQ(x.detected, y.detected);
      EXPECT_DOUBLE_EQ(x.orthogonal, y.orthogonal);
      EXPECT_NEAR(x.lost_preserving + x.lost_flipping, y.lost_preserving + y.lost_flipping, 1e-15);
      EXPECT_DOUBLE_EQ(y.lost_preserving, b.beta_perp_leak);
    }
  }
}

TEST(EmissionChannel, FromLevelSystem) {
  const LevelSystem s = LevelSystem::from_betas(3.0, 50.0, BranchingBetas{0.7, 0.1, 0.15, 0.05});
  const EmissionChannel ch = emission_channel(s, 0.95, true);
  EXPECT_NEAR(ch.detected, 0.7, 1e-12);
  EXPECT_NEAR(ch.lost_preserving, 0.15, 1e-12);
  EXPECT_NEAR(ch.lost_flipping, 0.15, 1e-12);
}

TEST(CycleMap, IdealIsAnIsometry) {
  for (double angle : {kPi, kPi / 2}) {
    const CycleMap m = build_cycle_map(presets::ideal(), angle, CycleOptions::ideal());
    ASSERT_EQ(m.kraus.size(), 1u);
    EXPECT_LT((m.kraus[0].adjoint() * m.kraus[0] - Matrix2cd::Identity()).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT(m.loss_effect.cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT(m.orthogonal_effect.cwiseAbs().maxCoeff(), 1e-15);
    // photon bin = input spin; spin rotated by angle + pi
    const Matrix2cd r = spin_rotation(angle + kPi);
    for (int s = 0; s < 2; ++s)
      for (int p = 0; p < 2; ++p)
        for (int o = 0; o < 2; ++o) EXPECT_NEAR(std::abs(m.kraus[0](2 * p + o, s) - (p == s ? r(o, s) : 0.0)), 0.0, 1e-14);
  }
}

TEST(CycleMap, IdealSpinPhotonStateIsMaximallyEntangled) {
  const CycleMap m = build_cycle_map(presets::ideal(), kPi, CycleOptions::ideal());
  const Eigen::Matrix4cd rho = m.apply(plus_state());
  EXPECT_NEAR((rho * rho).trace().real(), 1.0, 1e-9);
  Eigen::Matrix2cd spin = Eigen::Matrix2cd::Zero();
  for (int p = 0; p < 2; ++p) spin += rho.block<2, 2>(2 * p, 2 * p);
  const auto ev = Eigen::SelfAdjointEigenSolver<Matrix2cd>(spin).eigenvalues();
  EXPECT_NEAR(ev[0], 0.5, 1e-12);
  EXPECT_NEAR(ev[1], 0.5, 1e-12);
}

TEST(CycleMap, DephasingScalesEarlyLateCoherence) {
  const CycleMap ideal = build_cycle_map(presets::ideal(), kPi, CycleOptions::ideal());
  CycleOptions o = CycleOptions::ideal();
  o.indistinguishability = 0.9;
  const CycleMap m = build_cycle_map(presets::ideal(), kPi, o);
  const Eigen::Matrix4cd a = ideal.apply(plus_state());
  const Eigen::Matrix4cd b = m.apply(plus_state());
  // photon early/late block off-diagonal
  const Matrix2cd ca = a.block<2, 2>(0, 2);
  const Matrix2cd cb = b.block<2, 2>(0, 2);
  EXPECT_NEAR((cb - 0.9 * ca).cwiseAbs().maxCoeff(), 0.0, 1e-14);
  EXPECT_NEAR((b.block<2, 2>(0, 0) - a.block<2, 2>(0, 0)).cwiseAbs().maxCoeff(), 0.0, 1e-14);
}

TEST(CycleMap, BranchingSinglePhoton) {
  CycleOptions o = CycleOptions::ideal();
  o.betas = BranchingBetas::from_branching(15.0);
  const CycleMap m = build_cycle_map(presets::ideal(), kPi, o);
  const double f = conditional_fidelity(run_protocol(m, 1), ideal_target(1, TargetKind::ghz));
  EXPECT_NEAR(1.0 - f, 1.0 / (4 * 16.0), 0.1 / (4 * 16.0));
}

TEST(CycleMap, SuperoperatorMatchesKraus) {
  gen::Engine g(8);
  CycleOptions o;
  o.excitation = {0.01, 0.003};
  o.indistinguishability = 0.93;
  o.phase_first_half = 0.4;
  o.phase_second_half = -0.2;
  const CycleMap m = build_cycle_map(presets::reference(), kPi / 2, o);
  Matrix2cd rho;
  rho << 0.3, cd(0.1, 0.2), cd(0.1, -0.2), 0.7;
  const Eigen::Matrix4cd direct = m.apply(rho);
  const Eigen::Matrix<cd, 16, 1> v = m.superoperator() * rho.reshaped();
  EXPECT_LT((v.reshaped(4, 4) - direct).cwiseAbs().maxCoeff(), 1e-15);
}

CycleOptions random_options(gen::Engine& g) {
  CycleOptions o;
  o.excitation = {gen::uniform(g, 0.0, 0.2), gen::uniform(g, 0.0, 0.2)};
  o.betas = gen::random_betas(g);
  o.indistinguishability = gen::uniform(g, 0.0, 1.0);
  o.filter_on = gen::uniform(g, 0, 1) < 0.5;
  o.echo = gen::uniform(g, 0, 1) < 0.7;
  o.rotation_error_std = gen::uniform(g, 0, 1) < 0.5 ? 0.0 : gen::uniform(g, 0.0, 0.5);
  o.phase_first_half = gen::uniform(g, -kPi, kPi);
  o.phase_second_half = gen::uniform(g, -kPi, kPi);
  return o;
}

TEST(CycleMap, ChoiPositiveAndTracePreservingUnderFuzz) {
  gen::Engine g(2024);
  for (int i = 0; i < 200; ++i) {
    const CycleOptions o = random_options(g);
    const double angle = gen::uniform(g, 0.0, 2 * kPi);
    const CycleMap m = build_cycle_map(gen::random_params(g), angle, o);
    EXPECT_GT(m.choi_min_eigenvalue(), -1e-9) << "draw " << i;
    EXPECT_LT(m.accounting_error(), 1e-9) << "draw " << i;
  }
}

TEST(CycleMap, OrthogonalLedgerFirstOrder) {
  CycleOptions o = CycleOptions::ideal();
  o.excitation = {1e-3, 0.0};
  const CycleMap m = build_cycle_map(presets::ideal(), kPi, o);
  // each branch meets exactly one driving pulse
  for (int s = 0; s < 2; ++s) {
    Matrix2cd rho = Matrix2cd::Zero();
    rho(s, s) = 1.0;
    EXPECT_NEAR(m.orthogonal_weight(rho), 1e-3, 1e-9);
  }
  o.excitation = {0.0, 2e-3};
  const CycleMap u = build_cycle_map(presets::ideal(), kPi, o);
  for (int s = 0; s < 2; ++s) {
    Matrix2cd rho = Matrix2cd::Zero();
    rho(s, s) = 1.0;
    EXPECT_NEAR(u.orthogonal_weight(rho), 2e-3, 1e-5);
  }
}

TEST(CycleMap, LossEffectMatchesLeakedVerticalPhotons) {
  CycleOptions o = CycleOptions::ideal();
  o.betas = BranchingBetas{0.9, 0.0, 0.1, 0.0};
  const CycleMap m = build_cycle_map(presets::ideal(), kPi, o);
  EXPECT_NEAR(m.loss_weight(plus_state()), 0.1, 1e-12);
  EXPECT_NEAR(m.detected_weight(plus_state()), 0.9, 1e-12);
}

TEST(CycleMap, OverRotationCostsFidelity) {
  CycleOptions o = CycleOptions::ideal();
  o.rotation_error_std = 0.1;
  const CycleMap m = build_cycle_map(presets::ideal(), kPi, o);
  const double f = conditional_fidelity(run_protocol(m, 2), ideal_target(2, TargetKind::ghz));
  EXPECT_LT(f, 1.0 - 1e-4);
  EXPECT_GT(f, 0.97);
  EXPECT_THROW(
      [] {
        CycleOptions bad;
        bad.rotation_error_std = -1.0;
        build_cycle_map(presets::reference(), kPi, bad);
      }(),
      DomainError);
}

TEST(CycleMap, ExcitationLedgerModels) {
  const PhysicalParams p = presets::reference();
  EXPECT_EQ(excitation_ledger(p, ExcitationModel::ideal).driven, 0.0);
  const ExcitationLedger a = excitation_ledger(p, ExcitationModel::analytic);
  EXPECT_NEAR(a.driven, std::sqrt(3.0) * kPi / 8 * p.gamma / p.delta, 1e-15);
  EXPECT_EQ(a.undriven, 0.0);
  EXPECT_EQ(excitation_ledger(presets::ideal(), ExcitationModel::analytic).driven, 0.0);
  ExcitationErrors e;
  e.off_resonant = 1e-3;
  e.re_excitation = 2e-3;
  e.incomplete_inversion = 3e-4;
  e.in_pulse_scattering = 5e-3;
  const ExcitationLedger l = ExcitationLedger::from_errors(e);
  EXPECT_DOUBLE_EQ(l.driven, 2.3e-3);
  EXPECT_DOUBLE_EQ(l.undriven, 1e-3);
  EXPECT_DOUBLE_EQ(ExcitationLedger::from_errors(e, true).undriven, 6e-3);
}

TEST(CycleMap, IntegratedLedgerNearAnalytic) {
  PhysicalParams p = presets::ideal();
  p.gamma = 1.0;
  p.delta = 100.0;
  p.gamma_d = 0.0;
  const ExcitationLedger l = excitation_ledger(p, ExcitationModel::integrated);
  EXPECT_NEAR((l.driven + l.undriven) * 100.0, std::sqrt(3.0) * kPi / 8, 0.3 * std::sqrt(3.0) * kPi / 8);
}

}  // namespace
