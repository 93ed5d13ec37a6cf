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
#include <sstream>

#include "generators.hpp"
#include "tbgen/integrator.hpp"
#include "tbgen/pulse_dynamics.hpp"

namespace {

using namespace tbgen;
constexpr double kPi = std::numbers::pi;

Matrix4cd pure(Level l) {
  Matrix4cd r = Matrix4cd::Zero();
  r(l, l) = 1.0;
  return r;
}

LevelSystem cycling(double gamma, double delta) {
  return LevelSystem::from_betas(gamma, delta, BranchingBetas{1.0, 0.0, 0.0, 0.0});
}

TEST(Integrator, Rk4ConvergesAtFourthOrder) {
  auto f = [](double, const Eigen::VectorXd& y) -> Eigen::VectorXd { return -1.3 * y; };
  auto err = [&](std::size_t steps) {
    Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
    ode::integrate_rk4(f, y, 0.0, 2.0, steps);
    return std::abs(y[0] - std::exp(-2.6));
  };
  const double ratio = err(20) / err(40);
  EXPECT_NEAR(std::log2(ratio), 4.0, 0.15);
}

TEST(Integrator, Dopri5MeetsTolerance) {
  auto f = [](double, const Eigen::VectorXd& y) -> Eigen::VectorXd { return -1.3 * y; };
  for (double tol : {1e-6, 1e-9, 1e-11}) {
    Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
    ode::AdaptiveOptions o;
    o.rtol = tol;
    o.atol = tol * 1e-3;
    ode::integrate_dopri5(f, y, 0.0, 2.0, o);
    EXPECT_LT(std::abs(y[0] - std::exp(-2.6)), 50 * tol);
  }
}

TEST(Integrator, Dopri5ReportsExhaustedBudget) {
  auto f = [](double, const Eigen::VectorXd& y) -> Eigen::VectorXd { return -1e6 * y; };
  Eigen::VectorXd y = Eigen::VectorXd::Ones(1);
  ode::AdaptiveOptions o;
  o.max_steps = 5;
  EXPECT_THROW(ode::integrate_dopri5(f, y, 0.0, 1.0, o), IntegrationError);
}

TEST(Pulse, AreaIsExact) {
  for (auto shape : {PulseShape::square, PulseShape::gaussian}) {
    const Pulse p = Pulse::with_area(shape, 0.07);
    EXPECT_NEAR(p.area(), kPi, 1e-12);
    // numeric quadrature of the envelope
    const int n = 20000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) sum += p.rabi((i + 0.5) * p.end_time() / n);
    EXPECT_NEAR(sum * p.end_time() / n, kPi, 1e-6);
    EXPECT_EQ(p.rabi(-1e-9), 0.0);
    EXPECT_EQ(p.rabi(p.end_time() + 1e-9), 0.0);
  }
  EXPECT_THROW(Pulse::with_area(PulseShape::square, 0.0), DomainError);
}

TEST(LevelSystem, BetasRoundTrip) {
  gen::Engine g(3);
  for (int i = 0; i < 100; ++i) {
    const BranchingBetas b = gen::random_betas(g);
    const LevelSystem s = LevelSystem::from_betas(2.5, 40.0, b);
    const BranchingBetas back = s.betas();
    EXPECT_NEAR(back.beta_par, b.beta_par, 1e-12);
    EXPECT_NEAR(back.beta_perp, b.beta_perp, 1e-12);
    EXPECT_NEAR(back.beta_par_leak, b.beta_par_leak, 1e-12);
    EXPECT_NEAR(back.beta_perp_leak, b.beta_perp_leak, 1e-12);
    EXPECT_NEAR(s.gamma(), 2.5, 1e-12);
  }
  EXPECT_THROW(LevelSystem::from_betas(0.0, 1.0, BranchingBetas{}), DomainError);
  EXPECT_THROW(LevelSystem::from_betas(1.0, 1.0, BranchingBetas{0.5, 0.1, 0.0, 0.0}), DomainError);
}

TEST(MasterEquation, FastPiPulseInverts) {
  const LevelSystem s = cycling(1.0, 100.0);
  const Pulse p = Pulse::with_area(PulseShape::square, 0.01);
  const auto tr = integrate_master_equation(s, p, pure(kGroundDown), p.end_time() + 8.0);
  ASSERT_EQ(tr.times[1], p.end_time());
  EXPECT_GT(tr.states[1](kTrionDown, kTrionDown).real(), 0.99);
  // everything has decayed back by the end of the window
  EXPECT_NEAR(tr.states.back()(kGroundDown, kGroundDown).real(), 1.0, 1e-3);
}

TEST(MasterEquation, FreePrecession) {
  LevelSystem s = cycling(1.0, 50.0);
  s.ground_splitting = 2.3;
  Matrix4cd rho = Matrix4cd::Zero();
  rho.topLeftCorner<2, 2>().setConstant(0.5);
  MasterEquationOptions o;
  o.sample_dt = 0.5;
  const auto tr = integrate_master_equation(s, Pulse::none(), rho, 8.0, o);
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    const cd c = tr.states[i](kGroundDown, kGroundUp);
    EXPECT_NEAR(std::abs(c), 0.5, 1e-8);
    EXPECT_NEAR(std::arg(c * std::polar(1.0, -2.3 * tr.times[i])), 0.0, 1e-7);
  }
}

TEST(MasterEquation, DecayIsExponential) {
  const LevelSystem s = cycling(1.7, 50.0);
  MasterEquationOptions o;
  o.sample_dt = 0.25;
  const auto tr = integrate_master_equation(s, Pulse::none(), pure(kTrionDown), 8.0 / 1.7, o);
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    EXPECT_NEAR(tr.states[i](kTrionDown, kTrionDown).real(), std::exp(-1.7 * tr.times[i]), 1e-8);
  }
}

TEST(MasterEquation, StaysPhysicalUnderRandomParameters) {
  gen::Engine g(5);
  for (int i = 0; i < 20; ++i) {
    LevelSystem s = LevelSystem::from_betas(gen::log_uniform(g, 0.5, 5), gen::log_uniform(g, 5, 500),
                                            gen::random_betas(g), gen::uniform(g, 0, 0.5));
    s.ground_splitting = gen::uniform(g, -2, 2);
    const Pulse p = Pulse::with_area(i % 2 ? PulseShape::gaussian : PulseShape::square,
                                     gen::log_uniform(g, 0.01, 1.0), gen::uniform(g, 0.5, 4.0));
    Matrix4cd rho = Matrix4cd::Zero();
    rho.topLeftCorner<2, 2>() << 0.6, cd(0.1, 0.2), cd(0.1, -0.2), 0.4;
    MasterEquationOptions o;
    o.sample_dt = 0.3;
    const auto tr = integrate_master_equation(s, p, rho, p.end_time() + 8.0 / s.gamma(), o);
    for (const auto& st : tr.states) {
      EXPECT_NEAR(st.trace().real(), 1.0, 1e-8);
      EXPECT_LT((st - st.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_GT(Eigen::SelfAdjointEigenSolver<Matrix4cd>(st).eigenvalues().minCoeff(), -1e-8);
    }
  }
}

TEST(MasterEquation, RejectsShortHorizonAndBadState) {
  const LevelSystem s = cycling(1.0, 10.0);
  EXPECT_THROW(integrate_master_equation(s, Pulse::none(), pure(kGroundDown), 1.0), DomainError);
  Matrix4cd bad = pure(kGroundDown);
  bad(0, 1) = 0.3;
  EXPECT_THROW(integrate_master_equation(s, Pulse::none(), bad, 10.0), DomainError);
}

TEST(MasterEquation, CsvDump) {
  const LevelSystem s = cycling(1.0, 10.0);
  MasterEquationOptions o;
  o.sample_dt = 1.0;
  const auto tr = integrate_master_equation(s, Pulse::with_area(PulseShape::square, 0.1), pure(kGroundDown), 8.1, o);
  std::ostringstream os;
  write_trace_csv(os, tr);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line.rfind("# time_ns,rho_00_re,rho_00_im", 0), 0u);
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 32);
    ++rows;
  }
  EXPECT_EQ(rows, tr.times.size());
}

TEST(ExcitationErrors, LargeDetuningShortPulse) {
  const LevelSystem s = cycling(1.0, 1e4);
  const double t_opt = std::sqrt(3.0) * kPi / 1e4;
  const ExcitationErrors e = excitation_error_probability(s, Pulse::with_area(PulseShape::square, t_opt));
  EXPECT_LT(e.total, 1e-3);
  EXPECT_NEAR(e.total * 1e4, std::sqrt(3.0) * kPi / 8, 0.3 * std::sqrt(3.0) * kPi / 8);
  EXPECT_NEAR(e.total, e.off_resonant + e.re_excitation + e.incomplete_inversion, 1e-15);
}

TEST(ExcitationErrors, RequiresPiArea) {
  const LevelSystem s = cycling(1.0, 100.0);
  EXPECT_THROW(excitation_error_probability(s, Pulse::with_area(PulseShape::square, 0.05, kPi / 2)), DomainError);
}

TEST(ExcitationErrors, InteriorMinimumInDuration) {
  const LevelSystem s = cycling(1.0, 100.0);
  std::vector<double> t, e;
  for (double d = 0.005; d < 0.5; d *= 1.3) {
    t.push_back(d);
    e.push_back(excitation_error_probability(s, Pulse::with_area(PulseShape::square, d)).total);
  }
  const auto best = std::min_element(e.begin(), e.end()) - e.begin();
  EXPECT_GT(best, 0);
  EXPECT_LT(best, static_cast<long>(e.size()) - 1);
}

TEST(ExcitationErrors, ShortPulseLimit) {
  const LevelSystem s = cycling(1.0, 100.0);
  const double t_opt = std::sqrt(3.0) * kPi / 100.0;
  const ExcitationErrors at_opt = excitation_error_probability(s, Pulse::with_area(PulseShape::square, t_opt));
  const ExcitationErrors shorter = excitation_error_probability(s, Pulse::with_area(PulseShape::square, t_opt / 10));
  const ExcitationErrors shortest = excitation_error_probability(s, Pulse::with_area(PulseShape::square, t_opt / 100));
  EXPECT_LT(shorter.incomplete_inversion, at_opt.incomplete_inversion);
  EXPECT_LT(shortest.incomplete_inversion, shorter.incomplete_inversion);
  EXPECT_GT(shorter.off_resonant, 10 * at_opt.off_resonant);
  // pulse bandwidth far above Delta: the G-up branch is inverted as well
  EXPECT_GT(shortest.off_resonant, 0.9);
}

TEST(Optimize, SquarePulseCoefficient) {
  const LevelSystem s = cycling(1.0, 100.0);
  const PulseOptimum o = optimize_pulse_duration(s, PulseShape::square, default_duration_bounds(s));
  EXPECT_GE(o.error_min * 100.0, 0.68 * 0.7);
  EXPECT_LE(o.error_min * 100.0, 0.68 * 1.3);
  EXPECT_NEAR(o.error_min, o.errors.total, 1e-15);
  // the optimum sits near the first full off-resonant Rabi cycle
  EXPECT_NEAR(o.duration_opt * 100.0 / (std::sqrt(3.0) * kPi), 1.0, 0.1);

  const LevelSystem s3 = cycling(1.0, 300.0);
  const PulseOptimum o3 = optimize_pulse_duration(s3, PulseShape::square, default_duration_bounds(s3));
  EXPECT_NEAR(o3.error_min / o.error_min, 1.0 / 3.0, 0.1 / 3.0);

  const PulseOptimum og = optimize_pulse_duration(s, PulseShape::gaussian, default_duration_bounds(s));
  EXPECT_LT(og.error_min / o.error_min, 1.5);
  EXPECT_GT(og.error_min / o.error_min, 1.0 / 1.5);
}

TEST(Optimize, BracketingFailure) {
  const LevelSystem s = cycling(1.0, 100.0);
  // below 1/Delta the error falls monotonically with duration
  EXPECT_THROW(optimize_pulse_duration(s, PulseShape::square, {1e-4, 3e-3}), BracketingError);
  EXPECT_THROW(optimize_pulse_duration(s, PulseShape::square, {1.0, 0.2}), DomainError);
}

}  // namespace
