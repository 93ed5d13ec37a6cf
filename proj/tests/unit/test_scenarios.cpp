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

#include "tbgen/scenarios.hpp"

namespace {

using namespace tbgen;

ScenarioConfig parse(const std::string& text, const std::string& scenario) {
  return scenario_config_from(KeyValueFile::parse_string(text, "test.conf"), scenario);
}

ScenarioConfig load_shipped(const std::string& scenario) {
  return scenario_config_from(KeyValueFile::load(std::string(TBGEN_CONFIG_DIR) + "/" + scenario + ".conf"), scenario);
}

TEST(ScenarioConfig, ShippedConfigsParse) {
  for (const auto& name : scenario_names()) EXPECT_NO_THROW(load_shipped(name)) << name;
  const ScenarioConfig c = load_shipped("detuning_sweep");
  EXPECT_EQ(c.n_g_list, (std::vector<double>{20, 56}));
  EXPECT_EQ(c.photons, (std::vector<int>{1, 3}));
  EXPECT_TRUE(c.numeric);
  EXPECT_EQ(c.params.g_factor, 0.6);
}

TEST(ScenarioConfig, Errors) {
  try {
    parse("photons = 2\nbogus = 1\n", "photon_scaling");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse("scenario = echo_demo\n", "photon_scaling"), ParseError);
  EXPECT_THROW(parse("photons = 1.5\n", "photon_scaling"), ParseError);
  EXPECT_THROW(parse("numeric = maybe\n", "detuning_sweep"), ParseError);
  EXPECT_THROW(parse("shapes = triangle\n", "pulse_optimization"), ParseError);
  try {
    parse("photons = 11\nsamples = 0\n", "photon_scaling");
    FAIL();
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.fields().size(), 2u);
    EXPECT_EQ(e.fields()[0].name, "photons");
    EXPECT_EQ(e.fields()[1].name, "samples");
  }
  EXPECT_THROW(parse("gamma = -1\n", "photon_scaling"), ValidationError);
  EXPECT_THROW(parse("x\n", "photon_scaling"), ParseError);
}

TEST(ScenarioConfig, IndistinguishabilityFlag) {
  EXPECT_FALSE(parse("preset = reference\n", "detuning_sweep").indistinguishability_explicit);
  EXPECT_TRUE(parse("indistinguishability = 0.9\n", "detuning_sweep").indistinguishability_explicit);
  EXPECT_FALSE(parse("indistinguishability = derived\n", "detuning_sweep").params.indistinguishability);
}

TEST(SweepAxis, Values) {
  SweepAxis a;
  a.min = 1;
  a.max = 100;
  a.points = 3;
  EXPECT_EQ(a.values(), (std::vector<double>{1, 50.5, 100}));
  a.log_scale = true;
  const auto v = a.values();
  EXPECT_NEAR(v[1], 10.0, 1e-12);
  EXPECT_EQ(v.back(), 100.0);
}

TEST(Table, FormatNumberRoundTrips) {
  for (double v : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300, 0.0}) EXPECT_EQ(std::stod(format_number(v)), v);
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(format_number(-kInfinity), "-inf");
}

TEST(Table, CsvHeaderBlock) {
  Table t;
  t.columns = {"a", "b"};
  t.rows = {{1.5, std::string("ok")}};
  t.warnings = {"careful"};
  RunMetadata m{"photon_scaling", 9, {{"photons", "1"}}, presets::reference()};
  std::ostringstream os;
  write_csv(os, t, m);
  const std::string s = os.str();
  EXPECT_NE(s.find("# seed=9\n"), std::string::npos);
  EXPECT_NE(s.find("# config.photons=1\n"), std::string::npos);
  EXPECT_NE(s.find("# params.indistinguishability=0.96\n"), std::string::npos);
  EXPECT_NE(s.find("# warning: careful\n"), std::string::npos);
  EXPECT_NE(s.find("\na,b\n1.5,ok\n"), std::string::npos);
}

TEST(PhotonScaling, ImprovedPresetBudgetAndRate) {
  ScenarioConfig c = load_shipped("photon_scaling");
  const Table t = run_scenario(c, 1);
  ASSERT_EQ(t.rows.size(), 6u);
  // per-photon slope: (1 - I)/2 + (sqrt3 pi / 8) gamma/Delta + 1/(2(B+1))
  const double slope = 0.01 + std::numbers::sqrt3 * std::numbers::pi / 8 * 5.3 / (2 * std::numbers::pi * 64) + 0.5 / 141;
  EXPECT_NEAR(slope, 0.0225, 5e-4);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double n = t.number(i, "n_photons");
    EXPECT_NEAR(t.number(i, "total_first_order"), n * slope - 0.25 / 141, 1e-12);
    EXPECT_NEAR(t.number(i, "e_ph") + t.number(i, "e_exc") + t.number(i, "e_br"), t.number(i, "total_first_order"),
                1e-15);
    EXPECT_NEAR(t.number(i, "generation_rate"), std::pow(0.84, n) / (n * 27e-9), 1e-6);
    EXPECT_GT(t.number(i, "numeric_infidelity"), 0.0);
    if (i) {
      EXPECT_GT(t.number(i, "numeric_infidelity"), t.number(i - 1, "numeric_infidelity"));
    }
  }
  EXPECT_NEAR(t.number(2, "generation_rate") / 1e6, 7.3, 0.05);
}

TEST(PhotonScaling, IdealPresetIsPerfect) {
  ScenarioConfig c = parse("preset = ideal\nphotons = 1, 4\nexcitation_model = ideal\n", "photon_scaling");
  const Table t = run_scenario(c, 1);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    EXPECT_LT(t.number(i, "numeric_infidelity"), 1e-8);
    EXPECT_EQ(t.number(i, "total_first_order"), 0.0);
    EXPECT_NEAR(t.number(i, "success_probability"), 1.0, 1e-12);
  }
}

TEST(DetuningSweep, RowsAndMonotoneInField) {
  ScenarioConfig c = parse(
      "preset = reference\ng_factor = 0.6\nsweep_min = 0.5\nsweep_max = 6\nsweep_points = 5\n"
      "n_g_list = 20, 56\nphotons = 2\nnumeric = true\n",
      "detuning_sweep");
  const Table t = run_scenario(c, 1);
  ASSERT_EQ(t.rows.size(), 10u);
  EXPECT_TRUE(t.warnings.empty());
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double n_g = t.number(i, "n_g");
    EXPECT_EQ(t.number(i, "gamma"), n_g == 20 ? 3.2 : 5.3);
    EXPECT_NEAR(t.number(i, "delta"), zeeman_detuning(0.6, t.number(i, "axis_value")), 1e-9);
    // override dropped: I follows gamma / (gamma + 2 gamma_d)
    EXPECT_NEAR(t.number(i, "indistinguishability"), indistinguishability(t.number(i, "gamma"), 0.06), 1e-15);
    EXPECT_GE(t.number(i, "total_first_order"), t.number(i, "total_asymptote"));
    if (i % 5) {
      EXPECT_LT(t.number(i, "total_first_order"), t.number(i - 1, "total_first_order"));
      EXPECT_LT(t.number(i, "numeric_infidelity"), t.number(i - 1, "numeric_infidelity"));
    }
  }
}

TEST(DetuningSweep, ExtrapolationWarns) {
  const Table t = run_scenario(parse("n_g_list = 80\nsweep_points = 2\nphotons = 1\n", "detuning_sweep"), 1);
  EXPECT_EQ(t.warnings.size(), 1u);
  EXPECT_TRUE(std::isnan(t.number(0, "numeric_infidelity")));
}

TEST(BranchingMap, CenterValue) {
  const Table t = run_scenario(load_shipped("branching_map"), 1);
  ASSERT_EQ(t.rows.size(), 441u);
  const std::size_t center = 10 * 21 + 10;
  EXPECT_NEAR(t.number(center, "B"), 49.0, 1e-9);
  EXPECT_NEAR(t.number(center, "infidelity"), 1.0 / 200.0, 1e-12);
  EXPECT_NEAR(t.number(center, "beta_total"), 0.96, 1e-12);
}

TEST(EchoDemo, Columns) {
  ScenarioConfig c = parse("t2_star = 2\nphotons = 1\nsigma_list = 0, 0.7\nsamples = 8\n", "echo_demo");
  const Table t = run_scenario(c, 1);
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_NEAR(t.number(0, "fidelity_echo"), 1.0, 1e-12);
  EXPECT_NEAR(t.number(0, "fidelity_no_echo"), 1.0, 1e-12);
  EXPECT_EQ(t.number(0, "std_error_echo"), 0.0);
  EXPECT_NEAR(t.number(1, "fidelity_echo"), 1.0, 1e-9);
  EXPECT_LT(t.number(1, "fidelity_no_echo"), 0.99);
}

TEST(PulseOptimization, SquareRowsMatchCoefficient) {
  ScenarioConfig c = parse("gamma = 1\ngamma_d = 0\nbranching = inf\ndelta_over_gamma_list = 100\n", "pulse_optimization");
  const Table t = run_scenario(c, 1);
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(std::get<std::string>(t.rows[0][t.column("status")]), "ok");
  EXPECT_NEAR(t.number(0, "coefficient"), kExcitationCoefficient, 0.1 * kExcitationCoefficient);
  EXPECT_NEAR(t.number(0, "error_min"),
              t.number(0, "off_resonant") + t.number(0, "re_excitation") + t.number(0, "incomplete_inversion"), 1e-12);
}

TEST(RunScenario, UnknownName) {
  ScenarioConfig c;
  c.scenario = "nope";
  EXPECT_THROW(run_scenario(c, 1), DomainError);
  EXPECT_THROW(c.validate(), ValidationError);
}

}  // namespace
