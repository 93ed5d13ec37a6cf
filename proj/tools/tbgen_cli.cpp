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

// tbgen <scenario> --config <path> [--seed <u64>] [--out <path>]
//
// Writes the scenario table as CSV (stdout when no output path is given) and,
// with an output path, a JSON manifest next to it at <out>.json. Failures
// print one JSON object on stderr and exit nonzero.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "tbgen/scenarios.hpp"

namespace {

using nlohmann::ordered_json;

std::string error_kind(const std::exception& e) {
  if (dynamic_cast<const tbgen::ParseError*>(&e)) return "parse_error";
  if (dynamic_cast<const tbgen::ValidationError*>(&e)) return "validation_error";
  if (dynamic_cast<const tbgen::CapacityError*>(&e)) return "capacity_error";
  if (dynamic_cast<const tbgen::BracketingError*>(&e)) return "bracketing_error";
  if (dynamic_cast<const tbgen::IntegrationError*>(&e)) return "integration_error";
  if (dynamic_cast<const tbgen::DomainError*>(&e)) return "domain_error";
  return "error";
}

int fail(const std::string& kind, const std::string& message, int code = 1) {
  ordered_json j;
  j["error"] = kind;
  j["message"] = message;
  std::cerr << j.dump() << std::endl;
  return code;
}

ordered_json manifest(const tbgen::Table& t, const tbgen::RunMetadata& meta, const std::string& csv_path) {
  ordered_json j;
  j["tool"] = "tbgen";
  j["version"] = tbgen::kVersion;
  j["scenario"] = meta.scenario;
  j["seed"] = meta.seed;
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : meta.config) config[k] = v;
  j["config"] = config;
  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : tbgen::params_echo(meta.params)) params[k] = v;
  j["params"] = params;
  j["output"] = std::filesystem::path(csv_path).filename().string();
  j["columns"] = t.columns;
  j["rows"] = t.rows.size();
  j["warnings"] = t.warnings;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"time-bin entangled photon generation: scenario runner"};
  app.set_version_flag("--version", std::string(tbgen::kVersion));
  std::string scenario, config_path, out_path;
  std::uint64_t seed = 0;
  app.add_option("scenario", scenario, "one of detuning_sweep, photon_scaling, pulse_optimization, echo_demo, "
                                       "branching_map")
      ->required();
  app.add_option("--config", config_path, "key = value configuration file")->required();
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides the config)");
  app.add_option("--out", out_path, "CSV output path (overrides the config)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage_error", e.what(), 2);
  }

  try {
    bool known = false;
    for (const auto& n : tbgen::scenario_names()) known = known || n == scenario;
    if (!known) return fail("usage_error", "unknown scenario '" + scenario + "'", 2);

    tbgen::ScenarioConfig cfg = tbgen::scenario_config_from(tbgen::KeyValueFile::load(config_path), scenario);
    if (*seed_opt) cfg.seed = seed;
    if (!out_path.empty()) cfg.out = out_path;

    const tbgen::Table table = tbgen::run_scenario(cfg);
    tbgen::RunMetadata meta{scenario, cfg.seed, cfg.echo, cfg.params};
    if (cfg.out.empty()) {
      tbgen::write_csv(std::cout, table, meta);
      return 0;
    }
    std::ofstream csv(cfg.out);
    if (!csv) return fail("io_error", "cannot write " + cfg.out);
    tbgen::write_csv(csv, table, meta);
    std::ofstream js(cfg.out + ".json");
    if (!js) return fail("io_error", "cannot write " + cfg.out + ".json");
    js << manifest(table, meta, cfg.out).dump(2) << '\n';
    for (const auto& w : table.warnings) std::cerr << "warning: " << w << '\n';
    return 0;
  } catch (const std::exception& e) {
    return fail(error_kind(e), e.what());
  }
}
