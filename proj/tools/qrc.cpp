// Copyright 2026 The QRC Measurement Authors
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

// qrc: command-line driver for the measurement-protocol experiments.
//
//   qrc run CONFIG.json [--set path=value ...] [--workers N]
//   qrc resources CONFIG.json [--set path=value ...]
//   qrc validate [--out report.json] [--inject-fault g-sign-flip]
//
// Exit status: 0 success, 1 validation failure, 2 bad config or usage,
// 3 runtime failure.

#include "qrc/experiment.hpp"
#include "qrc/validation.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

namespace {

qrc::ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& sets) {
  qrc::Json j = qrc::load_json_file(path);
  for (const auto& s : sets) qrc::apply_override(j, s);
  return qrc::parse_config(j);
}

void ensure_parent(const std::string& file) {
  const auto parent = std::filesystem::path(file).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

int cmd_run(const std::string& config, const std::vector<std::string>& sets, int workers) {
  const auto cfg = load_config(config, sets);
  const auto out = qrc::execute_run(cfg, workers);
  const std::string csv = cfg.output + ".csv";
  const std::string manifest = cfg.output + ".manifest.json";
  ensure_parent(csv);
  qrc::write_text_file(csv, out.csv());
  qrc::write_text_file(manifest, out.manifest.dump(2) + "\n");
  std::cerr << "wrote " << out.rows.size() << " rows to " << csv << " and " << manifest << "\n";
  return 0;
}

int cmd_resources(const std::string& config, const std::vector<std::string>& sets) {
  const auto cfg = load_config(config, sets);
  const std::string csv = cfg.output + ".csv";
  ensure_parent(csv);
  qrc::write_text_file(csv, qrc::execute_resources(cfg));
  std::cerr << "wrote " << csv << "\n";
  return 0;
}

int cmd_validate(const std::string& out, const std::string& fault, std::uint64_t samples) {
  qrc::ValidationOptions opt;
  opt.collapse_samples = samples;
  if (fault == "g-sign-flip")
    opt.sampling_sign = -1.0;
  else if (!fault.empty())
    throw qrc::ConfigError("--inject-fault", "unknown fault '" + fault + "'");
  const auto report = qrc::run_validation(opt);
  auto j = report.to_json();
  if (!fault.empty()) j["injected_fault"] = fault;
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    ensure_parent(out);
    qrc::write_text_file(out, text);
  }
  for (const auto& c : report.checks)
    std::cerr << (c.pass ? "PASS " : "FAIL ") << c.name << " measured=" << c.measured
              << " threshold=" << c.threshold << "\n";
  return report.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantum reservoir computing with weak-measurement protocols"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(qrc::kVersion));

  std::string config;
  std::vector<std::string> sets;
  int workers = 0;

  auto* run = app.add_subcommand("run", "Run a protocol/task sweep and write CSV + manifest");
  run->add_option("config", config, "JSON config (or a previous run manifest)")->required();
  run->add_option("--set", sets, "Override a config field, e.g. --set sweep.seeds=[1,2]");
  run->add_option("--workers", workers,
                  std::string("Worker threads (0: $") + qrc::kWorkersEnvVar + " or all cores)")
      ->check(CLI::NonNegativeNumber);

  auto* res = app.add_subcommand("resources", "Tabulate experimental times and g thresholds");
  res->add_option("config", config, "JSON config")->required();
  res->add_option("--set", sets, "Override a config field");

  std::string report_path;
  std::string fault;
  std::uint64_t samples = 4000;
  auto* val = app.add_subcommand("validate", "Run the oracle self-checks");
  val->add_option("--out", report_path, "Write the JSON report here instead of stdout");
  val->add_option("--inject-fault", fault, "Negative control: g-sign-flip");
  val->add_option("--samples", samples, "Collapse samples per unraveling case")
      ->check(CLI::Range(100, 10000000));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(config, sets, workers);
    if (*res) return cmd_resources(config, sets);
    if (*val) return cmd_validate(report_path, fault, samples);
  } catch (const qrc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
