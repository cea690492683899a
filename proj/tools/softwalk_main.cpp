// Copyright 2026 The softwalk Authors
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

// softwalk run | compare | report. Exit status 1 when an episode fails (fall,
// divergence or setup error), 2 on bad input.

#include <CLI11.hpp>

#include <iomanip>
#include <iostream>

#include "softwalk/harness.hpp"

namespace {

using softwalk::harness::ControllerKind;

int run_command(const std::string& scenario_path, const std::string& controller,
                const std::optional<std::uint64_t>& seed, const std::string& out_dir) {
  softwalk::harness::Scenario s = softwalk::harness::load_scenario(scenario_path);
  if (!controller.empty()) s.controller = softwalk::harness::controller_from_string(controller);
  if (seed) s.seed = *seed;
  if (!out_dir.empty()) s.output_dir = out_dir;
  const softwalk::harness::EpisodeResult result = softwalk::harness::run(s);
  const auto csv = softwalk::harness::write_outputs(s, result);
  std::cout << softwalk::harness::format_table({result.report});
  std::cout << "episode: " << csv.string() << "\n";
  for (const auto& st : result.report.stiffness) {
    std::cout << "  stiffness " << st.patch << ": " << std::setprecision(6) << st.mean << " +- "
              << st.std << " N/m (truth " << st.truth << ", " << std::setprecision(3)
              << st.percent_error << " %)\n";
  }
  if (result.report.failed()) {
    std::cerr << "episode failed";
    if (!result.report.failure.empty()) std::cerr << ": " << result.report.failure;
    std::cerr << "\n";
    return 1;
  }
  return 0;
}

int compare_command(const std::string& scenario_path, const std::vector<std::string>& names,
                    const std::optional<std::uint64_t>& seed) {
  softwalk::harness::Scenario s = softwalk::harness::load_scenario(scenario_path);
  if (seed) s.seed = *seed;
  std::vector<ControllerKind> kinds;
  for (const std::string& n : names) kinds.push_back(softwalk::harness::controller_from_string(n));
  const auto reports = softwalk::harness::compare(s, kinds);
  std::cout << softwalk::harness::format_table(reports);
  bool failed = false;
  for (const auto& r : reports) failed = failed || r.failed();
  return failed ? 1 : 0;
}

int report_command(const std::string& episode) {
  const softwalk::harness::CsvSummary s = softwalk::harness::summarize_csv(episode);
  std::cout << "ticks " << s.ticks << ", last time " << s.duration << " s, QP fallbacks "
            << s.qp_fallbacks << "\n";
  std::cout << std::fixed << std::setprecision(2);
  const char* legs[] = {"LF", "RF", "LH", "RH"};
  for (int i = 0; i < 4; ++i) {
    std::cout << "  MAE " << legs[i] << ": " << s.mae[i] << " N over " << s.mae_samples[i]
              << " stance ticks\n";
  }
  std::cout << "  mean power: " << s.mean_power << " W\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"softwalk: legged locomotion on compliant terrain"};
  app.require_subcommand(1);

  std::string scenario;
  std::string controller;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  CLI::App* run = app.add_subcommand("run", "Run one episode and write CSV and JSON outputs");
  run->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  run->add_option("--controller", controller, "swbc, awbc or stance (default: from the scenario)")
      ->check(CLI::IsMember({"swbc", "awbc", "stance"}));
  run->add_option("--seed", seed, "Noise seed");
  run->add_option("--out", out_dir, "Output directory");

  std::vector<std::string> controllers = {"swbc", "awbc", "stance"};
  CLI::App* cmp = app.add_subcommand("compare", "Run several controllers on one scenario");
  cmp->add_option("--scenario", scenario, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  cmp->add_option("--controllers", controllers, "Controllers to compare")
      ->check(CLI::IsMember({"swbc", "awbc", "stance"}));
  cmp->add_option("--seed", seed, "Noise seed");

  std::string episode;
  CLI::App* rep = app.add_subcommand("report", "Summarize an episode CSV");
  rep->add_option("--episode", episode, "Episode CSV")->required()->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);
  try {
    if (run->parsed()) return run_command(scenario, controller, seed, out_dir);
    if (cmp->parsed()) return compare_command(scenario, controllers, seed);
    if (rep->parsed()) return report_command(episode);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
