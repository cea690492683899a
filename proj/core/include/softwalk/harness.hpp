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

// Scenario runner and metrics. One control tick is
//
//   measure -> estimator (stance only) -> planner -> controller -> simulate
//
// and produces one episode CSV row. Metrics are accumulated in the same pass.

#ifndef SOFTWALK_HARNESS_HPP_
#define SOFTWALK_HARNESS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "softwalk/planner.hpp"
#include "softwalk/robot_model.hpp"
#include "softwalk/sim.hpp"
#include "softwalk/ste.hpp"
#include "softwalk/terrain.hpp"
#include "softwalk/wbc.hpp"

namespace softwalk::harness {

// sWBC: rigid-contact controller. aWBC: compliant controller with fixed
// terrain parameters. STANCE: compliant controller fed by the estimator.
enum class ControllerKind { kSwbc, kAwbc, kStance };

std::string to_string(ControllerKind kind);
ControllerKind controller_from_string(const std::string& name);

inline constexpr const char* kScenarioSchema = "softwalk-scenario/1";
inline constexpr const char* kEpisodeSchema = "softwalk-episode/1";
inline constexpr const char* kReportSchema = "softwalk-report/1";

struct FallCriterion {
  double height_fraction = 0.4;  // of the nominal base height above ground
  double tilt_deg = 60.0;        // between trunk z and world z
};

struct Scenario {
  std::string name = "scenario";
  rbd::RobotModel robot = rbd::make_desk_quad();
  terrain::TerrainMap terrain;
  ControllerKind controller = ControllerKind::kStance;
  // aWBC terrain model; required when controller is aWBC.
  std::optional<double> awbc_stiffness;
  std::optional<double> awbc_damping;
  wbc::WbcConfig wbc;
  ste::SteConfig estimator;
  planner::GaitConfig gait;
  planner::TrunkProfile profile;
  sim::SimConfig sim;
  double duration = 10.0;  // s
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "out";
  Vec3 start = Vec3::Zero();  // x, y, yaw
  double base_height = 0.5;   // m above the surface
  FallCriterion fall;
  // Runs a compliant controller with this stiffness on every state seen by
  // the driving controller and records the torque difference.
  std::optional<double> shadow_stiffness;
  // Liftoffs of planner-stance legs closer than this to their scheduled
  // liftoff are not counted as unintended.
  double liftoff_grace = 0.05;  // s
  // MAE and power average over ticks at or after this time.
  double metrics_start = 0.0;  // s

  // Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

// Parses the scenario format. `base_dir` resolves relative robot file paths.
// Errors carry the line and column for syntax problems and the JSON path for
// schema problems.
Scenario scenario_from_json(const std::string& text, const std::filesystem::path& base_dir = ".");
Scenario load_scenario(const std::filesystem::path& path);

struct LegRow {
  bool planned_stance = false;
  bool in_contact = false;   // simulator
  double force_normal = 0.0;       // N, simulator mean over the period
  double force_normal_ref = 0.0;   // N, controller optimum
  double stiffness = 0.0;          // N/m, estimate handed to the controller
  int fill = 0;                    // estimator window fill
  bool valid = false;
  double condition = 0.0;
};

struct EpisodeRow {
  double time = 0.0;
  bool scored = false;  // inside the metrics window
  Vec3 com = Vec3::Zero();
  Vec3 com_ref = Vec3::Zero();
  double roll = 0.0;
  double pitch = 0.0;
  double speed_ref = 0.0;
  std::array<LegRow, kNumLegs> legs;
  int qp_status = 0;
  int qp_iterations = 0;
  bool fallback = false;
  double power = 0.0;  // W, sum over joints of max(0, tau qd)
  double shadow_torque_diff = 0.0;  // N m, infinity norm; 0 without a shadow
};

struct StiffnessStat {
  std::string patch;
  double truth = 0.0;
  std::array<double, kNumLegs> leg_mean{};
  std::array<double, kNumLegs> leg_std{};
  std::array<int, kNumLegs> leg_samples{};
  double mean = 0.0;  // over all leg samples
  double std = 0.0;
  double percent_error = 0.0;  // |mean - truth| / truth * 100
  int samples = 0;
};

struct TimingStats {
  int ticks = 0;
  double mean_ms = 0.0;
  double p99_ms = 0.0;
  double max_ms = 0.0;
};

struct MetricsReport {
  std::string scenario;
  ControllerKind controller = ControllerKind::kStance;
  std::uint64_t seed = 0;
  int ticks = 0;
  double simulated_time = 0.0;
  double metrics_start = 0.0;  // metrics use ticks at or after this time

  std::array<double, kNumLegs> mae{};  // N, normal GRF, planner-stance ticks
  std::array<int, kNumLegs> mae_samples{};
  double mae_mean = 0.0;  // over all legs' samples

  std::vector<StiffnessStat> stiffness;
  int unintended_contact_losses = 0;
  double mean_power = 0.0;  // W
  double max_speed_ref = 0.0;  // highest commanded speed before any fall
  double mean_forward_speed = 0.0;  // m/s, measured over the metrics window

  bool fell = false;
  double fall_time = 0.0;
  bool diverged = false;
  std::string failure;  // divergence dump or setup error

  int qp_failures = 0;
  double shadow_max_diff = 0.0;
  double shadow_mean_diff = 0.0;

  TimingStats timing;

  bool failed() const { return fell || diverged || !failure.empty(); }
};

std::string report_to_json(const MetricsReport& report);

struct EpisodeResult {
  MetricsReport report;
  std::vector<EpisodeRow> rows;
  std::vector<double> tick_ms;  // wall clock, controller + estimator
};

// Runs one episode. Deterministic in (scenario, seed) except for timing.
EpisodeResult run(const Scenario& scenario);

// Versioned CSV without wall-clock columns, so reruns compare bitwise.
void write_csv(const std::vector<EpisodeRow>& rows, std::ostream& out);
void write_csv(const std::vector<EpisodeRow>& rows, const std::filesystem::path& path);
// Writes <output_dir>/<name>_<controller>.csv and .json; returns the CSV path.
std::filesystem::path write_outputs(const Scenario& scenario, const EpisodeResult& result);

// Runs the scenario once per controller on identical seeds and terrain.
// Failures are reported in the table, not thrown.
std::vector<MetricsReport> compare(const Scenario& scenario,
                                   const std::vector<ControllerKind>& controllers);
std::string format_table(const std::vector<MetricsReport>& reports);

struct CsvSummary {
  int ticks = 0;
  double duration = 0.0;
  std::array<double, kNumLegs> mae{};
  std::array<int, kNumLegs> mae_samples{};
  double mean_power = 0.0;
  int qp_fallbacks = 0;
};

// Recomputes per-leg MAE and power from an episode CSV.
CsvSummary summarize_csv(const std::filesystem::path& path);

}  // namespace softwalk::harness

#endif  // SOFTWALK_HARNESS_HPP_
