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

// Crawl-gait reference generation. A global gait phase Phi advances at
// 1 / T(v); leg i is in swing while frac(Phi + offset_i) >= duty. The first
// cycle is an all-stance hold. The trunk follows a straight path along world
// x, sways laterally away from the swinging leg, and optionally tracks height
// and roll sinusoids.

#ifndef SOFTWALK_PLANNER_HPP_
#define SOFTWALK_PLANNER_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "softwalk/types.hpp"
#include "softwalk/wbc.hpp"

namespace softwalk::planner {

using Vec2 = Eigen::Vector2d;

struct GaitConfig {
  bool enabled = true;  // false: all legs in stance for the whole episode
  double cycle_time = 4.0;  // s, at low speed
  double duty = 0.8;
  // Leg order LF, RF, LH, RH. Swing order follows descending offsets.
  std::array<double, kNumLegs> offsets = {0.0, 0.5, 0.25, 0.75};
  // Added to every leg phase; 0.75 makes LF the first leg to swing after the
  // hold, so a front foot steps ahead before the trunk has travelled far.
  double phase_shift = 0.75;
  // Body travel per cycle is capped at max_stride by shortening the cycle.
  double max_stride = 0.4;    // m
  double min_cycle_time = 1.0;  // s
  double step_height = 0.14;   // m above the higher of liftoff and touchdown
  double touchdown_depth = 0.01;  // m below the surface at the target
  double ground_height = 0.0;     // m, surface height assumed for footholds
  double sway = 0.1;              // m lateral CoM shift at the nominal cycle
  double sway_window = 0.14;      // sway transition length, fraction of a cycle
  bool startup_hold = true;       // first cycle in full stance
  double hold_ramp = 0.25;        // fraction of the hold over which sway fades in

  void validate() const;
};

enum class ProfileKind { kStand, kWalk, kRamp, kSinusoid };

std::string to_string(ProfileKind kind);
ProfileKind profile_kind_from_string(const std::string& name);

struct TrunkProfile {
  ProfileKind kind = ProfileKind::kWalk;
  double speed = 0.05;  // m/s, walk
  // Ramp: speed = min(ramp_start + ramp_acceleration t, ramp_final).
  double ramp_start = 0.05;
  double ramp_acceleration = 0.005;
  double ramp_final = 0.3;
  // Sinusoids about the standing pose; amplitudes fade in over `fade_in` s.
  double height_amplitude = 0.05;
  double height_frequency = 1.8;
  double roll_amplitude = 0.5;
  double roll_frequency = 1.5;
  double fade_in = 1.0;

  void validate() const;
  // Forward speed and acceleration at profile time t >= 0.
  double velocity(double t) const;
  double acceleration(double t) const;
  // Path length travelled by profile time t.
  double distance(double t) const;
};

// C2 quintic blend s(u) = 10u^3 - 15u^4 + 6u^5 on [0, 1], clamped outside.
struct Blend {
  double s = 0.0;
  double ds = 0.0;
  double dds = 0.0;
};
Blend quintic_blend(double u);

struct SwingPoint {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();      // per unit swing progress
  Vec3 acceleration = Vec3::Zero();  // per unit swing progress squared
};

// Quintic in xy; z rises to max(z_lo, z_td) + height at s = 0.5 and falls
// back, each half a quintic with zero end velocities and accelerations.
SwingPoint swing_trajectory(const Vec3& liftoff, const Vec3& touchdown, double height, double s);

struct LegSchedule {
  bool stance = true;
  double phase = 0.0;           // frac(Phi + offset + shift)
  double swing_progress = 0.0;  // in [0, 1) during swing
  double time_since_touchdown = std::numeric_limits<double>::infinity();
  double time_to_liftoff = std::numeric_limits<double>::infinity();
};

struct GaitSchedule {
  double global_phase = 0.0;
  double cycle_time = 0.0;
  bool hold = false;
  LegSet stance;
  std::array<LegSchedule, kNumLegs> legs;
};

struct PlanOutput {
  wbc::TaskReferences refs;
  GaitSchedule schedule;
  double speed = 0.0;  // desired forward speed
  std::array<Vec3, kNumLegs> footholds;  // current stance anchors or swing targets
  std::array<bool, kNumLegs> liftoff{};  // leg left stance this tick
  std::array<bool, kNumLegs> touchdown{};  // leg entered stance this tick
};

// Signed distance from `point` to the boundary of the convex hull of
// `vertices` (counter-clockwise or not), positive inside.
double support_margin(const Vec2& point, const std::vector<Vec2>& vertices);

class CrawlPlanner {
 public:
  CrawlPlanner(GaitConfig gait, TrunkProfile profile);

  // Anchors the plan at the measured standing pose.
  void reset(const Vec3& com, const Mat3& orientation, const std::array<Vec3, kNumLegs>& feet);

  // Advances the phase machine to `time` (non-decreasing across calls).
  // `feet` are measured foot positions, used as liftoff points.
  PlanOutput update(double time, const std::array<Vec3, kNumLegs>& feet);

  const GaitConfig& gait() const { return gait_; }
  const TrunkProfile& profile() const { return profile_; }
  // Cycle time for a forward speed.
  double cycle_time(double speed) const;
  // Lateral sway and its phase derivatives for global phase `phi` and cycle T.
  Blend sway(double phi, double cycle_time) const;
  // Hold length in time; zero without a hold.
  double hold_duration() const;
  // Absolute time at which the trunk profile starts.
  double profile_start() const { return hold_duration() + lead_in(); }
  double phase_rate(double time) const;

  // Distance along the path, speed and acceleration at absolute time. The
  // initial profile speed is blended in over the first walking cycle, which
  // precedes profile time zero.
  struct PathPoint {
    double distance = 0.0;
    double velocity = 0.0;
    double acceleration = 0.0;
  };
  PathPoint path(double time) const;
  double lead_in() const;

 private:
  bool in_swing_window(Leg leg, double phi) const;
  double next_liftoff_phase(Leg leg, double phi) const;
  double profile_time(double time) const;

  GaitConfig gait_;
  TrunkProfile profile_;
  Vec3 com0_ = Vec3::Zero();
  Mat3 orientation0_ = Mat3::Identity();
  std::array<Vec2, kNumLegs> foot_offsets_;  // nominal foot xy relative to CoM
  std::array<Vec3, kNumLegs> footholds_ = zero_leg_vectors();
  std::array<Vec3, kNumLegs> liftoff_points_ = zero_leg_vectors();
  std::array<bool, kNumLegs> swinging_{};
  std::array<double, kNumLegs> touchdown_time_;  // -inf before the first touchdown
  double phase_ = 0.0;
  double time_ = 0.0;
  bool started_ = false;

  struct Transition {
    double center;  // phase in [0, 1)
    double from;
    double to;
  };
  std::vector<Transition> transitions_;
};

}  // namespace softwalk::planner

#endif  // SOFTWALK_PLANNER_HPP_
