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

// Ground-truth simulator: full floating-base dynamics under ideal joint
// torques and penalty contact forces, integrated with semi-implicit Euler.

#ifndef SOFTWALK_SIM_HPP_
#define SOFTWALK_SIM_HPP_

#include <array>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "softwalk/rbd.hpp"
#include "softwalk/terrain.hpp"

namespace softwalk::sim {

// Wrench applied at the trunk CoM during [t_start, t_end).
struct Disturbance {
  double t_start = 0.0;
  double t_end = 0.0;
  Vec3 force = Vec3::Zero();   // world, N
  Vec3 torque = Vec3::Zero();  // world, N m
};

struct NoiseConfig {
  double joint_velocity_std = 0.0;    // rad/s
  double base_linear_velocity_std = 0.0;   // m/s
  double base_angular_velocity_std = 0.0;  // rad/s
};

struct SimConfig {
  // Integrator step. Zero selects 0.05 ms when any patch reaches 1e6 N/m and
  // 0.25 ms otherwise.
  double dt_sim = 0.0;
  double control_dt = 0.004;
  NoiseConfig noise;
  std::uint64_t seed = 0;
  std::vector<Disturbance> disturbances;
  // Generalized velocity norm treated as divergence.
  double max_velocity = 1e3;
};

double auto_time_step(const terrain::TerrainMap& terrain);

// What the controller and estimator may read.
struct SensorSnapshot {
  double time = 0.0;
  rbd::RobotState state;
  VecX tau;  // torques applied over the last control period
  std::array<Vec3, kNumLegs> foot_positions;
  // Motion-capture stand-in: touchdown anchor and contact frame of each foot
  // while the simulator holds it in contact.
  std::array<std::optional<terrain::ContactFrame>, kNumLegs> touchdown;
};

class SimulationDiverged : public std::runtime_error {
 public:
  SimulationDiverged(const std::string& what, std::string dump)
      : std::runtime_error(what), dump_(std::move(dump)) {}
  const std::string& dump() const { return dump_; }

 private:
  std::string dump_;
};

std::string dump_state(double time, const rbd::RobotState& state, const VecX& tau);

class Simulator {
 public:
  Simulator(rbd::RobotModel model, terrain::TerrainMap terrain, SimConfig config);

  // Sets the state; feet already below the surface are anchored at their
  // projection on it.
  void reset(const rbd::RobotState& state, double time = 0.0);

  // Torques are held over the following steps and clamped to the model limits.
  void set_torques(const VecX& tau);

  // One integrator step. Throws SimulationDiverged on a non-finite or runaway
  // state.
  void step();

  // Steps through one control period; contact forces are averaged over it.
  void advance_control_period();

  SensorSnapshot measure();

  const rbd::RobotState& state() const { return state_; }
  double time() const { return time_; }
  double dt() const { return dt_; }
  int substeps() const { return substeps_; }
  const rbd::RobotModel& model() const { return model_; }
  const terrain::TerrainMap& terrain() const { return terrain_; }
  const VecX& torques() const { return tau_; }
  const std::array<terrain::ContactPointState, kNumLegs>& contacts() const { return contacts_; }
  const std::array<Vec3, kNumLegs>& mean_contact_forces() const { return mean_forces_; }
  void add_disturbance(const Disturbance& d) { config_.disturbances.push_back(d); }

 private:
  Vec6 disturbance_wrench(double t) const;

  rbd::RobotModel model_;
  terrain::TerrainMap terrain_;
  SimConfig config_;
  double dt_ = 0.0;
  int substeps_ = 1;
  rbd::RobotState state_;
  double time_ = 0.0;
  long long step_count_ = 0;
  VecX tau_ = VecX::Zero(kNumJoints);
  std::array<terrain::ContactPointState, kNumLegs> contacts_{};
  std::array<Vec3, kNumLegs> mean_forces_{};
  std::mt19937_64 rng_;
};

// Four-stance standing state in static equilibrium: the base sits `height`
// above the surface under its xy position and every foot is sunk to the depth
// at which its spring carries its share of the weight, so the simulator starts
// at rest. `foot_offsets` are foot xy positions relative to the base (trunk
// frame); the vertical distribution of load is solved from force and moment
// balance.
rbd::RobotState standing_state(const rbd::RobotModel& model, const terrain::TerrainMap& terrain,
                               const Vec3& base_xy_yaw, double height,
                               const std::array<Eigen::Vector2d, kNumLegs>& foot_offsets);

// Default foot placement: under the hips.
std::array<Eigen::Vector2d, kNumLegs> nominal_foot_offsets(const rbd::RobotModel& model);

}  // namespace softwalk::sim

#endif  // SOFTWALK_SIM_HPP_
