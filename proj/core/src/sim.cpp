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

#include "softwalk/sim.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace softwalk::sim {

double auto_time_step(const terrain::TerrainMap& terrain) {
  return terrain.max_stiffness() >= 1e6 ? 0.05e-3 : 0.25e-3;
}

std::string dump_state(double time, const rbd::RobotState& s, const VecX& tau) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "time " << time << "\n";
  os << "base_position " << s.base_position.transpose() << "\n";
  os << "base_rotation " << Eigen::Map<const Eigen::Matrix<double, 1, 9>>(s.base_rotation.data())
     << "\n";
  os << "q " << s.q.transpose() << "\n";
  os << "base_linear_velocity " << s.base_linear_velocity.transpose() << "\n";
  os << "base_angular_velocity " << s.base_angular_velocity.transpose() << "\n";
  os << "qd " << s.qd.transpose() << "\n";
  os << "tau " << tau.transpose() << "\n";
  return os.str();
}

Simulator::Simulator(rbd::RobotModel model, terrain::TerrainMap terrain, SimConfig config)
    : model_(std::move(model)),
      terrain_(std::move(terrain)),
      config_(std::move(config)),
      rng_(config_.seed) {
  model_.validate();
  dt_ = config_.dt_sim > 0.0 ? config_.dt_sim : auto_time_step(terrain_);
  if (!(config_.control_dt > 0.0) || dt_ > config_.control_dt) {
    throw std::invalid_argument("integrator step must not exceed the control period");
  }
  substeps_ = static_cast<int>(std::lround(config_.control_dt / dt_));
  dt_ = config_.control_dt / substeps_;
  for (Vec3& f : mean_forces_) f.setZero();
}

void Simulator::reset(const rbd::RobotState& state, double time) {
  rbd::check_state(model_, state);
  state_ = state;
  time_ = time;
  step_count_ = 0;
  tau_.setZero();
  contacts_ = {};
  const rbd::DynamicsTerms t = rbd::compute_dynamics(model_, state_, rbd::Coordinates::kBase);
  for (Leg leg : kAllLegs) {
    const int i = index(leg);
    terrain::update_contact_event(terrain_, t.feet[i].position, t.feet[i].velocity, contacts_[i]);
    terrain::apply_contact_law(contacts_[i], t.feet[i].position);
    mean_forces_[i] = contacts_[i].force;
  }
}

void Simulator::set_torques(const VecX& tau) {
  if (tau.size() != kNumJoints) throw std::invalid_argument("torque vector must have 12 entries");
  if (!tau.allFinite()) {
    throw SimulationDiverged("non-finite torque command", dump_state(time_, state_, tau));
  }
  tau_ = tau.cwiseMax(model_.tau_min).cwiseMin(model_.tau_max);
}

Vec6 Simulator::disturbance_wrench(double t) const {
  Vec6 w = Vec6::Zero();
  for (const Disturbance& d : config_.disturbances) {
    if (t >= d.t_start && t < d.t_end) {
      w.head<3>() += d.force;
      w.tail<3>() += d.torque;
    }
  }
  return w;
}

void Simulator::step() {
  const rbd::DynamicsTerms t = rbd::compute_dynamics(model_, state_, rbd::Coordinates::kBase);

  VecX gen = VecX::Zero(kNumDofs);
  gen.tail<kNumJoints>() = tau_;
  for (Leg leg : kAllLegs) {
    const int i = index(leg);
    terrain::ContactPointState& c = contacts_[i];
    terrain::update_contact_event(terrain_, t.feet[i].position, t.feet[i].velocity, c);
    terrain::apply_contact_law(c, t.feet[i].position);
    if (c.in_contact) gen += t.foot_jacobian[i].transpose() * c.force;
  }

  const Vec6 w = disturbance_wrench(time_);
  if (w.squaredNorm() > 0.0) {
    const Vec3 trunk_com =
        state_.base_position + state_.base_rotation * model_.links[0].inertia.com;
    const Vec3 f = w.head<3>();
    gen.head<3>() += f;
    gen.segment<3>(3) += (trunk_com - state_.base_position).cross(f) + w.tail<3>();
  }

  const VecX qdd = t.mass_matrix.llt().solve(gen - t.bias);
  VecX v = t.velocity + dt_ * qdd;
  rbd::RobotState next = state_;
  next.base_linear_velocity = v.head<3>();
  next.base_angular_velocity = v.segment<3>(3);
  next.qd = v.tail<kNumJoints>();
  next = rbd::integrate_positions(next, dt_);

  const bool finite = v.allFinite() && next.base_position.allFinite() && next.q.allFinite() &&
                      next.base_rotation.allFinite();
  if (!finite || v.norm() > config_.max_velocity) {
    throw SimulationDiverged("simulation diverged at t=" + std::to_string(time_),
                             dump_state(time_, state_, tau_));
  }
  state_ = next;
  ++step_count_;
  time_ += dt_;
}

void Simulator::advance_control_period() {
  std::array<Vec3, kNumLegs> sum{};
  for (Vec3& f : sum) f.setZero();
  for (int k = 0; k < substeps_; ++k) {
    step();
    for (int i = 0; i < kNumLegs; ++i) sum[i] += contacts_[i].force;
  }
  for (int i = 0; i < kNumLegs; ++i) mean_forces_[i] = sum[i] / substeps_;
}

SensorSnapshot Simulator::measure() {
  SensorSnapshot s;
  s.time = time_;
  s.state = state_;
  s.tau = tau_;
  const NoiseConfig& n = config_.noise;
  std::normal_distribution<double> gauss(0.0, 1.0);
  if (n.joint_velocity_std > 0.0) {
    for (int j = 0; j < kNumJoints; ++j) s.state.qd[j] += n.joint_velocity_std * gauss(rng_);
  }
  if (n.base_linear_velocity_std > 0.0) {
    for (int k = 0; k < 3; ++k) {
      s.state.base_linear_velocity[k] += n.base_linear_velocity_std * gauss(rng_);
    }
  }
  if (n.base_angular_velocity_std > 0.0) {
    for (int k = 0; k < 3; ++k) {
      s.state.base_angular_velocity[k] += n.base_angular_velocity_std * gauss(rng_);
    }
  }
  for (Leg leg : kAllLegs) {
    const int i = index(leg);
    s.foot_positions[i] = rbd::foot_kinematics(model_, state_, leg).position;
    if (contacts_[i].in_contact) s.touchdown[i] = contacts_[i].frame;
  }
  return s;
}

std::array<Eigen::Vector2d, kNumLegs> nominal_foot_offsets(const rbd::RobotModel& model) {
  std::array<Eigen::Vector2d, kNumLegs> out;
  for (Leg leg : kAllLegs) {
    const Vec3 hip = model.links[1 + rbd::RobotModel::first_joint(leg)].joint_origin;
    out[index(leg)] = hip.head<2>();
  }
  return out;
}

rbd::RobotState standing_state(const rbd::RobotModel& model, const terrain::TerrainMap& terrain,
                               const Vec3& base_xy_yaw, double height,
                               const std::array<Eigen::Vector2d, kNumLegs>& foot_offsets) {
  rbd::RobotState s;
  const Mat3 R = Eigen::AngleAxisd(base_xy_yaw.z(), Vec3::UnitZ()).toRotationMatrix();
  s.base_rotation = R;
  const double ground = terrain.query(base_xy_yaw.x(), base_xy_yaw.y()).height;
  s.base_position = Vec3(base_xy_yaw.x(), base_xy_yaw.y(), ground + height);

  std::array<Vec3, kNumLegs> feet_xy;
  std::array<terrain::TerrainPatch, kNumLegs> patch;
  for (int i = 0; i < kNumLegs; ++i) {
    feet_xy[i] = s.base_position + R * Vec3(foot_offsets[i].x(), foot_offsets[i].y(), 0.0);
    patch[i] = terrain.query(feet_xy[i].x(), feet_xy[i].y());
  }

  const double weight = model.total_mass() * kGravity;
  std::array<double, kNumLegs> load;
  load.fill(weight / kNumLegs);
  for (int iter = 0; iter < 4; ++iter) {
    for (Leg leg : kAllLegs) {
      const int i = index(leg);
      const double depth = load[i] / patch[i].stiffness[0];
      const Vec3 foot(feet_xy[i].x(), feet_xy[i].y(), patch[i].height - depth);
      const Vec3 in_trunk = R.transpose() * (foot - s.base_position);
      s.q.segment<3>(rbd::RobotModel::first_joint(leg)) =
          rbd::leg_inverse_kinematics(model, leg, in_trunk, Vec3(0.0, 0.7, -1.4));
    }
    // vertical loads balancing weight with zero moment about the CoM
    const Vec3 com = rbd::center_of_mass(model, s);
    Eigen::Matrix<double, 3, kNumLegs> A;
    for (int i = 0; i < kNumLegs; ++i) {
      A.col(i) << 1.0, feet_xy[i].x() - com.x(), feet_xy[i].y() - com.y();
    }
    const Vec3 b(weight, 0.0, 0.0);
    const Eigen::Vector4d f = A.transpose() * (A * A.transpose()).ldlt().solve(b);
    for (int i = 0; i < kNumLegs; ++i) load[i] = f[i];
  }
  return s;
}

}  // namespace softwalk::sim
