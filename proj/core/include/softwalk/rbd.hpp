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

// Floating-base rigid-body dynamics for the quadruped.
//
// Two generalized-velocity conventions are supported:
//
//   kBase: [v_b; w_b; qd]   base origin velocity and base angular velocity,
//                           both in world coordinates.
//   kCom:  [v_com; w_b; qd] CoM velocity instead of base velocity.
//
// The two are related by qd_com = T qd_base with
//
//       | I  -[r]x  J_cj |
//   T = | 0    I     0   |,   r = x_com - x_b,
//       | 0    0     I   |
//
// where J_cj maps joint rates to CoM velocity with the base frozen. Base
// quantities are computed with the composite-rigid-body algorithm and
// recursive Newton-Euler in world-frame spatial coordinates; CoM quantities
// follow by the congruence M_c = T^-T M T^-1, J_c = J T^-1 and
// h_c = T^-T (h - M T^-1 Tdot qd). In kCom the linear block of M is m_R I and
// decouples from the rest.
//
// Everything here is a pure function of (model, state).

#ifndef SOFTWALK_RBD_HPP_
#define SOFTWALK_RBD_HPP_

#include <array>

#include "softwalk/robot_model.hpp"
#include "softwalk/types.hpp"

namespace softwalk::rbd {

using FootJacobian = Eigen::Matrix<double, 3, kNumDofs>;

enum class Coordinates { kBase, kCom };

struct RobotState {
  Vec3 base_position = Vec3::Zero();
  Mat3 base_rotation = Mat3::Identity();  // base -> world
  VecX q = VecX::Zero(kNumJoints);
  Vec3 base_linear_velocity = Vec3::Zero();   // world frame
  Vec3 base_angular_velocity = Vec3::Zero();  // world frame
  VecX qd = VecX::Zero(kNumJoints);
};

// Throws std::invalid_argument on dimension mismatch or a non-rotation.
void check_state(const RobotModel& model, const RobotState& state);

VecX generalized_velocity(const RobotModel& model, const RobotState& state,
                          Coordinates coords = Coordinates::kCom);

Vec3 center_of_mass(const RobotModel& model, const RobotState& state);
Vec3 center_of_mass_velocity(const RobotModel& model, const RobotState& state);

struct FootState {
  Vec3 position;  // world
  Vec3 velocity;  // world
};

// Everything the controllers and the simulator need from one state, computed
// in a single pass.
struct DynamicsTerms {
  Coordinates coords = Coordinates::kCom;
  MatX mass_matrix;  // (6+n) x (6+n)
  VecX bias;         // Coriolis, centrifugal and gravity
  std::array<FootJacobian, kNumLegs> foot_jacobian;
  std::array<Vec3, kNumLegs> jdot_qdot;
  std::array<FootState, kNumLegs> feet;
  Vec3 com = Vec3::Zero();
  Vec3 com_velocity = Vec3::Zero();
  VecX velocity;  // generalized velocity in `coords`
};

DynamicsTerms compute_dynamics(const RobotModel& model, const RobotState& state,
                               Coordinates coords = Coordinates::kCom);

MatX mass_matrix(const RobotModel& model, const RobotState& state,
                 Coordinates coords = Coordinates::kCom);
VecX bias_forces(const RobotModel& model, const RobotState& state,
                 Coordinates coords = Coordinates::kCom);
FootState foot_kinematics(const RobotModel& model, const RobotState& state, Leg leg);
FootJacobian foot_jacobian(const RobotModel& model, const RobotState& state, Leg leg,
                           Coordinates coords = Coordinates::kCom);
Vec3 jdot_qdot(const RobotModel& model, const RobotState& state, Leg leg,
               Coordinates coords = Coordinates::kCom);

// Recursive Newton-Euler in base coordinates: generalized force needed to
// produce `qdd_base` at `state` (gravity optional).
VecX inverse_dynamics(const RobotModel& model, const RobotState& state,
                      const VecX& qdd_base, bool with_gravity = true);

// Base-coordinate accelerations for a given generalized force.
VecX forward_dynamics(const RobotModel& model, const RobotState& state,
                      const VecX& generalized_force);

// Rows of the stacked Jacobian for `legs`, in LegSet order.
MatX stack_jacobians(const DynamicsTerms& terms, LegSet legs);
VecX stack_jdot_qdot(const DynamicsTerms& terms, LegSet legs);

// Unactuated / actuated split of M qdd + h = S^T tau + J_st^T F.
struct DynamicsSplit {
  LegSet stance;
  MatX M_u;      // 6 x (6+n)
  MatX M_a;      // n x (6+n)
  VecX h_u;      // 6
  VecX h_j;      // n
  MatX J_st;     // 3c x (6+n)
  MatX J_st_u;   // 3c x 6
  MatX J_st_j;   // 3c x n
  VecX Jdot_qdot_st;  // 3c

  // W_com = M_u qdd + h_u
  Vec6 gravito_inertial_wrench(const VecX& qdd) const;
};

DynamicsSplit split_dynamics(const DynamicsTerms& terms, LegSet stance);
DynamicsSplit split_dynamics(const RobotModel& model, const RobotState& state,
                             LegSet stance, Coordinates coords = Coordinates::kCom);

double kinetic_energy(const RobotModel& model, const RobotState& state);
double potential_energy(const RobotModel& model, const RobotState& state);

// Foot position of `leg` in the trunk frame for the given leg joint angles.
Vec3 leg_forward_kinematics(const RobotModel& model, Leg leg, const Vec3& leg_q);

// Newton iteration for leg joint angles placing the foot at `foot_in_trunk`.
// Returns the best iterate; `converged` reports whether the residual fell
// below 1e-10 m.
Vec3 leg_inverse_kinematics(const RobotModel& model, Leg leg, const Vec3& foot_in_trunk,
                            const Vec3& seed, bool* converged = nullptr);

// Integrates positions by `dt` at constant generalized velocity (base
// coordinates); orientation is advanced on SO(3).
RobotState integrate_positions(const RobotState& state, double dt);

}  // namespace softwalk::rbd

#endif  // SOFTWALK_RBD_HPP_
