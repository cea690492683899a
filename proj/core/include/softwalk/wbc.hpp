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

// Whole-body controller. Each tick solves one QP over
//
//   u = [qdd; F; eta]        (rigid stance mode)
//   u = [qdd; F; eta; eps]   (compliant stance mode)
//
// with qdd in centroidal coordinates, F the world-frame stance forces, eta the
// per-axis swing-tracking slack and eps the desired stance penetration. The
// cost tracks the trunk wrench, W_com = M_u qdd + h_u, and regularizes u.

#ifndef SOFTWALK_WBC_HPP_
#define SOFTWALK_WBC_HPP_

#include <array>
#include <optional>

#include "softwalk/qp.hpp"
#include "softwalk/rbd.hpp"
#include "softwalk/types.hpp"

namespace softwalk::wbc {

enum class WbcMode { kRigid, kCompliant };

std::string to_string(WbcMode mode);
WbcMode wbc_mode_from_string(const std::string& name);

struct WbcConfig {
  WbcMode mode = WbcMode::kRigid;
  double control_dt = 0.004;

  // Trunk task weight on [force; torque].
  Mat6 Q = Mat6::Identity();
  // Regularization per decision block.
  double r_qdd = 1e-4;
  double r_force = 1e-6;
  double r_slack = 1.0;
  double r_penetration = 1e-2;

  // Cartesian impedance at the CoM. Linear gains in N/m and N s/m, angular
  // gains in N m/rad and N m s/rad, all diagonal in the world frame.
  Vec3 trunk_kp_linear = Vec3(2000.0, 2000.0, 4000.0);
  Vec3 trunk_kd_linear = Vec3(400.0, 400.0, 600.0);
  Vec3 trunk_kp_angular = Vec3(300.0, 600.0, 300.0);
  Vec3 trunk_kd_angular = Vec3(40.0, 80.0, 50.0);

  // Swing foot PD on acceleration, 1/s^2 and 1/s.
  Vec3 swing_kp = Vec3::Constant(400.0);
  Vec3 swing_kd = Vec3::Constant(40.0);

  double friction = 0.8;
  int friction_facets = 4;
  double f_min = 10.0;   // N
  double f_max = 2000.0;  // N
  // Normal stiffness assumed for the loading ramp in rigid mode.
  double rigid_stiffness = 2e6;

  // Optional joint PD around the integrated optimal accelerations.
  bool joint_feedback = false;
  double joint_kp = 0.0;
  double joint_kd = 0.0;

  qp::QpSettings qp;

  // Throws std::invalid_argument unless Q is positive semidefinite, every
  // regularization weight is positive and 0 <= f_min <= f_max.
  void validate() const;
};

struct SwingReference {
  Vec3 position = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();
  Vec3 acceleration = Vec3::Zero();  // feedforward
};

struct TaskReferences {
  Vec3 com_position = Vec3::Zero();
  Vec3 com_velocity = Vec3::Zero();
  Vec3 com_acceleration = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();
  Vec3 angular_velocity = Vec3::Zero();
  Vec3 angular_acceleration = Vec3::Zero();

  LegSet stance = LegSet::all();
  std::array<std::optional<SwingReference>, kNumLegs> swing{};
  // Loading ramp timing per stance leg. Infinity means no ramp.
  std::array<double, kNumLegs> time_since_touchdown{};
  std::array<double, kNumLegs> time_to_liftoff{};

  TaskReferences();
  // Throws std::invalid_argument unless swing references exist exactly for
  // the legs outside the stance set.
  void validate() const;
};

// Terrain impedance seen by each foot, world frame.
struct ContactModel {
  std::array<Mat3, kNumLegs> stiffness;
  std::array<Mat3, kNumLegs> damping;
  std::array<Mat3, kNumLegs> rotation;  // world -> contact (rows n, t1, t2)

  // Zero impedance on a horizontal surface.
  ContactModel();
  // Isotropic stiffness and damping on a horizontal surface.
  static ContactModel uniform(double stiffness, double damping);
  double normal_stiffness(Leg leg) const;
};

// Previous two desired penetrations per stance leg.
struct PenetrationHistory {
  std::array<Vec3, kNumLegs> previous = zero_leg_vectors();  // eps_{k-1}
  std::array<Vec3, kNumLegs> before = zero_leg_vectors();    // eps_{k-2}

  void seed(Leg leg, const Vec3& penetration) {
    previous[index(leg)] = penetration;
    before[index(leg)] = penetration;
  }
  void push(Leg leg, const Vec3& penetration) {
    before[index(leg)] = previous[index(leg)];
    previous[index(leg)] = penetration;
  }
};

struct TrunkState {
  Vec3 com = Vec3::Zero();
  Vec3 com_velocity = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();
  Vec3 angular_velocity = Vec3::Zero();
  double mass = 0.0;
  Mat3 inertia = Mat3::Zero();  // composite, about the CoM, world frame
};

TrunkState trunk_state(const rbd::DynamicsTerms& terms, const rbd::RobotState& state);

// Rotation vector of R_d R^T.
Vec3 orientation_error(const Mat3& desired, const Mat3& actual);

// Impedance + gravity compensation + feedforward wrench at the CoM.
Vec6 trunk_task_wrench(const TrunkState& trunk, const TaskReferences& refs,
                       const WbcConfig& config);

Vec3 swing_task_accel(const rbd::FootState& foot, const SwingReference& ref,
                      const WbcConfig& config);

// Settling time of the foot-terrain mass-spring, 4.6 / sqrt(k / m_e) with
// m_e = m_R / n_st.
double loading_time(double normal_stiffness, double robot_mass, int num_stance);

// Scale on the normal force bounds: ramps 0 -> 1 over the loading time after
// touchdown and back to 0 over the same time before liftoff.
double loading_scale(double normal_stiffness, double robot_mass, int num_stance,
                     double time_since_touchdown, double time_to_liftoff);

// Column layout of the decision vector.
struct DecisionLayout {
  LegSet stance;
  LegSet swing;
  int qdd = 0;
  int force = 0;
  int slack = 0;
  int penetration = -1;  // -1 in rigid mode
  int size = 0;

  DecisionLayout() = default;
  DecisionLayout(LegSet stance, WbcMode mode);
};

struct WbcSolution {
  LegSet stance;
  VecX qdd;          // 6 + n, centroidal coordinates
  VecX force;        // 3 per stance leg, world
  VecX slack;        // 3 per swing leg
  VecX penetration;  // 3 per stance leg, compliant mode only
  VecX tau;          // n

  qp::QpStatus status = qp::QpStatus::kInfeasible;
  qp::KktResiduals residuals;
  int iterations = 0;
  double tick_time = 0.0;  // seconds, assemble + solve + map
  bool fallback = false;   // QP failed, previous torques reused
  Vec6 desired_wrench = Vec6::Zero();

  Vec3 leg_force(Leg leg) const;        // zero for swing legs
  Vec3 leg_penetration(Leg leg) const;  // zero when absent
};

struct QpBuild {
  qp::QpProblem problem;
  DecisionLayout layout;
  Vec6 desired_wrench = Vec6::Zero();
};

// Builds the QP for one tick. `split` must come from `terms` and the stance
// set of `refs`. `contact` and `history` are read in compliant mode only.
QpBuild assemble(const rbd::RobotModel& model, const rbd::RobotState& state,
                 const rbd::DynamicsTerms& terms, const rbd::DynamicsSplit& split,
                 const TaskReferences& refs, const ContactModel& contact,
                 const PenetrationHistory& history, const WbcConfig& config);

// tau = M_a qdd + h_j - J_st,j^T F.
VecX map_torques(const rbd::DynamicsSplit& split, const VecX& qdd, const VecX& force);

class WholeBodyController {
 public:
  WholeBodyController(rbd::RobotModel model, WbcConfig config);

  // One control tick. `touchdown_penetration` seeds the penetration history
  // of legs entering stance; zero when omitted.
  WbcSolution update(const rbd::RobotState& state, const TaskReferences& refs,
                     const ContactModel& contact,
                     const std::array<Vec3, kNumLegs>* touchdown_penetration = nullptr);

  void reset();
  const WbcConfig& config() const { return config_; }
  WbcConfig& mutable_config() { return config_; }
  const rbd::RobotModel& model() const { return model_; }
  const PenetrationHistory& history() const { return history_; }
  const qp::QpSolver& solver() const { return solver_; }

 private:
  rbd::RobotModel model_;
  WbcConfig config_;
  qp::QpSolver solver_;
  PenetrationHistory history_;
  LegSet previous_stance_;
  bool has_previous_ = false;
  VecX previous_tau_ = VecX::Zero(kNumJoints);
  // joint feedback integrator
  VecX q_des_;
  VecX qd_des_;
  LegSet integrator_stance_;
  bool integrator_valid_ = false;
};

}  // namespace softwalk::wbc

#endif  // SOFTWALK_WBC_HPP_
