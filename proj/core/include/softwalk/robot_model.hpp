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

#ifndef SOFTWALK_ROBOT_MODEL_HPP_
#define SOFTWALK_ROBOT_MODEL_HPP_

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include "softwalk/types.hpp"

namespace softwalk::rbd {

// Mass properties of one rigid link, expressed in the link frame.
struct LinkInertia {
  double mass = 0.0;
  Vec3 com = Vec3::Zero();
  // rotational inertia about the link CoM
  Mat3 rotational = Mat3::Zero();
};

// A link of the kinematic tree. Link 0 is the trunk (floating base); every
// other link hangs off a revolute joint. At zero joint angle the link frame is
// parallel to its parent frame.
struct Link {
  std::string name;
  int parent = -1;
  Vec3 joint_origin = Vec3::Zero();  // in the parent frame
  Vec3 joint_axis = Vec3::UnitX();   // unit vector, link frame
  LinkInertia inertia;
};

// Kinematic/inertial description of a floating-base quadruped with point feet.
//
// Joint j (0..11) drives links[j + 1]; joints are grouped per leg in the order
// LF, RF, LH, RH, and within a leg from hip to knee.
struct RobotModel {
  std::string name;
  std::vector<Link> links;
  std::array<Vec3, kNumLegs> foot_offsets{};  // in the frame of the leg's last link

  // Per actuated joint, size kNumJoints.
  VecX q_min;
  VecX q_max;
  VecX tau_min;
  VecX tau_max;
  VecX qdd_min;
  VecX qdd_max;

  double total_mass() const;

  // Body index carrying the foot of `leg`.
  static constexpr int foot_link(Leg leg) { return 1 + index(leg) * kJointsPerLeg + kJointsPerLeg - 1; }
  static constexpr int first_joint(Leg leg) { return index(leg) * kJointsPerLeg; }

  // Throws std::invalid_argument when the tree is not a 4 x 3-joint quadruped,
  // a mass is non-positive, or an inertia is not symmetric positive definite.
  void validate() const;
};

// The default "desk-quad": 85 kg, hips on a 0.75 m x 0.45 m rectangle,
// hip-AA / hip-FE / knee-FE legs with 0.35 m thigh and shank, legs carrying
// 10% of the total mass.
RobotModel make_desk_quad();

RobotModel robot_model_from_json(const std::string& json_text);
RobotModel load_robot_model(const std::filesystem::path& path);
std::string robot_model_to_json(const RobotModel& model);

}  // namespace softwalk::rbd

#endif  // SOFTWALK_ROBOT_MODEL_HPP_
