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

#include "softwalk/robot_model.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "json_util.hpp"

namespace softwalk::rbd {

using nlohmann::json;

double RobotModel::total_mass() const {
  double m = 0.0;
  for (const Link& l : links) m += l.inertia.mass;
  return m;
}

void RobotModel::validate() const {
  if (static_cast<int>(links.size()) != 1 + kNumJoints) {
    throw std::invalid_argument("robot model must have a trunk and 12 leg links, got " +
                                std::to_string(links.size()));
  }
  if (links[0].parent != -1) throw std::invalid_argument("link 0 must be the root");
  for (int i = 0; i < static_cast<int>(links.size()); ++i) {
    const Link& l = links[i];
    if (i > 0) {
      if (l.parent < 0 || l.parent >= i) {
        throw std::invalid_argument("link '" + l.name + "' must have an earlier parent");
      }
      if (std::abs(l.joint_axis.norm() - 1.0) > 1e-9) {
        throw std::invalid_argument("joint axis of '" + l.name + "' is not a unit vector");
      }
    }
    if (!(l.inertia.mass > 0.0)) {
      throw std::invalid_argument("link '" + l.name + "' must have positive mass");
    }
    const Mat3& I = l.inertia.rotational;
    if ((I - I.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw std::invalid_argument("inertia of '" + l.name + "' is not symmetric");
    }
    if (Eigen::SelfAdjointEigenSolver<Mat3>(I).eigenvalues().minCoeff() <= 0.0) {
      throw std::invalid_argument("inertia of '" + l.name + "' is not positive definite");
    }
  }
  // every leg is a 3-link chain hanging from the trunk
  for (Leg leg : kAllLegs) {
    const int first = 1 + first_joint(leg);
    if (links[first].parent != 0 || links[first + 1].parent != first ||
        links[first + 2].parent != first + 1) {
      throw std::invalid_argument("leg " + std::string(leg_name(leg)) +
                                  " is not a serial chain from the trunk");
    }
  }
  for (const VecX* v : {&q_min, &q_max, &tau_min, &tau_max, &qdd_min, &qdd_max}) {
    if (v->size() != kNumJoints) throw std::invalid_argument("joint limit vectors need 12 entries");
  }
  if ((q_min.array() > q_max.array()).any() || (tau_min.array() > tau_max.array()).any() ||
      (qdd_min.array() > qdd_max.array()).any()) {
    throw std::invalid_argument("a lower joint limit exceeds its upper limit");
  }
}

namespace {

LinkInertia rod(double mass, double length) {
  LinkInertia in;
  in.mass = mass;
  in.com = Vec3(0.0, 0.0, -0.5 * length);
  const double transverse = mass * length * length / 12.0;
  in.rotational = Vec3(transverse, transverse, 0.001 * mass).asDiagonal();
  return in;
}

}  // namespace

RobotModel make_desk_quad() {
  constexpr double kMass = 85.0;
  constexpr double kLegFraction = 0.10;
  constexpr double kThigh = 0.35;
  constexpr double kShank = 0.35;
  constexpr double kHalfLength = 0.375;
  constexpr double kHalfWidth = 0.225;
  // per-leg split of the 10% leg mass budget
  constexpr double kHipMass = 0.6;
  constexpr double kThighMass = 1.0;
  constexpr double kShankMass = kMass * kLegFraction / kNumLegs - kHipMass - kThighMass;

  RobotModel m;
  m.name = "desk-quad";

  Link trunk;
  trunk.name = "trunk";
  trunk.inertia.mass = kMass * (1.0 - kLegFraction);
  // solid box 0.85 x 0.5 x 0.2 m
  const double a = 0.85, b = 0.5, c = 0.2;
  const double mt = trunk.inertia.mass;
  trunk.inertia.rotational =
      Vec3(mt * (b * b + c * c) / 12.0, mt * (a * a + c * c) / 12.0, mt * (a * a + b * b) / 12.0)
          .asDiagonal();
  m.links.push_back(trunk);

  for (Leg leg : kAllLegs) {
    const double sx = (leg == Leg::LF || leg == Leg::RF) ? 1.0 : -1.0;
    const double sy = (leg == Leg::LF || leg == Leg::LH) ? 1.0 : -1.0;
    const std::string prefix(leg_name(leg));
    const int base = static_cast<int>(m.links.size());

    Link hip_aa;
    hip_aa.name = prefix + "_hip_aa";
    hip_aa.parent = 0;
    hip_aa.joint_origin = Vec3(sx * kHalfLength, sy * kHalfWidth, 0.0);
    hip_aa.joint_axis = Vec3::UnitX();
    hip_aa.inertia.mass = kHipMass;
    hip_aa.inertia.rotational = 1e-3 * Mat3::Identity();
    m.links.push_back(hip_aa);

    Link thigh;
    thigh.name = prefix + "_thigh";
    thigh.parent = base;
    thigh.joint_origin = Vec3::Zero();
    thigh.joint_axis = Vec3::UnitY();
    thigh.inertia = rod(kThighMass, kThigh);
    m.links.push_back(thigh);

    Link shank;
    shank.name = prefix + "_shank";
    shank.parent = base + 1;
    shank.joint_origin = Vec3(0.0, 0.0, -kThigh);
    shank.joint_axis = Vec3::UnitY();
    shank.inertia = rod(kShankMass, kShank);
    m.links.push_back(shank);

    m.foot_offsets[index(leg)] = Vec3(0.0, 0.0, -kShank);
  }

  m.q_min.resize(kNumJoints);
  m.q_max.resize(kNumJoints);
  for (Leg leg : kAllLegs) {
    const int j = RobotModel::first_joint(leg);
    m.q_min.segment<3>(j) << -0.6, -1.6, -2.6;
    m.q_max.segment<3>(j) << 0.6, 1.6, -0.1;
  }
  m.tau_max = VecX::Constant(kNumJoints, 200.0);
  m.tau_min = -m.tau_max;
  m.qdd_max = VecX::Constant(kNumJoints, 1000.0);
  m.qdd_min = -m.qdd_max;
  m.validate();
  return m;
}

RobotModel robot_model_from_json(const std::string& json_text) {
  const json j = parse_json(json_text, "robot model");
  RobotModel m;
  try {
    m.name = j.value("name", "robot");
    for (const json& jl : j.at("links")) {
      Link l;
      l.name = jl.at("name").get<std::string>();
      l.parent = jl.value("parent", -1);
      if (jl.contains("joint_origin")) l.joint_origin = vec3_from_json(jl.at("joint_origin"));
      if (jl.contains("joint_axis")) l.joint_axis = vec3_from_json(jl.at("joint_axis")).normalized();
      l.inertia.mass = jl.at("mass").get<double>();
      if (jl.contains("com")) l.inertia.com = vec3_from_json(jl.at("com"));
      l.inertia.rotational = mat3_from_json(jl.at("inertia"));
      m.links.push_back(l);
    }
    const json& feet = j.at("foot_offsets");
    for (Leg leg : kAllLegs) {
      m.foot_offsets[index(leg)] = vec3_from_json(feet.at(std::string(leg_name(leg))));
    }
    const json& lim = j.at("limits");
    m.q_min = vecx_from_json(lim.at("q_min"));
    m.q_max = vecx_from_json(lim.at("q_max"));
    m.tau_min = vecx_from_json(lim.at("tau_min"));
    m.tau_max = vecx_from_json(lim.at("tau_max"));
    m.qdd_min = vecx_from_json(lim.at("qdd_min"));
    m.qdd_max = vecx_from_json(lim.at("qdd_max"));
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("robot model: ") + e.what());
  }
  m.validate();
  return m;
}

RobotModel load_robot_model(const std::filesystem::path& path) {
  return robot_model_from_json(read_text_file(path));
}

std::string robot_model_to_json(const RobotModel& model) {
  json j;
  j["name"] = model.name;
  json links = json::array();
  for (const Link& l : model.links) {
    json jl;
    jl["name"] = l.name;
    jl["parent"] = l.parent;
    jl["joint_origin"] = to_json(l.joint_origin);
    jl["joint_axis"] = to_json(l.joint_axis);
    jl["mass"] = l.inertia.mass;
    jl["com"] = to_json(l.inertia.com);
    jl["inertia"] = to_json(l.inertia.rotational);
    links.push_back(jl);
  }
  j["links"] = links;
  for (Leg leg : kAllLegs) {
    j["foot_offsets"][std::string(leg_name(leg))] = to_json(model.foot_offsets[index(leg)]);
  }
  j["limits"]["q_min"] = to_json(model.q_min);
  j["limits"]["q_max"] = to_json(model.q_max);
  j["limits"]["tau_min"] = to_json(model.tau_min);
  j["limits"]["tau_max"] = to_json(model.tau_max);
  j["limits"]["qdd_min"] = to_json(model.qdd_min);
  j["limits"]["qdd_max"] = to_json(model.qdd_max);
  return j.dump(2);
}

}  // namespace softwalk::rbd
