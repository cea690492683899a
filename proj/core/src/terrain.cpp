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

#include "softwalk/terrain.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"

namespace softwalk::terrain {

using nlohmann::json;

void TerrainPatch::validate() const {
  if (!(x_max > x_min) || !(y_max > y_min)) {
    throw std::invalid_argument("terrain patch '" + name + "' has an empty extent");
  }
  if (!(stiffness.minCoeff() > 0.0)) {
    throw std::invalid_argument("terrain patch '" + name + "' needs positive stiffness");
  }
  if (!(damping.minCoeff() >= 0.0)) {
    throw std::invalid_argument("terrain patch '" + name + "' needs non-negative damping");
  }
  if (!(friction > 0.0)) {
    throw std::invalid_argument("terrain patch '" + name + "' needs positive friction");
  }
  if (!(normal.norm() > 0.0) || std::abs(normal.normalized().z()) < 1e-3) {
    throw std::invalid_argument("terrain patch '" + name + "' has a degenerate normal");
  }
}

TerrainPatch make_patch(const std::string& name, double x_min, double x_max, double y_min,
                        double y_max, double stiffness, double damping, double friction) {
  TerrainPatch p;
  p.name = name;
  p.x_min = x_min;
  p.x_max = x_max;
  p.y_min = y_min;
  p.y_max = y_max;
  p.stiffness = Vec3::Constant(stiffness);
  p.damping = Vec3::Constant(damping);
  p.friction = friction;
  p.validate();
  return p;
}

TerrainMap::TerrainMap() {
  default_.name = "rigid-default";
  default_.x_min = -1e9;
  default_.x_max = 1e9;
  default_.y_min = -1e9;
  default_.y_max = 1e9;
}

TerrainMap::TerrainMap(std::vector<TerrainPatch> patches) : TerrainMap() {
  for (TerrainPatch& p : patches) {
    p.normal.normalize();
    p.validate();
  }
  patches_ = std::move(patches);
}

TerrainPatch TerrainMap::query(double x, double y) const {
  const TerrainPatch* first = nullptr;
  bool overlap = false;
  int count = 0;
  for (const TerrainPatch& p : patches_) {
    if (!p.contains(x, y)) continue;
    if (first == nullptr) first = &p;
    overlap = overlap || p.overlap;
    ++count;
  }
  if (first == nullptr) return default_;
  if (!overlap || count == 1) return *first;

  TerrainPatch sum = *first;
  sum.stiffness.setZero();
  sum.damping.setZero();
  sum.name.clear();
  for (const TerrainPatch& p : patches_) {
    if (!p.contains(x, y)) continue;
    sum.stiffness += p.stiffness;
    sum.damping += p.damping;
    sum.friction = std::min(sum.friction, p.friction);
    sum.height = std::max(sum.height, p.height);
    sum.name += sum.name.empty() ? p.name : "+" + p.name;
  }
  sum.overlap = true;
  return sum;
}

double TerrainMap::max_stiffness() const {
  double k = 0.0;
  bool uncovered_possible = patches_.empty();
  for (const TerrainPatch& p : patches_) {
    // probe the corners and centre of every patch; overlap sums peak there
    for (double x : {p.x_min, 0.5 * (p.x_min + p.x_max), p.x_max}) {
      for (double y : {p.y_min, 0.5 * (p.y_min + p.y_max), p.y_max}) {
        k = std::max(k, query(x, y).stiffness[0]);
      }
    }
  }
  if (uncovered_possible) k = std::max(k, default_.stiffness[0]);
  return k;
}

namespace {

TerrainPatch patch_from_json(const json& j, const TerrainPatch& defaults) {
  TerrainPatch p = defaults;
  p.name = j.value("name", p.name);
  if (j.contains("extent")) {
    const json& e = j.at("extent");
    p.x_min = e.at(0).get<double>();
    p.x_max = e.at(1).get<double>();
    p.y_min = e.at(2).get<double>();
    p.y_max = e.at(3).get<double>();
  }
  p.height = j.value("height", p.height);
  auto per_axis = [&](const char* key, Vec3& out) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    out = v.is_number() ? Vec3::Constant(v.get<double>()) : vec3_from_json(v);
  };
  per_axis("stiffness", p.stiffness);
  per_axis("damping", p.damping);
  p.friction = j.value("friction", p.friction);
  if (j.contains("normal")) p.normal = vec3_from_json(j.at("normal")).normalized();
  p.overlap = j.value("overlap", p.overlap);
  return p;
}

}  // namespace

TerrainMap terrain_from_json(const std::string& json_text) {
  const json j = parse_json(json_text, "terrain");
  try {
    TerrainMap map;
    TerrainPatch def = map.default_patch();
    if (j.contains("default")) def = patch_from_json(j.at("default"), def);
    std::vector<TerrainPatch> patches;
    for (const json& jp : j.value("patches", json::array())) {
      patches.push_back(patch_from_json(jp, TerrainPatch{}));
    }
    TerrainMap out(std::move(patches));
    out.set_default_patch(def);
    return out;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("terrain: ") + e.what());
  }
}

Mat3 contact_rotation(const Vec3& normal) {
  const Vec3 n = normal.normalized();
  Vec3 t1 = Vec3::UnitX() - n.x() * n;
  if (t1.norm() < 1e-6) t1 = Vec3::UnitY() - n.y() * n;
  t1.normalize();
  const Vec3 t2 = n.cross(t1);
  Mat3 R;
  R.row(0) = n.transpose();
  R.row(1) = t1.transpose();
  R.row(2) = t2.transpose();
  return R;
}

ContactForce ground_truth_force(const TerrainPatch& patch, const ContactFrame& frame,
                                const Vec3& penetration, const Vec3& rate) {
  ContactForce out;
  const Vec3 p = frame.rotation * penetration;
  const Vec3 pd = frame.rotation * rate;
  if (!(p[0] > 0.0)) return out;
  const double fn = std::max(0.0, patch.stiffness[0] * p[0] + patch.damping[0] * pd[0]);
  Eigen::Vector2d ft(patch.stiffness[1] * p[1] + patch.damping[1] * pd[1],
                     patch.stiffness[2] * p[2] + patch.damping[2] * pd[2]);
  const double limit = patch.friction * fn;
  const double mag = ft.norm();
  if (mag > limit) {
    ft *= mag > 0.0 ? limit / mag : 0.0;
    out.sliding = true;
  }
  out.contact = Vec3(fn, ft[0], ft[1]);
  out.world = frame.rotation.transpose() * out.contact;
  return out;
}

namespace {

// Height of the patch plane through (centre, height) at (x, y).
Vec3 surface_point(const TerrainPatch& patch, double x, double y) {
  const double cx = 0.5 * (patch.x_min + patch.x_max);
  const double cy = 0.5 * (patch.y_min + patch.y_max);
  const Vec3& n = patch.normal;
  const double z = patch.height - (n.x() * (x - cx) + n.y() * (y - cy)) / n.z();
  return Vec3(x, y, z);
}

}  // namespace

bool update_contact_event(const TerrainMap& map, const Vec3& foot_position,
                          const Vec3& foot_velocity, ContactPointState& state, double band) {
  bool event = false;
  if (state.in_contact) {
    const Vec3 n = state.frame.rotation.row(0).transpose();
    if (n.dot(foot_position - state.frame.anchor) > band) {
      state.in_contact = false;
      state.penetration.setZero();
      state.rate.setZero();
      state.force.setZero();
      state.sliding = false;
      ++state.liftoffs;
      return true;
    }
  } else {
    const TerrainPatch patch = map.query(foot_position.x(), foot_position.y());
    const Vec3 on_surface = surface_point(patch, foot_position.x(), foot_position.y());
    const double d = patch.normal.dot(foot_position - on_surface);
    if (d >= 0.0) return false;
    state.in_contact = true;
    state.patch = patch;
    state.frame.rotation = contact_rotation(patch.normal);
    state.frame.anchor = foot_position - d * patch.normal;
    ++state.touchdowns;
    event = true;
  }
  state.penetration = state.frame.anchor - foot_position;
  state.rate = -foot_velocity;
  return event;
}

void apply_contact_law(ContactPointState& state, const Vec3& foot_position) {
  if (!state.in_contact) {
    state.force.setZero();
    state.sliding = false;
    return;
  }
  const ContactForce f =
      ground_truth_force(state.patch, state.frame, state.penetration, state.rate);
  state.force = f.world;
  state.sliding = f.sliding;
  if (f.sliding) {
    // re-anchor tangentially so the spring alone would produce the cone force
    const Mat3& R = state.frame.rotation;
    Vec3 p = R * state.penetration;
    p[1] = f.contact[1] / state.patch.stiffness[1];
    p[2] = f.contact[2] / state.patch.stiffness[2];
    state.frame.anchor = foot_position + R.transpose() * p;
    state.penetration = state.frame.anchor - foot_position;
  }
}

}  // namespace softwalk::terrain
