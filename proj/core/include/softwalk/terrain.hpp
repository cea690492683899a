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

// Terrain patches with a linear spring-damper (Kelvin-Voigt) contact law.
//
// Per-axis parameters are ordered (normal, tangent 1, tangent 2). A contact
// frame R maps world vectors to contact coordinates; its rows are n, t1, t2.
// Penetration is measured from the touchdown anchor: p = x_td - x_foot, so a
// foot sunk below the surface has a positive normal penetration.

#ifndef SOFTWALK_TERRAIN_HPP_
#define SOFTWALK_TERRAIN_HPP_

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "softwalk/types.hpp"

namespace softwalk::terrain {

inline constexpr double kRigidStiffness = 2e6;
inline constexpr double kDefaultDamping = 400.0;
inline constexpr double kDefaultFriction = 0.8;
inline constexpr double kLiftoffBand = 0.002;

struct TerrainPatch {
  std::string name = "patch";
  double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;
  double height = 0.0;
  Vec3 stiffness = Vec3::Constant(kRigidStiffness);  // N/m, (n, t1, t2)
  Vec3 damping = Vec3::Constant(kDefaultDamping);    // N s/m, (n, t1, t2)
  double friction = kDefaultFriction;
  Vec3 normal = Vec3::UnitZ();
  // Patches flagged as overlap strips add their parameters to whatever they
  // overlap instead of hiding it.
  bool overlap = false;

  bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
  // Throws std::invalid_argument on K <= 0, D < 0, mu <= 0 or an empty extent.
  void validate() const;
};

TerrainPatch make_patch(const std::string& name, double x_min, double x_max, double y_min,
                        double y_max, double stiffness, double damping = kDefaultDamping,
                        double friction = kDefaultFriction);

class TerrainMap {
 public:
  TerrainMap();
  explicit TerrainMap(std::vector<TerrainPatch> patches);

  // Governing parameters at (x, y). In regions covered by an overlap strip the
  // stiffness and damping of all covering patches are summed; otherwise the
  // first listed patch wins. Outside every patch the rigid default applies.
  TerrainPatch query(double x, double y) const;

  const std::vector<TerrainPatch>& patches() const { return patches_; }
  const TerrainPatch& default_patch() const { return default_; }
  void set_default_patch(const TerrainPatch& patch) { default_ = patch; }

  // Largest normal stiffness a foot can meet, including overlap sums.
  double max_stiffness() const;

 private:
  std::vector<TerrainPatch> patches_;
  TerrainPatch default_;
};

TerrainMap terrain_from_json(const std::string& json_text);

// Orthonormal frame with first row `normal`; the first tangent is the world x
// axis projected onto the surface (world y if x is parallel to the normal).
Mat3 contact_rotation(const Vec3& normal);

struct ContactFrame {
  Mat3 rotation = Mat3::Identity();  // world -> contact
  Vec3 anchor = Vec3::Zero();        // touchdown point on the surface, world
};

// Ground-truth force (world) for a foot in contact. `penetration` and `rate`
// are world-frame p and pdot. Normal force is max(0, K p_n + D pdot_n) while
// p_n > 0 and zero otherwise; the tangential spring-damper force is scaled
// back onto the friction cone when it exceeds mu times the normal force.
struct ContactForce {
  Vec3 world = Vec3::Zero();
  Vec3 contact = Vec3::Zero();  // (n, t1, t2) components
  bool sliding = false;
};
ContactForce ground_truth_force(const TerrainPatch& patch, const ContactFrame& frame,
                                const Vec3& penetration, const Vec3& rate);

struct ContactPointState {
  bool in_contact = false;
  ContactFrame frame;
  TerrainPatch patch;  // parameters captured at touchdown
  Vec3 penetration = Vec3::Zero();  // world
  Vec3 rate = Vec3::Zero();         // world
  Vec3 force = Vec3::Zero();        // world
  bool sliding = false;
  int touchdowns = 0;
  int liftoffs = 0;
};

// Touchdown when the foot crosses the surface going down (anchor is the foot
// projected onto the surface); liftoff once it rises more than `band` above
// the anchor plane. Updates penetration and rate from the new foot state but
// leaves `force` to the caller. Returns true on a touchdown or liftoff.
bool update_contact_event(const TerrainMap& map, const Vec3& foot_position,
                          const Vec3& foot_velocity, ContactPointState& state,
                          double band = kLiftoffBand);

// Evaluates the force for a foot already updated by update_contact_event; a
// sliding foot drags its anchor so the tangential spring stays on the cone.
void apply_contact_law(ContactPointState& state, const Vec3& foot_position);

}  // namespace softwalk::terrain

#endif  // SOFTWALK_TERRAIN_HPP_
