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

#ifndef SOFTWALK_TYPES_HPP_
#define SOFTWALK_TYPES_HPP_

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace softwalk {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr int kNumLegs = 4;
inline constexpr int kJointsPerLeg = 3;
inline constexpr int kNumJoints = kNumLegs * kJointsPerLeg;
// floating base (6) + actuated joints
inline constexpr int kNumDofs = 6 + kNumJoints;

inline constexpr double kGravity = 9.81;

enum class Leg : int { LF = 0, RF = 1, LH = 2, RH = 3 };

inline constexpr std::array<Leg, kNumLegs> kAllLegs = {Leg::LF, Leg::RF,
                                                       Leg::LH, Leg::RH};

constexpr int index(Leg leg) { return static_cast<int>(leg); }

inline std::string_view leg_name(Leg leg) {
  switch (leg) {
    case Leg::LF: return "LF";
    case Leg::RF: return "RF";
    case Leg::LH: return "LH";
    case Leg::RH: return "RH";
  }
  return "??";
}

inline Leg leg_from_name(std::string_view name) {
  for (Leg leg : kAllLegs) {
    if (leg_name(leg) == name) return leg;
  }
  throw std::invalid_argument("unknown leg name: " + std::string(name));
}

// Which legs are in stance. Order of iteration is always LF, RF, LH, RH.
class LegSet {
 public:
  constexpr LegSet() = default;
  static constexpr LegSet all() {
    LegSet s;
    s.bits_ = 0xF;
    return s;
  }
  constexpr bool contains(Leg leg) const { return (bits_ >> index(leg)) & 1u; }
  constexpr void insert(Leg leg) { bits_ |= (1u << index(leg)); }
  constexpr void erase(Leg leg) { bits_ &= ~(1u << index(leg)); }
  constexpr int size() const {
    int n = 0;
    for (int i = 0; i < kNumLegs; ++i) n += (bits_ >> i) & 1u;
    return n;
  }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr LegSet complement() const {
    LegSet s;
    s.bits_ = (~bits_) & 0xF;
    return s;
  }
  constexpr unsigned bits() const { return bits_; }
  constexpr bool operator==(const LegSet&) const = default;

  // Position of `leg` among the members of the set (row block in stacked
  // quantities), or -1.
  constexpr int slot(Leg leg) const {
    if (!contains(leg)) return -1;
    int n = 0;
    for (int i = 0; i < index(leg); ++i) n += (bits_ >> i) & 1u;
    return n;
  }

 private:
  unsigned bits_ = 0;
};

// Per-leg array of zero vectors. Eigen types are not zeroed by `{}`.
inline std::array<Vec3, kNumLegs> zero_leg_vectors() {
  std::array<Vec3, kNumLegs> a;
  for (Vec3& v : a) v.setZero();
  return a;
}

inline Mat3 skew(const Vec3& v) {
  Mat3 s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

}  // namespace softwalk

#endif  // SOFTWALK_TYPES_HPP_
