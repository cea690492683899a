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

#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "softwalk/rbd.hpp"
#include "test_util.hpp"

namespace softwalk::rbd {
namespace {

using testing::naive_foot;
using testing::naive_kinetic_energy;
using testing::naive_poses;
using testing::random_state;
using testing::random_vector;
using testing::with_velocity;

RobotModel massless_leg_model() {
  RobotModel m = make_desk_quad();
  for (std::size_t i = 1; i < m.links.size(); ++i) {
    m.links[i].inertia.mass = 0.0;
    m.links[i].inertia.rotational.setZero();
  }
  return m;
}

double max_abs(const MatX& m) { return m.cwiseAbs().maxCoeff(); }

TEST(RobotModelTest, DeskQuadMassBudget) {
  const RobotModel m = make_desk_quad();
  EXPECT_NEAR(m.total_mass(), 85.0, 1e-12);
  double legs = 0.0;
  for (std::size_t i = 1; i < m.links.size(); ++i) legs += m.links[i].inertia.mass;
  EXPECT_NEAR(legs, 8.5, 1e-12);
}

TEST(RobotModelTest, JsonRoundTrip) {
  const RobotModel m = make_desk_quad();
  const RobotModel back = robot_model_from_json(robot_model_to_json(m));
  ASSERT_EQ(back.links.size(), m.links.size());
  for (std::size_t i = 0; i < m.links.size(); ++i) {
    EXPECT_EQ(back.links[i].parent, m.links[i].parent);
    EXPECT_EQ(back.links[i].inertia.mass, m.links[i].inertia.mass);
    EXPECT_EQ(back.links[i].joint_origin, m.links[i].joint_origin);
  }
  EXPECT_EQ(back.tau_max, m.tau_max);
}

TEST(RobotModelTest, RejectsBadModels) {
  RobotModel m = make_desk_quad();
  m.links[3].inertia.mass = -1.0;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = make_desk_quad();
  m.links[2].inertia.rotational(0, 1) = 0.5;
  EXPECT_THROW(m.validate(), std::invalid_argument);
  m = make_desk_quad();
  m.links.pop_back();
  EXPECT_THROW(m.validate(), std::invalid_argument);
  EXPECT_THROW(robot_model_from_json("{\n  \"name\": \"x\",\n  \"links\": [\n}"),
               std::invalid_argument);
}

TEST(RobotModelTest, SyntaxErrorReportsLine) {
  try {
    robot_model_from_json("{\n\"name\": \"x\",\n\"links\": [,]\n}");
    FAIL() << "expected a parse error";
  } catch (const std::invalid_argument& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(RbdTest, DimensionMismatchThrows) {
  const RobotModel m = make_desk_quad();
  RobotState s;
  s.q = VecX::Zero(11);
  EXPECT_THROW(compute_dynamics(m, s), std::invalid_argument);
  RobotState r;
  r.base_rotation(0, 0) = 2.0;
  EXPECT_THROW(compute_dynamics(m, r), std::invalid_argument);
}

TEST(RbdTest, MassMatrixSymmetricPositiveDefinite) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const RobotState s = random_state(rng);
    for (Coordinates c : {Coordinates::kBase, Coordinates::kCom}) {
      const MatX M = mass_matrix(m, s, c);
      ASSERT_LT(max_abs(M - M.transpose()), 1e-10);
      ASSERT_GT(Eigen::SelfAdjointEigenSolver<MatX>(M).eigenvalues().minCoeff(), 0.0);
    }
  }
}

TEST(RbdTest, ComCoordinatesDecoupleLinearBlock) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const MatX M = mass_matrix(m, random_state(rng), Coordinates::kCom);
    EXPECT_LT(max_abs(M.topLeftCorner(3, 3) - 85.0 * Mat3::Identity()), 1e-9);
    EXPECT_LT(max_abs(M.block(0, 3, 3, kNumDofs - 3)), 1e-9);
  }
}

TEST(RbdTest, MasslessLegsGiveTrunkOnlyTerms) {
  const RobotModel m = massless_leg_model();
  std::mt19937_64 rng(3);
  RobotState s = random_state(rng);
  s.base_linear_velocity.setZero();
  s.base_angular_velocity.setZero();
  s.qd.setZero();
  const DynamicsTerms t = compute_dynamics(m, s, Coordinates::kCom);
  const double mass = m.links[0].inertia.mass;
  EXPECT_LT(max_abs(t.mass_matrix.topLeftCorner(3, 3) - mass * Mat3::Identity()), 1e-10);
  // legs contribute nothing to the base/joint coupling
  EXPECT_LT(max_abs(t.mass_matrix.block(0, 6, 6, kNumJoints)), 1e-12);
  Vec6 expected;
  expected << 0, 0, mass * kGravity, 0, 0, 0;
  EXPECT_LT((t.bias.head<6>() - expected).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(t.bias.tail<kNumJoints>().cwiseAbs().maxCoeff(), 1e-12);
}

// Oracle: M(q) column by column from inverse dynamics with unit accelerations.
TEST(RbdTest, MassMatrixMatchesInverseDynamicsColumns) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 10; ++trial) {
    RobotState s = random_state(rng);
    s = with_velocity(s, VecX::Zero(kNumDofs));
    const MatX M = mass_matrix(m, s, Coordinates::kBase);
    for (int c = 0; c < kNumDofs; ++c) {
      const VecX col = inverse_dynamics(m, s, VecX::Unit(kNumDofs, c), false);
      EXPECT_LT((col - M.col(c)).cwiseAbs().maxCoeff(), 1e-10) << "column " << c;
    }
  }
}

// Oracle: kinetic energy from finite-differenced link motion, polarized into
// the quadratic form 1/2 v^T M v.
TEST(RbdTest, MassMatrixMatchesFiniteDifferenceKineticEnergy) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(5);
  const RobotState s = random_state(rng);
  for (Coordinates coords : {Coordinates::kBase, Coordinates::kCom}) {
    const MatX M = mass_matrix(m, s, coords);
    for (int trial = 0; trial < 20; ++trial) {
      const VecX v = random_vector(rng, kNumDofs);
      const RobotState sv = with_velocity(s, v);
      const VecX gv = generalized_velocity(m, sv, coords);
      const double ke = 0.5 * gv.dot(M * gv);
      EXPECT_NEAR(ke, naive_kinetic_energy(m, sv), 1e-6 * (1.0 + ke));
    }
  }
}

// Oracle (virtual power): h_i is the power of the link inertial and gravity
// forces at zero acceleration along unit velocity i. Link accelerations come
// from second differences of the naive link poses.
VecX virtual_power_bias(const RobotModel& model, const RobotState& s) {
  constexpr double h = 1e-4;
  const RobotState sp = integrate_positions(s, h);
  const RobotState sm = integrate_positions(s, -h);
  const auto p0 = naive_poses(model, s);
  const auto pp = naive_poses(model, sp);
  const auto pm = naive_poses(model, sm);
  const int n = static_cast<int>(model.links.size());

  auto omega = [&](const testing::NaivePoses& p, const RobotState& st, int i) {
    Vec3 w = st.base_angular_velocity;
    int k = i;
    while (k > 0) {
      w += p.R[k] * model.links[k].joint_axis * st.qd[k - 1];
      k = model.links[k].parent;
    }
    return w;
  };

  std::vector<Vec3> force(n), torque(n);
  for (int i = 0; i < n; ++i) {
    const auto& in = model.links[i].inertia;
    const Vec3 c0 = p0.origin[i] + p0.R[i] * in.com;
    const Vec3 cp = pp.origin[i] + pp.R[i] * in.com;
    const Vec3 cm = pm.origin[i] + pm.R[i] * in.com;
    const Vec3 a = (cp - 2.0 * c0 + cm) / (h * h);
    force[i] = in.mass * (a + Vec3(0, 0, kGravity));
    const Vec3 w = omega(p0, s, i);
    const Vec3 alpha = (omega(pp, sp, i) - omega(pm, sm, i)) / (2 * h);
    const Mat3 Iw = p0.R[i] * in.rotational * p0.R[i].transpose();
    torque[i] = Iw * alpha + w.cross(Iw * w);
  }

  VecX bias(kNumDofs);
  for (int dof = 0; dof < kNumDofs; ++dof) {
    const RobotState unit = with_velocity(s, VecX::Unit(kNumDofs, dof));
    double power = 0.0;
    for (int i = 0; i < n; ++i) {
      const auto& in = model.links[i].inertia;
      const Vec3 c0 = p0.origin[i] + p0.R[i] * in.com;
      const Vec3 wi = omega(p0, unit, i);
      // velocity of the CoM point under the unit generalized velocity
      Vec3 vc = unit.base_linear_velocity + unit.base_angular_velocity.cross(c0 - s.base_position);
      int k = i;
      while (k > 0) {
        vc += (p0.R[k] * model.links[k].joint_axis).cross(c0 - p0.origin[k]) * unit.qd[k - 1];
        k = model.links[k].parent;
      }
      power += force[i].dot(vc) + torque[i].dot(wi);
    }
    bias[dof] = power;
  }
  return bias;
}

TEST(RbdTest, BiasMatchesVirtualPowerOracle) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 5; ++trial) {
    const RobotState s = random_state(rng);
    const VecX h = bias_forces(m, s, Coordinates::kBase);
    const VecX oracle = virtual_power_bias(m, s);
    EXPECT_LT((h - oracle).norm(), 1e-5 * oracle.norm()) << "h " << h.transpose()
                                                         << "\noracle " << oracle.transpose();
  }
}

TEST(RbdTest, BiasEqualsInverseDynamicsAtZeroAcceleration) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(7);
  const RobotState s = random_state(rng);
  EXPECT_LT((bias_forces(m, s, Coordinates::kBase) -
             inverse_dynamics(m, s, VecX::Zero(kNumDofs), true))
                .cwiseAbs()
                .maxCoeff(),
            1e-12);
}

// Relabelling which chain is called which leg must permute h accordingly.
TEST(RbdTest, BiasConsistentUnderLegRelabelling) {
  const RobotModel m = make_desk_quad();
  RobotModel swapped = m;
  // swap the LF and RH chains
  for (int k = 0; k < kJointsPerLeg; ++k) {
    const int a = 1 + RobotModel::first_joint(Leg::LF) + k;
    const int b = 1 + RobotModel::first_joint(Leg::RH) + k;
    std::swap(swapped.links[a].joint_origin, swapped.links[b].joint_origin);
  }
  std::mt19937_64 rng(8);
  RobotState s = random_state(rng);
  s = with_velocity(s, VecX::Zero(kNumDofs));
  RobotState t = s;
  t.q.segment<3>(0) = s.q.segment<3>(9);
  t.q.segment<3>(9) = s.q.segment<3>(0);
  const VecX h = bias_forces(m, s, Coordinates::kCom);
  const VecX g = bias_forces(swapped, t, Coordinates::kCom);
  EXPECT_LT((h.head<6>() - g.head<6>()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((h.segment<3>(6) - g.segment<3>(15)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((h.segment<3>(15) - g.segment<3>(6)).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((h.segment<6>(9) - g.segment<6>(9)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(RbdTest, ForwardInverseDynamicsRoundTrip) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const RobotState s = random_state(rng);
    const VecX qdd = random_vector(rng, kNumDofs, 5.0);
    const VecX tau = inverse_dynamics(m, s, qdd, true);
    EXPECT_LT((forward_dynamics(m, s, tau) - qdd).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(RbdTest, FootPositionMatchesHandComposedChain) {
  const RobotModel m = make_desk_quad();
  RobotState s;
  const double a = 0.2, b = -0.4, c = -1.1;
  s.q.segment<3>(0) << a, b, c;
  const Vec3 foot = foot_kinematics(m, s, Leg::LF).position;
  // thigh and shank both 0.35 m in the hip-AA-rotated sagittal plane
  const double x = -0.35 * std::sin(b) - 0.35 * std::sin(b + c);
  const double zs = -0.35 * std::cos(b) - 0.35 * std::cos(b + c);
  const Vec3 expected(0.375 + x, 0.225 - zs * std::sin(a), zs * std::cos(a));
  EXPECT_LT((foot - expected).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((leg_forward_kinematics(m, Leg::LF, Vec3(a, b, c)) - expected).norm(), 1e-12);
}

TEST(RbdTest, FootVelocityZeroAtRest) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(10);
  const RobotState s = with_velocity(random_state(rng), VecX::Zero(kNumDofs));
  for (Leg leg : kAllLegs) EXPECT_EQ(foot_kinematics(m, s, leg).velocity.norm(), 0.0);
}

TEST(RbdTest, FootVelocityMatchesPositionDifferences) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(11);
  const RobotState s = random_state(rng);
  constexpr double h = 1e-6;
  for (Leg leg : kAllLegs) {
    const Vec3 fd = (naive_foot(m, integrate_positions(s, h), leg) -
                     naive_foot(m, integrate_positions(s, -h), leg)) /
                    (2 * h);
    EXPECT_LT((fd - foot_kinematics(m, s, leg).velocity).norm(), 1e-7);
  }
}

TEST(RbdTest, JacobianTimesVelocityIsFootVelocity) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const RobotState s = random_state(rng);
    for (Coordinates coords : {Coordinates::kBase, Coordinates::kCom}) {
      const DynamicsTerms t = compute_dynamics(m, s, coords);
      for (Leg leg : kAllLegs) {
        EXPECT_LT((t.foot_jacobian[index(leg)] * t.velocity - t.feet[index(leg)].velocity).norm(),
                  1e-10);
      }
    }
  }
}

TEST(RbdTest, OtherLegJointColumnsAreZeroInBaseCoordinates) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(13);
  const DynamicsTerms t = compute_dynamics(m, random_state(rng), Coordinates::kBase);
  for (Leg leg : kAllLegs) {
    for (Leg other : kAllLegs) {
      if (other == leg) continue;
      EXPECT_EQ(t.foot_jacobian[index(leg)].middleCols<3>(6 + RobotModel::first_joint(other)).norm(),
                0.0);
    }
  }
}

// Central differences over positions: base translation, world-frame rotation
// increments exp([d]x) R, and joint angles.
TEST(RbdTest, JacobianMatchesCentralDifferences) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(14);
  constexpr double h = 1e-7;
  for (int trial = 0; trial < 5; ++trial) {
    const RobotState s = random_state(rng);
    const DynamicsTerms t = compute_dynamics(m, s, Coordinates::kBase);
    for (Leg leg : kAllLegs) {
      FootJacobian fd;
      for (int c = 0; c < kNumDofs; ++c) {
        RobotState sp = s, sm = s;
        if (c < 3) {
          sp.base_position[c] += h;
          sm.base_position[c] -= h;
        } else if (c < 6) {
          const Vec3 axis = Vec3::Unit(c - 3);
          sp.base_rotation = Eigen::AngleAxisd(h, axis).toRotationMatrix() * s.base_rotation;
          sm.base_rotation = Eigen::AngleAxisd(-h, axis).toRotationMatrix() * s.base_rotation;
        } else {
          sp.q[c - 6] += h;
          sm.q[c - 6] -= h;
        }
        fd.col(c) = (naive_foot(m, sp, leg) - naive_foot(m, sm, leg)) / (2 * h);
      }
      EXPECT_LT((fd - t.foot_jacobian[index(leg)]).cwiseAbs().maxCoeff(), 1e-6);
    }
  }
}

TEST(RbdTest, JdotQdotZeroAtRest) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(15);
  const RobotState s = with_velocity(random_state(rng), VecX::Zero(kNumDofs));
  for (Coordinates coords : {Coordinates::kBase, Coordinates::kCom}) {
    for (Leg leg : kAllLegs) EXPECT_LT(jdot_qdot(m, s, leg, coords).norm(), 1e-12);
  }
}

// Oracle: d/dt (J(q(t)) qd) along the zero-acceleration trajectory.
TEST(RbdTest, JdotQdotMatchesDifferenceOfJacobianTimesVelocity) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(16);
  constexpr double h = 1e-5;
  for (int trial = 0; trial < 5; ++trial) {
    const RobotState s = random_state(rng);
    const VecX v = generalized_velocity(m, s, Coordinates::kBase);
    const DynamicsTerms tp = compute_dynamics(m, integrate_positions(s, h), Coordinates::kBase);
    const DynamicsTerms tm = compute_dynamics(m, integrate_positions(s, -h), Coordinates::kBase);
    for (Leg leg : kAllLegs) {
      const Vec3 fd =
          (tp.foot_jacobian[index(leg)] * v - tm.foot_jacobian[index(leg)] * v) / (2 * h);
      EXPECT_LT((fd - jdot_qdot(m, s, leg, Coordinates::kBase)).norm(), 1e-5 * (1 + fd.norm()));
    }
  }
}

TEST(RbdTest, PlanarMotionHasNoLateralJdotQdot) {
  const RobotModel m = make_desk_quad();
  RobotState s;
  s.base_position = Vec3(0.1, 0.0, 0.55);
  s.base_rotation = Eigen::AngleAxisd(0.2, Vec3::UnitY()).toRotationMatrix();
  std::mt19937_64 rng(17);
  for (Leg leg : kAllLegs) {
    const int j = RobotModel::first_joint(leg);
    s.q.segment<3>(j) << 0.0, 0.4 * std::sin(j), -1.0;
    s.qd.segment<3>(j) << 0.0, 1.5 * std::cos(j), -2.0;
  }
  s.base_linear_velocity = Vec3(0.3, 0.0, -0.2);
  s.base_angular_velocity = Vec3(0.0, 0.7, 0.0);
  for (Coordinates coords : {Coordinates::kBase, Coordinates::kCom}) {
    for (Leg leg : kAllLegs) EXPECT_LT(std::abs(jdot_qdot(m, s, leg, coords).y()), 1e-12);
  }
}

// Both coordinate systems must describe the same motion: solve forward
// dynamics in CoM coordinates and compare with base coordinates; the CoM
// acceleration is checked against differences of the CoM velocity, and the
// foot acceleration against J qdd + Jdot qd in both systems.
TEST(RbdTest, ComCoordinatesDescribeSameMotion) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(18);
  constexpr double h = 1e-5;
  for (int trial = 0; trial < 5; ++trial) {
    const RobotState s = random_state(rng);
    VecX gen_force = VecX::Zero(kNumDofs);
    gen_force.tail<kNumJoints>() = random_vector(rng, kNumJoints, 50.0);

    const DynamicsTerms base = compute_dynamics(m, s, Coordinates::kBase);
    const DynamicsTerms com = compute_dynamics(m, s, Coordinates::kCom);
    const VecX qdd_b = base.mass_matrix.ldlt().solve(gen_force - base.bias);
    // joint torques map identically in both coordinate systems
    const VecX qdd_c = com.mass_matrix.ldlt().solve(gen_force - com.bias);

    EXPECT_LT((qdd_b.tail<15>() - qdd_c.tail<15>()).cwiseAbs().maxCoeff(), 1e-8);

    auto shifted = [&](double dt) {
      RobotState st = integrate_positions(s, dt);
      return with_velocity(st, base.velocity + dt * qdd_b);
    };
    const RobotState sp = shifted(h), sm = shifted(-h);
    const Vec3 com_acc =
        (center_of_mass_velocity(m, sp) - center_of_mass_velocity(m, sm)) / (2 * h);
    EXPECT_LT((com_acc - qdd_c.head<3>()).norm(), 1e-5 * (1 + com_acc.norm()));

    for (Leg leg : kAllLegs) {
      const Vec3 foot_acc = (foot_kinematics(m, sp, leg).velocity -
                             foot_kinematics(m, sm, leg).velocity) /
                            (2 * h);
      const Vec3 via_base = base.foot_jacobian[index(leg)] * qdd_b + base.jdot_qdot[index(leg)];
      const Vec3 via_com = com.foot_jacobian[index(leg)] * qdd_c + com.jdot_qdot[index(leg)];
      EXPECT_LT((foot_acc - via_base).norm(), 1e-5 * (1 + foot_acc.norm()));
      EXPECT_LT((foot_acc - via_com).norm(), 1e-5 * (1 + foot_acc.norm()));
    }
  }
}

TEST(RbdTest, SplitReassemblesFullDynamics) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(19);
  const DynamicsTerms t = compute_dynamics(m, random_state(rng));
  LegSet stance = LegSet::all();
  stance.erase(Leg::RF);
  const DynamicsSplit s = split_dynamics(t, stance);
  MatX M(kNumDofs, kNumDofs);
  M << s.M_u, s.M_a;
  EXPECT_EQ(M, t.mass_matrix);
  EXPECT_EQ(s.J_st.rows(), 9);
  EXPECT_EQ(s.J_st.middleRows<3>(3), t.foot_jacobian[index(Leg::LH)]);
  const VecX qdd = random_vector(rng, kNumDofs);
  EXPECT_LT((s.gravito_inertial_wrench(qdd) - (s.M_u * qdd + s.h_u)).norm(), 1e-12);
  EXPECT_EQ(split_dynamics(t, LegSet()).J_st.rows(), 0);
}

TEST(RbdTest, StaticEquilibriumForcesBalanceUnactuatedRows) {
  const RobotModel m = make_desk_quad();
  RobotState s;
  s.base_position = Vec3(0, 0, 0.5);
  for (Leg leg : kAllLegs) {
    const Vec3 hip = m.links[1 + RobotModel::first_joint(leg)].joint_origin;
    s.q.segment<3>(RobotModel::first_joint(leg)) =
        leg_inverse_kinematics(m, leg, Vec3(hip.x(), hip.y(), -0.5), Vec3(0, 0.6, -1.2));
  }
  const DynamicsSplit sp = split_dynamics(m, s, LegSet::all());
  // minimum-norm contact forces satisfying J_st,u^T F = h_u
  const MatX A = sp.J_st_u.transpose();
  const VecX F = A.completeOrthogonalDecomposition().solve(sp.h_u);
  EXPECT_LT((sp.M_u * VecX::Zero(kNumDofs) + sp.h_u - A * F).norm(), 1e-8);
  Vec6 gravity;
  gravity << 0, 0, m.total_mass() * kGravity, 0, 0, 0;
  EXPECT_LT((sp.gravito_inertial_wrench(VecX::Zero(kNumDofs)) - gravity).norm(), 1e-9);
}

TEST(RbdTest, InverseKinematicsRoundTrip) {
  const RobotModel m = make_desk_quad();
  for (Leg leg : kAllLegs) {
    const Vec3 q(0.1, 0.5, -1.1);
    const Vec3 target = leg_forward_kinematics(m, leg, q);
    bool ok = false;
    const Vec3 sol = leg_inverse_kinematics(m, leg, target, Vec3(0, 0.3, -0.8), &ok);
    EXPECT_TRUE(ok);
    EXPECT_LT((leg_forward_kinematics(m, leg, sol) - target).norm(), 1e-9);
  }
}

TEST(RbdTest, EnergiesAreConsistent) {
  const RobotModel m = make_desk_quad();
  std::mt19937_64 rng(20);
  const RobotState s = random_state(rng);
  EXPECT_NEAR(potential_energy(m, s), 85.0 * kGravity * center_of_mass(m, s).z(), 1e-9);
  EXPECT_NEAR(kinetic_energy(m, s), naive_kinetic_energy(m, s), 1e-6 * kinetic_energy(m, s));
}

}  // namespace
}  // namespace softwalk::rbd
