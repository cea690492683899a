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
#include <numbers>

#include <gtest/gtest.h>

#include "softwalk/sim.hpp"
#include "softwalk/wbc.hpp"

namespace softwalk::wbc {
namespace {

rbd::RobotModel massless_leg_quad() {
  rbd::RobotModel m = rbd::make_desk_quad();
  for (std::size_t k = 1; k < m.links.size(); ++k) {
    m.links[k].inertia.mass = 1e-9;
    m.links[k].inertia.rotational = 1e-12 * Mat3::Identity();
  }
  return m;
}

rbd::RobotState stand(const rbd::RobotModel& model, double height = 0.5) {
  return sim::standing_state(model, terrain::TerrainMap{}, Vec3::Zero(), height,
                             sim::nominal_foot_offsets(model));
}

TaskReferences hold_references(const rbd::RobotModel& model, const rbd::RobotState& s) {
  TaskReferences r;
  r.com_position = rbd::center_of_mass(model, s);
  r.orientation = s.base_rotation;
  return r;
}

struct Tick {
  rbd::DynamicsTerms terms;
  rbd::DynamicsSplit split;
  QpBuild build;
  qp::QpSolution sol;
};

Tick solve_once(const rbd::RobotModel& model, const rbd::RobotState& s, const TaskReferences& r,
                const WbcConfig& c, const ContactModel& contact = ContactModel::uniform(2e6, 400),
                const PenetrationHistory& h = {}) {
  Tick t;
  t.terms = rbd::compute_dynamics(model, s, rbd::Coordinates::kCom);
  t.split = rbd::split_dynamics(t.terms, r.stance);
  t.build = assemble(model, s, t.terms, t.split, r, contact, h, c);
  qp::QpSolver solver;
  t.sol = solver.solve(t.build.problem, c.qp);
  return t;
}

TEST(WbcTest, TrunkWrenchIsGravityCompensationWithoutErrors) {
  TrunkState trunk;
  trunk.mass = 85.0;
  trunk.com = Vec3(0.1, 0.2, 0.5);
  TaskReferences r;
  r.com_position = trunk.com;
  const Vec6 w = trunk_task_wrench(trunk, r, WbcConfig{});
  Vec6 expected = Vec6::Zero();
  expected[2] = 85.0 * kGravity;
  EXPECT_LT((w - expected).norm(), 1e-12);
}

TEST(WbcTest, TrunkWrenchHeightErrorIsScalarImpedance) {
  TrunkState trunk;
  trunk.mass = 85.0;
  trunk.com = Vec3(0.0, 0.0, 0.49);
  TaskReferences r;
  r.com_position = Vec3(0.0, 0.0, 0.5);
  WbcConfig c;
  c.trunk_kp_linear.z() = 5000.0;
  const Vec6 w = trunk_task_wrench(trunk, r, c);
  EXPECT_NEAR(w[2], 85.0 * kGravity + 50.0, 1e-9);
  EXPECT_NEAR(w.head<2>().norm() + w.tail<3>().norm(), 0.0, 1e-12);
}

TEST(WbcTest, OrientationErrorAboutOneAxisGivesTorqueAboutThatAxis) {
  TrunkState trunk;
  trunk.mass = 85.0;
  TaskReferences r;
  r.orientation = Eigen::AngleAxisd(std::numbers::pi, Vec3::UnitX()).toRotationMatrix();
  const Vec6 w = trunk_task_wrench(trunk, r, WbcConfig{});
  EXPECT_NEAR(std::abs(w[3]), WbcConfig{}.trunk_kp_angular.x() * std::numbers::pi, 1e-9);
  EXPECT_NEAR(w[4], 0.0, 1e-9);
  EXPECT_NEAR(w[5], 0.0, 1e-9);
  // small rotations map to their rotation vector
  const Vec3 rv(0.01, -0.02, 0.03);
  const Mat3 Rd = Eigen::AngleAxisd(rv.norm(), rv.normalized()).toRotationMatrix();
  EXPECT_LT((orientation_error(Rd, Mat3::Identity()) - rv).norm(), 1e-12);
}

TEST(WbcTest, SwingAccelMatchesPdLaw) {
  WbcConfig c;
  c.swing_kp = Vec3::Constant(400.0);
  c.swing_kd = Vec3::Zero();
  rbd::FootState foot{Vec3(0.3, 0.2, 0.0), Vec3::Zero()};
  SwingReference ref;
  ref.position = foot.position + Vec3(0.0, 0.0, 0.02);
  EXPECT_LT((swing_task_accel(foot, ref, c) - Vec3(0.0, 0.0, 8.0)).norm(), 1e-12);

  ref.position = foot.position;
  EXPECT_LT(swing_task_accel(foot, ref, c).norm(), 1e-15);
}

TEST(WbcTest, SwingAccelIsLinearInEachError) {
  WbcConfig c;
  c.swing_kd = Vec3(30.0, 40.0, 50.0);
  rbd::FootState foot{Vec3(0.1, -0.2, 0.05), Vec3(0.3, 0.1, -0.2)};
  SwingReference a, b, ab;
  a.position = Vec3(0.2, -0.1, 0.1);
  a.velocity = foot.velocity;
  b.position = foot.position;
  b.velocity = Vec3(-0.4, 0.2, 0.5);
  b.acceleration = Vec3(1.0, 2.0, 3.0);
  ab.position = a.position;
  ab.velocity = b.velocity;
  ab.acceleration = b.acceleration;
  const Vec3 sum = swing_task_accel(foot, a, c) + swing_task_accel(foot, b, c);
  EXPECT_LT((swing_task_accel(foot, ab, c) - sum).norm(), 1e-12);
}

TEST(WbcTest, LoadingTimeSpotValues) {
  EXPECT_NEAR(loading_time(3500.0, 85.0, 4), 4.6 / std::sqrt(3500.0 / 21.25), 1e-12);
  EXPECT_NEAR(loading_time(3500.0, 85.0, 4), 0.3585, 1e-4);
  EXPECT_LT(loading_time(1e12, 85.0, 4), 1e-4);
  const double T = loading_time(8000.0, 85.0, 3);
  EXPECT_DOUBLE_EQ(loading_scale(8000.0, 85.0, 3, T, 10.0), 1.0);
  EXPECT_DOUBLE_EQ(loading_scale(8000.0, 85.0, 3, 2.0 * T, 10.0), 1.0);
  EXPECT_NEAR(loading_scale(8000.0, 85.0, 3, 0.25 * T, 10.0), 0.25, 1e-12);
  EXPECT_NEAR(loading_scale(8000.0, 85.0, 3, 10.0, 0.5 * T), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(loading_scale(8000.0, 85.0, 3, 0.0, 10.0), 0.0);
}

TEST(WbcTest, ConfigValidation) {
  WbcConfig c;
  EXPECT_NO_THROW(c.validate());
  c.Q(0, 0) = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = WbcConfig{};
  c.r_force = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = WbcConfig{};
  c.f_min = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  TaskReferences r;
  r.stance.erase(Leg::LF);
  EXPECT_THROW(r.validate(), std::invalid_argument);
}

TEST(WbcTest, SymmetricStanceSharesWeightEqually) {
  const rbd::RobotModel model = massless_leg_quad();
  const rbd::RobotState s = stand(model);
  const Tick t = solve_once(model, s, hold_references(model, s), WbcConfig{});
  ASSERT_TRUE(t.sol.ok());
  const double mg = model.total_mass() * kGravity;
  double sum = 0.0;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const double fz = t.sol.x[kNumDofs + 3 * leg + 2];
    EXPECT_NEAR(fz, mg / 4.0, 1e-3 * mg);
    sum += fz;
  }
  EXPECT_NEAR(sum, mg, 1e-4 * mg);
}

// Static equilibrium about the actual CoM: net force equals the weight and the
// net moment of the foot forces about the CoM vanishes.
TEST(WbcTest, StaticStanceBalancesForceAndMoment) {
  const rbd::RobotModel model = rbd::make_desk_quad();
  const rbd::RobotState s = stand(model);
  const Tick t = solve_once(model, s, hold_references(model, s), WbcConfig{});
  ASSERT_TRUE(t.sol.ok());
  const Vec3 com = rbd::center_of_mass(model, s);
  Vec3 force = Vec3::Zero(), moment = Vec3::Zero();
  for (Leg leg : kAllLegs) {
    const Vec3 f = t.sol.x.segment<3>(kNumDofs + 3 * index(leg));
    force += f;
    moment += (t.terms.feet[index(leg)].position - com).cross(f);
  }
  EXPECT_LT((force - Vec3(0, 0, model.total_mass() * kGravity)).norm(), 1e-3);
  EXPECT_LT(moment.norm(), 1e-3);
}

TEST(WbcTest, PhysicalConsistencyHoldsToSolverTolerance) {
  const rbd::RobotModel model = rbd::make_desk_quad();
  rbd::RobotState s = stand(model);
  s.base_linear_velocity = Vec3(0.1, -0.05, 0.02);
  s.base_angular_velocity = Vec3(0.1, 0.2, -0.1);
  TaskReferences r = hold_references(model, s);
  r.com_position += Vec3(0.02, -0.01, 0.03);
  r.stance.erase(Leg::RH);
  SwingReference sw;
  sw.position = rbd::foot_kinematics(model, s, Leg::RH).position + Vec3(0.0, 0.0, 0.05);
  r.swing[index(Leg::RH)] = sw;
  for (WbcMode mode : {WbcMode::kRigid, WbcMode::kCompliant}) {
    WbcConfig c;
    c.mode = mode;
    const Tick t = solve_once(model, s, r, c, ContactModel::uniform(8000.0, 400.0));
    ASSERT_TRUE(t.sol.ok()) << to_string(mode) << " " << qp::to_string(t.sol.status) << " it " << t.sol.iterations;
    const VecX qdd = t.sol.x.head(kNumDofs);
    const VecX F = t.sol.x.segment(kNumDofs, 9);
    const Vec6 eq5 = t.split.M_u * qdd + t.split.h_u - t.split.J_st_u.transpose() * F;
    EXPECT_LT(eq5.cwiseAbs().maxCoeff(), 1e-6);
    EXPECT_LE(t.sol.residuals.max(), 1e-6);
  }
}

TEST(WbcTest, CompliantModeApproachesRigidConstraintForStiffTerrain) {
  const rbd::RobotModel model = rbd::make_desk_quad();
  const rbd::RobotState s = stand(model);
  const TaskReferences r = hold_references(model, s);
  WbcConfig c;
  c.mode = WbcMode::kCompliant;
  WholeBodyController wbc(model, c);
  const ContactModel stiff = ContactModel::uniform(2e6, 400.0);
  WbcSolution sol;
  for (int k = 0; k < 200; ++k) sol = wbc.update(s, r, stiff);
  ASSERT_FALSE(sol.fallback);
  const rbd::DynamicsTerms terms = rbd::compute_dynamics(model, s, rbd::Coordinates::kCom);
  const VecX acc = rbd::stack_jacobians(terms, LegSet::all()) * sol.qdd +
                   rbd::stack_jdot_qdot(terms, LegSet::all());
  EXPECT_LT(acc.norm(), 1e-3);
  for (Leg leg : kAllLegs) {
    EXPECT_NEAR(sol.leg_penetration(leg).z(), sol.leg_force(leg).z() / 2e6, 1e-7);
  }
}

TEST(WbcTest, CompliantAndRigidTorquesAgreeInStiffLimit) {
  const rbd::RobotModel model = rbd::make_desk_quad();
  rbd::RobotState s = stand(model);
  s.base_linear_velocity = Vec3(0.02, 0.0, 0.0);
  const TaskReferences r = hold_references(model, s);
  WbcConfig rigid;
  WbcConfig compliant;
  compliant.mode = WbcMode::kCompliant;
  WholeBodyController a(model, rigid), b(model, compliant);
  const ContactModel stiff = ContactModel::uniform(2e6, 400.0);
  WbcSolution sa, sb;
  for (int k = 0; k < 50; ++k) {
    sa = a.update(s, r, stiff);
    sb = b.update(s, r, stiff);
  }
  EXPECT_LT((sa.tau - sb.tau).cwiseAbs().maxCoeff(), 1.0);
}

TEST(WbcTest, SolutionRespectsConeBoundsAndPenetrationSign) {
  const rbd::RobotModel model = rbd::make_desk_quad();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  WbcConfig c;
  c.mode = WbcMode::kCompliant;
  const double mu_inner = c.friction / std::sqrt(2.0);
  for (int trial = 0; trial < 30; ++trial) {
    rbd::RobotState s = stand(model, 0.45 + 0.05 * u(rng));
    s.base_linear_velocity = 0.2 * Vec3(u(rng), u(rng), u(rng));
    s.base_angular_velocity = 0.3 * Vec3(u(rng), u(rng), u(rng));
    TaskReferences r = hold_references(model, s);
    r.com_position += 0.05 * Vec3(u(rng), u(rng), u(rng));
    r.com_acceleration = 3.0 * Vec3(u(rng), u(rng), u(rng));
    PenetrationHistory h;
    for (Leg leg : kAllLegs) {
      h.previous[index(leg)] = Vec3(0.0, 0.0, 0.05 + 1e-4 * u(rng));
      h.before[index(leg)] = Vec3(0.0, 0.0, 0.05 + 1e-4 * u(rng));
    }
    const Tick t = solve_once(model, s, r, c, ContactModel::uniform(3500.0, 400.0), h);
    ASSERT_TRUE(t.sol.ok());
    const DecisionLayout& L = t.build.layout;
    for (int leg = 0; leg < 4; ++leg) {
      const Vec3 F = t.sol.x.segment<3>(L.force + 3 * leg);
      const Vec3 eps = t.sol.x.segment<3>(L.penetration + 3 * leg);
      EXPECT_GE(eps.z(), -1e-6);
      EXPECT_GE(F.z(), c.f_min - 1e-6);
      EXPECT_LE(F.z(), c.f_max + 1e-6);
      EXPECT_LE(std::abs(F.x()), mu_inner * F.z() + 1e-6);
      EXPECT_LE(std::abs(F.y()), mu_inner * F.z() + 1e-6);
    }
  }
}

TEST(WbcTest, ScalingQAndRTogetherKeepsArgmin) {
  const rbd::RobotModel model = rbd::make_desk_quad();
  rbd::RobotState s = stand(model);
  s.base_angular_velocity = Vec3(0.2, -0.1, 0.05);
  TaskReferences r = hold_references(model, s);
  r.com_position += Vec3(0.03, 0.02, -0.01);
  WbcConfig c;
  WbcConfig scaled = c;
  const double k = 37.0;
  scaled.Q *= k;
  scaled.r_qdd *= k;
  scaled.r_force *= k;
  scaled.r_slack *= k;
  scaled.r_penetration *= k;
  const Tick a = solve_once(model, s, r, c);
  const Tick b = solve_once(model, s, r, scaled);
  ASSERT_TRUE(a.sol.ok() && b.sol.ok());
  EXPECT_LT((a.sol.x - b.sol.x).cwiseAbs().maxCoeff(), 1e-6 * (1.0 + a.sol.x.cwiseAbs().maxCoeff()));
}

TEST(WbcTest, TorqueMappingSatisfiesActuatedRows) {
  const rbd::RobotModel model = rbd::make_desk_quad();
  rbd::RobotState s = stand(model);
  s.qd.setConstant(0.3);
  WholeBodyController wbc(model, WbcConfig{});
  const WbcSolution sol = wbc.update(s, hold_references(model, s), ContactModel::uniform(2e6, 400));
  ASSERT_FALSE(sol.fallback);
  const rbd::DynamicsSplit split = rbd::split_dynamics(model, s, LegSet::all());
  const VecX residual =
      split.M_a * sol.qdd + split.h_j - split.J_st_j.transpose() * sol.force - sol.tau;
  EXPECT_LT(residual.cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_TRUE((sol.tau.array() <= model.tau_max.array() + 1e-9).all());
  EXPECT_TRUE((sol.tau.array() >= model.tau_min.array() - 1e-9).all());
}

TEST(WbcTest, MasslessLegsAtRestNeedNoLegTorqueWithoutForces) {
  const rbd::RobotModel model = massless_leg_quad();
  const rbd::RobotState s = stand(model);
  const rbd::DynamicsSplit split = rbd::split_dynamics(model, s, LegSet::all());
  const VecX tau = map_torques(split, VecX::Zero(kNumDofs), VecX::Zero(12));
  EXPECT_LT(tau.cwiseAbs().maxCoeff(), 1e-6);
}

TEST(WbcTest, NoStanceLegsIsBallisticButLegal) {
  const rbd::RobotModel model = rbd::make_desk_quad();
  rbd::RobotState s = stand(model);
  TaskReferences r = hold_references(model, s);
  r.stance = LegSet{};
  for (Leg leg : kAllLegs) {
    SwingReference sw;
    sw.position = rbd::foot_kinematics(model, s, leg).position;
    r.swing[index(leg)] = sw;
  }
  const Tick t = solve_once(model, s, r, WbcConfig{});
  ASSERT_TRUE(t.sol.ok());
  // With no contact forces the CoM falls freely.
  const VecX qdd = t.sol.x.head(kNumDofs);
  EXPECT_NEAR(qdd[2], -kGravity, 1e-6);
}

TEST(WbcTest, QpFailureFallsBackToPreviousTorques) {
  const rbd::RobotModel model = rbd::make_desk_quad();
  const rbd::RobotState s = stand(model);
  WbcConfig c;
  WholeBodyController wbc(model, c);
  const WbcSolution first = wbc.update(s, hold_references(model, s), ContactModel::uniform(2e6, 400));
  ASSERT_FALSE(first.fallback);
  // Force floor above what the torque limits can deliver: infeasible.
  wbc.mutable_config().f_min = 5000.0;
  wbc.mutable_config().f_max = 6000.0;
  const WbcSolution second =
      wbc.update(s, hold_references(model, s), ContactModel::uniform(2e6, 400));
  EXPECT_TRUE(second.fallback);
  EXPECT_EQ(second.tau, first.tau);
}

// Closed loop on rigid ground: rigid-mode torques hold the posture.
TEST(WbcTest, RigidModeHoldsStanceOnRigidGround) {
  const rbd::RobotModel model = rbd::make_desk_quad();
  const terrain::TerrainMap ground;
  sim::Simulator sim(model, ground, sim::SimConfig{});
  const rbd::RobotState s0 = sim::standing_state(model, ground, Vec3::Zero(), 0.5,
                                                 sim::nominal_foot_offsets(model));
  sim.reset(s0);
  WholeBodyController wbc(model, WbcConfig{});
  const TaskReferences r = hold_references(model, s0);
  const Vec3 com0 = r.com_position;
  const ContactModel contact = ContactModel::uniform(2e6, 400);
  double drift = 0.0;
  for (int k = 0; k < 1250; ++k) {
    const WbcSolution sol = wbc.update(sim.state(), r, contact);
    ASSERT_FALSE(sol.fallback);
    sim.set_torques(sol.tau);
    sim.advance_control_period();
    drift = std::max(drift, (rbd::center_of_mass(model, sim.state()) - com0).norm());
  }
  EXPECT_LT(drift, 5e-3);
}

}  // namespace
}  // namespace softwalk::wbc
