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

#include "softwalk/wbc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>

#include "softwalk/terrain.hpp"

namespace softwalk::wbc {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Fills a preallocated inequality block row by row.
struct RowBuilder {
  RowBuilder(int capacity, int cols)
      : A(MatX::Zero(capacity, cols)), lower(capacity), upper(capacity) {}
  int add(double lo, double hi) {
    lower[rows] = lo;
    upper[rows] = hi;
    return rows++;
  }
  void finish() {
    A.conservativeResize(rows, Eigen::NoChange);
    lower.conservativeResize(rows);
    upper.conservativeResize(rows);
  }
  MatX A;
  VecX lower;
  VecX upper;
  int rows = 0;
};

}  // namespace

std::string to_string(WbcMode mode) { return mode == WbcMode::kRigid ? "rigid" : "compliant"; }

WbcMode wbc_mode_from_string(const std::string& name) {
  if (name == "rigid" || name == "swbc") return WbcMode::kRigid;
  if (name == "compliant" || name == "c3") return WbcMode::kCompliant;
  throw std::invalid_argument("unknown WBC mode: " + name);
}

void WbcConfig::validate() const {
  if (!(control_dt > 0.0)) throw std::invalid_argument("control_dt must be positive");
  const Mat6 Qs = 0.5 * (Q + Q.transpose());
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 ||
      Eigen::SelfAdjointEigenSolver<Mat6>(Qs).eigenvalues().minCoeff() < -1e-12) {
    throw std::invalid_argument("trunk weight Q must be symmetric positive semidefinite");
  }
  if (!(r_qdd > 0.0 && r_force > 0.0 && r_slack > 0.0 && r_penetration > 0.0)) {
    throw std::invalid_argument("regularization weights must be positive");
  }
  if (!(f_min >= 0.0 && f_max >= f_min)) throw std::invalid_argument("need 0 <= f_min <= f_max");
  if (!(friction > 0.0) || friction_facets < 3) {
    throw std::invalid_argument("friction must be positive with at least 3 facets");
  }
  if (!(rigid_stiffness > 0.0)) throw std::invalid_argument("rigid_stiffness must be positive");
}

TaskReferences::TaskReferences() {
  time_since_touchdown.fill(kInf);
  time_to_liftoff.fill(kInf);
}

void TaskReferences::validate() const {
  for (Leg leg : kAllLegs) {
    if (stance.contains(leg) == swing[index(leg)].has_value()) {
      throw std::invalid_argument("swing reference mismatch for leg " +
                                  std::string(leg_name(leg)));
    }
  }
}

ContactModel::ContactModel() {
  const Mat3 R = terrain::contact_rotation(Vec3::UnitZ());
  for (int i = 0; i < kNumLegs; ++i) {
    stiffness[i].setZero();
    damping[i].setZero();
    rotation[i] = R;
  }
}

ContactModel ContactModel::uniform(double k, double d) {
  ContactModel c;
  for (int i = 0; i < kNumLegs; ++i) {
    c.stiffness[i] = k * Mat3::Identity();
    c.damping[i] = d * Mat3::Identity();
  }
  return c;
}

double ContactModel::normal_stiffness(Leg leg) const {
  const Vec3 n = rotation[index(leg)].row(0).transpose();
  return n.dot(stiffness[index(leg)] * n);
}

TrunkState trunk_state(const rbd::DynamicsTerms& terms, const rbd::RobotState& state) {
  if (terms.coords != rbd::Coordinates::kCom) {
    throw std::invalid_argument("trunk_state needs centroidal dynamics terms");
  }
  TrunkState t;
  t.com = terms.com;
  t.com_velocity = terms.com_velocity;
  t.rotation = state.base_rotation;
  t.angular_velocity = state.base_angular_velocity;
  t.mass = terms.mass_matrix(0, 0);
  t.inertia = terms.mass_matrix.block<3, 3>(3, 3);
  return t;
}

Vec3 orientation_error(const Mat3& desired, const Mat3& actual) {
  const Eigen::AngleAxisd aa(desired * actual.transpose());
  return aa.angle() * aa.axis();
}

Vec6 trunk_task_wrench(const TrunkState& trunk, const TaskReferences& refs,
                       const WbcConfig& config) {
  Vec6 w;
  w.head<3>() = config.trunk_kp_linear.cwiseProduct(refs.com_position - trunk.com) +
                config.trunk_kd_linear.cwiseProduct(refs.com_velocity - trunk.com_velocity) +
                trunk.mass * refs.com_acceleration + Vec3(0.0, 0.0, trunk.mass * kGravity);
  w.tail<3>() =
      config.trunk_kp_angular.cwiseProduct(orientation_error(refs.orientation, trunk.rotation)) +
      config.trunk_kd_angular.cwiseProduct(refs.angular_velocity - trunk.angular_velocity) +
      trunk.inertia * refs.angular_acceleration;
  return w;
}

Vec3 swing_task_accel(const rbd::FootState& foot, const SwingReference& ref,
                      const WbcConfig& config) {
  return ref.acceleration + config.swing_kp.cwiseProduct(ref.position - foot.position) +
         config.swing_kd.cwiseProduct(ref.velocity - foot.velocity);
}

double loading_time(double normal_stiffness, double robot_mass, int num_stance) {
  if (!(normal_stiffness > 0.0)) throw std::invalid_argument("stiffness must be positive");
  if (num_stance <= 0) return 0.0;
  const double m_e = robot_mass / num_stance;
  return 4.6 / std::sqrt(normal_stiffness / m_e);
}

double loading_scale(double normal_stiffness, double robot_mass, int num_stance,
                     double time_since_touchdown, double time_to_liftoff) {
  const double T = loading_time(normal_stiffness, robot_mass, num_stance);
  const double t = std::min(time_since_touchdown, time_to_liftoff);
  if (T <= 0.0 || t >= T) return 1.0;
  return std::clamp(t / T, 0.0, 1.0);
}

DecisionLayout::DecisionLayout(LegSet st, WbcMode mode) : stance(st), swing(st.complement()) {
  qdd = 0;
  force = kNumDofs;
  slack = force + 3 * stance.size();
  size = slack + 3 * swing.size();
  if (mode == WbcMode::kCompliant) {
    penetration = size;
    size += 3 * stance.size();
  }
}

Vec3 WbcSolution::leg_force(Leg leg) const {
  const int s = stance.slot(leg);
  return s < 0 ? Vec3::Zero() : Vec3(force.segment<3>(3 * s));
}

Vec3 WbcSolution::leg_penetration(Leg leg) const {
  const int s = stance.slot(leg);
  if (s < 0 || penetration.size() == 0) return Vec3::Zero();
  return penetration.segment<3>(3 * s);
}

QpBuild assemble(const rbd::RobotModel& model, const rbd::RobotState& state,
                 const rbd::DynamicsTerms& terms, const rbd::DynamicsSplit& split,
                 const TaskReferences& refs, const ContactModel& contact,
                 const PenetrationHistory& history, const WbcConfig& config) {
  refs.validate();
  if (split.stance != refs.stance) throw std::invalid_argument("split stance set mismatch");
  const DecisionLayout L(refs.stance, config.mode);
  const bool compliant = config.mode == WbcMode::kCompliant;
  const int nst = L.stance.size();
  const int n = L.size;
  const double dt = config.control_dt;

  QpBuild out{qp::QpProblem{}, L, Vec6::Zero()};
  qp::QpProblem& p = out.problem;

  // Cost: |M_u qdd + h_u - W_d|_Q^2 + |u|_R^2.
  const Vec6 W_d = trunk_task_wrench(trunk_state(terms, state), refs, config);
  out.desired_wrench = W_d;
  p.H = MatX::Zero(n, n);
  p.g = VecX::Zero(n);
  const MatX QM = config.Q * split.M_u;
  p.H.topLeftCorner(kNumDofs, kNumDofs) = split.M_u.transpose() * QM;
  p.g.head(kNumDofs) = QM.transpose() * (split.h_u - W_d);
  VecX r(n);
  r.head(kNumDofs).setConstant(config.r_qdd);
  r.segment(L.force, 3 * nst).setConstant(config.r_force);
  r.segment(L.slack, 3 * L.swing.size()).setConstant(config.r_slack);
  if (compliant) r.segment(L.penetration, 3 * nst).setConstant(config.r_penetration);
  p.H.diagonal() += r;

  // Equalities.
  const int n_eq = 6 + 3 * nst + (compliant ? 3 * nst : 0);
  p.A_eq = MatX::Zero(n_eq, n);
  p.b_eq = VecX::Zero(n_eq);
  // Physical consistency of the unactuated rows: M_u qdd + h_u = J_st,u^T F.
  p.A_eq.block(0, L.qdd, 6, kNumDofs) = split.M_u;
  p.A_eq.block(0, L.force, 6, 3 * nst) = -split.J_st_u.transpose();
  p.b_eq.head<6>() = -split.h_u;
  int row = 6;
  for (Leg leg : kAllLegs) {
    const int s = L.stance.slot(leg);
    if (s < 0) continue;
    const int i = index(leg);
    const MatX J = split.J_st.middleRows(3 * s, 3);
    const Vec3 jdqd = split.Jdot_qdot_st.segment<3>(3 * s);
    if (!compliant) {
      // Stationary stance foot: J qdd + Jdot qdot = 0.
      p.A_eq.block(row, L.qdd, 3, kNumDofs) = J;
      p.b_eq.segment<3>(row) = -jdqd;
      row += 3;
    } else {
      const Mat3& K = contact.stiffness[i];
      const Mat3& D = contact.damping[i];
      const Vec3& e1 = history.previous[i];
      const Vec3& e2 = history.before[i];
      // F = K eps + D (eps - eps_{k-1}) / dt.
      p.A_eq.block<3, 3>(row, L.force + 3 * s) = Mat3::Identity();
      p.A_eq.block<3, 3>(row, L.penetration + 3 * s) = -(K + D / dt);
      p.b_eq.segment<3>(row) = -(D / dt) * e1;
      row += 3;
      // J qdd + Jdot qdot = -(eps - 2 eps_{k-1} + eps_{k-2}) / dt^2.
      p.A_eq.block(row, L.qdd, 3, kNumDofs) = J;
      p.A_eq.block<3, 3>(row, L.penetration + 3 * s) = Mat3::Identity() / (dt * dt);
      p.b_eq.segment<3>(row) = -jdqd + (2.0 * e1 - e2) / (dt * dt);
      row += 3;
    }
  }

  // Inequalities.
  const int capacity = nst * (config.friction_facets + 2) + 9 * L.swing.size() + 2 * kNumJoints;
  RowBuilder in(capacity, n);
  const double robot_mass = model.total_mass();
  const double mu_inner = config.friction * std::cos(std::numbers::pi / config.friction_facets);
  for (Leg leg : kAllLegs) {
    const int s = L.stance.slot(leg);
    if (s < 0) continue;
    const int i = index(leg);
    const Mat3& R = contact.rotation[i];
    const Eigen::RowVector3d nrm = R.row(0), t1 = R.row(1), t2 = R.row(2);
    const int fc = L.force + 3 * s;
    for (int k = 0; k < config.friction_facets; ++k) {
      const double th = 2.0 * std::numbers::pi * k / config.friction_facets;
      const int rr = in.add(-kInf, 0.0);
      in.A.block<1, 3>(rr, fc) = std::cos(th) * t1 + std::sin(th) * t2 - mu_inner * nrm;
    }
    const double k_n = compliant ? contact.normal_stiffness(leg) : config.rigid_stiffness;
    const double scale = loading_scale(k_n, robot_mass, nst, refs.time_since_touchdown[i],
                                       refs.time_to_liftoff[i]);
    const double f_hi = scale * config.f_max;
    const double f_lo = std::min(config.f_min, f_hi);
    const int rn = in.add(f_lo, f_hi);
    in.A.block<1, 3>(rn, fc) = nrm;
    if (compliant) {
      const int re = in.add(0.0, kInf);
      in.A.block<1, 3>(re, L.penetration + 3 * s) = nrm;
    }
  }
  // Swing tracking with per-axis slack: |J qdd + Jdot qdot - a_d| <= eta.
  for (Leg leg : kAllLegs) {
    const int s = L.swing.slot(leg);
    if (s < 0) continue;
    const int i = index(leg);
    const Vec3 a_d = swing_task_accel(terms.feet[i], *refs.swing[i], config);
    const Vec3 rhs = a_d - terms.jdot_qdot[i];
    for (int a = 0; a < 3; ++a) {
      const int col = L.slack + 3 * s + a;
      const int r1 = in.add(-kInf, rhs[a]);
      in.A.block(r1, L.qdd, 1, kNumDofs) = terms.foot_jacobian[i].row(a);
      in.A(r1, col) = -1.0;
      const int r2 = in.add(rhs[a], kInf);
      in.A.block(r2, L.qdd, 1, kNumDofs) = terms.foot_jacobian[i].row(a);
      in.A(r2, col) = 1.0;
      const int r3 = in.add(0.0, kInf);
      in.A(r3, col) = 1.0;
    }
  }
  // Torque limits: tau = M_a qdd + h_j - J_st,j^T F.
  for (int j = 0; j < kNumJoints; ++j) {
    const int rr = in.add(model.tau_min[j] - split.h_j[j], model.tau_max[j] - split.h_j[j]);
    in.A.block(rr, L.qdd, 1, kNumDofs) = split.M_a.row(j);
    if (nst > 0) in.A.block(rr, L.force, 1, 3 * nst) = -split.J_st_j.col(j).transpose();
  }
  // Joint acceleration bounds.
  for (int j = 0; j < kNumJoints; ++j) {
    const int rr = in.add(model.qdd_min[j], model.qdd_max[j]);
    in.A(rr, L.qdd + 6 + j) = 1.0;
  }
  in.finish();
  p.A_in = std::move(in.A);
  p.lower = std::move(in.lower);
  p.upper = std::move(in.upper);
  return out;
}

VecX map_torques(const rbd::DynamicsSplit& split, const VecX& qdd, const VecX& force) {
  VecX tau = split.M_a * qdd + split.h_j;
  if (force.size() > 0) tau -= split.J_st_j.transpose() * force;
  return tau;
}

WholeBodyController::WholeBodyController(rbd::RobotModel model, WbcConfig config)
    : model_(std::move(model)), config_(std::move(config)) {
  model_.validate();
  config_.validate();
}

void WholeBodyController::reset() {
  solver_.reset_warm_start();
  history_ = {};
  has_previous_ = false;
  previous_tau_.setZero();
  integrator_valid_ = false;
}

WbcSolution WholeBodyController::update(const rbd::RobotState& state, const TaskReferences& refs,
                                        const ContactModel& contact,
                                        const std::array<Vec3, kNumLegs>* touchdown_penetration) {
  const auto t0 = std::chrono::steady_clock::now();
  const bool compliant = config_.mode == WbcMode::kCompliant;
  for (Leg leg : kAllLegs) {
    const bool entering = refs.stance.contains(leg) &&
                          (!has_previous_ || !previous_stance_.contains(leg));
    if (entering) {
      history_.seed(leg, touchdown_penetration ? (*touchdown_penetration)[index(leg)]
                                               : Vec3::Zero());
    }
  }
  if (!has_previous_ || previous_stance_ != refs.stance) solver_.reset_warm_start();

  const rbd::DynamicsTerms terms = rbd::compute_dynamics(model_, state, rbd::Coordinates::kCom);
  const rbd::DynamicsSplit split = rbd::split_dynamics(terms, refs.stance);
  const QpBuild build = assemble(model_, state, terms, split, refs, contact, history_, config_);
  const qp::QpSolution sol = solver_.solve(build.problem, config_.qp);
  const DecisionLayout& L = build.layout;

  WbcSolution out;
  out.stance = refs.stance;
  out.status = sol.status;
  out.residuals = sol.residuals;
  out.iterations = sol.iterations;
  out.desired_wrench = build.desired_wrench;
  if (sol.ok()) {
    out.qdd = sol.x.segment(L.qdd, kNumDofs);
    out.force = sol.x.segment(L.force, 3 * L.stance.size());
    out.slack = sol.x.segment(L.slack, 3 * L.swing.size());
    if (compliant) out.penetration = sol.x.segment(L.penetration, 3 * L.stance.size());
    out.tau = map_torques(split, out.qdd, out.force);
    if (config_.joint_feedback) {
      if (!integrator_valid_ || integrator_stance_ != refs.stance) {
        q_des_ = state.q;
        qd_des_ = state.qd;
        integrator_stance_ = refs.stance;
        integrator_valid_ = true;
      }
      const VecX qdd_j = out.qdd.tail(kNumJoints);
      q_des_ += config_.control_dt * qd_des_ + 0.5 * config_.control_dt * config_.control_dt * qdd_j;
      qd_des_ += config_.control_dt * qdd_j;
      out.tau += config_.joint_kp * (q_des_ - state.q) + config_.joint_kd * (qd_des_ - state.qd);
    }
    out.tau = out.tau.cwiseMax(model_.tau_min).cwiseMin(model_.tau_max);
  } else {
    out.fallback = true;
    out.qdd = VecX::Zero(kNumDofs);
    out.force = VecX::Zero(3 * L.stance.size());
    out.slack = VecX::Zero(3 * L.swing.size());
    if (compliant) {
      out.penetration.resize(3 * L.stance.size());
      for (Leg leg : kAllLegs) {
        const int s = L.stance.slot(leg);
        if (s >= 0) out.penetration.segment<3>(3 * s) = history_.previous[index(leg)];
      }
    }
    out.tau = previous_tau_;
  }
  if (compliant) {
    for (Leg leg : kAllLegs) {
      const int s = L.stance.slot(leg);
      if (s >= 0) history_.push(leg, out.penetration.segment<3>(3 * s));
    }
  }
  previous_tau_ = out.tau;
  previous_stance_ = refs.stance;
  has_previous_ = true;
  out.tick_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace softwalk::wbc
