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

#include "softwalk/rbd.hpp"

#include <cmath>
#include <sstream>

namespace softwalk::rbd {
namespace {

// Spatial vectors are [angular; linear] in world coordinates, referred to the
// world origin.
Vec6 crm(const Vec6& v, const Vec6& m) {
  Vec6 out;
  const Vec3 w = v.head<3>();
  out.head<3>() = w.cross(m.head<3>());
  out.tail<3>() = w.cross(m.tail<3>()) + v.tail<3>().cross(m.head<3>());
  return out;
}

Vec6 crf(const Vec6& v, const Vec6& f) {
  Vec6 out;
  const Vec3 w = v.head<3>();
  out.head<3>() = w.cross(f.head<3>()) + v.tail<3>().cross(f.tail<3>());
  out.tail<3>() = w.cross(f.tail<3>());
  return out;
}

Mat6 spatial_inertia(double mass, const Vec3& com, const Mat3& rot_inertia) {
  const Mat3 cx = skew(com);
  Mat6 I;
  I.topLeftCorner<3, 3>() = rot_inertia + mass * cx * cx.transpose();
  I.topRightCorner<3, 3>() = mass * cx;
  I.bottomLeftCorner<3, 3>() = mass * cx.transpose();
  I.bottomRightCorner<3, 3>() = mass * Mat3::Identity();
  return I;
}

constexpr int kNumLinks = 1 + kNumJoints;

// World-frame kinematics of every link for one state.
struct Pass {
  std::array<Mat3, kNumLinks> R;
  std::array<Vec3, kNumLinks> origin;
  std::array<Vec3, kNumLinks> com;
  std::array<Vec6, kNumLinks> S;  // joint motion subspace (unused for link 0)
  std::array<Vec6, kNumLinks> V;  // spatial velocity
  std::array<Mat6, kNumLinks> I;  // spatial inertia
  Eigen::Matrix<double, 6, 6> S0;  // base: [v_b; w] -> spatial velocity
  double total_mass = 0.0;
  Vec3 x_com = Vec3::Zero();
};

Pass forward_pass(const RobotModel& model, const RobotState& s) {
  Pass p;
  p.R[0] = s.base_rotation;
  p.origin[0] = s.base_position;
  p.S0.setZero();
  p.S0.block<3, 3>(0, 3) = Mat3::Identity();
  p.S0.block<3, 3>(3, 0) = Mat3::Identity();
  p.S0.block<3, 3>(3, 3) = skew(s.base_position);
  Vec6 base_twist;
  base_twist << s.base_linear_velocity, s.base_angular_velocity;
  p.V[0] = p.S0 * base_twist;
  p.S[0].setZero();

  for (int i = 0; i < kNumLinks; ++i) {
    const Link& link = model.links[i];
    if (i > 0) {
      const int par = link.parent;
      const double qi = s.q[i - 1];
      const Mat3 Rj = Eigen::AngleAxisd(qi, link.joint_axis).toRotationMatrix();
      p.R[i] = p.R[par] * Rj;
      p.origin[i] = p.origin[par] + p.R[par] * link.joint_origin;
      const Vec3 axis = p.R[i] * link.joint_axis;
      p.S[i] << axis, p.origin[i].cross(axis);
      p.V[i] = p.V[par] + p.S[i] * s.qd[i - 1];
    }
    p.com[i] = p.origin[i] + p.R[i] * link.inertia.com;
    const Mat3 Ic = p.R[i] * link.inertia.rotational * p.R[i].transpose();
    p.I[i] = spatial_inertia(link.inertia.mass, p.com[i], Ic);
    p.total_mass += link.inertia.mass;
    p.x_com += link.inertia.mass * p.com[i];
  }
  p.x_com /= p.total_mass;
  return p;
}

// Classical acceleration of a point given spatial velocity/acceleration of the
// body it is attached to.
Vec3 point_acceleration(const Vec6& V, const Vec6& A, const Vec3& point) {
  const Vec3 w = V.head<3>();
  const Vec3 v_point = V.tail<3>() + w.cross(point);
  return A.tail<3>() + A.head<3>().cross(point) + w.cross(v_point);
}

Vec3 point_velocity(const Vec6& V, const Vec3& point) {
  return V.tail<3>() + V.head<3>().cross(point);
}

// Spatial accelerations for a given base-coordinate acceleration.
std::array<Vec6, kNumLinks> acceleration_pass(const RobotModel& model, const RobotState& s,
                                              const Pass& p, const VecX& qdd_base,
                                              bool with_gravity) {
  std::array<Vec6, kNumLinks> A;
  Vec6 a0 = p.S0 * qdd_base.head<6>();
  a0.tail<3>() += s.base_linear_velocity.cross(s.base_angular_velocity);
  if (with_gravity) a0.tail<3>() += Vec3(0.0, 0.0, kGravity);
  A[0] = a0;
  for (int i = 1; i < kNumLinks; ++i) {
    const int par = model.links[i].parent;
    const double qd = s.qd[i - 1];
    A[i] = A[par] + p.S[i] * qdd_base[5 + i] + crm(p.V[i], p.S[i]) * qd;
  }
  return A;
}

VecX rnea(const RobotModel& model, const RobotState& s, const Pass& p, const VecX& qdd_base,
          bool with_gravity) {
  const auto A = acceleration_pass(model, s, p, qdd_base, with_gravity);
  std::array<Vec6, kNumLinks> f;
  for (int i = 0; i < kNumLinks; ++i) {
    f[i] = p.I[i] * A[i] + crf(p.V[i], p.I[i] * p.V[i]);
  }
  VecX tau(kNumDofs);
  for (int i = kNumLinks - 1; i > 0; --i) {
    tau[5 + i] = p.S[i].dot(f[i]);
    f[model.links[i].parent] += f[i];
  }
  tau.head<6>() = p.S0.transpose() * f[0];
  return tau;
}

MatX crba(const RobotModel& model, const Pass& p) {
  MatX M = MatX::Zero(kNumDofs, kNumDofs);
  std::array<Mat6, kNumLinks> Ic = p.I;
  for (int i = kNumLinks - 1; i > 0; --i) Ic[model.links[i].parent] += Ic[i];
  for (int i = 1; i < kNumLinks; ++i) {
    const Vec6 F = Ic[i] * p.S[i];
    const int row = 5 + i;
    M(row, row) = p.S[i].dot(F);
    int k = model.links[i].parent;
    while (k > 0) {
      M(5 + k, row) = p.S[k].dot(F);
      M(row, 5 + k) = M(5 + k, row);
      k = model.links[k].parent;
    }
    const Vec6 base_col = p.S0.transpose() * F;
    M.block<6, 1>(0, row) = base_col;
    M.block<1, 6>(row, 0) = base_col.transpose();
  }
  M.topLeftCorner<6, 6>() = p.S0.transpose() * Ic[0] * p.S0;
  return M;
}

// Linear Jacobian (base coordinates) of a point rigidly attached to `link`.
FootJacobian point_jacobian(const RobotModel& model, const RobotState& s, const Pass& p,
                            int link, const Vec3& point) {
  FootJacobian J = FootJacobian::Zero();
  J.block<3, 3>(0, 0) = Mat3::Identity();
  J.block<3, 3>(0, 3) = -skew(point - s.base_position);
  int k = link;
  while (k > 0) {
    const Vec3 axis = p.S[k].head<3>();
    J.col(5 + k) = axis.cross(point - p.origin[k]);
    k = model.links[k].parent;
  }
  return J;
}

// CoM Jacobian columns for the joints (base frozen).
Eigen::Matrix<double, 3, kNumJoints> com_joint_jacobian(const RobotModel& model, const Pass& p) {
  Eigen::Matrix<double, 3, kNumJoints> Jc = Eigen::Matrix<double, 3, kNumJoints>::Zero();
  for (int i = 1; i < kNumLinks; ++i) {
    const double m = model.links[i].inertia.mass;
    if (m == 0.0) continue;
    int k = i;
    while (k > 0) {
      const Vec3 axis = p.S[k].head<3>();
      Jc.col(k - 1) += m * axis.cross(p.com[i] - p.origin[k]);
      k = model.links[k].parent;
    }
  }
  return Jc / p.total_mass;
}

struct ComTransform {
  Vec3 r;  // x_com - x_b
  Eigen::Matrix<double, 3, kNumJoints> Jcj;

  // x_com = T x_base (velocity-like)
  VecX apply(const VecX& v) const {
    VecX out = v;
    out.head<3>() = v.head<3>() + Vec3(v.segment<3>(3)).cross(r) + Jcj * v.tail<kNumJoints>();
    return out;
  }
  // J T^-1 for a matrix with kNumDofs columns
  template <typename Derived>
  MatX right_inverse(const Eigen::MatrixBase<Derived>& J) const {
    MatX out = J;
    const auto lin = J.leftCols(3);
    out.middleCols(3, 3) += lin * skew(r);
    out.rightCols(kNumJoints) -= lin * Jcj;
    return out;
  }
  // T^-T x
  VecX left_inverse_transpose(const VecX& x) const {
    VecX out = x;
    const Vec3 x1 = x.head<3>();
    out.segment<3>(3) -= r.cross(x1);
    out.tail<kNumJoints>() -= Jcj.transpose() * x1;
    return out;
  }
};

ComTransform make_transform(const RobotModel& model, const RobotState& s, const Pass& p) {
  return ComTransform{p.x_com - s.base_position, com_joint_jacobian(model, p)};
}

}  // namespace

void check_state(const RobotModel& model, const RobotState& state) {
  if (static_cast<int>(model.links.size()) != kNumLinks) {
    throw std::invalid_argument("robot model must have 13 links");
  }
  if (state.q.size() != kNumJoints || state.qd.size() != kNumJoints) {
    std::ostringstream os;
    os << "state dimension mismatch: q has " << state.q.size() << ", qd has " << state.qd.size()
       << ", expected " << kNumJoints;
    throw std::invalid_argument(os.str());
  }
  const Mat3& R = state.base_rotation;
  if ((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      std::abs(R.determinant() - 1.0) > 1e-6) {
    throw std::invalid_argument("base rotation is not in SO(3)");
  }
}

VecX generalized_velocity(const RobotModel& model, const RobotState& state, Coordinates coords) {
  VecX v(kNumDofs);
  v << state.base_linear_velocity, state.base_angular_velocity, state.qd;
  if (coords == Coordinates::kBase) return v;
  const Pass p = forward_pass(model, state);
  return make_transform(model, state, p).apply(v);
}

Vec3 center_of_mass(const RobotModel& model, const RobotState& state) {
  check_state(model, state);
  return forward_pass(model, state).x_com;
}

Vec3 center_of_mass_velocity(const RobotModel& model, const RobotState& state) {
  check_state(model, state);
  return generalized_velocity(model, state, Coordinates::kCom).head<3>();
}

DynamicsTerms compute_dynamics(const RobotModel& model, const RobotState& state,
                               Coordinates coords) {
  check_state(model, state);
  const Pass p = forward_pass(model, state);
  DynamicsTerms out;
  out.coords = coords;
  out.com = p.x_com;

  VecX v_base(kNumDofs);
  v_base << state.base_linear_velocity, state.base_angular_velocity, state.qd;

  MatX M = crba(model, p);
  VecX h = rnea(model, state, p, VecX::Zero(kNumDofs), true);

  // Velocity-product accelerations (qdd_base = 0, no gravity).
  const auto A0 = acceleration_pass(model, state, p, VecX::Zero(kNumDofs), false);

  for (Leg leg : kAllLegs) {
    const int link = RobotModel::foot_link(leg);
    const Vec3 foot = p.origin[link] + p.R[link] * model.foot_offsets[index(leg)];
    out.feet[index(leg)].position = foot;
    out.feet[index(leg)].velocity = point_velocity(p.V[link], foot);
    out.foot_jacobian[index(leg)] = point_jacobian(model, state, p, link, foot);
    out.jdot_qdot[index(leg)] = point_acceleration(p.V[link], A0[link], foot);
  }

  const ComTransform T = make_transform(model, state, p);
  out.com_velocity = T.apply(v_base).head<3>();

  if (coords == Coordinates::kBase) {
    out.mass_matrix = std::move(M);
    out.bias = std::move(h);
    out.velocity = v_base;
    return out;
  }

  Vec3 b_com = Vec3::Zero();
  for (int i = 0; i < kNumLinks; ++i) {
    b_com += model.links[i].inertia.mass * point_acceleration(p.V[i], A0[i], p.com[i]);
  }
  b_com /= p.total_mass;

  // M_c = T^-T M T^-1
  const MatX MTi = T.right_inverse(M);
  MatX Mc(kNumDofs, kNumDofs);
  for (int c = 0; c < kNumDofs; ++c) Mc.col(c) = T.left_inverse_transpose(MTi.col(c));
  out.mass_matrix = 0.5 * (Mc + Mc.transpose());

  out.bias = T.left_inverse_transpose(h - M.leftCols(3) * b_com);

  for (Leg leg : kAllLegs) {
    const int i = index(leg);
    out.foot_jacobian[i] = T.right_inverse(out.foot_jacobian[i]);
    out.jdot_qdot[i] -= b_com;
  }
  out.velocity = T.apply(v_base);
  return out;
}

MatX mass_matrix(const RobotModel& model, const RobotState& state, Coordinates coords) {
  return compute_dynamics(model, state, coords).mass_matrix;
}

VecX bias_forces(const RobotModel& model, const RobotState& state, Coordinates coords) {
  return compute_dynamics(model, state, coords).bias;
}

FootState foot_kinematics(const RobotModel& model, const RobotState& state, Leg leg) {
  check_state(model, state);
  const Pass p = forward_pass(model, state);
  const int link = RobotModel::foot_link(leg);
  const Vec3 foot = p.origin[link] + p.R[link] * model.foot_offsets[index(leg)];
  return {foot, point_velocity(p.V[link], foot)};
}

FootJacobian foot_jacobian(const RobotModel& model, const RobotState& state, Leg leg,
                           Coordinates coords) {
  return compute_dynamics(model, state, coords).foot_jacobian[index(leg)];
}

Vec3 jdot_qdot(const RobotModel& model, const RobotState& state, Leg leg, Coordinates coords) {
  return compute_dynamics(model, state, coords).jdot_qdot[index(leg)];
}

VecX inverse_dynamics(const RobotModel& model, const RobotState& state, const VecX& qdd_base,
                      bool with_gravity) {
  check_state(model, state);
  if (qdd_base.size() != kNumDofs) throw std::invalid_argument("qdd dimension mismatch");
  const Pass p = forward_pass(model, state);
  return rnea(model, state, p, qdd_base, with_gravity);
}

VecX forward_dynamics(const RobotModel& model, const RobotState& state,
                      const VecX& generalized_force) {
  check_state(model, state);
  if (generalized_force.size() != kNumDofs) throw std::invalid_argument("force dimension mismatch");
  const Pass p = forward_pass(model, state);
  const MatX M = crba(model, p);
  const VecX h = rnea(model, state, p, VecX::Zero(kNumDofs), true);
  return M.llt().solve(generalized_force - h);
}

MatX stack_jacobians(const DynamicsTerms& terms, LegSet legs) {
  MatX J(3 * legs.size(), kNumDofs);
  for (Leg leg : kAllLegs) {
    if (legs.contains(leg)) J.middleRows(3 * legs.slot(leg), 3) = terms.foot_jacobian[index(leg)];
  }
  return J;
}

VecX stack_jdot_qdot(const DynamicsTerms& terms, LegSet legs) {
  VecX v(3 * legs.size());
  for (Leg leg : kAllLegs) {
    if (legs.contains(leg)) v.segment<3>(3 * legs.slot(leg)) = terms.jdot_qdot[index(leg)];
  }
  return v;
}

Vec6 DynamicsSplit::gravito_inertial_wrench(const VecX& qdd) const { return M_u * qdd + h_u; }

DynamicsSplit split_dynamics(const DynamicsTerms& terms, LegSet stance) {
  DynamicsSplit s;
  s.stance = stance;
  s.M_u = terms.mass_matrix.topRows(6);
  s.M_a = terms.mass_matrix.bottomRows(kNumJoints);
  s.h_u = terms.bias.head<6>();
  s.h_j = terms.bias.tail<kNumJoints>();
  s.J_st = stack_jacobians(terms, stance);
  s.J_st_u = s.J_st.leftCols(6);
  s.J_st_j = s.J_st.rightCols(kNumJoints);
  s.Jdot_qdot_st = stack_jdot_qdot(terms, stance);
  return s;
}

DynamicsSplit split_dynamics(const RobotModel& model, const RobotState& state, LegSet stance,
                             Coordinates coords) {
  return split_dynamics(compute_dynamics(model, state, coords), stance);
}

double kinetic_energy(const RobotModel& model, const RobotState& state) {
  const DynamicsTerms t = compute_dynamics(model, state, Coordinates::kBase);
  return 0.5 * t.velocity.dot(t.mass_matrix * t.velocity);
}

double potential_energy(const RobotModel& model, const RobotState& state) {
  check_state(model, state);
  const Pass p = forward_pass(model, state);
  return p.total_mass * kGravity * p.x_com.z();
}

Vec3 leg_forward_kinematics(const RobotModel& model, Leg leg, const Vec3& leg_q) {
  Mat3 R = Mat3::Identity();
  Vec3 pos = Vec3::Zero();
  const int first = 1 + RobotModel::first_joint(leg);
  for (int k = 0; k < kJointsPerLeg; ++k) {
    const Link& link = model.links[first + k];
    pos += R * link.joint_origin;
    R = R * Eigen::AngleAxisd(leg_q[k], link.joint_axis).toRotationMatrix();
  }
  return pos + R * model.foot_offsets[index(leg)];
}

Vec3 leg_inverse_kinematics(const RobotModel& model, Leg leg, const Vec3& foot_in_trunk,
                            const Vec3& seed, bool* converged) {
  Vec3 q = seed;
  bool ok = false;
  for (int iter = 0; iter < 100; ++iter) {
    const Vec3 err = foot_in_trunk - leg_forward_kinematics(model, leg, q);
    if (err.norm() < 1e-10) {
      ok = true;
      break;
    }
    Mat3 J;
    constexpr double kStep = 1e-7;
    for (int k = 0; k < 3; ++k) {
      Vec3 dq = Vec3::Zero();
      dq[k] = kStep;
      J.col(k) = (leg_forward_kinematics(model, leg, q + dq) -
                  leg_forward_kinematics(model, leg, q - dq)) /
                 (2.0 * kStep);
    }
    // damped least squares keeps the step bounded near singular postures
    const Mat3 JJt = J * J.transpose() + 1e-8 * Mat3::Identity();
    q += J.transpose() * JJt.ldlt().solve(err);
  }
  if (converged != nullptr) *converged = ok;
  return q;
}

RobotState integrate_positions(const RobotState& state, double dt) {
  RobotState out = state;
  out.base_position += dt * state.base_linear_velocity;
  const Vec3 dtheta = dt * state.base_angular_velocity;
  const double angle = dtheta.norm();
  if (angle > 0.0) {
    const Mat3 dR = Eigen::AngleAxisd(angle, dtheta / angle).toRotationMatrix();
    Eigen::Quaterniond quat(dR * state.base_rotation);
    quat.normalize();
    out.base_rotation = quat.toRotationMatrix();
  }
  out.q += dt * state.qd;
  return out;
}

}  // namespace softwalk::rbd
