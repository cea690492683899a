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

#include "softwalk/ste.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace softwalk::ste {

void SteConfig::validate() const {
  if (window < 2) throw std::invalid_argument("window must hold at least 2 samples");
  if (!(forgetting > 0.0 && forgetting <= 1.0)) {
    throw std::invalid_argument("forgetting factor must lie in (0, 1]");
  }
  if (!(min_stiffness > 0.0 && max_stiffness >= min_stiffness)) {
    throw std::invalid_argument("need 0 < min_stiffness <= max_stiffness");
  }
  if (!(prior_stiffness > 0.0) || prior_damping < 0.0) {
    throw std::invalid_argument("priors must be positive");
  }
  if (!(lowpass_hz > 0.0 && control_dt > 0.0)) {
    throw std::invalid_argument("filter cutoff and control period must be positive");
  }
}

SampleWindow::SampleWindow(int capacity)
    : force_(capacity, 0.0), penetration_(capacity, 0.0), rate_(capacity, 0.0) {}

int SampleWindow::slot(int j) const {
  const int cap = capacity();
  return ((head_ - 1 - j) % cap + cap) % cap;
}

void SampleWindow::push(double force, double penetration, double rate) {
  force_[head_] = force;
  penetration_[head_] = penetration;
  rate_[head_] = rate;
  head_ = (head_ + 1) % capacity();
  size_ = std::min(size_ + 1, capacity());
}

void SampleWindow::clear() {
  head_ = 0;
  size_ = 0;
}

LsFit SampleWindow::solve(bool with_damping, double forgetting, double max_condition) const {
  LsFit fit;
  const int m = size_;
  const int cols = with_damping ? 2 : 1;
  if (m < cols) return fit;
  MatX A(m, cols);
  VecX b(m);
  double w = 1.0;
  double weight_sum = 0.0;
  for (int j = 0; j < m; ++j) {
    weight_sum += w;
    const double sw = std::sqrt(w);
    A(j, 0) = sw * penetration(j);
    if (with_damping) A(j, 1) = sw * rate(j);
    b[j] = sw * force(j);
    w *= forgetting;
  }
  const Eigen::JacobiSVD<MatX> svd(A);
  const VecX sv = svd.singularValues();
  const double smax = sv[0];
  const double smin = sv[cols - 1];
  fit.condition = smin > 0.0 ? (smax / smin) * (smax / smin) : std::numeric_limits<double>::infinity();
  // Degenerate regressors: weighted RMS penetration below 1 nm, or collinear
  // columns.
  if (!(smax > 1e-9 * std::sqrt(weight_sum)) || fit.condition > max_condition) {
    return fit;
  }
  const VecX theta = A.colPivHouseholderQr().solve(b);
  fit.stiffness = theta[0];
  fit.damping = with_damping ? theta[1] : 0.0;
  fit.ok = std::isfinite(fit.stiffness) && std::isfinite(fit.damping);
  return fit;
}

GrfEstimate estimate_grf(const rbd::DynamicsTerms& terms, const VecX& tau, const VecX& qdd, Leg leg,
                         double max_condition) {
  if (terms.coords != rbd::Coordinates::kBase) {
    throw std::invalid_argument("estimate_grf expects base-coordinate dynamics terms");
  }
  const int row = 6 + rbd::RobotModel::first_joint(leg);
  const Mat3 J = terms.foot_jacobian[index(leg)].block<3, 3>(0, row);
  GrfEstimate out;
  const Eigen::JacobiSVD<Mat3> svd(J);
  const Vec3 sv = svd.singularValues();
  out.condition = sv[2] > 0.0 ? sv[0] / sv[2] : std::numeric_limits<double>::infinity();
  if (!(out.condition <= max_condition)) return out;
  const Vec3 rhs = terms.mass_matrix.middleRows<3>(row) * qdd + terms.bias.segment<3>(row) -
                   tau.segment<3>(rbd::RobotModel::first_joint(leg));
  out.force = J.transpose().partialPivLu().solve(rhs);
  out.valid = true;
  return out;
}

bool contact_status(const Vec3& grf, const Vec3& normal, double threshold) {
  return normal.dot(grf) >= threshold;
}

Penetration estimate_penetration(const rbd::RobotModel& model, const rbd::RobotState& state, Leg leg,
                                 const Vec3& touchdown) {
  const rbd::FootState foot = rbd::foot_kinematics(model, state, leg);
  return {touchdown - foot.position, -foot.velocity};
}

ContactObservation to_contact_frame(const Vec3& force, const Penetration& pen,
                                    const Mat3& world_to_contact, double time) {
  ContactObservation o;
  o.in_contact = true;
  o.force = world_to_contact * force;
  o.penetration = world_to_contact * pen.position;
  o.rate = world_to_contact * pen.rate;
  o.time = time;
  return o;
}

AccelerationFilter::AccelerationFilter(double cutoff_hz, double dt)
    : alpha_(dt / (dt + 1.0 / (2.0 * std::numbers::pi * cutoff_hz))), dt_(dt) {}

void AccelerationFilter::reset() { primed_ = false; }

const VecX& AccelerationFilter::update(const VecX& velocity) {
  if (!primed_) {
    filtered_ = velocity;
    acc_ = VecX::Zero(velocity.size());
    primed_ = true;
    return acc_;
  }
  const VecX next = filtered_ + alpha_ * (velocity - filtered_);
  acc_ = (next - filtered_) / dt_;
  filtered_ = next;
  return acc_;
}

TerrainEstimator::TerrainEstimator(rbd::RobotModel model, SteConfig config)
    : model_(std::move(model)),
      config_(config),
      filter_(config.lowpass_hz, config.control_dt) {
  config_.validate();
  model_.validate();
  for (auto& leg_windows : windows_) {
    for (SampleWindow& w : leg_windows) w = SampleWindow(config_.window);
  }
  for (LegEstimate& e : legs_) {
    for (DirectionEstimate& d : e.direction) {
      d.stiffness = config_.prior_stiffness;
      d.damping = config_.prior_damping;
    }
  }
}

void TerrainEstimator::update(const sim::SensorSnapshot& snap) {
  const rbd::DynamicsTerms terms = rbd::compute_dynamics(model_, snap.state, rbd::Coordinates::kBase);
  const VecX& qdd = filter_.update(terms.velocity);
  for (Leg leg : kAllLegs) {
    LegEstimate& e = legs_[index(leg)];
    const GrfEstimate grf = estimate_grf(terms, snap.tau, qdd, leg, config_.max_jacobian_condition);
    if (!grf.valid) {
      ++discarded_;
      e.in_contact = false;
      continue;
    }
    e.grf = grf.force;
    const auto& td = snap.touchdown[index(leg)];
    const Vec3 normal = td ? Vec3(td->rotation.row(0).transpose()) : Vec3::UnitZ();
    e.in_contact = contact_status(grf.force, normal, config_.contact_threshold);
    if (!e.in_contact || !td) continue;
    const rbd::FootState& foot = terms.feet[index(leg)];
    const Penetration pen{td->anchor - foot.position, -foot.velocity};
    observe(leg, to_contact_frame(grf.force, pen, td->rotation, snap.time), td->rotation);
  }
}

void TerrainEstimator::observe(Leg leg, const ContactObservation& obs, const Mat3& world_to_contact) {
  const int i = index(leg);
  legs_[i].rotation = world_to_contact;
  for (int d = 0; d < 3; ++d) windows_[i][d].push(obs.force[d], obs.penetration[d], obs.rate[d]);
  legs_[i].samples = windows_[i][0].size();
  refit(leg);
}

void TerrainEstimator::refit(Leg leg) {
  const int i = index(leg);
  LegEstimate& e = legs_[i];
  const int dirs = config_.estimate_tangential ? 3 : 1;
  for (int d = 0; d < dirs; ++d) {
    const SampleWindow& w = windows_[i][d];
    DirectionEstimate& est = e.direction[d];
    if (!w.full()) continue;
    const LsFit fit = w.solve(config_.estimate_damping, config_.forgetting, config_.max_gram_condition);
    est.condition = fit.condition;
    if (!fit.ok) {
      est.degenerate = true;
      continue;
    }
    est.degenerate = false;
    est.valid = true;
    est.stiffness = std::clamp(fit.stiffness, config_.min_stiffness, config_.max_stiffness);
    if (config_.estimate_damping) est.damping = std::max(0.0, fit.damping);
  }
  if (!config_.estimate_tangential) {
    e.direction[1] = e.direction[0];
    e.direction[2] = e.direction[0];
  }
}

wbc::ContactModel TerrainEstimator::contact_model() const {
  std::array<Vec3, kNumLegs> k, d;
  std::array<Mat3, kNumLegs> R;
  for (int i = 0; i < kNumLegs; ++i) {
    for (int a = 0; a < 3; ++a) {
      const DirectionEstimate& est = legs_[i].direction[a];
      k[i][a] = est.valid ? est.stiffness : config_.prior_stiffness;
      d[i][a] = est.valid && config_.estimate_damping ? est.damping : config_.prior_damping;
    }
    R[i] = legs_[i].rotation;
  }
  return assemble_world_matrices(k, d, R);
}

wbc::ContactModel assemble_world_matrices(const std::array<Vec3, kNumLegs>& stiffness,
                                          const std::array<Vec3, kNumLegs>& damping,
                                          const std::array<Mat3, kNumLegs>& world_to_contact) {
  wbc::ContactModel c;
  for (int i = 0; i < kNumLegs; ++i) {
    const Mat3& R = world_to_contact[i];
    c.rotation[i] = R;
    c.stiffness[i] = R.transpose() * stiffness[i].asDiagonal() * R;
    c.damping[i] = R.transpose() * damping[i].asDiagonal() * R;
  }
  return c;
}

}  // namespace softwalk::ste
