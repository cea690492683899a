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

// Online terrain impedance estimation. Each leg keeps, per contact-frame
// direction, a sliding window of (force, penetration, penetration rate)
// samples taken while the leg is loaded, and fits F = k p (+ d pdot) by
// exponentially weighted least squares.

#ifndef SOFTWALK_STE_HPP_
#define SOFTWALK_STE_HPP_

#include <array>
#include <optional>
#include <vector>

#include "softwalk/rbd.hpp"
#include "softwalk/sim.hpp"
#include "softwalk/wbc.hpp"

namespace softwalk::ste {

struct SteConfig {
  int window = 250;
  double forgetting = 0.995;  // weight of sample j steps old is forgetting^j
  bool estimate_damping = false;
  // When false the normal estimate is copied to the tangential directions.
  bool estimate_tangential = false;
  double contact_threshold = 10.0;  // N, on the estimated normal force
  double prior_stiffness = 1e6;     // N/m, used until the window first fills
  double prior_damping = 400.0;     // N s/m, used unless damping is estimated
  double min_stiffness = 1e2;
  double max_stiffness = 1e7;
  double max_gram_condition = 1e8;
  double max_jacobian_condition = 1e6;
  double lowpass_hz = 30.0;
  double control_dt = 0.004;

  void validate() const;
};

// Contact-frame sample of one leg, (n, t1, t2) components.
struct ContactObservation {
  bool in_contact = false;
  Vec3 force = Vec3::Zero();
  Vec3 penetration = Vec3::Zero();
  Vec3 rate = Vec3::Zero();
  double time = 0.0;
};

struct LsFit {
  bool ok = false;
  double stiffness = 0.0;
  double damping = 0.0;
  double condition = 0.0;  // of the weighted Gram matrix
};

// Fixed-size ring buffer of one direction's samples, oldest overwritten first.
class SampleWindow {
 public:
  explicit SampleWindow(int capacity = 250);

  void push(double force, double penetration, double rate);
  void clear();
  int size() const { return size_; }
  int capacity() const { return static_cast<int>(force_.size()); }
  bool full() const { return size_ == capacity(); }
  // j = 0 is the newest sample.
  double force(int j) const { return force_[slot(j)]; }
  double penetration(int j) const { return penetration_[slot(j)]; }
  double rate(int j) const { return rate_[slot(j)]; }

  // Weighted least squares over the window; weight forgetting^j for the
  // j-th newest sample. Solved through a QR factorization of the weighted
  // regressor. ok is false when the Gram condition exceeds `max_condition`.
  LsFit solve(bool with_damping, double forgetting, double max_condition) const;

 private:
  int slot(int j) const;
  std::vector<double> force_, penetration_, rate_;
  int head_ = 0;  // next write position
  int size_ = 0;
};

struct DirectionEstimate {
  double stiffness = 0.0;
  double damping = 0.0;
  bool valid = false;       // window has filled at least once
  bool degenerate = false;  // last fit rejected, previous value kept
  double condition = 0.0;
};

struct LegEstimate {
  std::array<DirectionEstimate, 3> direction;  // n, t1, t2
  Mat3 rotation = Mat3::Identity();            // world -> contact of the last stance
  int samples = 0;                             // window fill of the normal direction
  bool in_contact = false;
  Vec3 grf = Vec3::Zero();  // last world-frame GRF estimate
};

struct GrfEstimate {
  Vec3 force = Vec3::Zero();  // world
  double condition = 0.0;     // of the leg joint Jacobian block
  bool valid = false;
};

// F_i = J_{j,i}^-T (M_{a,i} qdd + h_{j,i} - tau_i) from base-coordinate terms.
GrfEstimate estimate_grf(const rbd::DynamicsTerms& terms, const VecX& tau, const VecX& qdd, Leg leg,
                         double max_condition = 1e6);

// Closed threshold on the normal component.
bool contact_status(const Vec3& grf, const Vec3& normal, double threshold);

struct Penetration {
  Vec3 position = Vec3::Zero();  // world
  Vec3 rate = Vec3::Zero();      // world
};

// p = x_td - x_foot and pdot = -v_foot.
Penetration estimate_penetration(const rbd::RobotModel& model, const rbd::RobotState& state, Leg leg,
                                 const Vec3& touchdown);

ContactObservation to_contact_frame(const Vec3& force, const Penetration& pen,
                                    const Mat3& world_to_contact, double time);

// Causal acceleration estimate: first-order low-pass on the generalized
// velocity followed by a backward difference.
class AccelerationFilter {
 public:
  AccelerationFilter(double cutoff_hz, double dt);
  const VecX& update(const VecX& velocity);
  const VecX& acceleration() const { return acc_; }
  void reset();

 private:
  double alpha_;
  double dt_;
  VecX filtered_;
  VecX acc_;
  bool primed_ = false;
};

class TerrainEstimator {
 public:
  TerrainEstimator(rbd::RobotModel model, SteConfig config);

  // Consumes one control-tick snapshot: estimates GRFs and contact status,
  // appends samples for loaded legs with a known touchdown frame and refits.
  void update(const sim::SensorSnapshot& snapshot);

  // Appends one contact-frame sample and refits that leg.
  void observe(Leg leg, const ContactObservation& obs, const Mat3& world_to_contact);

  const LegEstimate& leg(Leg leg) const { return legs_[index(leg)]; }
  const SteConfig& config() const { return config_; }
  const SampleWindow& window(Leg leg, int direction) const {
    return windows_[index(leg)][direction];
  }
  // World-frame block matrices for the controller; prior values stand in for
  // directions without a valid estimate.
  wbc::ContactModel contact_model() const;
  int discarded() const { return discarded_; }

 private:
  void refit(Leg leg);

  rbd::RobotModel model_;
  SteConfig config_;
  std::array<std::array<SampleWindow, 3>, kNumLegs> windows_;
  std::array<LegEstimate, kNumLegs> legs_;
  AccelerationFilter filter_;
  int discarded_ = 0;
};

// R^T diag(k) R per leg, with R world -> contact.
wbc::ContactModel assemble_world_matrices(const std::array<Vec3, kNumLegs>& stiffness,
                                          const std::array<Vec3, kNumLegs>& damping,
                                          const std::array<Mat3, kNumLegs>& world_to_contact);

}  // namespace softwalk::ste

#endif  // SOFTWALK_STE_HPP_
