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

#include "softwalk/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace softwalk::planner {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double frac(double x) { return x - std::floor(x); }

// Signed circular difference a - b wrapped to [-0.5, 0.5).
double circular_diff(double a, double b) { return frac(a - b + 0.5) - 0.5; }

// +1 for legs on the left (+y) side of the trunk.
double side(Leg leg) { return (leg == Leg::LF || leg == Leg::LH) ? 1.0 : -1.0; }

double leg_phase(const GaitConfig& g, Leg leg, double phi) {
  return frac(phi + g.offsets[index(leg)] + g.phase_shift);
}

// Global phase in [0, 1) at which `leg` lifts off.
double swing_start(const GaitConfig& g, Leg leg) {
  return frac(g.duty - g.offsets[index(leg)] - g.phase_shift);
}

double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

double segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + t * ab)).norm();
}

}  // namespace

void GaitConfig::validate() const {
  if (!(cycle_time > 0.0 && min_cycle_time > 0.0 && min_cycle_time <= cycle_time)) {
    throw std::invalid_argument("gait: need 0 < min_cycle_time <= cycle_time");
  }
  if (!(duty >= 0.75 && duty < 1.0)) throw std::invalid_argument("gait: crawl duty must lie in [0.75, 1)");
  if (!(max_stride > 0.0 && step_height >= 0.0 && touchdown_depth >= 0.0 && sway >= 0.0)) {
    throw std::invalid_argument("gait: stride, step height, depth and sway must be non-negative");
  }
  if (!(hold_ramp > 0.0 && hold_ramp <= 1.0)) throw std::invalid_argument("gait: hold_ramp in (0, 1]");
  for (double o : offsets) {
    if (!(o >= 0.0 && o < 1.0)) throw std::invalid_argument("gait: offsets must lie in [0, 1)");
  }
  if (!(phase_shift >= 0.0 && phase_shift < 1.0)) {
    throw std::invalid_argument("gait: phase_shift must lie in [0, 1)");
  }
  const double sw = 1.0 - duty;
  for (Leg a : kAllLegs) {
    for (Leg b : kAllLegs) {
      if (index(b) <= index(a)) continue;
      const double d = std::abs(circular_diff(swing_start(*this, a), swing_start(*this, b)));
      if (d < sw - 1e-12) throw std::invalid_argument("gait: swing phases overlap");
    }
  }
  if (!(sway_window > 0.0 && sway_window < 0.5)) {
    throw std::invalid_argument("gait: sway_window must lie in (0, 0.5)");
  }
}

std::string to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::kStand: return "stand";
    case ProfileKind::kWalk: return "walk";
    case ProfileKind::kRamp: return "ramp";
    case ProfileKind::kSinusoid: return "sinusoid";
  }
  return "unknown";
}

ProfileKind profile_kind_from_string(const std::string& name) {
  for (ProfileKind k : {ProfileKind::kStand, ProfileKind::kWalk, ProfileKind::kRamp,
                        ProfileKind::kSinusoid}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("unknown trunk profile: " + name);
}

void TrunkProfile::validate() const {
  if (speed < 0.0 || ramp_start < 0.0 || ramp_final < ramp_start || ramp_acceleration < 0.0) {
    throw std::invalid_argument("profile: speeds must be non-negative and the ramp non-decreasing");
  }
  if (height_frequency < 0.0 || roll_frequency < 0.0 || fade_in < 0.0) {
    throw std::invalid_argument("profile: frequencies and fade-in must be non-negative");
  }
}

double TrunkProfile::velocity(double t) const {
  switch (kind) {
    case ProfileKind::kWalk: return speed;
    case ProfileKind::kRamp: return std::min(ramp_start + ramp_acceleration * t, ramp_final);
    default: return 0.0;
  }
}

double TrunkProfile::acceleration(double t) const {
  if (kind != ProfileKind::kRamp) return 0.0;
  return ramp_start + ramp_acceleration * t < ramp_final ? ramp_acceleration : 0.0;
}

double TrunkProfile::distance(double t) const {
  switch (kind) {
    case ProfileKind::kWalk: return speed * t;
    case ProfileKind::kRamp: {
      if (ramp_acceleration <= 0.0) return ramp_start * t;
      const double t1 = (ramp_final - ramp_start) / ramp_acceleration;
      if (t <= t1) return ramp_start * t + 0.5 * ramp_acceleration * t * t;
      return ramp_start * t1 + 0.5 * ramp_acceleration * t1 * t1 + ramp_final * (t - t1);
    }
    default: return 0.0;
  }
}

Blend quintic_blend(double u) {
  if (u <= 0.0) return {0.0, 0.0, 0.0};
  if (u >= 1.0) return {1.0, 0.0, 0.0};
  const double u2 = u * u;
  const double u3 = u2 * u;
  return {u3 * (10.0 - 15.0 * u + 6.0 * u2), 30.0 * u2 * (1.0 - u) * (1.0 - u),
          60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)};
}

SwingPoint swing_trajectory(const Vec3& liftoff, const Vec3& touchdown, double height, double s) {
  s = std::clamp(s, 0.0, 1.0);
  SwingPoint out;
  const Blend b = quintic_blend(s);
  const Vec3 d = touchdown - liftoff;
  out.position.head<2>() = liftoff.head<2>() + b.s * d.head<2>();
  out.velocity.head<2>() = b.ds * d.head<2>();
  out.acceleration.head<2>() = b.dds * d.head<2>();
  const double apex = std::max(liftoff.z(), touchdown.z()) + height;
  const double z0 = s < 0.5 ? liftoff.z() : apex;
  const double z1 = s < 0.5 ? apex : touchdown.z();
  const Blend h = quintic_blend(s < 0.5 ? 2.0 * s : 2.0 * s - 1.0);
  out.position.z() = z0 + (z1 - z0) * h.s;
  out.velocity.z() = 2.0 * (z1 - z0) * h.ds;
  out.acceleration.z() = 4.0 * (z1 - z0) * h.dds;
  return out;
}

double support_margin(const Vec2& point, const std::vector<Vec2>& vertices) {
  if (vertices.empty()) return -kInf;
  std::vector<Vec2> pts = vertices;
  std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  // Andrew's monotone chain, counter-clockwise.
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(pts.size() > 1 ? k - 1 : 1);
  const std::size_t n = hull.size();
  if (n < 3) {
    double d = (point - hull[0]).norm();
    if (n == 2) d = segment_distance(point, hull[0], hull[1]);
    return -d;
  }
  bool inside = true;
  double inner = kInf;
  double outer = kInf;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = hull[i];
    const Vec2& b = hull[(i + 1) % n];
    const double c = cross(a, b, point) / (b - a).norm();
    if (c < 0.0) inside = false;
    inner = std::min(inner, c);
    outer = std::min(outer, segment_distance(point, a, b));
  }
  return inside ? inner : -outer;
}

CrawlPlanner::CrawlPlanner(GaitConfig gait, TrunkProfile profile)
    : gait_(gait), profile_(profile) {
  gait_.validate();
  profile_.validate();
  for (Vec2& v : foot_offsets_) v.setZero();
  touchdown_time_.fill(-kInf);
  // Sway targets: away from the side of the swinging leg. A transition sits in
  // the gap between consecutive swings with different targets.
  std::array<Leg, kNumLegs> order = kAllLegs;
  std::sort(order.begin(), order.end(),
            [&](Leg a, Leg b) { return swing_start(gait_, a) < swing_start(gait_, b); });
  const double sw = 1.0 - gait_.duty;
  for (int j = 0; j < kNumLegs; ++j) {
    const Leg a = order[j];
    const Leg b = order[(j + 1) % kNumLegs];
    const double from = -side(a);
    const double to = -side(b);
    if (from == to) continue;
    const double end_a = swing_start(gait_, a) + sw;
    double start_b = swing_start(gait_, b);
    if (start_b < end_a) start_b += 1.0;
    transitions_.push_back({frac(0.5 * (end_a + start_b)), from, to});
  }
  for (std::size_t i = 0; i < transitions_.size(); ++i) {
    for (std::size_t j = i + 1; j < transitions_.size(); ++j) {
      if (std::abs(circular_diff(transitions_[i].center, transitions_[j].center)) <
          gait_.sway_window) {
        throw std::invalid_argument("gait: sway transitions overlap; shorten sway_window");
      }
    }
  }
}

void CrawlPlanner::reset(const Vec3& com, const Mat3& orientation,
                         const std::array<Vec3, kNumLegs>& feet) {
  com0_ = com;
  orientation0_ = orientation;
  for (int i = 0; i < kNumLegs; ++i) {
    foot_offsets_[i] = (feet[i] - com).head<2>();
    footholds_[i] = feet[i];
    footholds_[i].z() = gait_.ground_height - gait_.touchdown_depth;
    liftoff_points_[i] = feet[i];
    swinging_[i] = false;
    touchdown_time_[i] = -kInf;
  }
  phase_ = 0.0;
  time_ = 0.0;
  started_ = false;
}

double CrawlPlanner::cycle_time(double speed) const {
  if (speed <= 0.0) return gait_.cycle_time;
  return std::clamp(gait_.max_stride / speed, gait_.min_cycle_time, gait_.cycle_time);
}

double CrawlPlanner::hold_duration() const {
  return gait_.startup_hold ? cycle_time(profile_.velocity(0.0)) : 0.0;
}

double CrawlPlanner::lead_in() const {
  const double v0 = profile_.velocity(0.0);
  return gait_.enabled && v0 > 0.0 ? cycle_time(v0) : 0.0;
}

CrawlPlanner::PathPoint CrawlPlanner::path(double time) const {
  const double tp = profile_time(time);
  const double lead = lead_in();
  const double v0 = profile_.velocity(0.0);
  PathPoint p;
  if (tp >= 0.0) {
    p.distance = profile_.distance(tp) + 0.5 * v0 * lead;
    p.velocity = profile_.velocity(tp);
    p.acceleration = profile_.acceleration(tp);
  } else if (lead > 0.0 && tp > -lead) {
    const double u = (tp + lead) / lead;
    const Blend b = quintic_blend(u);
    const double u4 = u * u * u * u;
    p.distance = v0 * lead * u4 * (2.5 - 3.0 * u + u * u);  // integral of the blend
    p.velocity = v0 * b.s;
    p.acceleration = v0 * b.ds / lead;
  }
  return p;
}

double CrawlPlanner::profile_time(double time) const { return time - hold_duration() - lead_in(); }

double CrawlPlanner::phase_rate(double time) const {
  return 1.0 / cycle_time(profile_.velocity(std::max(0.0, profile_time(time))));
}

bool CrawlPlanner::in_swing_window(Leg leg, double phi) const {
  if (!gait_.enabled) return false;
  if (gait_.startup_hold && phi < 1.0) return false;
  return leg_phase(gait_, leg, phi) >= gait_.duty;
}

double CrawlPlanner::next_liftoff_phase(Leg leg, double phi) const {
  const double start = swing_start(gait_, leg);
  double next = std::floor(phi) + start;
  if (next < phi) next += 1.0;
  if (gait_.startup_hold && next < 1.0) next += 1.0;
  return next;
}

Blend CrawlPlanner::sway(double phi, double cycle_time) const {
  Blend out;
  if (!gait_.enabled || transitions_.empty() || gait_.sway <= 0.0) return out;
  const double scale = gait_.sway * std::min(1.0, (cycle_time / gait_.cycle_time) *
                                                      (cycle_time / gait_.cycle_time));
  const double u = frac(phi);
  const double w = 0.5 * gait_.sway_window;
  double y = 0.0, dy = 0.0, ddy = 0.0;
  bool blended = false;
  double best_age = kInf;
  for (const Transition& t : transitions_) {
    const double d = circular_diff(u, t.center);
    if (std::abs(d) < w) {
      const Blend b = quintic_blend((d + w) / (2.0 * w));
      y = t.from + (t.to - t.from) * b.s;
      dy = (t.to - t.from) * b.ds / (2.0 * w);
      ddy = (t.to - t.from) * b.dds / (4.0 * w * w);
      blended = true;
      break;
    }
    const double age = frac(u - t.center);
    if (age < best_age) {
      best_age = age;
      y = t.to;
    }
  }
  if (!blended) dy = ddy = 0.0;
  y *= scale;
  dy *= scale;
  ddy *= scale;
  if (gait_.startup_hold && phi < 1.0) {
    const double h = gait_.hold_ramp;
    const Blend a = quintic_blend((phi - (1.0 - h)) / h);
    const double da = a.ds / h;
    const double dda = a.dds / (h * h);
    out.s = a.s * y;
    out.ds = da * y + a.s * dy;
    out.dds = dda * y + 2.0 * da * dy + a.s * ddy;
    return out;
  }
  return {y, dy, ddy};
}

PlanOutput CrawlPlanner::update(double time, const std::array<Vec3, kNumLegs>& feet) {
  if (!started_) {
    time_ = time;
    started_ = true;
  }
  if (time < time_) throw std::invalid_argument("planner: time must not decrease");
  phase_ += phase_rate(time_) * (time - time_);
  time_ = time;

  const double rate = phase_rate(time);
  const double T = 1.0 / rate;
  const double tp = profile_time(time);
  const Vec2 heading = [&] {
    Vec2 h = orientation0_.col(0).head<2>();
    return h.norm() > 1e-9 ? Vec2(h.normalized()) : Vec2(1.0, 0.0);
  }();
  const Vec2 lateral(-heading.y(), heading.x());

  PlanOutput out;
  out.schedule.global_phase = phase_;
  out.schedule.cycle_time = T;
  out.schedule.hold = gait_.startup_hold && phase_ < 1.0;
  const double sw = 1.0 - gait_.duty;

  for (Leg leg : kAllLegs) {
    const int i = index(leg);
    LegSchedule& ls = out.schedule.legs[i];
    ls.phase = leg_phase(gait_, leg, phase_);
    const bool swing = in_swing_window(leg, phase_);
    if (swing && !swinging_[i]) {
      out.liftoff[i] = true;
      liftoff_points_[i] = feet[i];
      const double remaining = (1.0 - ls.phase) / rate;
      const PathPoint at_td = path(time + remaining);
      const double v_td = at_td.velocity;
      const Vec2 xy = com0_.head<2>() + heading * at_td.distance + foot_offsets_[i] +
                      heading * (0.5 * v_td * gait_.duty * cycle_time(v_td));
      footholds_[i] = Vec3(xy.x(), xy.y(), gait_.ground_height - gait_.touchdown_depth);
    } else if (!swing && swinging_[i]) {
      out.touchdown[i] = true;
      touchdown_time_[i] = time;
    }
    swinging_[i] = swing;
    ls.stance = !swing;
    if (swing) {
      ls.swing_progress = (ls.phase - gait_.duty) / sw;
      const double sd = rate / sw;
      const SwingPoint p =
          swing_trajectory(liftoff_points_[i], footholds_[i], gait_.step_height, ls.swing_progress);
      wbc::SwingReference ref;
      ref.position = p.position;
      ref.velocity = p.velocity * sd;
      ref.acceleration = p.acceleration * sd * sd;
      out.refs.swing[i] = ref;
      out.refs.stance.erase(leg);
      ls.time_since_touchdown = kInf;
      ls.time_to_liftoff = kInf;
    } else {
      ls.time_since_touchdown = std::isfinite(touchdown_time_[i]) ? time - touchdown_time_[i] : kInf;
      ls.time_to_liftoff =
          gait_.enabled ? (next_liftoff_phase(leg, phase_) - phase_) / rate : kInf;
    }
    out.refs.time_since_touchdown[i] = ls.time_since_touchdown;
    out.refs.time_to_liftoff[i] = ls.time_to_liftoff;
  }
  out.schedule.stance = out.refs.stance;
  out.footholds = footholds_;

  // Trunk: path along the initial heading, lateral sway, optional sinusoids.
  const double t_path = std::max(0.0, tp);
  const bool moving = tp >= 0.0;
  const PathPoint along = path(time);
  out.speed = along.velocity;
  const Blend y = sway(phase_, T);
  const Vec2 pos = com0_.head<2>() + heading * along.distance + lateral * y.s;
  const Vec2 vel = heading * along.velocity + lateral * (y.ds * rate);
  const Vec2 acc = heading * along.acceleration + lateral * (y.dds * rate * rate);
  double z = com0_.z(), zd = 0.0, zdd = 0.0;
  double roll = 0.0, rolld = 0.0, rolldd = 0.0;
  if (profile_.kind == ProfileKind::kSinusoid && moving) {
    const Blend f = profile_.fade_in > 0.0 ? quintic_blend(t_path / profile_.fade_in) : Blend{1, 0, 0};
    const double fd = profile_.fade_in > 0.0 ? f.ds / profile_.fade_in : 0.0;
    const double fdd = profile_.fade_in > 0.0 ? f.dds / (profile_.fade_in * profile_.fade_in) : 0.0;
    auto wave = [&](double amp, double hz, double& p, double& pd, double& pdd) {
      const double w = 2.0 * std::numbers::pi * hz;
      const double s = amp * std::sin(w * t_path);
      const double sd = amp * w * std::cos(w * t_path);
      const double sdd = -w * w * s;
      p = f.s * s;
      pd = fd * s + f.s * sd;
      pdd = fdd * s + 2.0 * fd * sd + f.s * sdd;
    };
    double dz = 0.0;
    wave(profile_.height_amplitude, profile_.height_frequency, dz, zd, zdd);
    z += dz;
    wave(profile_.roll_amplitude, profile_.roll_frequency, roll, rolld, rolldd);
  }
  out.refs.com_position = Vec3(pos.x(), pos.y(), z);
  out.refs.com_velocity = Vec3(vel.x(), vel.y(), zd);
  out.refs.com_acceleration = Vec3(acc.x(), acc.y(), zdd);
  const Vec3 axis = orientation0_.col(0);
  out.refs.orientation = orientation0_ * Eigen::AngleAxisd(roll, Vec3::UnitX()).toRotationMatrix();
  out.refs.angular_velocity = axis * rolld;
  out.refs.angular_acceleration = axis * rolldd;
  return out;
}

}  // namespace softwalk::planner
