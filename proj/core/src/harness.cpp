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

#include "softwalk/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json_util.hpp"
#include "softwalk/rbd.hpp"

namespace softwalk::harness {

using nlohmann::json;

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::kSwbc: return "swbc";
    case ControllerKind::kAwbc: return "awbc";
    case ControllerKind::kStance: return "stance";
  }
  return "?";
}

ControllerKind controller_from_string(const std::string& name) {
  if (name == "swbc") return ControllerKind::kSwbc;
  if (name == "awbc") return ControllerKind::kAwbc;
  if (name == "stance") return ControllerKind::kStance;
  throw std::invalid_argument("unknown controller '" + name + "' (expected swbc, awbc or stance)");
}

void Scenario::validate() const {
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw std::invalid_argument("scenario duration must be finite and >= 0");
  }
  if (controller == ControllerKind::kAwbc && (!awbc_stiffness || !awbc_damping)) {
    throw std::invalid_argument("awbc needs explicit awbc.stiffness and awbc.damping");
  }
  if (awbc_stiffness && !(*awbc_stiffness > 0.0)) {
    throw std::invalid_argument("awbc.stiffness must be > 0");
  }
  if (awbc_damping && !(*awbc_damping >= 0.0)) {
    throw std::invalid_argument("awbc.damping must be >= 0");
  }
  if (shadow_stiffness && !(*shadow_stiffness > 0.0)) {
    throw std::invalid_argument("shadow_stiffness must be > 0");
  }
  if (!(base_height > 0.0)) throw std::invalid_argument("base_height must be > 0");
  if (!(fall.height_fraction > 0.0 && fall.height_fraction < 1.0)) {
    throw std::invalid_argument("fall.height_fraction must lie in (0, 1)");
  }
  if (!(fall.tilt_deg > 0.0 && fall.tilt_deg <= 180.0)) {
    throw std::invalid_argument("fall.tilt_deg must lie in (0, 180]");
  }
  if (!(liftoff_grace >= 0.0)) throw std::invalid_argument("liftoff_grace must be >= 0");
  if (!(metrics_start >= 0.0)) throw std::invalid_argument("metrics_start must be >= 0");
  for (const auto& p : terrain.patches()) p.validate();
  wbc.validate();
  estimator.validate();
  gait.validate();
  profile.validate();
}

// ---------------------------------------------------------------------------
// Scenario parsing

namespace {

// Reads the members of one JSON object and rejects keys nobody asked for, so
// a misspelt option fails loudly instead of silently keeping its default.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail("expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json* child(const std::string& key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    const json* v = child(key);
    if (!v) return;
    try {
      if constexpr (std::is_same_v<T, Vec3>) {
        out = vec3_from_json(*v);
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v->is_number()) throw std::invalid_argument("expected a number");
        out = v->get<double>();
      } else if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw std::invalid_argument("expected true or false");
        out = v->get<bool>();
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw std::invalid_argument("expected an integer");
        out = v->get<T>();
      } else {
        if (!v->is_string()) throw std::invalid_argument("expected a string");
        out = v->get<T>();
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument(path_ + "." + key + ": " + e.what());
    }
  }

  template <typename T>
  void get_optional(const std::string& key, std::optional<T>& out) {
    if (!has(key)) {
      used_.insert(key);
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  std::string path(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!used_.count(it.key())) fail("unknown key '" + it.key() + "'");
    }
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw std::invalid_argument(path_ + ": " + msg);
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void read_wbc(ObjectReader r, wbc::WbcConfig& c) {
  r.get("control_dt", c.control_dt);
  r.get("r_qdd", c.r_qdd);
  r.get("r_force", c.r_force);
  r.get("r_slack", c.r_slack);
  r.get("r_penetration", c.r_penetration);
  if (const json* q = r.child("trunk_weight")) {
    const VecX w = vecx_from_json(*q);
    if (w.size() != 6) r.fail("trunk_weight needs 6 entries");
    c.Q = w.asDiagonal();
  }
  r.get("trunk_kp_linear", c.trunk_kp_linear);
  r.get("trunk_kd_linear", c.trunk_kd_linear);
  r.get("trunk_kp_angular", c.trunk_kp_angular);
  r.get("trunk_kd_angular", c.trunk_kd_angular);
  r.get("swing_kp", c.swing_kp);
  r.get("swing_kd", c.swing_kd);
  r.get("friction", c.friction);
  r.get("friction_facets", c.friction_facets);
  r.get("f_min", c.f_min);
  r.get("f_max", c.f_max);
  r.get("rigid_stiffness", c.rigid_stiffness);
  r.get("joint_feedback", c.joint_feedback);
  r.get("joint_kp", c.joint_kp);
  r.get("joint_kd", c.joint_kd);
  r.finish();
}

void read_estimator(ObjectReader r, ste::SteConfig& c) {
  r.get("window", c.window);
  r.get("forgetting", c.forgetting);
  r.get("estimate_damping", c.estimate_damping);
  r.get("estimate_tangential", c.estimate_tangential);
  r.get("contact_threshold", c.contact_threshold);
  r.get("prior_stiffness", c.prior_stiffness);
  r.get("prior_damping", c.prior_damping);
  r.get("min_stiffness", c.min_stiffness);
  r.get("max_stiffness", c.max_stiffness);
  r.get("max_gram_condition", c.max_gram_condition);
  r.get("max_jacobian_condition", c.max_jacobian_condition);
  r.get("lowpass_hz", c.lowpass_hz);
  r.finish();
}

void read_gait(ObjectReader r, planner::GaitConfig& c) {
  r.get("enabled", c.enabled);
  r.get("cycle_time", c.cycle_time);
  r.get("duty", c.duty);
  if (const json* o = r.child("offsets")) {
    const VecX v = vecx_from_json(*o);
    if (v.size() != kNumLegs) r.fail("offsets needs 4 entries (LF, RF, LH, RH)");
    for (int i = 0; i < kNumLegs; ++i) c.offsets[i] = v[i];
  }
  r.get("phase_shift", c.phase_shift);
  r.get("max_stride", c.max_stride);
  r.get("min_cycle_time", c.min_cycle_time);
  r.get("step_height", c.step_height);
  r.get("touchdown_depth", c.touchdown_depth);
  r.get("ground_height", c.ground_height);
  r.get("sway", c.sway);
  r.get("sway_window", c.sway_window);
  r.get("startup_hold", c.startup_hold);
  r.get("hold_ramp", c.hold_ramp);
  r.finish();
}

void read_profile(ObjectReader r, planner::TrunkProfile& c) {
  std::string kind = planner::to_string(c.kind);
  r.get("kind", kind);
  try {
    c.kind = planner::profile_kind_from_string(kind);
  } catch (const std::exception& e) {
    r.fail(e.what());
  }
  r.get("speed", c.speed);
  r.get("ramp_start", c.ramp_start);
  r.get("ramp_acceleration", c.ramp_acceleration);
  r.get("ramp_final", c.ramp_final);
  r.get("height_amplitude", c.height_amplitude);
  r.get("height_frequency", c.height_frequency);
  r.get("roll_amplitude", c.roll_amplitude);
  r.get("roll_frequency", c.roll_frequency);
  r.get("fade_in", c.fade_in);
  r.finish();
}

void read_sim(ObjectReader r, sim::SimConfig& c) {
  r.get("dt_sim", c.dt_sim);
  r.get("max_velocity", c.max_velocity);
  if (const json* n = r.child("noise")) {
    ObjectReader nr(*n, r.path("noise"));
    nr.get("joint_velocity_std", c.noise.joint_velocity_std);
    nr.get("base_linear_velocity_std", c.noise.base_linear_velocity_std);
    nr.get("base_angular_velocity_std", c.noise.base_angular_velocity_std);
    nr.finish();
  }
  if (const json* d = r.child("disturbances")) {
    if (!d->is_array()) r.fail("disturbances must be an array");
    c.disturbances.clear();
    for (std::size_t i = 0; i < d->size(); ++i) {
      ObjectReader dr((*d)[i], r.path("disturbances[" + std::to_string(i) + "]"));
      sim::Disturbance dist;
      dr.get("t_start", dist.t_start);
      dr.get("t_end", dist.t_end);
      dr.get("force", dist.force);
      dr.get("torque", dist.torque);
      dr.finish();
      if (!(dist.t_end >= dist.t_start)) dr.fail("t_end must be >= t_start");
      c.disturbances.push_back(dist);
    }
  }
  r.finish();
}

rbd::RobotModel read_robot(const json& j, const std::filesystem::path& base_dir) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "desk_quad") return rbd::make_desk_quad();
    throw std::invalid_argument("robot: unknown built-in '" + name + "' (expected desk_quad)");
  }
  if (j.is_object() && j.contains("file")) {
    if (j.size() != 1) throw std::invalid_argument("robot: 'file' cannot be combined with other keys");
    std::filesystem::path p = j.at("file").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return rbd::load_robot_model(p);
  }
  return rbd::robot_model_from_json(j.dump());
}

terrain::TerrainMap read_terrain(const json& j, const std::filesystem::path& base_dir) {
  if (j.is_object() && j.contains("file")) {
    if (j.size() != 1) {
      throw std::invalid_argument("terrain: 'file' cannot be combined with other keys");
    }
    std::filesystem::path p = j.at("file").get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return terrain::terrain_from_json(read_text_file(p));
  }
  try {
    return terrain::terrain_from_json(j.dump());
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("terrain: ") + e.what());
  }
}

}  // namespace

Scenario scenario_from_json(const std::string& text, const std::filesystem::path& base_dir) {
  const json root = parse_json(text, "scenario");
  ObjectReader r(root, "scenario");
  std::string schema;
  r.get("schema", schema);
  if (schema != kScenarioSchema) {
    r.fail("schema must be \"" + std::string(kScenarioSchema) + "\", got \"" + schema + "\"");
  }
  Scenario s;
  r.get("name", s.name);
  if (const json* robot = r.child("robot")) s.robot = read_robot(*robot, base_dir);
  if (const json* t = r.child("terrain")) s.terrain = read_terrain(*t, base_dir);
  std::string controller = to_string(s.controller);
  r.get("controller", controller);
  try {
    s.controller = controller_from_string(controller);
  } catch (const std::exception& e) {
    r.fail(e.what());
  }
  if (const json* a = r.child("awbc")) {
    ObjectReader ar(*a, r.path("awbc"));
    ar.get_optional("stiffness", s.awbc_stiffness);
    ar.get_optional("damping", s.awbc_damping);
    ar.finish();
  }
  if (const json* w = r.child("wbc")) read_wbc(ObjectReader(*w, r.path("wbc")), s.wbc);
  if (const json* e = r.child("estimator")) {
    read_estimator(ObjectReader(*e, r.path("estimator")), s.estimator);
  }
  if (const json* g = r.child("gait")) read_gait(ObjectReader(*g, r.path("gait")), s.gait);
  if (const json* p = r.child("profile")) {
    read_profile(ObjectReader(*p, r.path("profile")), s.profile);
  }
  if (const json* sm = r.child("sim")) read_sim(ObjectReader(*sm, r.path("sim")), s.sim);
  r.get("duration", s.duration);
  r.get("seed", s.seed);
  std::string out = s.output_dir.string();
  r.get("output_dir", out);
  s.output_dir = out;
  if (const json* st = r.child("start")) {
    ObjectReader sr(*st, r.path("start"));
    sr.get("x", s.start.x());
    sr.get("y", s.start.y());
    sr.get("yaw", s.start.z());
    sr.finish();
  }
  r.get("base_height", s.base_height);
  if (const json* f = r.child("fall")) {
    ObjectReader fr(*f, r.path("fall"));
    fr.get("height_fraction", s.fall.height_fraction);
    fr.get("tilt_deg", s.fall.tilt_deg);
    fr.finish();
  }
  r.get_optional("shadow_stiffness", s.shadow_stiffness);
  r.get("liftoff_grace", s.liftoff_grace);
  r.get("metrics_start", s.metrics_start);
  r.finish();
  s.estimator.control_dt = s.wbc.control_dt;
  s.sim.control_dt = s.wbc.control_dt;
  try {
    s.validate();
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("scenario: ") + e.what());
  }
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return scenario_from_json(text, path.parent_path());
  } catch (const std::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Episode

namespace {

struct Accumulator {
  int n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double std() const { return n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0; }
};

struct PatchAccumulator {
  std::string name;
  double truth = 0.0;
  std::array<Accumulator, kNumLegs> legs;
  Accumulator all;
};

TimingStats timing_stats(std::vector<double> ms) {
  TimingStats t;
  t.ticks = static_cast<int>(ms.size());
  if (ms.empty()) return t;
  double sum = 0.0;
  for (double v : ms) sum += v;
  t.mean_ms = sum / ms.size();
  t.max_ms = *std::max_element(ms.begin(), ms.end());
  const std::size_t k = std::min(ms.size() - 1, static_cast<std::size_t>(std::ceil(0.99 * ms.size())) - 1);
  std::nth_element(ms.begin(), ms.begin() + static_cast<std::ptrdiff_t>(k), ms.end());
  t.p99_ms = ms[k];
  return t;
}

double tilt_deg(const Mat3& R) {
  return std::acos(std::clamp(R(2, 2), -1.0, 1.0)) * 180.0 / M_PI;
}

}  // namespace

EpisodeResult run(const Scenario& scenario) {
  scenario.validate();
  EpisodeResult result;
  MetricsReport& rep = result.report;
  rep.scenario = scenario.name;
  rep.controller = scenario.controller;
  rep.seed = scenario.seed;

  const rbd::RobotModel& model = scenario.robot;
  const double dt = scenario.wbc.control_dt;
  sim::SimConfig sc = scenario.sim;
  sc.seed = scenario.seed;
  sc.control_dt = dt;
  sim::Simulator sim(model, scenario.terrain, sc);
  const rbd::RobotState s0 = sim::standing_state(model, scenario.terrain, scenario.start,
                                                 scenario.base_height,
                                                 sim::nominal_foot_offsets(model));
  sim.reset(s0);

  wbc::WbcConfig wc = scenario.wbc;
  wc.mode = scenario.controller == ControllerKind::kSwbc ? wbc::WbcMode::kRigid
                                                         : wbc::WbcMode::kCompliant;
  wbc::WholeBodyController ctrl(model, wc);
  std::optional<wbc::WholeBodyController> shadow;
  if (scenario.shadow_stiffness) {
    wbc::WbcConfig shc = scenario.wbc;
    shc.mode = wbc::WbcMode::kCompliant;
    shadow.emplace(model, shc);
  }
  ste::SteConfig ec = scenario.estimator;
  ec.control_dt = dt;
  ste::TerrainEstimator estimator(model, ec);
  const bool use_estimator = scenario.controller == ControllerKind::kStance;

  planner::CrawlPlanner plan(scenario.gait, scenario.profile);
  std::array<Vec3, kNumLegs> feet = zero_leg_vectors();
  for (Leg leg : kAllLegs) feet[index(leg)] = rbd::foot_kinematics(model, s0, leg).position;
  plan.reset(rbd::center_of_mass(model, s0), s0.base_rotation, feet);
  rep.metrics_start = scenario.metrics_start;

  wbc::ContactModel fixed_model;
  if (scenario.controller == ControllerKind::kAwbc) {
    fixed_model = wbc::ContactModel::uniform(*scenario.awbc_stiffness, *scenario.awbc_damping);
  } else if (scenario.controller == ControllerKind::kSwbc) {
    fixed_model = wbc::ContactModel::uniform(scenario.wbc.rigid_stiffness, terrain::kDefaultDamping);
  }
  const wbc::ContactModel shadow_model = wbc::ContactModel::uniform(
      scenario.shadow_stiffness.value_or(1.0), terrain::kDefaultDamping);

  const long ticks = std::lround(scenario.duration / dt);
  result.rows.reserve(static_cast<std::size_t>(ticks));
  result.tick_ms.reserve(static_cast<std::size_t>(ticks));

  std::array<Accumulator, kNumLegs> mae;
  std::vector<PatchAccumulator> patches;
  std::array<std::string, kNumLegs> settle_patch;
  std::array<int, kNumLegs> settle_ticks{};
  std::array<int, kNumLegs> liftoffs{};
  Accumulator power;
  Accumulator shadow_diff;
  double scored_x0 = 0.0;
  double scored_t0 = -1.0;
  const Vec3 heading = s0.base_rotation.col(0);

  using Clock = std::chrono::steady_clock;
  for (long k = 0; k < ticks; ++k) {
    const sim::SensorSnapshot snap = sim.measure();
    const double t = snap.time;

    const auto c0 = Clock::now();
    if (use_estimator) estimator.update(snap);
    for (Leg leg : kAllLegs) {
      feet[index(leg)] = rbd::foot_kinematics(model, snap.state, leg).position;
    }
    const planner::PlanOutput out = plan.update(t, feet);
    // Legs entering stance seed their penetration history with the measured
    // penetration. The initial standing pose is not a touchdown, so the first
    // tick starts from rest instead.
    std::array<Vec3, kNumLegs> touchdown_pen = zero_leg_vectors();
    for (int i = 0; i < kNumLegs && k > 0; ++i) {
      if (snap.touchdown[i]) touchdown_pen[i] = snap.touchdown[i]->anchor - feet[i];
    }
    const wbc::ContactModel& contact = use_estimator ? estimator.contact_model() : fixed_model;
    const wbc::WbcSolution sol = ctrl.update(snap.state, out.refs, contact, &touchdown_pen);
    const auto c1 = Clock::now();
    result.tick_ms.push_back(std::chrono::duration<double, std::milli>(c1 - c0).count());

    EpisodeRow row;
    row.time = t;
    row.scored = t >= rep.metrics_start;
    if (shadow) {
      const wbc::WbcSolution sh = shadow->update(snap.state, out.refs, shadow_model, &touchdown_pen);
      row.shadow_torque_diff = (sol.tau - sh.tau).cwiseAbs().maxCoeff();
      shadow_diff.add(row.shadow_torque_diff);
    }
    if (sol.fallback) ++rep.qp_failures;

    sim.set_torques(sol.tau);
    const VecX& applied = sim.torques();
    for (int j = 0; j < kNumJoints; ++j) row.power += std::max(0.0, applied[j] * snap.state.qd[j]);

    try {
      sim.advance_control_period();
    } catch (const sim::SimulationDiverged& e) {
      rep.diverged = true;
      rep.failure = std::string(e.what()) + "\n" + e.dump();
      rep.fall_time = sim.time();
      break;
    }
    ++rep.ticks;

    const rbd::RobotState& s = sim.state();
    const Mat3& R = s.base_rotation;
    row.com = rbd::center_of_mass(model, s);
    row.com_ref = out.refs.com_position;
    row.roll = std::atan2(R(2, 1), R(2, 2));
    row.pitch = std::asin(std::clamp(-R(2, 0), -1.0, 1.0));
    row.speed_ref = out.speed;
    row.qp_status = static_cast<int>(sol.status);
    row.qp_iterations = sol.iterations;
    row.fallback = sol.fallback;

    const auto& contacts = sim.contacts();
    const auto& mean_forces = sim.mean_contact_forces();
    for (Leg leg : kAllLegs) {
      const int i = index(leg);
      LegRow& lr = row.legs[i];
      const terrain::ContactPointState& c = contacts[i];
      lr.planned_stance = out.schedule.legs[i].stance;
      lr.in_contact = c.in_contact;
      Vec3 n = Vec3::UnitZ();
      if (c.in_contact) {
        n = c.frame.rotation.row(0).transpose();
      } else if (snap.touchdown[i]) {
        n = snap.touchdown[i]->rotation.row(0).transpose();
      }
      lr.force_normal = n.dot(mean_forces[i]);
      lr.force_normal_ref = n.dot(sol.leg_force(leg));
      lr.stiffness = contact.normal_stiffness(leg);
      if (use_estimator) {
        const ste::LegEstimate& e = estimator.leg(leg);
        lr.fill = e.samples;
        lr.valid = e.direction[0].valid;
        lr.condition = e.direction[0].condition;
      }

      if (row.scored && lr.planned_stance) {
        mae[i].add(std::abs(lr.force_normal - lr.force_normal_ref));
      }
      // A liftoff the plan did not ask for.
      if (c.liftoffs > liftoffs[i] && lr.planned_stance &&
          out.schedule.legs[i].time_to_liftoff > scenario.liftoff_grace) {
        ++rep.unintended_contact_losses;
      }
      liftoffs[i] = c.liftoffs;

      // Stiffness statistics use legs whose window holds only samples from
      // the patch they currently stand on.
      if (c.in_contact) {
        if (c.patch.name != settle_patch[i]) {
          settle_patch[i] = c.patch.name;
          settle_ticks[i] = 0;
        }
        ++settle_ticks[i];
        if (use_estimator && lr.valid && settle_ticks[i] > ec.window) {
          auto it = std::find_if(patches.begin(), patches.end(),
                                 [&](const PatchAccumulator& p) { return p.name == c.patch.name; });
          if (it == patches.end()) {
            patches.push_back({c.patch.name, c.patch.stiffness[0], {}, {}});
            it = patches.end() - 1;
          }
          const double k_hat = estimator.leg(leg).direction[0].stiffness;
          it->legs[i].add(k_hat);
          it->all.add(k_hat);
        }
      }
    }

    if (row.scored) {
      power.add(row.power);
      if (scored_t0 < 0.0) {
        scored_t0 = t;
        scored_x0 = heading.dot(row.com);
      }
      rep.mean_forward_speed =
          sim.time() > scored_t0 ? (heading.dot(row.com) - scored_x0) / (sim.time() - scored_t0) : 0.0;
    }
    rep.max_speed_ref = std::max(rep.max_speed_ref, out.speed);
    result.rows.push_back(row);

    const double ground = scenario.terrain.query(s.base_position.x(), s.base_position.y()).height;
    if (s.base_position.z() - ground < scenario.fall.height_fraction * scenario.base_height ||
        tilt_deg(R) > scenario.fall.tilt_deg) {
      rep.fell = true;
      rep.fall_time = sim.time();
      break;
    }
  }

  rep.simulated_time = rep.ticks * dt;
  for (int i = 0; i < kNumLegs; ++i) {
    rep.mae[i] = mae[i].mean;
    rep.mae_samples[i] = mae[i].n;
  }
  int n_all = 0;
  double sum_all = 0.0;
  for (int i = 0; i < kNumLegs; ++i) {
    n_all += mae[i].n;
    sum_all += mae[i].mean * mae[i].n;
  }
  rep.mae_mean = n_all > 0 ? sum_all / n_all : 0.0;
  rep.mean_power = power.mean;
  rep.shadow_max_diff = 0.0;
  for (const EpisodeRow& row : result.rows) {
    rep.shadow_max_diff = std::max(rep.shadow_max_diff, row.shadow_torque_diff);
  }
  rep.shadow_mean_diff = shadow_diff.mean;
  for (const PatchAccumulator& p : patches) {
    StiffnessStat st;
    st.patch = p.name;
    st.truth = p.truth;
    for (int i = 0; i < kNumLegs; ++i) {
      st.leg_mean[i] = p.legs[i].mean;
      st.leg_std[i] = p.legs[i].std();
      st.leg_samples[i] = p.legs[i].n;
    }
    st.mean = p.all.mean;
    st.std = p.all.std();
    st.samples = p.all.n;
    st.percent_error = std::abs(st.mean - st.truth) / st.truth * 100.0;
    rep.stiffness.push_back(st);
  }
  rep.timing = timing_stats(result.tick_ms);
  return result;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

json array4(const std::array<double, kNumLegs>& a) { return json::array({a[0], a[1], a[2], a[3]}); }
json array4(const std::array<int, kNumLegs>& a) { return json::array({a[0], a[1], a[2], a[3]}); }

const std::array<const char*, 8> kLegColumns = {"stance", "contact", "fz",    "fz_ref",
                                                 "k",      "fill",    "valid", "cond"};

}  // namespace

std::string report_to_json(const MetricsReport& r) {
  json j;
  j["schema"] = kReportSchema;
  j["scenario"] = r.scenario;
  j["controller"] = to_string(r.controller);
  j["seed"] = r.seed;
  j["ticks"] = r.ticks;
  j["simulated_time"] = r.simulated_time;
  j["metrics_start"] = r.metrics_start;
  j["mae"] = {{"legs", array4(r.mae)}, {"samples", array4(r.mae_samples)}, {"mean", r.mae_mean}};
  json stiff = json::array();
  for (const StiffnessStat& s : r.stiffness) {
    stiff.push_back({{"patch", s.patch},
                     {"truth", s.truth},
                     {"mean", s.mean},
                     {"std", s.std},
                     {"percent_error", s.percent_error},
                     {"samples", s.samples},
                     {"leg_mean", array4(s.leg_mean)},
                     {"leg_std", array4(s.leg_std)},
                     {"leg_samples", array4(s.leg_samples)}});
  }
  j["stiffness"] = stiff;
  j["unintended_contact_losses"] = r.unintended_contact_losses;
  j["mean_power"] = r.mean_power;
  j["max_speed_ref"] = r.max_speed_ref;
  j["mean_forward_speed"] = r.mean_forward_speed;
  j["fell"] = r.fell;
  j["fall_time"] = r.fall_time;
  j["diverged"] = r.diverged;
  j["failure"] = r.failure;
  j["failed"] = r.failed();
  j["qp_failures"] = r.qp_failures;
  j["shadow"] = {{"max_torque_diff", r.shadow_max_diff}, {"mean_torque_diff", r.shadow_mean_diff}};
  j["timing_ms"] = {{"ticks", r.timing.ticks},
                    {"mean", r.timing.mean_ms},
                    {"p99", r.timing.p99_ms},
                    {"max", r.timing.max_ms}};
  return j.dump(2);
}

void write_csv(const std::vector<EpisodeRow>& rows, std::ostream& out) {
  out << "# " << kEpisodeSchema << "\n";
  out << "time,scored,com_x,com_y,com_z,com_ref_x,com_ref_y,com_ref_z,roll,pitch,speed_ref,"
         "qp_status,qp_iterations,fallback,power,shadow_dtau";
  for (Leg leg : kAllLegs) {
    for (const char* c : kLegColumns) out << ',' << leg_name(leg) << '_' << c;
  }
  out << '\n';
  for (const EpisodeRow& r : rows) {
    out << num(r.time) << ',' << int(r.scored);
    for (int a = 0; a < 3; ++a) out << ',' << num(r.com[a]);
    for (int a = 0; a < 3; ++a) out << ',' << num(r.com_ref[a]);
    out << ',' << num(r.roll) << ',' << num(r.pitch) << ',' << num(r.speed_ref) << ','
        << r.qp_status << ',' << r.qp_iterations << ',' << int(r.fallback) << ','
        << num(r.power) << ',' << num(r.shadow_torque_diff);
    for (const LegRow& l : r.legs) {
      out << ',' << int(l.planned_stance) << ',' << int(l.in_contact) << ','
          << num(l.force_normal) << ',' << num(l.force_normal_ref) << ',' << num(l.stiffness)
          << ',' << l.fill << ',' << int(l.valid) << ',' << num(l.condition);
    }
    out << '\n';
  }
}

void write_csv(const std::vector<EpisodeRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_csv(rows, out);
}

std::filesystem::path write_outputs(const Scenario& scenario, const EpisodeResult& result) {
  std::filesystem::create_directories(scenario.output_dir);
  const std::string stem = scenario.name + "_" + to_string(result.report.controller);
  const std::filesystem::path csv = scenario.output_dir / (stem + ".csv");
  write_csv(result.rows, csv);
  std::ofstream js(scenario.output_dir / (stem + ".json"));
  if (!js) throw std::runtime_error("cannot write summary next to " + csv.string());
  js << report_to_json(result.report) << '\n';
  return csv;
}

std::vector<MetricsReport> compare(const Scenario& scenario,
                                   const std::vector<ControllerKind>& controllers) {
  std::vector<MetricsReport> reports;
  for (ControllerKind kind : controllers) {
    Scenario s = scenario;
    s.controller = kind;
    try {
      reports.push_back(run(s).report);
    } catch (const std::exception& e) {
      MetricsReport r;
      r.scenario = s.name;
      r.controller = kind;
      r.seed = s.seed;
      r.failure = e.what();
      reports.push_back(r);
    }
  }
  return reports;
}

std::string format_table(const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << std::left << std::setw(8) << "ctrl" << std::right << std::setw(9) << "MAE LF"
     << std::setw(9) << "MAE RF" << std::setw(9) << "MAE LH" << std::setw(9) << "MAE RH"
     << std::setw(9) << "MAE" << std::setw(8) << "losses" << std::setw(10) << "power W"
     << std::setw(9) << "v_max" << std::setw(10) << "k err %" << std::setw(10) << "tick ms"
     << std::setw(10) << "p99 ms" << "  status\n";
  os << std::fixed;
  for (const MetricsReport& r : reports) {
    os << std::left << std::setw(8) << to_string(r.controller) << std::right;
    if (!r.failure.empty() && r.ticks == 0) {
      os << "  error: " << r.failure.substr(0, r.failure.find('\n')) << '\n';
      continue;
    }
    os << std::setprecision(2);
    for (double m : r.mae) os << std::setw(9) << m;
    os << std::setw(9) << r.mae_mean << std::setw(8) << r.unintended_contact_losses
       << std::setw(10) << r.mean_power << std::setprecision(3) << std::setw(9)
       << r.max_speed_ref;
    double worst = 0.0;
    for (const StiffnessStat& s : r.stiffness) worst = std::max(worst, s.percent_error);
    os << std::setprecision(2) << std::setw(10);
    if (r.stiffness.empty()) {
      os << "-";
    } else {
      os << worst;
    }
    os << std::setprecision(3) << std::setw(10) << r.timing.mean_ms << std::setw(10)
       << r.timing.p99_ms << "  ";
    if (r.diverged) {
      os << "diverged at " << std::setprecision(3) << r.fall_time << " s";
    } else if (r.fell) {
      os << "fell at " << std::setprecision(3) << r.fall_time << " s";
    } else if (!r.failure.empty()) {
      os << "error";
    } else {
      os << "ok";
    }
    os << '\n';
  }
  return os.str();
}

CsvSummary summarize_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != std::string("# ") + kEpisodeSchema) {
    throw std::invalid_argument(path.string() + ": line 1: expected '# " +
                                std::string(kEpisodeSchema) + "'");
  }
  if (!std::getline(in, line)) throw std::invalid_argument(path.string() + ": missing header");
  std::map<std::string, int> column;
  {
    std::stringstream ss(line);
    std::string name;
    for (int c = 0; std::getline(ss, name, ','); ++c) column[name] = c;
  }
  auto col = [&](const std::string& name) {
    auto it = column.find(name);
    if (it == column.end()) {
      throw std::invalid_argument(path.string() + ": missing column '" + name + "'");
    }
    return it->second;
  };
  const int c_time = col("time"), c_scored = col("scored"), c_power = col("power"),
            c_fallback = col("fallback");
  std::array<int, kNumLegs> c_stance{}, c_fz{}, c_ref{};
  for (Leg leg : kAllLegs) {
    const std::string p(leg_name(leg));
    c_stance[index(leg)] = col(p + "_stance");
    c_fz[index(leg)] = col(p + "_fz");
    c_ref[index(leg)] = col(p + "_fz_ref");
  }

  CsvSummary s;
  std::array<Accumulator, kNumLegs> mae;
  Accumulator power;
  std::vector<double> v;
  for (int lineno = 3; std::getline(in, line); ++lineno) {
    if (line.empty()) continue;
    v.clear();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw std::invalid_argument(path.string() + ": line " + std::to_string(lineno) +
                                    ": bad number '" + cell + "'");
      }
    }
    if (v.size() != column.size()) {
      throw std::invalid_argument(path.string() + ": line " + std::to_string(lineno) + ": expected " +
                                  std::to_string(column.size()) + " fields, got " +
                                  std::to_string(v.size()));
    }
    ++s.ticks;
    s.duration = v[c_time];
    if (v[c_fallback] != 0.0) ++s.qp_fallbacks;
    if (v[c_scored] == 0.0) continue;
    power.add(v[c_power]);
    for (int i = 0; i < kNumLegs; ++i) {
      if (v[c_stance[i]] != 0.0) mae[i].add(std::abs(v[c_fz[i]] - v[c_ref[i]]));
    }
  }
  for (int i = 0; i < kNumLegs; ++i) {
    s.mae[i] = mae[i].mean;
    s.mae_samples[i] = mae[i].n;
  }
  s.mean_power = power.mean;
  return s;
}

}  // namespace softwalk::harness
