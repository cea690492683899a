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

// Per-tick cost of the pieces of the control loop, measured on a mid-swing
// state of a walk on a soft patch.

#include <benchmark/benchmark.h>

#include "softwalk/planner.hpp"
#include "softwalk/rbd.hpp"
#include "softwalk/sim.hpp"
#include "softwalk/ste.hpp"
#include "softwalk/wbc.hpp"

namespace softwalk {
namespace {

struct WalkFrame {
  rbd::RobotModel model = rbd::make_desk_quad();
  terrain::TerrainMap terrain{std::vector<terrain::TerrainPatch>{
      terrain::make_patch("T1", -2, 6, -2, 2, 3500.0)}};
  rbd::RobotState state;
  sim::SensorSnapshot snapshot;
  wbc::TaskReferences refs;
  wbc::ContactModel contact = wbc::ContactModel::uniform(3500.0, 400.0);
  std::array<Vec3, kNumLegs> feet = zero_leg_vectors();
  ste::TerrainEstimator estimator{model, ste::SteConfig{}};
  planner::CrawlPlanner planner{planner::GaitConfig{}, planner::TrunkProfile{}};
  sim::Simulator sim{model, terrain, sim::SimConfig{}};
};

// Walks with the rigid controller until the first leg is halfway through
// its swing.
const WalkFrame& frame() {
  static WalkFrame* f = [] {
    auto* w = new WalkFrame;
    const rbd::RobotState s0 = sim::standing_state(w->model, w->terrain, Vec3::Zero(), 0.5,
                                                   sim::nominal_foot_offsets(w->model));
    w->sim.reset(s0);
    for (Leg leg : kAllLegs) w->feet[index(leg)] = rbd::foot_kinematics(w->model, s0, leg).position;
    w->planner.reset(rbd::center_of_mass(w->model, s0), s0.base_rotation, w->feet);
    wbc::WholeBodyController ctrl(w->model, wbc::WbcConfig{});
    const wbc::ContactModel rigid = wbc::ContactModel::uniform(2e6, 400.0);
    for (;;) {
      w->snapshot = w->sim.measure();
      w->estimator.update(w->snapshot);
      for (Leg leg : kAllLegs) {
        w->feet[index(leg)] = rbd::foot_kinematics(w->model, w->snapshot.state, leg).position;
      }
      const planner::PlanOutput out = w->planner.update(w->snapshot.time, w->feet);
      w->state = w->snapshot.state;
      w->refs = out.refs;
      const auto& lf = out.schedule.legs[index(Leg::LF)];
      if (!lf.stance && lf.swing_progress >= 0.5) break;
      w->sim.set_torques(ctrl.update(w->snapshot.state, out.refs, rigid).tau);
      w->sim.advance_control_period();
    }
    return w;
  }();
  return *f;
}

void BM_Dynamics(benchmark::State& st) {
  const WalkFrame& f = frame();
  for (auto _ : st) {
    benchmark::DoNotOptimize(rbd::compute_dynamics(f.model, f.state, rbd::Coordinates::kCom));
  }
}
BENCHMARK(BM_Dynamics);

void BM_ForwardDynamics(benchmark::State& st) {
  const WalkFrame& f = frame();
  const VecX generalized_force = VecX::Zero(kNumDofs);
  for (auto _ : st) {
    benchmark::DoNotOptimize(rbd::forward_dynamics(f.model, f.state, generalized_force));
  }
}
BENCHMARK(BM_ForwardDynamics);

void BM_QpSolve(benchmark::State& st) {
  const WalkFrame& f = frame();
  wbc::WbcConfig config;
  config.mode = st.range(0) ? wbc::WbcMode::kCompliant : wbc::WbcMode::kRigid;
  const rbd::DynamicsTerms terms = rbd::compute_dynamics(f.model, f.state, rbd::Coordinates::kCom);
  const rbd::DynamicsSplit split = rbd::split_dynamics(terms, f.refs.stance);
  const wbc::QpBuild build = wbc::assemble(f.model, f.state, terms, split, f.refs, f.contact,
                                           wbc::PenetrationHistory{}, config);
  qp::QpSolver solver;
  for (auto _ : st) {
    solver.reset_warm_start();
    benchmark::DoNotOptimize(solver.solve(build.problem, config.qp));
  }
  st.counters["variables"] = build.problem.num_variables();
}
BENCHMARK(BM_QpSolve)->Arg(0)->Arg(1)->ArgNames({"compliant"});

void BM_WbcTick(benchmark::State& st) {
  const WalkFrame& f = frame();
  wbc::WbcConfig config;
  config.mode = st.range(0) ? wbc::WbcMode::kCompliant : wbc::WbcMode::kRigid;
  wbc::WholeBodyController ctrl(f.model, config);
  for (auto _ : st) benchmark::DoNotOptimize(ctrl.update(f.state, f.refs, f.contact));
}
BENCHMARK(BM_WbcTick)->Arg(0)->Arg(1)->ArgNames({"compliant"});

void BM_EstimatorUpdate(benchmark::State& st) {
  const WalkFrame& f = frame();
  ste::TerrainEstimator est = f.estimator;
  for (auto _ : st) {
    est.update(f.snapshot);
    benchmark::DoNotOptimize(est.contact_model());
  }
}
BENCHMARK(BM_EstimatorUpdate);

void BM_WindowSolve(benchmark::State& st) {
  ste::SampleWindow w(static_cast<int>(st.range(0)));
  for (int k = 0; k < w.capacity(); ++k) {
    const double p = 0.01 + 1e-5 * (k % 17);
    w.push(3500.0 * p + 400.0 * 1e-3 * (k % 5), p, 1e-3 * (k % 5));
  }
  for (auto _ : st) benchmark::DoNotOptimize(w.solve(true, 0.995, 1e8));
}
BENCHMARK(BM_WindowSolve)->Arg(100)->Arg(250)->Arg(500);

void BM_SimControlPeriod(benchmark::State& st) {
  const WalkFrame& f = frame();
  sim::Simulator sim(f.model, f.terrain, sim::SimConfig{});
  for (auto _ : st) {
    st.PauseTiming();
    sim.reset(f.state, f.snapshot.time);
    st.ResumeTiming();
    sim.advance_control_period();
  }
  st.counters["substeps"] = sim.substeps();
}
BENCHMARK(BM_SimControlPeriod);

}  // namespace
}  // namespace softwalk

BENCHMARK_MAIN();
