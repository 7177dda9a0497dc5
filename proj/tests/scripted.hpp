#pragma once
// A three-job episode small enough to trace by hand.
//
// One RAT whose rate is exactly 204.8 Mb/s (unit SINR at the clamped 1 m), so
// every 50 KiB frame takes exactly 2 ticks. Three parked vehicles. Jobs:
//   slot 0: 2 frames, 10-tick deadline, vehicle 0
//   slot 1: 3 frames,  7-tick deadline, vehicle 1
//   slot 2: 3 frames,  7-tick deadline, vehicle 2
// Script (the RAT is idle on even ticks): slot 0, slot 0, slot 1, slot 1.
//
//   tick 1->2  frame of job 0 delivered
//   tick 3->4  second frame delivered, job 0 completes at 0.004 s (ratio 0.4)
//   tick 5->6  first frame of job 1 delivered
//   tick 6->7  jobs 1 and 2 expire; job 1 had 1 of 3 frames delivered
//
// After 7 ticks: 1 completed (102400 B), 2 lost (256000 B undelivered,
// 51200 B delivered), packet rate 1/3, byte rate 102400/409600 = 0.25.

#include <vector>

#include "steer/mdp.hpp"

namespace scripted {

inline steer::EnvConfig config() {
  steer::EnvConfig c;
  c.n_vehicles = 3;
  c.buffer_size = 3;
  c.vehicle_speed_mps = 0.0;
  c.job_types = {{"two", 2, 0.010}, {"three", 3, 0.007}};
  steer::RatConfig r;
  r.name = "unit";
  r.bandwidth_hz = 204.8e6;
  r.tx_power_w = 1.0;
  r.antenna_gain = 1.0;
  r.pathloss_c = 1.0;
  r.pathloss_alpha = 2.0;
  r.noise_w = 1.0;
  r.max_range_m = 2000.0;
  c.rats = {r};
  return c;
}

struct Trace {
  steer::Environment env;
  steer::Counters start;
  std::vector<steer::StepOutcome> steps;
};

inline Trace run() {
  steer::Environment env = steer::Environment::build(config(), 99);
  for (int v = 0; v < 3; ++v) {
    steer::Vehicle veh = env.vehicles()[v];
    veh.x = env.config().bs_x() + 0.25 * (v + 1);
    veh.y = env.config().bs_y();
    veh.vx = veh.vy = 0.0;
    veh.road_segment = steer::Arm::East;
    env.place_vehicle(v, veh);
  }
  env.set_job(0, 0, 0);
  env.set_job(1, 1, 1);
  env.set_job(2, 1, 2);
  Trace t{env, env.counters(), {}};
  const int script[] = {0, -1, 0, -1, 1, -1, 1};
  for (int k = 0; k < 7; ++k) {
    const int slot = script[k];
    t.steps.push_back(steer::play_step(t.env, [slot](const steer::Environment&, const steer::ActionMask&) {
      return slot < 0 ? steer::Action::no_op() : steer::Action::schedule(slot, 0);
    }));
  }
  return t;
}

}  // namespace scripted
