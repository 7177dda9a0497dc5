#pragma once
// Accounting identities every environment state must satisfy.

#include <cmath>
#include <string>
#include <vector>

#include "steer/sim.hpp"

namespace inv {

/// Returns human-readable violations; empty when all identities hold.
/// `withdrawals` disables the delivered-bytes identity, since withdrawn jobs
/// take their partial deliveries with them.
inline std::vector<std::string> check(const steer::Environment& env, bool withdrawals = false) {
  using std::to_string;
  std::vector<std::string> bad;
  const auto& c = env.counters();
  const auto& cfg = env.config();
  const auto bpf = cfg.bytes_per_frame;

  if (static_cast<int>(env.buffer().size()) != cfg.buffer_size) bad.push_back("buffer size changed");
  if (static_cast<int>(env.vehicles().size()) != cfg.n_vehicles) bad.push_back("vehicle count changed");

  if (c.total_requests != c.jobs_completed + c.jobs_lost + c.jobs_withdrawn + cfg.buffer_size)
    bad.push_back("request count: " + to_string(c.total_requests) + " != resolved + buffered");

  std::int64_t buffered_bytes = 0, buffered_delivered = 0;
  for (const auto& j : env.buffer()) {
    buffered_bytes += static_cast<std::int64_t>(j.frames_total) * bpf;
    buffered_delivered += static_cast<std::int64_t>(j.frames_delivered()) * bpf;
    if (j.frames_remaining <= 0 || j.frames_remaining > j.frames_total) bad.push_back("frames_remaining out of range");
    if (j.frames_in_flight < 0 || j.frames_in_flight > j.frames_remaining) bad.push_back("frames_in_flight out of range");
    if (j.ticks_remaining <= 0 || j.ticks_remaining > j.deadline_ticks) bad.push_back("ticks_remaining out of range");
    if (j.owner < 0 || j.owner >= cfg.n_vehicles) bad.push_back("owner out of range");
    else if (env.vehicles()[j.owner].id != j.owner_id) bad.push_back("job owned by a departed vehicle");
  }
  if (c.bytes_requested != c.bytes_completed + c.bytes_lost + c.bytes_lost_delivered + c.bytes_withdrawn + buffered_bytes)
    bad.push_back("requested bytes not conserved");
  if (c.bytes_delivered != c.frames_delivered * bpf) bad.push_back("delivered bytes != frames * frame size");
  if (!withdrawals && c.bytes_delivered != c.bytes_completed + c.bytes_lost_delivered + buffered_delivered)
    bad.push_back("delivered bytes not conserved");
  if (c.bytes_lost < 0 || c.bytes_lost_delivered < 0) bad.push_back("negative lost bytes");

  for (int s = 0; s < cfg.buffer_size; ++s) {
    int flying = 0;
    for (int r = 0; r < env.n_rats(); ++r) {
      const auto& tx = env.transmission(r);
      if (tx && tx->slot == s) {
        if (tx->job_id != env.buffer()[s].id) bad.push_back("transmission for a resolved job");
        flying += 1;
      }
    }
    if (flying != env.buffer()[s].frames_in_flight) bad.push_back("in-flight count mismatch in slot " + to_string(s));
  }
  for (int r = 0; r < env.n_rats(); ++r) {
    const auto& tx = env.transmission(r);
    if (env.rat_idle(r) == tx.has_value()) bad.push_back("idle flag inconsistent");
    if (tx && tx->eta_s + 1e-9 < env.sim_time_s()) bad.push_back("overdue transmission");
  }

  const double half = cfg.map_size_m / 2.0;
  for (const auto& v : env.vehicles()) {
    const bool on_h = std::abs(v.y - cfg.bs_y()) < 1e-6, on_v = std::abs(v.x - cfg.bs_x()) < 1e-6;
    if (!on_h && !on_v) bad.push_back("vehicle off road");
    if (std::abs(v.x - cfg.bs_x()) > half + 1e-6 || std::abs(v.y - cfg.bs_y()) > half + 1e-6)
      bad.push_back("vehicle outside map");
    if (std::abs(std::hypot(v.vx, v.vy) - cfg.vehicle_speed_mps) > 1e-9) bad.push_back("vehicle speed changed");
  }
  return bad;
}

}  // namespace inv
