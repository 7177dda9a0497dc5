#include "steer/mdp.hpp"

#include <algorithm>
#include <cmath>

#include "steer/errors.hpp"

namespace steer {

int action_count(const EnvConfig& c) { return c.buffer_size * static_cast<int>(c.rats.size()) + 1; }

int noop_index(const EnvConfig& c) { return action_count(c) - 1; }

int action_index(const EnvConfig& c, const Action& a) {
  if (a.noop) return noop_index(c);
  if (a.slot < 0 || a.slot >= c.buffer_size || a.rat < 0 || a.rat >= static_cast<int>(c.rats.size()))
    throw ContractViolation("action out of range");
  return a.rat * c.buffer_size + a.slot;
}

Action action_from_index(const EnvConfig& c, int index) {
  if (index < 0 || index >= action_count(c)) throw ContractViolation("action index out of range");
  if (index == noop_index(c)) return Action::no_op();
  return Action::schedule(index % c.buffer_size, index / c.buffer_size);
}

std::size_t state_dim(const EnvConfig& c) {
  const std::size_t v = c.n_vehicles, b = c.buffer_size, r = c.rats.size();
  return 4 * v + 3 * b + r + v * r;
}

StateVector encode_state(const Environment& env) {
  const EnvConfig& c = env.config();
  StateVector s;
  s.reserve(state_dim(c));

  const double speed = c.vehicle_speed_mps > 0.0 ? c.vehicle_speed_mps : 1.0;
  for (const auto& v : env.vehicles()) {
    s.push_back(v.x / c.map_size_m);
    s.push_back(v.y / c.map_size_m);
    s.push_back(0.5 * (v.vx / speed + 1.0));
    s.push_back(0.5 * (v.vy / speed + 1.0));
  }

  const double frames_scale = c.max_frames();
  const double owner_scale = std::max(1, c.n_vehicles - 1);
  const double deadline_scale = c.max_deadline_s();
  for (const auto& j : env.buffer()) {
    s.push_back(j.frames_remaining / frames_scale);
    s.push_back(j.owner / owner_scale);
    s.push_back(static_cast<double>(j.ticks_remaining) * c.dt_s / deadline_scale);
  }

  for (int r = 0; r < env.n_rats(); ++r) s.push_back(env.rat_idle(r) ? 1.0 : 0.0);

  const double rate_scale = env.max_link_rate();
  for (int v = 0; v < c.n_vehicles; ++v)
    for (int r = 0; r < env.n_rats(); ++r) s.push_back(std::min(1.0, env.link_rate(r, v) / rate_scale));
  return s;
}

ActionMask legal_actions(const Environment& env) {
  const EnvConfig& c = env.config();
  ActionMask mask(action_count(c), 0);
  for (int r = 0; r < env.n_rats(); ++r)
    for (int s = 0; s < c.buffer_size; ++s)
      if (env.can_schedule(r, s)) mask[r * c.buffer_size + s] = 1;
  mask[noop_index(c)] = 1;
  return mask;
}

void apply_action(Environment& env, const Action& a) {
  if (!a.noop) env.begin_transmission(a.rat, a.slot);
}

double RewardComponents::get(int component) const {
  switch (component) {
    case kR1: return r1_unused_rat;
    case kR2: return r2_lost;
    case kR3: return r3_success;
    case kR4: return r4_latency;
    case kR5: return r5_throughput;
    case kR6: return r6_fairness;
  }
  throw ContractViolation("reward component out of range");
}

RewardComponents& RewardComponents::operator+=(const RewardComponents& o) {
  r1_unused_rat += o.r1_unused_rat;
  r2_lost += o.r2_lost;
  r3_success += o.r3_success;
  r4_latency += o.r4_latency;
  r5_throughput += o.r5_throughput;
  r6_fairness += o.r6_fairness;
  return *this;
}

RewardComponents reward_components(std::span<const EventRecord> events, const Environment& env_after) {
  const EnvConfig& c = env_after.config();
  RewardComponents rc;
  std::vector<double> flow(c.n_vehicles, 0.0);
  double delivered = 0.0;
  for (const auto& e : events) {
    switch (e.kind) {
      case EventKind::RatIdle: rc.r1_unused_rat -= 1.0; break;
      case EventKind::JobLost: rc.r2_lost -= 100.0; break;
      case EventKind::JobCompleted:
        rc.r3_success += 10.0;
        rc.r4_latency += 10.0 * (1.0 - e.latency_ratio);
        break;
      case EventKind::FrameDelivered:
        delivered += static_cast<double>(e.bytes);
        if (e.vehicle >= 0 && e.vehicle < c.n_vehicles) flow[e.vehicle] += static_cast<double>(e.bytes);
        break;
      case EventKind::FrameFailed:
      case EventKind::VehicleRespawned: break;
    }
  }
  rc.r5_throughput = 0.1 * throughput(delivered, 0.0, c.dt_s) / c.reward.throughput_unit_bytes;
  rc.r6_fairness = fairness(flow, c.reward.fairness_floor_bytes);
  return rc;
}

TaskSpec TaskSpec::task(int id) {
  auto bit = [](int k) { return static_cast<std::uint8_t>(1U << k); };
  TaskSpec t;
  t.id = id;
  switch (id) {
    case 1: t.components = bit(kR1) | bit(kR2) | bit(kR3) | bit(kR4) | bit(kR5) | bit(kR6); break;
    case 2: t.components = bit(kR1) | bit(kR6); break;
    case 3: t.components = bit(kR1) | bit(kR4); break;
    case 4: t.components = bit(kR1) | bit(kR5); break;
    case 5: t.components = bit(kR1) | bit(kR2) | bit(kR3); break;
    default: throw ConfigError("unknown task id " + std::to_string(id));
  }
  return t;
}

double task_reward(const RewardComponents& c, const TaskSpec& task) {
  if (task.id < 1 || task.id > 5) throw ConfigError("unknown task id " + std::to_string(task.id));
  double sum = 0.0;
  for (int k = kR1; k <= kR6; ++k)
    if (task.includes(k)) sum += c.get(k);
  return sum;
}

std::optional<CachingRate> caching_rate(const Counters& c) {
  const auto resolved = c.jobs_completed + c.jobs_lost;
  if (resolved <= 0) return std::nullopt;
  const auto resolved_bytes = c.bytes_completed + c.bytes_lost + c.bytes_lost_delivered;
  CachingRate cr;
  cr.packets = static_cast<double>(c.jobs_completed) / static_cast<double>(resolved);
  cr.bytes = static_cast<double>(c.bytes_completed) / static_cast<double>(resolved_bytes);
  return cr;
}

std::optional<CachingRate> caching_rate(const Environment& env) { return caching_rate(env.counters()); }

double throughput(double completed_bytes, double lost_job_delivered_bytes, double window_s) {
  if (!(window_s > 0.0)) throw ContractViolation("throughput window must be > 0");
  return (completed_bytes + lost_job_delivered_bytes) / window_s;
}

double throughput(const Environment& env, double window_s) {
  const auto& c = env.counters();
  return throughput(static_cast<double>(c.bytes_completed), static_cast<double>(c.bytes_lost_delivered), window_s);
}

double fairness(std::span<const double> per_vehicle_flow, double floor) {
  double f = 0.0;
  for (double x : per_vehicle_flow) f += std::log(std::max(x, floor));
  return f;
}

StepOutcome play_step(Environment& env, const Chooser& choose) {
  StepOutcome out;
  int idle = 0;
  for (int r = 0; r < env.n_rats(); ++r) idle += env.rat_idle(r) ? 1 : 0;
  for (int q = 0; q < idle; ++q) {
    const ActionMask mask = legal_actions(env);
    const Action a = choose(env, mask);
    apply_action(env, a);
    out.queries += 1;
  }
  out.events = env.advance(env.config().dt_s);
  out.rewards = reward_components(out.events, env);
  return out;
}

}  // namespace steer
