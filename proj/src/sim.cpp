#include "steer/sim.hpp"

#include <algorithm>
#include <cmath>

#include "steer/errors.hpp"

namespace steer {

namespace {

// Tolerance when comparing frame ETAs against tick boundaries.
constexpr double kTimeEps = 1e-9;

struct Dir {
  double x;
  double y;
};

Dir outward(Arm arm) {
  switch (arm) {
    case Arm::West: return {-1.0, 0.0};
    case Arm::East: return {1.0, 0.0};
    case Arm::South: return {0.0, -1.0};
    case Arm::North: return {0.0, 1.0};
  }
  return {0.0, 0.0};
}

}  // namespace

std::int64_t EnvConfig::ticks(double seconds) const {
  return static_cast<std::int64_t>(std::llround(seconds / dt_s));
}

int EnvConfig::max_frames() const {
  int m = 1;
  for (const auto& t : job_types) m = std::max(m, t.frames);
  return m;
}

double EnvConfig::max_deadline_s() const {
  double m = 0.0;
  for (const auto& t : job_types) m = std::max(m, t.deadline_s);
  return m;
}

void validate(const EnvConfig& c) {
  if (c.n_vehicles <= 0) throw ConfigError("n_vehicles must be > 0");
  if (c.buffer_size <= 0) throw ConfigError("buffer_size must be > 0");
  if (!(c.dt_s > 0.0)) throw ConfigError("dt_s must be > 0");
  if (!(c.vehicle_speed_mps >= 0.0)) throw ConfigError("vehicle_speed_mps must be >= 0");
  if (!(c.map_size_m > 0.0)) throw ConfigError("map_size_m must be > 0");
  if (c.bytes_per_frame <= 0) throw ConfigError("bytes_per_frame must be > 0");
  if (c.job_types.empty()) throw ConfigError("job_types must not be empty");
  for (const auto& t : c.job_types) {
    if (t.frames <= 0) throw ConfigError("job type " + t.name + ": frames must be > 0");
    if (c.ticks(t.deadline_s) <= 0) throw ConfigError("job type " + t.name + ": deadline shorter than dt");
  }
  if (c.rats.empty()) throw ConfigError("rats must not be empty");
  for (std::size_t i = 0; i < c.rats.size(); ++i) {
    validate(c.rats[i]);
    if (c.rats[i].id != static_cast<int>(i)) throw ConfigError("rat ids must be 0..R-1 in order");
  }
  if (c.episode_len_steps <= 0) throw ConfigError("episode_len_steps must be > 0");
  if (!(c.frame_timeout_factor > 1.0)) throw ConfigError("frame_timeout_factor must be > 1");
  if (!(c.reward.throughput_unit_bytes > 0.0)) throw ConfigError("throughput_unit_bytes must be > 0");
  if (!(c.reward.fairness_floor_bytes > 0.0)) throw ConfigError("fairness_floor_bytes must be > 0");
}

Counters Counters::operator-(const Counters& r) const {
  Counters d;
  d.jobs_completed = jobs_completed - r.jobs_completed;
  d.jobs_lost = jobs_lost - r.jobs_lost;
  d.jobs_withdrawn = jobs_withdrawn - r.jobs_withdrawn;
  d.total_requests = total_requests - r.total_requests;
  d.bytes_completed = bytes_completed - r.bytes_completed;
  d.bytes_lost = bytes_lost - r.bytes_lost;
  d.bytes_lost_delivered = bytes_lost_delivered - r.bytes_lost_delivered;
  d.bytes_withdrawn = bytes_withdrawn - r.bytes_withdrawn;
  d.bytes_requested = bytes_requested - r.bytes_requested;
  d.bytes_delivered = bytes_delivered - r.bytes_delivered;
  d.frames_delivered = frames_delivered - r.frames_delivered;
  d.frames_failed = frames_failed - r.frames_failed;
  d.respawns = respawns - r.respawns;
  return d;
}

Environment Environment::build(const EnvConfig& config, std::uint64_t seed) {
  validate(config);
  Environment env;
  env.config_ = config;
  env.rng_.seed(seed);
  const auto n_rats = config.rats.size();
  env.rat_busy_until_.assign(n_rats, 0.0);
  env.active_.assign(n_rats, std::nullopt);

  const double half = config.map_size_m / 2.0;
  env.vehicles_.reserve(config.n_vehicles);
  for (int v = 0; v < config.n_vehicles; ++v) {
    const auto arm = static_cast<Arm>(uniform_index(env.rng_, 4));
    const double radius = half * (1.0 - uniform01(env.rng_));
    const bool inbound = uniform01(env.rng_) < 0.5;
    env.vehicles_.push_back(env.spawn_on_road(arm, radius, inbound));
  }
  env.buffer_.resize(config.buffer_size);
  for (int s = 0; s < config.buffer_size; ++s) env.fill_slot(s);
  return env;
}

Vehicle Environment::on_road(Arm arm, double radius, bool inbound) const {
  const Dir d = outward(arm);
  const double sign = inbound ? -1.0 : 1.0;
  Vehicle v;
  v.x = config_.bs_x() + radius * d.x;
  v.y = config_.bs_y() + radius * d.y;
  v.vx = sign * config_.vehicle_speed_mps * d.x;
  v.vy = sign * config_.vehicle_speed_mps * d.y;
  v.road_segment = arm;
  return v;
}

Vehicle Environment::spawn_on_road(Arm arm, double radius, bool inbound) {
  Vehicle v = on_road(arm, radius, inbound);
  v.id = next_vehicle_id_++;
  return v;
}

Vehicle Environment::spawn_at_edge() {
  const auto arm = static_cast<Arm>(uniform_index(rng_, 4));
  return spawn_on_road(arm, config_.map_size_m / 2.0, true);
}

Job Environment::make_job(int job_type, int owner) {
  const auto& type = config_.job_types.at(job_type);
  Job j;
  j.id = next_job_id_++;
  j.owner = owner;
  j.owner_id = vehicles_.at(owner).id;
  j.job_type = job_type;
  j.frames_total = type.frames;
  j.frames_remaining = type.frames;
  j.created_tick = tick_;
  j.deadline_ticks = config_.ticks(type.deadline_s);
  j.ticks_remaining = j.deadline_ticks;
  return j;
}

void Environment::fill_slot(int slot) {
  const int type = static_cast<int>(uniform_index(rng_, config_.job_types.size()));
  const int owner = static_cast<int>(uniform_index(rng_, vehicles_.size()));
  buffer_[slot] = make_job(type, owner);
  counters_.total_requests += 1;
  counters_.bytes_requested += job_bytes(buffer_[slot]);
}

bool Environment::rat_idle(int rat) const { return !active_.at(rat).has_value(); }

double Environment::distance_to_bs(int vehicle) const {
  const auto& v = vehicles_.at(vehicle);
  return std::hypot(v.x - config_.bs_x(), v.y - config_.bs_y());
}

double Environment::link_rate(int rat, int vehicle) const {
  return data_rate(config_.rats.at(rat), distance_to_bs(vehicle));
}

double Environment::max_link_rate() const {
  double m = 0.0;
  for (const auto& r : config_.rats) m = std::max(m, data_rate(r, kMinDistanceM));
  return m;
}

bool Environment::can_schedule(int rat, int slot) const {
  if (rat < 0 || rat >= n_rats() || slot < 0 || slot >= config_.buffer_size) return false;
  if (!rat_idle(rat)) return false;
  const Job& j = buffer_[slot];
  if (j.frames_unscheduled() <= 0) return false;
  return link_rate(rat, j.owner) > 0.0;
}

double Environment::begin_transmission(int rat, int slot) {
  if (rat < 0 || rat >= n_rats()) throw ContractViolation("rat index out of range");
  if (slot < 0 || slot >= config_.buffer_size) throw ContractViolation("buffer slot out of range");
  if (!rat_idle(rat)) throw IllegalAction(config_.rats[rat].name + " is busy");
  Job& job = buffer_[slot];
  if (job.frames_unscheduled() <= 0) throw IllegalAction("job has no unscheduled frames");
  const RatConfig& cfg = config_.rats[rat];
  const double d = distance_to_bs(job.owner);
  const double nominal = data_rate(cfg, d);
  if (!(nominal > 0.0)) throw IllegalAction("vehicle outside " + cfg.name + " coverage");

  const double bits = static_cast<double>(config_.bytes_per_frame) * 8.0;
  const double nominal_duration = bits / nominal;
  Transmission tx;
  tx.job_id = job.id;
  tx.slot = slot;
  tx.start_s = sim_time_s();
  if (config_.rayleigh_fading) {
    // Unit-mean exponential power gain, i.e. Rayleigh amplitude fading.
    const double h = -std::log1p(-uniform01(rng_));
    const double rate = data_rate(cfg, d, h);
    const double timeout = config_.frame_timeout_factor * nominal_duration;
    const double duration = rate > 0.0 ? bits / rate : timeout + 1.0;
    tx.fails = duration > timeout;
    tx.eta_s = tx.start_s + (tx.fails ? timeout : duration);
  } else {
    tx.eta_s = tx.start_s + nominal_duration;
  }
  job.frames_in_flight += 1;
  active_[rat] = tx;
  rat_busy_until_[rat] = tx.eta_s;
  return tx.eta_s;
}

void Environment::cancel_transmissions_for(int slot) {
  for (int r = 0; r < n_rats(); ++r) {
    if (active_[r] && active_[r]->slot == slot) {
      active_[r].reset();
      rat_busy_until_[r] = sim_time_s();
    }
  }
}

void Environment::resolve_lost(int slot, std::vector<EventRecord>& events) {
  const Job& j = buffer_[slot];
  const std::int64_t delivered = static_cast<std::int64_t>(j.frames_delivered()) * config_.bytes_per_frame;
  const std::int64_t undelivered = job_bytes(j) - delivered;
  cancel_transmissions_for(slot);
  counters_.jobs_lost += 1;
  counters_.bytes_lost += undelivered;
  counters_.bytes_lost_delivered += delivered;
  EventRecord e;
  e.kind = EventKind::JobLost;
  e.slot = slot;
  e.vehicle = j.owner;
  e.job_id = j.id;
  e.bytes = undelivered;
  e.delivered_bytes = delivered;
  events.push_back(e);
  fill_slot(slot);
}

void Environment::deliver_frames(std::vector<EventRecord>& events) {
  const double now = sim_time_s();
  std::vector<int> due;
  for (int r = 0; r < n_rats(); ++r)
    if (active_[r] && active_[r]->eta_s <= now + kTimeEps) due.push_back(r);
  std::sort(due.begin(), due.end(), [&](int a, int b) {
    return active_[a]->eta_s != active_[b]->eta_s ? active_[a]->eta_s < active_[b]->eta_s : a < b;
  });

  for (int r : due) {
    const Transmission tx = *active_[r];
    active_[r].reset();
    Job& job = buffer_[tx.slot];
    if (job.id != tx.job_id) continue;  // job already resolved in this tick
    job.frames_in_flight -= 1;
    EventRecord e;
    e.rat = r;
    e.slot = tx.slot;
    e.vehicle = job.owner;
    e.job_id = job.id;
    if (tx.fails) {
      // Regenerated: the frame stays pending and must be sent again.
      counters_.frames_failed += 1;
      e.kind = EventKind::FrameFailed;
      events.push_back(e);
      continue;
    }
    job.frames_remaining -= 1;
    counters_.frames_delivered += 1;
    counters_.bytes_delivered += config_.bytes_per_frame;
    e.kind = EventKind::FrameDelivered;
    e.bytes = config_.bytes_per_frame;
    events.push_back(e);

    if (job.frames_remaining == 0) {
      const double created_s = static_cast<double>(job.created_tick) * config_.dt_s;
      const double deadline_s = static_cast<double>(job.deadline_ticks) * config_.dt_s;
      EventRecord c;
      c.kind = EventKind::JobCompleted;
      c.rat = r;
      c.slot = tx.slot;
      c.vehicle = job.owner;
      c.job_id = job.id;
      c.bytes = job_bytes(job);
      c.latency_ratio = std::clamp((tx.eta_s - created_s) / deadline_s, 0.0, 1.0);
      counters_.jobs_completed += 1;
      counters_.bytes_completed += job_bytes(job);
      events.push_back(c);
      fill_slot(tx.slot);
    }
  }
}

void Environment::move_vehicles(std::vector<EventRecord>& events, std::vector<int>& respawned) {
  const double half = config_.map_size_m / 2.0;
  const double step = config_.vehicle_speed_mps * config_.dt_s;
  if (step <= 0.0) return;
  for (int i = 0; i < static_cast<int>(vehicles_.size()); ++i) {
    Vehicle& v = vehicles_[i];
    const Dir out = outward(v.road_segment);
    const double radius = (v.x - config_.bs_x()) * out.x + (v.y - config_.bs_y()) * out.y;
    const bool inbound = v.vx * out.x + v.vy * out.y < 0.0;
    double next = inbound ? radius - step : radius + step;

    if (inbound && next <= 0.0) {
      // Junction: leave on one of the other three arms.
      const int from = static_cast<int>(v.road_segment);
      int exit = static_cast<int>(uniform_index(rng_, 3));
      if (exit >= from) exit += 1;
      const std::uint64_t id = v.id;
      v = on_road(static_cast<Arm>(exit), -next, false);
      v.id = id;
      continue;
    }
    if (!inbound && next > half) {
      const std::uint64_t old_id = v.id;
      v = spawn_at_edge();
      counters_.respawns += 1;
      EventRecord e;
      e.kind = EventKind::VehicleRespawned;
      e.vehicle = i;
      e.vehicle_id = old_id;
      events.push_back(e);
      respawned.push_back(i);
      continue;
    }
    v.x = config_.bs_x() + next * out.x;
    v.y = config_.bs_y() + next * out.y;
  }
}

std::vector<EventRecord> Environment::advance(double dt_s) {
  if (std::abs(dt_s - config_.dt_s) > 1e-12) throw ContractViolation("advance dt must equal config dt");
  std::vector<EventRecord> events;
  for (int r = 0; r < n_rats(); ++r) {
    if (rat_idle(r)) {
      EventRecord e;
      e.kind = EventKind::RatIdle;
      e.rat = r;
      events.push_back(e);
    }
  }

  tick_ += 1;
  deliver_frames(events);

  std::vector<int> respawned;
  move_vehicles(events, respawned);
  // A departed vehicle cannot receive its outstanding requests.
  // Requests issued this very tick are reassigned to the replacement vehicle.
  for (int s = 0; s < config_.buffer_size; ++s) {
    Job& j = buffer_[s];
    if (std::find(respawned.begin(), respawned.end(), j.owner) == respawned.end()) continue;
    if (j.created_tick < tick_) resolve_lost(s, events);
    else j.owner_id = vehicles_[j.owner].id;
  }

  for (int s = 0; s < config_.buffer_size; ++s) {
    Job& j = buffer_[s];
    if (j.created_tick >= tick_) continue;
    j.ticks_remaining -= 1;
    if (j.ticks_remaining <= 0) resolve_lost(s, events);
  }
  return events;
}

void Environment::redraw_demands() {
  for (int s = 0; s < config_.buffer_size; ++s) {
    cancel_transmissions_for(s);
    counters_.jobs_withdrawn += 1;
    counters_.bytes_withdrawn += job_bytes(buffer_[s]);
    fill_slot(s);
  }
}

void Environment::place_vehicle(int slot, const Vehicle& v) {
  if (slot < 0 || slot >= static_cast<int>(vehicles_.size())) throw ContractViolation("vehicle slot out of range");
  vehicles_[slot] = v;
  for (auto& j : buffer_)
    if (j.owner == slot) j.owner_id = v.id;
}

void Environment::set_job(int slot, int job_type, int owner) {
  if (slot < 0 || slot >= config_.buffer_size) throw ContractViolation("buffer slot out of range");
  if (job_type < 0 || job_type >= static_cast<int>(config_.job_types.size()))
    throw ContractViolation("job type out of range");
  if (owner < 0 || owner >= static_cast<int>(vehicles_.size())) throw ContractViolation("owner out of range");
  cancel_transmissions_for(slot);
  // The replaced job leaves the books as withdrawn so conservation still holds.
  counters_.jobs_withdrawn += 1;
  counters_.bytes_withdrawn += job_bytes(buffer_[slot]);
  buffer_[slot] = make_job(job_type, owner);
  counters_.total_requests += 1;
  counters_.bytes_requested += job_bytes(buffer_[slot]);
}

void Environment::set_job_ticks_remaining(int slot, std::int64_t ticks) {
  if (ticks <= 0 || ticks > buffer_.at(slot).deadline_ticks) throw ContractViolation("ticks out of range");
  buffer_.at(slot).ticks_remaining = ticks;
}

}  // namespace steer
