#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "steer/link.hpp"
#include "steer/rng.hpp"

namespace steer {

struct JobType {
  std::string name;
  int frames = 20;
  double deadline_s = 0.1;

  bool operator==(const JobType&) const = default;
};

/// Constants used when turning simulator events into rewards.
struct RewardConfig {
  /// Throughput enters the reward in units of this many bytes per second.
  double throughput_unit_bytes = 1e6;
  /// Per-vehicle flow floor (bytes) that keeps log(flow) finite.
  double fairness_floor_bytes = 1.0;

  bool operator==(const RewardConfig&) const = default;
};

struct EnvConfig {
  int n_vehicles = 5;
  int buffer_size = 5;
  double dt_s = 0.001;
  double vehicle_speed_mps = 8.0;
  double map_size_m = 1000.0;
  std::int64_t bytes_per_frame = 50 * 1024;
  std::vector<JobType> job_types{{"A", 20, 0.1}, {"B", 200, 1.0}};
  std::vector<RatConfig> rats{default_lte(), default_nr()};
  int episode_len_steps = 2000;
  bool rayleigh_fading = false;
  double frame_timeout_factor = 10.0;
  RewardConfig reward;

  bool operator==(const EnvConfig&) const = default;

  double bs_x() const { return map_size_m / 2.0; }
  double bs_y() const { return map_size_m / 2.0; }
  std::int64_t ticks(double seconds) const;
  int max_frames() const;
  double max_deadline_s() const;
};

void validate(const EnvConfig& config);

/// Roads form a crossroad through the base station; each arm runs from the
/// junction to one map edge.
enum class Arm : int { West = 0, East = 1, South = 2, North = 3 };

struct Vehicle {
  std::uint64_t id = 0;
  double x = 0.0;
  double y = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  /// Arm of the crossroad the vehicle is currently on.
  Arm road_segment = Arm::West;

  bool operator==(const Vehicle&) const = default;
};

struct Job {
  std::uint64_t id = 0;
  /// Vehicle slot (index into Environment::vehicles) and the vehicle's id.
  int owner = 0;
  std::uint64_t owner_id = 0;
  int job_type = 0;
  int frames_total = 0;
  int frames_remaining = 0;
  int frames_in_flight = 0;
  std::int64_t created_tick = 0;
  std::int64_t deadline_ticks = 0;
  std::int64_t ticks_remaining = 0;

  bool operator==(const Job&) const = default;

  int frames_unscheduled() const { return frames_remaining - frames_in_flight; }
  int frames_delivered() const { return frames_total - frames_remaining; }
};

struct Transmission {
  std::uint64_t job_id = 0;
  int slot = 0;
  double start_s = 0.0;
  double eta_s = 0.0;
  /// Set when a faded frame exceeds its timeout; it is dropped at eta_s.
  bool fails = false;

  bool operator==(const Transmission&) const = default;
};

struct Counters {
  std::int64_t jobs_completed = 0;
  std::int64_t jobs_lost = 0;
  std::int64_t jobs_withdrawn = 0;
  std::int64_t total_requests = 0;
  /// T_c: full size of completed jobs.
  std::int64_t bytes_completed = 0;
  /// Bytes of lost jobs that never reached the vehicle.
  std::int64_t bytes_lost = 0;
  /// T_l: bytes that did reach the vehicle for jobs that were lost later.
  std::int64_t bytes_lost_delivered = 0;
  /// Full size of jobs replaced by redraw_demands or set_job.
  std::int64_t bytes_withdrawn = 0;
  std::int64_t bytes_requested = 0;
  std::int64_t bytes_delivered = 0;
  std::int64_t frames_delivered = 0;
  std::int64_t frames_failed = 0;
  std::int64_t respawns = 0;

  bool operator==(const Counters&) const = default;
  Counters operator-(const Counters& rhs) const;
};

enum class EventKind { RatIdle, FrameDelivered, FrameFailed, JobCompleted, JobLost, VehicleRespawned };

struct EventRecord {
  EventKind kind = EventKind::RatIdle;
  int rat = -1;
  int slot = -1;
  int vehicle = -1;
  std::uint64_t job_id = 0;
  /// VehicleRespawned: id of the vehicle that left the map.
  std::uint64_t vehicle_id = 0;
  /// Frame size, completed job size, or undelivered bytes of a lost job.
  std::int64_t bytes = 0;
  /// JobCompleted only: completion time over the job's deadline.
  double latency_ratio = 0.0;
  /// JobLost only: bytes that reached the vehicle before expiry.
  std::int64_t delivered_bytes = 0;

  bool operator==(const EventRecord&) const = default;
};

/// One base station with several RATs, a fixed-size job buffer and a fixed
/// fleet of vehicles on a crossroad. Time advances in fixed ticks of dt_s.
class Environment {
 public:
  static Environment build(const EnvConfig& config, std::uint64_t seed);

  const EnvConfig& config() const { return config_; }
  const std::vector<Vehicle>& vehicles() const { return vehicles_; }
  const std::vector<Job>& buffer() const { return buffer_; }
  const Counters& counters() const { return counters_; }
  std::int64_t tick() const { return tick_; }
  double sim_time_s() const { return static_cast<double>(tick_) * config_.dt_s; }
  int n_rats() const { return static_cast<int>(config_.rats.size()); }

  bool rat_idle(int rat) const;
  double rat_busy_until(int rat) const { return rat_busy_until_.at(rat); }
  const std::optional<Transmission>& transmission(int rat) const { return active_.at(rat); }

  double distance_to_bs(int vehicle) const;
  /// Nominal (unfaded) rate a vehicle would get from a RAT at its current position.
  double link_rate(int rat, int vehicle) const;
  /// True when begin_transmission(rat, slot) would succeed.
  bool can_schedule(int rat, int slot) const;
  /// Largest nominal rate any RAT offers at the clamped minimum distance.
  double max_link_rate() const;

  /// Starts one frame of the job in `slot` over `rat`; returns the frame ETA in seconds.
  double begin_transmission(int rat, int slot);

  /// Moves time forward by one tick and returns what happened during it.
  std::vector<EventRecord> advance(double dt_s);

  /// Replaces every buffered job with a fresh random request. Replaced jobs
  /// are counted as withdrawn, never as lost.
  void redraw_demands();

  // Scenario construction for tests and scripted traces.
  void place_vehicle(int slot, const Vehicle& v);
  /// Overwrites a buffer slot with a fresh job of the given type and owner.
  /// Request and byte counters treat it as a new request.
  void set_job(int slot, int job_type, int owner);
  void set_job_ticks_remaining(int slot, std::int64_t ticks);

  bool operator==(const Environment&) const = default;

 private:
  Environment() = default;

  Vehicle on_road(Arm arm, double radius, bool inbound) const;
  Vehicle spawn_on_road(Arm arm, double radius, bool inbound);
  Vehicle spawn_at_edge();
  Job make_job(int job_type, int owner);
  void fill_slot(int slot);
  void resolve_lost(int slot, std::vector<EventRecord>& events);
  void cancel_transmissions_for(int slot);
  void move_vehicles(std::vector<EventRecord>& events, std::vector<int>& respawned);
  void deliver_frames(std::vector<EventRecord>& events);
  std::int64_t job_bytes(const Job& j) const { return j.frames_total * config_.bytes_per_frame; }

  EnvConfig config_;
  Rng rng_;
  std::vector<Vehicle> vehicles_;
  std::vector<Job> buffer_;
  std::vector<double> rat_busy_until_;
  std::vector<std::optional<Transmission>> active_;
  std::int64_t tick_ = 0;
  std::uint64_t next_job_id_ = 1;
  std::uint64_t next_vehicle_id_ = 1;
  Counters counters_;
};

}  // namespace steer
