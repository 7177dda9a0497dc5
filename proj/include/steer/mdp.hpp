#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "steer/sim.hpp"

namespace steer {

using StateVector = std::vector<double>;
using ActionMask = std::vector<std::uint8_t>;

/// Schedule one frame of a buffered job over a RAT, or do nothing.
struct Action {
  bool noop = true;
  int slot = 0;
  int rat = 0;

  static Action no_op() { return {}; }
  static Action schedule(int slot, int rat) { return {false, slot, rat}; }
  bool operator==(const Action&) const = default;
};

// Flat action indices: rat * buffer_size + slot for schedules, then NoOp last.
int action_count(const EnvConfig& c);
int noop_index(const EnvConfig& c);
int action_index(const EnvConfig& c, const Action& a);
Action action_from_index(const EnvConfig& c, int index);

/// 4 per vehicle + 3 per buffer slot + 1 per RAT + 1 per (vehicle, RAT) link.
std::size_t state_dim(const EnvConfig& c);

/// Layout: vehicles (x, y, vx, vy), buffer (frames left, owner, time left),
/// RAT availability flags, then link rates ordered vehicle-major. Every entry
/// is scaled into [0, 1].
StateVector encode_state(const Environment& env);

/// A schedule is legal when the RAT is idle, the job still has unscheduled
/// frames and the owner is inside the RAT's coverage. NoOp is always legal.
ActionMask legal_actions(const Environment& env);

/// Applies a schedule via begin_transmission; NoOp does nothing.
void apply_action(Environment& env, const Action& a);

enum RewardComponent : int { kR1 = 0, kR2, kR3, kR4, kR5, kR6 };

struct RewardComponents {
  double r1_unused_rat = 0.0;
  double r2_lost = 0.0;
  double r3_success = 0.0;
  double r4_latency = 0.0;
  double r5_throughput = 0.0;
  double r6_fairness = 0.0;

  double get(int component) const;
  RewardComponents& operator+=(const RewardComponents& o);
};

RewardComponents reward_components(std::span<const EventRecord> events, const Environment& env_after);

struct TaskSpec {
  int id = 1;
  /// Bit k set when component R(k+1) is part of the task reward.
  std::uint8_t components = 0;

  static TaskSpec task(int id);
  bool includes(int component) const { return (components >> component) & 1U; }
  bool operator==(const TaskSpec&) const = default;
};

double task_reward(const RewardComponents& c, const TaskSpec& task);

struct CachingRate {
  double packets = 0.0;
  double bytes = 0.0;
};

/// Completed over resolved (completed or lost) requests; empty while nothing resolved.
std::optional<CachingRate> caching_rate(const Counters& c);
std::optional<CachingRate> caching_rate(const Environment& env);

/// (T_c + T_l) / t in bytes per second.
double throughput(double completed_bytes, double lost_job_delivered_bytes, double window_s);
double throughput(const Environment& env, double window_s);

/// Proportional fairness: sum of natural logs of per-vehicle flows, floored.
double fairness(std::span<const double> per_vehicle_flow, double floor = 1.0);

/// Chooses an action given the current environment and its legality mask.
using Chooser = std::function<Action(const Environment&, const ActionMask&)>;

struct StepOutcome {
  std::vector<EventRecord> events;
  RewardComponents rewards;
  int queries = 0;
};

/// One decision tick: the chooser is queried once per RAT that is idle at the
/// start of the tick (re-masking after each choice), then the environment
/// advances by dt.
StepOutcome play_step(Environment& env, const Chooser& choose);

}  // namespace steer
