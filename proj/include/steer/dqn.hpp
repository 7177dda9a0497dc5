#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "steer/mdp.hpp"
#include "steer/nn.hpp"
#include "steer/rng.hpp"

namespace steer {

struct DqnHyper {
  double gamma = 0.95;
  double lr = 1e-3;
  double eps_start = 1.0;
  double eps_end = 0.05;
  std::int64_t eps_decay_steps = 50000;
  int minibatch = 32;
  int replay_capacity = 50000;
  /// Gradient steps are taken every this many environment ticks.
  int train_every = 1;
  /// Stored rewards are multiplied by this; reported returns are not.
  double reward_scale = 0.01;

  bool operator==(const DqnHyper&) const = default;
};

void validate(const DqnHyper& h);

/// Linear decay from eps_start to eps_end over eps_decay_steps ticks.
double epsilon_at(const DqnHyper& h, std::int64_t step);

struct Transition {
  StateVector state;
  int action = 0;
  double reward = 0.0;
  StateVector next_state;
  ActionMask next_legal;
  bool terminal = false;
};

/// Fixed-capacity ring buffer with contiguous storage.
class ReplayBuffer {
 public:
  ReplayBuffer() = default;
  ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t n_actions);

  void push(const Transition& t);
  void clear();
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t total_pushed() const { return pushed_; }

  Transition at(std::size_t i) const;
  /// n distinct indices drawn uniformly from [0, size()).
  std::vector<std::size_t> sample_indices(std::size_t n, Rng& rng) const;

  std::span<const double> state(std::size_t i) const { return {&states_[i * dim_], dim_}; }
  std::span<const double> next_state(std::size_t i) const { return {&next_states_[i * dim_], dim_}; }
  std::span<const std::uint8_t> next_legal(std::size_t i) const { return {&masks_[i * n_actions_], n_actions_}; }
  int action(std::size_t i) const { return actions_[i]; }
  double reward(std::size_t i) const { return rewards_[i]; }
  bool terminal(std::size_t i) const { return terminal_[i] != 0; }

 private:
  std::size_t capacity_ = 0;
  std::size_t dim_ = 0;
  std::size_t n_actions_ = 0;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  std::uint64_t pushed_ = 0;
  std::vector<double> states_;
  std::vector<double> next_states_;
  std::vector<std::uint8_t> masks_;
  std::vector<int> actions_;
  std::vector<double> rewards_;
  std::vector<std::uint8_t> terminal_;
};

/// Epsilon-greedy over legal actions. The uniform draw is always consumed so
/// the RNG stream does not depend on epsilon. Greedy ties go to the lowest index.
int select_action(const ModelParams& params, std::span<const double> state, double epsilon, const ActionMask& mask,
                  Rng& rng);

/// Index of the largest legal entry of q.
int masked_argmax(std::span<const double> q, std::span<const std::uint8_t> mask);

/// r if terminal, else r + gamma * max over legal a' of Q(s', a').
double bellman_target(const ModelParams& params, const Transition& t, double gamma);

struct Agent {
  Agent(ModelParams params, DqnHyper hyper, const EnvConfig& env_config, std::uint64_t seed);

  ModelParams params;
  DqnHyper hyper;
  ReplayBuffer replay;
  Rng rng;
  /// Environment ticks seen so far; drives the epsilon schedule.
  std::int64_t steps = 0;
};

struct EpisodeStats {
  double episode_return = 0.0;
  std::optional<CachingRate> caching;
  std::int64_t jobs_completed = 0;
  std::int64_t jobs_lost = 0;
  int steps = 0;
  int queries = 0;
  int transitions = 0;
  int td_updates = 0;
  double mean_loss = 0.0;
  double epsilon = 0.0;
};

struct EpisodeOptions {
  bool learn = true;
  /// Overrides the agent's schedule when set.
  std::optional<double> epsilon;
  /// Defaults to the environment's episode length.
  std::optional<int> steps;
};

/// Runs one episode: per tick, query the agent once per idle RAT, advance,
/// score with the task reward and train on a replay minibatch. A transition's
/// reward covers the tick its action was issued in plus any following ticks
/// without a decision; its successor state is the next decision point.
EpisodeStats run_episode(Agent& agent, Environment& env, const TaskSpec& task, const EpisodeOptions& opts = {});

/// Runs a fixed policy for `steps` ticks without learning.
EpisodeStats run_policy_episode(Environment& env, const Chooser& choose, const TaskSpec& task, int steps);

/// Greedy (epsilon = 0) chooser backed by a Q-network.
Chooser greedy_chooser(const ModelParams& params);

}  // namespace steer
