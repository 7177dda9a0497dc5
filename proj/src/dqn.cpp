#include "steer/dqn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "steer/errors.hpp"

namespace steer {

void validate(const DqnHyper& h) {
  if (!(h.gamma >= 0.0 && h.gamma < 1.0)) throw ConfigError("gamma must be in [0, 1)");
  if (!(h.lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (!(h.eps_start > 0.0 && h.eps_start <= 1.0)) throw ConfigError("eps_start must be in (0, 1]");
  if (!(h.eps_end > 0.0 && h.eps_end <= h.eps_start)) throw ConfigError("eps_end must be in (0, eps_start]");
  if (h.eps_decay_steps <= 0) throw ConfigError("eps_decay_steps must be > 0");
  if (h.minibatch <= 0) throw ConfigError("minibatch must be > 0");
  if (h.replay_capacity < h.minibatch) throw ConfigError("replay_capacity must be >= minibatch");
  if (h.train_every <= 0) throw ConfigError("train_every must be > 0");
  if (!(h.reward_scale > 0.0)) throw ConfigError("reward_scale must be > 0");
}

double epsilon_at(const DqnHyper& h, std::int64_t step) {
  const double frac = std::min(1.0, static_cast<double>(std::max<std::int64_t>(step, 0)) /
                                        static_cast<double>(h.eps_decay_steps));
  return h.eps_start + (h.eps_end - h.eps_start) * frac;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t state_dim, std::size_t n_actions)
    : capacity_(capacity),
      dim_(state_dim),
      n_actions_(n_actions),
      states_(capacity * state_dim),
      next_states_(capacity * state_dim),
      masks_(capacity * n_actions),
      actions_(capacity),
      rewards_(capacity),
      terminal_(capacity) {
  if (capacity == 0) throw ContractViolation("replay capacity must be > 0");
}

void ReplayBuffer::push(const Transition& t) {
  if (t.state.size() != dim_ || t.next_state.size() != dim_ || t.next_legal.size() != n_actions_)
    throw ContractViolation("transition shape does not match replay buffer");
  if (!std::isfinite(t.reward)) throw TrainingError("non-finite reward");
  const std::size_t i = head_;
  std::copy(t.state.begin(), t.state.end(), states_.begin() + i * dim_);
  std::copy(t.next_state.begin(), t.next_state.end(), next_states_.begin() + i * dim_);
  std::copy(t.next_legal.begin(), t.next_legal.end(), masks_.begin() + i * n_actions_);
  actions_[i] = t.action;
  rewards_[i] = t.reward;
  terminal_[i] = t.terminal ? 1 : 0;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  pushed_ += 1;
}

void ReplayBuffer::clear() {
  size_ = 0;
  head_ = 0;
}

Transition ReplayBuffer::at(std::size_t i) const {
  if (i >= size_) throw ContractViolation("replay index out of range");
  Transition t;
  t.state.assign(state(i).begin(), state(i).end());
  t.next_state.assign(next_state(i).begin(), next_state(i).end());
  t.next_legal.assign(next_legal(i).begin(), next_legal(i).end());
  t.action = actions_[i];
  t.reward = rewards_[i];
  t.terminal = terminal_[i] != 0;
  return t;
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t n, Rng& rng) const {
  if (n > size_) throw ContractViolation("minibatch larger than replay contents");
  std::vector<std::size_t> idx;
  idx.reserve(n);
  while (idx.size() < n) {
    const std::size_t k = uniform_index(rng, size_);
    if (std::find(idx.begin(), idx.end(), k) == idx.end()) idx.push_back(k);
  }
  return idx;
}

int masked_argmax(std::span<const double> q, std::span<const std::uint8_t> mask) {
  int best = -1;
  double best_q = -std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < q.size(); ++a) {
    if (!mask[a]) continue;
    if (best < 0 || q[a] > best_q) {
      best = static_cast<int>(a);
      best_q = q[a];
    }
  }
  if (best < 0) throw ContractViolation("no legal action");
  return best;
}

int select_action(const ModelParams& params, std::span<const double> state, double epsilon, const ActionMask& mask,
                  Rng& rng) {
  if (static_cast<int>(mask.size()) != params.spec.output_dim) throw ContractViolation("mask size mismatch");
  std::vector<int> legal;
  for (std::size_t a = 0; a < mask.size(); ++a)
    if (mask[a]) legal.push_back(static_cast<int>(a));
  if (legal.empty()) throw ContractViolation("no legal action");
  if (uniform01(rng) < epsilon) return legal[uniform_index(rng, legal.size())];
  const Eigen::VectorXd q = forward(params, state);
  return masked_argmax({q.data(), static_cast<std::size_t>(q.size())}, mask);
}

double bellman_target(const ModelParams& params, const Transition& t, double gamma) {
  if (t.terminal) return t.reward;
  const Eigen::VectorXd q = forward(params, t.next_state);
  const int best = masked_argmax({q.data(), static_cast<std::size_t>(q.size())}, t.next_legal);
  return t.reward + gamma * q(best);
}

Agent::Agent(ModelParams p, DqnHyper h, const EnvConfig& env_config, std::uint64_t seed)
    : params(std::move(p)),
      hyper(h),
      replay(static_cast<std::size_t>(h.replay_capacity), state_dim(env_config),
             static_cast<std::size_t>(action_count(env_config))),
      rng(seed) {
  validate(hyper);
  if (params.spec.input_dim != static_cast<int>(state_dim(env_config)) ||
      params.spec.output_dim != action_count(env_config))
    throw ConfigError("network dimensions do not match the environment");
}

namespace {

double train_minibatch(Agent& agent) {
  const auto& rb = agent.replay;
  const auto idx = rb.sample_indices(static_cast<std::size_t>(agent.hyper.minibatch), agent.rng);
  const auto n = static_cast<Eigen::Index>(idx.size());
  const auto dim = static_cast<Eigen::Index>(agent.params.spec.input_dim);
  Batch s(n, dim), s_next(n, dim);
  std::vector<int> actions(idx.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = idx[i];
    s.row(i) = Eigen::Map<const Eigen::RowVectorXd>(rb.state(k).data(), dim);
    s_next.row(i) = Eigen::Map<const Eigen::RowVectorXd>(rb.next_state(k).data(), dim);
    actions[i] = rb.action(k);
  }
  const Batch q_next = forward_batch(agent.params, s_next);
  std::vector<double> targets(idx.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = idx[i];
    double y = rb.reward(k);
    if (!rb.terminal(k)) {
      const auto row = q_next.row(i);
      const int best = masked_argmax({row.data(), static_cast<std::size_t>(row.size())}, rb.next_legal(k));
      y += agent.hyper.gamma * q_next(i, best);
    }
    targets[i] = y;
  }
  return td_step(agent.params, s, actions, targets, agent.hyper.lr);
}

struct Query {
  StateVector state;
  int action;
};

void finish_stats(EpisodeStats& st, const Counters& start, const Environment& env) {
  const Counters d = env.counters() - start;
  st.caching = caching_rate(d);
  st.jobs_completed = d.jobs_completed;
  st.jobs_lost = d.jobs_lost;
}

}  // namespace

EpisodeStats run_episode(Agent& agent, Environment& env, const TaskSpec& task, const EpisodeOptions& opts) {
  const int steps = opts.steps.value_or(env.config().episode_len_steps);
  const Counters start = env.counters();
  EpisodeStats st;

  std::vector<Query> pending;
  double pending_reward = 0.0;
  double loss_sum = 0.0;
  double eps = 0.0;

  auto close_pending = [&](const StateVector& next, const ActionMask& next_legal, bool terminal) {
    for (const auto& q : pending) {
      agent.replay.push({q.state, q.action, agent.hyper.reward_scale * pending_reward, next, next_legal, terminal});
      st.transitions += 1;
    }
    pending.clear();
    pending_reward = 0.0;
  };

  for (int t = 0; t < steps; ++t) {
    eps = opts.epsilon.value_or(epsilon_at(agent.hyper, agent.steps));
    std::vector<Query> issued;
    auto choose = [&](const Environment& e, const ActionMask& mask) {
      StateVector s = encode_state(e);
      if (issued.empty() && !pending.empty()) close_pending(s, mask, false);
      const int a = select_action(agent.params, s, eps, mask, agent.rng);
      issued.push_back({std::move(s), a});
      return action_from_index(e.config(), a);
    };
    const StepOutcome out = play_step(env, choose);
    const double r = task_reward(out.rewards, task);
    st.episode_return += r;
    st.queries += out.queries;
    if (!issued.empty()) {
      pending = std::move(issued);
      pending_reward = r;
    } else if (!pending.empty()) {
      pending_reward += r;
    }
    agent.steps += 1;

    if (opts.learn && agent.replay.size() >= static_cast<std::size_t>(agent.hyper.minibatch) &&
        t % agent.hyper.train_every == 0) {
      loss_sum += train_minibatch(agent);
      st.td_updates += 1;
    }
  }
  if (!pending.empty()) close_pending(encode_state(env), legal_actions(env), true);

  st.steps = steps;
  st.mean_loss = st.td_updates > 0 ? loss_sum / st.td_updates : 0.0;
  st.epsilon = eps;
  finish_stats(st, start, env);
  return st;
}

EpisodeStats run_policy_episode(Environment& env, const Chooser& choose, const TaskSpec& task, int steps) {
  const Counters start = env.counters();
  EpisodeStats st;
  for (int t = 0; t < steps; ++t) {
    const StepOutcome out = play_step(env, choose);
    st.episode_return += task_reward(out.rewards, task);
    st.queries += out.queries;
  }
  st.steps = steps;
  finish_stats(st, start, env);
  return st;
}

Chooser greedy_chooser(const ModelParams& params) {
  return [&params](const Environment& env, const ActionMask& mask) {
    const StateVector s = encode_state(env);
    const Eigen::VectorXd q = forward(params, s);
    return action_from_index(env.config(), masked_argmax({q.data(), static_cast<std::size_t>(q.size())}, mask));
  };
}

}  // namespace steer
