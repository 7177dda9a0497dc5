#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "steer/fed.hpp"

namespace steer {

struct EvalConfig {
  /// Unseen environments each policy is validated on.
  int validation_runs = 10;
  /// Task-5 fine-tuning episodes granted when measuring episodes to HEP.
  int adaptation_budget = 20;
  /// Validation episode length; the env episode length when unset.
  std::optional<int> steps;
  /// Exploration during fine-tuning; the DQN eps_end when unset.
  std::optional<double> adapt_epsilon;

  bool operator==(const EvalConfig&) const = default;
};

struct ExperimentConfig {
  EnvConfig env;
  NetSpec net;
  DqnHyper dqn;
  FmlConfig fml;
  EvalConfig eval;
  /// Comparison seeds; each one trains and evaluates every method afresh.
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};

  bool operator==(const ExperimentConfig&) const = default;

  TrainingSetup training() const { return {env, net, dqn, fml}; }
  int eval_steps() const { return eval.steps.value_or(env.episode_len_steps); }
  double adapt_epsilon() const { return eval.adapt_epsilon.value_or(dqn.eps_end); }
};

/// Throws ConfigError on the first invalid section.
void validate(const ExperimentConfig& c);

/// Full-scale profile: N=10, K=5, E=100, 2000-step episodes.
ExperimentConfig paper_profile();
/// Laptop profile: N=4, K=3, E=20, 1000-step episodes, five seeds.
ExperimentConfig desk_profile();
ExperimentConfig preset(const std::string& name);

/// JSON text. Missing keys keep their defaults; unknown keys are an error.
/// A top-level "preset" key selects the base the remaining keys override.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string dump_config(const ExperimentConfig& c);

}  // namespace steer
