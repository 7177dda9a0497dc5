#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "steer/dqn.hpp"

namespace steer {

struct FmlConfig {
  int rounds = 10;      // N aggregation cycles
  int agents = 5;       // K environments, one agent each
  int episodes = 100;   // E episodes per agent per round
  int meta_tasks = 4;   // I task episodes per Reptile update
  double beta = 0.25;   // meta step size
  std::vector<int> training_tasks{1, 2, 3, 4};
  int eval_task = 5;
  /// Run the K agents of a round on separate threads.
  bool parallel = true;
  /// Give every agent the same environment and RNG seeds.
  bool identical_agents = false;

  bool operator==(const FmlConfig&) const = default;
};

void validate(const FmlConfig& c);

/// anchor - beta * mean_i(anchor - adapted_i)
ModelParams reptile_update(const ModelParams& anchor, std::span<const ModelParams> adapted, double beta);

/// Elementwise arithmetic mean.
ModelParams fedavg(std::span<const ModelParams> models);

struct TrainingSetup {
  EnvConfig env;
  NetSpec net;
  DqnHyper hyper;
  FmlConfig fml;
};

struct EpisodeRecord {
  int round = 0;
  int agent = 0;
  int episode = 0;
  int task = 1;
  EpisodeStats stats;
};

struct RoundReport {
  int round = 0;
  /// Episode records of every agent, agent-major.
  std::vector<EpisodeRecord> episodes;
  /// Checkpoint written for the aggregated model, empty when none.
  std::string checkpoint;
};

struct TrainResult {
  ModelParams global;
  std::vector<RoundReport> rounds;
  int episodes_run = 0;
};

struct TrainOptions {
  /// When set, the model after every round is written as round_NNN.ckpt.
  std::optional<std::filesystem::path> checkpoint_dir;
  std::function<void(const RoundReport&)> on_round;
};

enum class TrainMethod { Single, Reptile, Fml };

const char* to_string(TrainMethod m);

/// Seeds shared by every method so that comparisons start from the same
/// initial network and the same first environment.
std::uint64_t init_seed(std::uint64_t seed);
std::uint64_t train_env_seed(std::uint64_t seed, int agent);
std::uint64_t agent_seed(std::uint64_t seed, int agent);

/// Federated meta-learning: per round, every agent starts from the global
/// model, trains E episodes with Reptile updates every I task episodes, and
/// the server averages the K uploads.
TrainResult run_fml(const TrainingSetup& setup, std::uint64_t seed, const TrainOptions& opts = {});

/// One agent in one environment for N*E episodes. Single trains on the first
/// training task (Task 1) only; Reptile cycles the training tasks with meta
/// updates. Neither federates.
TrainResult run_baseline(TrainMethod method, const TrainingSetup& setup, std::uint64_t seed,
                         const TrainOptions& opts = {});

TrainResult train(TrainMethod method, const TrainingSetup& setup, std::uint64_t seed, const TrainOptions& opts = {});

}  // namespace steer
