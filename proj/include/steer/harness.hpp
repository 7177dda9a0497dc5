#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "steer/config.hpp"
#include "steer/heuristic.hpp"

namespace steer {

/// Caching rates of one validation episode. Rates are 0 when nothing resolved.
struct RunResult {
  std::uint64_t env_seed = 0;
  double packets = 0.0;
  double bytes = 0.0;
};

struct EvalProtocol {
  EnvConfig env;
  int eval_task = 5;
  int steps = 2000;
  /// Validation environments; disjoint from every training environment seed.
  std::vector<std::uint64_t> unseen_seeds;
  /// Environment used for task-5 fine-tuning; also unseen during training.
  std::uint64_t adaptation_seed = 0;
  std::uint64_t adaptation_agent_seed = 0;
  int adaptation_budget = 20;
  double adapt_epsilon = 0.05;
  /// The heuristic on the same unseen environments.
  std::vector<RunResult> heuristic_runs;
  /// Mean heuristic packet caching rate: the 100% anchor and the HEP bar.
  double hep_reference = 0.0;
};

/// Builds the protocol for one comparison seed and scores the heuristic on it.
/// Throws ConfigError if an unseen seed collides with a training seed.
EvalProtocol make_protocol(const ExperimentConfig& c, std::uint64_t seed);

/// One greedy-or-fixed policy episode per unseen environment.
std::vector<RunResult> evaluate_policy(const Chooser& choose, const EvalProtocol& p);

struct ZeroShot {
  std::vector<RunResult> runs;
  /// 100 * packets / hep_reference per run.
  std::vector<double> performance;
  double mean = 0.0;
  double std = 0.0;
  double mean_packets = 0.0;
  double mean_bytes = 0.0;
};

ZeroShot score_runs(std::vector<RunResult> runs, double hep_reference);

/// Greedy policy (epsilon 0, no learning) on every unseen environment.
ZeroShot evaluate_zero_shot(const ModelParams& params, const EvalProtocol& p);

struct AdaptationResult {
  /// Entry e is the validation after e fine-tuning episodes; entry 0 is zero-shot.
  std::vector<ZeroShot> curve;
  /// First entry whose mean packet rate reaches hep_reference.
  std::optional<int> hep_episode;
  ModelParams final_params;
};

/// Fine-tunes a copy of params on the evaluation task in the adaptation
/// environment, validating after every episode. The full budget is always run.
AdaptationResult adapt(const ModelParams& params, const EvalProtocol& p, const DqnHyper& hyper);

std::optional<int> episodes_to_hep(const ModelParams& params, const EvalProtocol& p, const DqnHyper& hyper);

struct MethodRow {
  std::string method;
  double zero_shot_mean = 0.0;
  double zero_shot_std = 0.0;
  std::optional<int> hep_episode;
  double final_packets = 0.0;
  double final_bytes = 0.0;
  /// Normalized zero-shot performance of every validation run.
  std::vector<double> zero_shot_runs;
};

struct SeedReport {
  std::uint64_t seed = 0;
  double hep_reference = 0.0;
  /// heuristic, single, reptile, fml.
  std::vector<MethodRow> rows;
};

struct MethodSummary {
  std::string method;
  /// Over all seeds and validation runs.
  double zero_shot_mean = 0.0;
  double zero_shot_std = 0.0;
  /// Mean over seeds, counting a missed HEP as budget + 1.
  double hep_mean = 0.0;
  int hep_reached = 0;
  double final_packets = 0.0;
  double final_bytes = 0.0;
};

struct ComparisonReport {
  std::vector<SeedReport> seeds;
  std::vector<MethodSummary> summary;
  int adaptation_budget = 0;

  const MethodSummary& method(const std::string& name) const;
};

struct CompareOptions {
  /// CSV, JSON and text outputs are written here when set.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const std::string&)> log;
};

inline const std::vector<std::string> kMethods{"heuristic", "single", "reptile", "fml"};

/// Trains Single, Reptile and FML for every seed, evaluates them with the
/// heuristic, and summarizes.
ComparisonReport run_comparison(const ExperimentConfig& c, const CompareOptions& opts = {});

ComparisonReport summarize(std::vector<SeedReport> seeds, int adaptation_budget);

std::string format_summary(const ComparisonReport& r);
std::string summary_json(const ComparisonReport& r);

/// Fixed-precision decimal used in every emitted number.
std::string fmt(double v);

/// Header plus one line per record, as written to episodes.csv.
std::string episodes_csv_header();
std::string episode_csv_line(const std::string& method, std::uint64_t seed, const EpisodeRecord& r);

}  // namespace steer
