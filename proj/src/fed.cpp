#include "steer/fed.hpp"

#include <cstdio>
#include <exception>
#include <thread>

#include "steer/errors.hpp"

namespace steer {

void validate(const FmlConfig& c) {
  if (c.rounds < 1 || c.agents < 1 || c.episodes < 1 || c.meta_tasks < 1)
    throw ConfigError("rounds, agents, episodes and meta_tasks must be >= 1");
  if (!(c.beta >= 0.0 && c.beta <= 1.0)) throw ConfigError("beta must be in [0, 1]");
  if (c.training_tasks.empty()) throw ConfigError("training_tasks must not be empty");
  for (int t : c.training_tasks) TaskSpec::task(t);
  TaskSpec::task(c.eval_task);
}

ModelParams reptile_update(const ModelParams& anchor, std::span<const ModelParams> adapted, double beta) {
  if (adapted.empty()) throw ContractViolation("reptile_update needs at least one adapted model");
  for (const auto& m : adapted)
    if (m.values.size() != anchor.values.size()) throw ContractViolation("parameter length mismatch");
  ModelParams out = anchor;
  const double scale = beta / static_cast<double>(adapted.size());
  for (std::size_t j = 0; j < out.values.size(); ++j) {
    double diff = 0.0;
    for (const auto& m : adapted) diff += anchor.values[j] - m.values[j];
    out.values[j] = anchor.values[j] - scale * diff;
  }
  return out;
}

ModelParams fedavg(std::span<const ModelParams> models) {
  if (models.empty()) throw ContractViolation("fedavg needs at least one model");
  ModelParams out = models.front();
  for (const auto& m : models)
    if (m.values.size() != out.values.size()) throw ContractViolation("parameter length mismatch");
  const double inv = 1.0 / static_cast<double>(models.size());
  for (std::size_t j = 0; j < out.values.size(); ++j) {
    double sum = 0.0;
    for (const auto& m : models) sum += m.values[j];
    out.values[j] = sum * inv;
  }
  if (models.size() == 1) out.values = models.front().values;
  return out;
}

const char* to_string(TrainMethod m) {
  switch (m) {
    case TrainMethod::Single: return "single";
    case TrainMethod::Reptile: return "reptile";
    case TrainMethod::Fml: return "fml";
  }
  return "?";
}

std::uint64_t init_seed(std::uint64_t seed) { return derive_seed(seed, {1}); }
std::uint64_t train_env_seed(std::uint64_t seed, int agent) { return derive_seed(seed, {2, static_cast<std::uint64_t>(agent)}); }
std::uint64_t agent_seed(std::uint64_t seed, int agent) { return derive_seed(seed, {3, static_cast<std::uint64_t>(agent)}); }

namespace {

struct Worker {
  Agent agent;
  Environment env;
};

Worker make_worker(const TrainingSetup& s, const ModelParams& init, std::uint64_t seed, int k) {
  return {Agent(init, s.hyper, s.env, agent_seed(seed, k)), Environment::build(s.env, train_env_seed(seed, k))};
}

/// Trains E episodes. With meta updates the task episodes of a block each
/// start from the block's anchor and the anchor then moves by the Reptile rule;
/// a trailing partial block is applied over the tasks it completed.
void train_episodes(Worker& w, const TrainingSetup& s, bool meta, int round, int agent_index, int episode_base,
                    std::vector<EpisodeRecord>& out) {
  const auto& tasks = s.fml.training_tasks;
  const int block = s.fml.meta_tasks;
  ModelParams anchor;
  std::vector<ModelParams> adapted;
  for (int e = 0; e < s.fml.episodes; ++e) {
    const int pos = e % block;
    int task_id = tasks.front();
    if (meta) {
      if (pos == 0) {
        anchor = w.agent.params;
        adapted.clear();
      } else {
        w.agent.params = anchor;
      }
      task_id = tasks[static_cast<std::size_t>(pos) % tasks.size()];
    }
    EpisodeRecord rec;
    rec.round = round;
    rec.agent = agent_index;
    rec.episode = episode_base + e;
    rec.task = task_id;
    rec.stats = run_episode(w.agent, w.env, TaskSpec::task(task_id));
    out.push_back(rec);
    if (meta) {
      adapted.push_back(w.agent.params);
      if (pos == block - 1 || e == s.fml.episodes - 1) w.agent.params = reptile_update(anchor, adapted, s.fml.beta);
    }
  }
}

std::string write_checkpoint(const TrainOptions& opts, const ModelParams& p, std::uint64_t seed, int round) {
  if (!opts.checkpoint_dir) return {};
  std::filesystem::create_directories(*opts.checkpoint_dir);
  char name[32];
  std::snprintf(name, sizeof name, "round_%03d.ckpt", round);
  const auto path = *opts.checkpoint_dir / name;
  save_checkpoint(path, p, seed);
  return path.string();
}

void validate_setup(const TrainingSetup& s) {
  validate(s.env);
  validate(s.net);
  validate(s.hyper);
  validate(s.fml);
}

}  // namespace

TrainResult run_fml(const TrainingSetup& s, std::uint64_t seed, const TrainOptions& opts) {
  validate_setup(s);
  TrainResult result;
  result.global = init_params(s.net, init_seed(seed));

  std::vector<Worker> workers;
  for (int k = 0; k < s.fml.agents; ++k)
    workers.push_back(make_worker(s, result.global, seed, s.fml.identical_agents ? 0 : k));

  for (int n = 0; n < s.fml.rounds; ++n) {
    std::vector<std::vector<EpisodeRecord>> records(workers.size());
    std::vector<std::exception_ptr> errors(workers.size());
    auto run_agent = [&](std::size_t k) {
      try {
        Worker& w = workers[k];
        w.agent.params = result.global;
        w.agent.replay.clear();
        if (n > 0) w.env.redraw_demands();
        train_episodes(w, s, true, n, static_cast<int>(k), 0, records[k]);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    };
    if (s.fml.parallel && workers.size() > 1) {
      std::vector<std::jthread> threads;
      for (std::size_t k = 0; k < workers.size(); ++k) threads.emplace_back(run_agent, k);
    } else {
      for (std::size_t k = 0; k < workers.size(); ++k) run_agent(k);
    }
    for (std::size_t k = 0; k < errors.size(); ++k) {
      if (!errors[k]) continue;
      try {
        std::rethrow_exception(errors[k]);
      } catch (const std::exception& ex) {
        throw TrainingError("round " + std::to_string(n) + " agent " + std::to_string(k) + ": " + ex.what());
      }
    }

    std::vector<ModelParams> uploads;
    for (const auto& w : workers) uploads.push_back(w.agent.params);
    result.global = fedavg(uploads);

    RoundReport report;
    report.round = n;
    for (auto& r : records) {
      result.episodes_run += static_cast<int>(r.size());
      report.episodes.insert(report.episodes.end(), r.begin(), r.end());
    }
    report.checkpoint = write_checkpoint(opts, result.global, seed, n);
    if (opts.on_round) opts.on_round(report);
    result.rounds.push_back(std::move(report));
  }
  return result;
}

TrainResult run_baseline(TrainMethod method, const TrainingSetup& s, std::uint64_t seed, const TrainOptions& opts) {
  if (method == TrainMethod::Fml) return run_fml(s, seed, opts);
  validate_setup(s);
  TrainResult result;
  Worker w = make_worker(s, init_params(s.net, init_seed(seed)), seed, 0);
  TrainingSetup local = s;
  if (method == TrainMethod::Single) local.fml.training_tasks = {1};
  const bool meta = method == TrainMethod::Reptile;
  // Same N*E budget as one federated agent, reported in chunks of E episodes.
  for (int n = 0; n < s.fml.rounds; ++n) {
    RoundReport report;
    report.round = n;
    train_episodes(w, local, meta, n, 0, n * s.fml.episodes, report.episodes);
    result.episodes_run += static_cast<int>(report.episodes.size());
    report.checkpoint = write_checkpoint(opts, w.agent.params, seed, n);
    if (opts.on_round) opts.on_round(report);
    result.rounds.push_back(std::move(report));
  }
  result.global = w.agent.params;
  return result;
}

TrainResult train(TrainMethod method, const TrainingSetup& setup, std::uint64_t seed, const TrainOptions& opts) {
  return method == TrainMethod::Fml ? run_fml(setup, seed, opts) : run_baseline(method, setup, seed, opts);
}

}  // namespace steer
