// steer: train, evaluate and compare traffic-steering policies.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "steer/errors.hpp"
#include "steer/harness.hpp"

using namespace steer;

namespace {

ExperimentConfig resolve_config(const std::string& path, const std::string& preset_name) {
  ExperimentConfig c = path.empty() ? preset(preset_name) : load_config(path);
  validate(c);
  return c;
}

std::vector<std::uint64_t> parse_seeds(const std::string& list) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(list);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    std::size_t used = 0;
    std::uint64_t v = 0;
    try {
      v = std::stoull(tok, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != tok.size()) throw ConfigError("bad seed '" + tok + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty seed list");
  return out;
}

void log_line(const std::string& s) { std::cerr << s << '\n'; }

int cmd_train(const std::string& method, const ExperimentConfig& c, std::uint64_t seed, const std::string& out) {
  const std::filesystem::path dir(out);
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "config.json") << dump_config(c);
  std::ofstream episodes(dir / "episodes.csv");
  episodes << episodes_csv_header();

  if (method == "heuristic") {
    // Same budget as one learning agent, on the first training environment.
    Environment env = Environment::build(c.env, train_env_seed(seed, 0));
    const Chooser h = [](const Environment& e, const ActionMask& m) { return heuristic_action(e, m); };
    int idx = 0;
    for (int n = 0; n < c.fml.rounds; ++n)
      for (int e = 0; e < c.fml.episodes; ++e, ++idx) {
        EpisodeRecord r{n, 0, idx, 1, run_policy_episode(env, h, TaskSpec::task(1), c.env.episode_len_steps)};
        episodes << episode_csv_line(method, seed, r);
      }
    std::cout << "heuristic: " << idx << " episodes -> " << (dir / "episodes.csv").string() << '\n';
    return 0;
  }

  TrainMethod m;
  if (method == "single") m = TrainMethod::Single;
  else if (method == "reptile") m = TrainMethod::Reptile;
  else if (method == "fml") m = TrainMethod::Fml;
  else throw ConfigError("unknown method '" + method + "'");

  TrainOptions opts;
  opts.checkpoint_dir = dir / "checkpoints";
  opts.on_round = [&](const RoundReport& r) {
    double ret = 0.0;
    for (const auto& e : r.episodes) {
      episodes << episode_csv_line(method, seed, e);
      ret += e.stats.episode_return;
    }
    episodes.flush();
    log_line("round " + std::to_string(r.round) + ": mean return " +
             fmt(ret / static_cast<double>(std::max<std::size_t>(r.episodes.size(), 1))));
  };
  const TrainResult res = train(m, c.training(), seed, opts);
  save_checkpoint(dir / "final.ckpt", res.global, seed);
  std::cout << method << ": " << res.episodes_run << " episodes, checkpoint " << (dir / "final.ckpt").string()
            << '\n';
  return 0;
}

int cmd_eval(const std::string& checkpoint, const ExperimentConfig& c, std::uint64_t seed, bool with_adaptation) {
  const EvalProtocol p = make_protocol(c, seed);
  std::printf("heuristic packets %s (reference)\n", fmt(p.hep_reference).c_str());
  if (checkpoint.empty()) return 0;
  const Checkpoint ck = load_checkpoint(checkpoint);
  if (ck.params.spec.input_dim != static_cast<int>(state_dim(c.env)) ||
      ck.params.spec.output_dim != action_count(c.env))
    throw ConfigError("checkpoint does not match the environment in the protocol");
  if (!with_adaptation) {
    const ZeroShot z = evaluate_zero_shot(ck.params, p);
    std::printf("zero-shot %s%% (std %s), packets %s, bytes %s\n", fmt(z.mean).c_str(), fmt(z.std).c_str(),
                fmt(z.mean_packets).c_str(), fmt(z.mean_bytes).c_str());
    return 0;
  }
  const AdaptationResult ad = adapt(ck.params, p, c.dqn);
  for (std::size_t e = 0; e < ad.curve.size(); ++e)
    std::printf("episode %zu: %s%% packets %s bytes %s\n", e, fmt(ad.curve[e].mean).c_str(),
                fmt(ad.curve[e].mean_packets).c_str(), fmt(ad.curve[e].mean_bytes).c_str());
  if (ad.hep_episode) std::printf("HEP at episode %d\n", *ad.hep_episode);
  else std::printf("HEP not reached within %d episodes\n", p.adaptation_budget);
  return 0;
}

void oracle_line(const std::string& name, double v) { std::printf("%-40s %.17g\n", name.c_str(), v); }

int cmd_oracle() {
  const RatConfig lte = default_lte(), nr = default_nr();
  for (double d : {1.0, 10.0, 50.0, 100.0, 150.0, 190.0, 200.0, 500.0, 922.0, 923.0}) {
    char key[64];
    std::snprintf(key, sizeof key, "rate_lte_bps(d=%g)", d);
    oracle_line(key, data_rate(lte, d));
    std::snprintf(key, sizeof key, "rate_nr_bps(d=%g)", d);
    oracle_line(key, data_rate(nr, d));
  }
  oracle_line("path_loss(C=1,alpha=2,d=10)", path_loss({.pathloss_c = 1.0, .pathloss_alpha = 2.0}, 10.0));
  oracle_line("frame_time_s(50KiB@400Mb/s)", 50.0 * 1024 * 8 / 4e8);

  Counters c;
  c.jobs_completed = 8;
  c.jobs_lost = 2;
  c.bytes_completed = 8;
  c.bytes_lost = 2;
  oracle_line("caching_packets(8 of 10)", caching_rate(c)->packets);
  oracle_line("throughput(1MB,0,1s)", throughput(1e6, 0.0, 1.0));
  const std::vector<double> e5(5, std::exp(1.0));
  oracle_line("fairness(e,e,e,e,e)", fairness(e5, 1.0));

  RewardComponents r;
  r.r1_unused_rat = -1, r.r2_lost = -100, r.r3_success = 10, r.r4_latency = 5, r.r5_throughput = 3, r.r6_fairness = 2;
  for (int t = 1; t <= 5; ++t) oracle_line("task_reward(T" + std::to_string(t) + ")", task_reward(r, TaskSpec::task(t)));

  NetSpec s{2, {3}, 1};
  oracle_line("param_count([2]->[3]->[1])", static_cast<double>(s.param_count()));
  const ModelParams a{NetSpec{1, {}, 1}, {2.0, 0.0}}, b{NetSpec{1, {}, 1}, {4.0, 0.0}};
  const std::vector<ModelParams> adapted{b};
  oracle_line("reptile(2;4;beta=0.5)", reptile_update(a, adapted, 0.5).values[0]);
  const std::vector<ModelParams> two{ModelParams{NetSpec{1, {}, 1}, {1.0, 2.0}}, ModelParams{NetSpec{1, {}, 1}, {3.0, 4.0}}};
  const auto avg = fedavg(two);
  oracle_line("fedavg([1,2],[3,4])[0]", avg.values[0]);
  oracle_line("fedavg([1,2],[3,4])[1]", avg.values[1]);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-RAT traffic steering with federated meta-learned DQN agents"};
  app.require_subcommand(1);

  std::string config_path, preset_name = "desk", out_dir = "out", method = "fml", checkpoint, seeds_arg;
  std::uint64_t seed = 1;
  bool with_adaptation = false;

  auto* train_cmd = app.add_subcommand("train", "train one method and write checkpoints");
  train_cmd->add_option("--method", method, "heuristic|single|reptile|fml")
      ->check(CLI::IsMember({"heuristic", "single", "reptile", "fml"}));
  train_cmd->add_option("--config", config_path, "experiment JSON");
  train_cmd->add_option("--preset", preset_name, "desk|paper when no --config is given");
  train_cmd->add_option("--seed", seed);
  train_cmd->add_option("--out", out_dir);

  auto* eval_cmd = app.add_subcommand("eval", "zero-shot (and optionally adaptation) evaluation on unseen envs");
  eval_cmd->add_option("--checkpoint", checkpoint, "model to evaluate; heuristic reference only when omitted");
  eval_cmd->add_option("--protocol", config_path, "experiment JSON defining env and evaluation settings");
  eval_cmd->add_option("--preset", preset_name);
  eval_cmd->add_option("--seed", seed, "selects the unseen environments");
  eval_cmd->add_flag("--adapt", with_adaptation, "fine-tune on the evaluation task and report episodes to HEP");

  auto* compare_cmd = app.add_subcommand("compare", "heuristic vs single vs reptile vs fml");
  compare_cmd->add_option("--config", config_path, "experiment JSON");
  compare_cmd->add_option("--preset", preset_name);
  compare_cmd->add_option("--seeds", seeds_arg, "comma-separated, overrides the config");
  compare_cmd->add_option("--out", out_dir);

  app.add_subcommand("oracle", "print closed-form reference values");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return cmd_train(method, resolve_config(config_path, preset_name), seed, out_dir);
    if (*eval_cmd) return cmd_eval(checkpoint, resolve_config(config_path, preset_name), seed, with_adaptation);
    if (*compare_cmd) {
      ExperimentConfig c = resolve_config(config_path, preset_name);
      if (!seeds_arg.empty()) c.seeds = parse_seeds(seeds_arg);
      CompareOptions opts;
      opts.out_dir = out_dir;
      opts.log = log_line;
      const ComparisonReport r = run_comparison(c, opts);
      std::cout << format_summary(r);
      return 0;
    }
    return cmd_oracle();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
