#include <algorithm>
#include <filesystem>

#include "doctest.h"
#include "oracles.hpp"
#include "steer/errors.hpp"
#include "steer/fed.hpp"

using namespace steer;

namespace {

ModelParams vec(std::vector<double> v) {
  NetSpec s{1, {}, 1};
  return {s, std::move(v)};
}

ModelParams random_vec(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = uniform(rng, -scale, scale);
  return vec(std::move(v));
}

TrainingSetup tiny() {
  TrainingSetup s;
  s.env.episode_len_steps = 60;
  s.net = {static_cast<int>(state_dim(s.env)), {8}, action_count(s.env)};
  s.hyper.minibatch = 8;
  s.hyper.replay_capacity = 500;
  s.hyper.eps_decay_steps = 500;
  s.fml.rounds = 2;
  s.fml.agents = 2;
  s.fml.episodes = 4;
  s.fml.meta_tasks = 4;
  return s;
}

}  // namespace

TEST_CASE("reptile update examples") {
  const std::vector<ModelParams> one{vec({4.0})};
  CHECK(reptile_update(vec({2.0}), one, 0.5).values[0] == 3.0);

  Rng rng(1);
  const ModelParams theta = random_vec(rng, 50);
  const std::vector<ModelParams> same(4, theta);
  CHECK(reptile_update(theta, same, 0.7) == theta);

  std::vector<ModelParams> adapted;
  for (int i = 0; i < 4; ++i) adapted.push_back(random_vec(rng, 50));
  const ModelParams full = reptile_update(theta, adapted, 1.0);
  const ModelParams avg = fedavg(adapted);
  for (std::size_t j = 0; j < 50; ++j) CHECK(std::abs(full.values[j] - avg.values[j]) <= 1e-12);

  // theta + beta * mean(theta_i - theta)
  const ModelParams quarter = reptile_update(theta, adapted, 0.25);
  for (std::size_t j = 0; j < 50; ++j) {
    std::vector<double> diffs;
    for (const auto& a : adapted) diffs.push_back(a.values[j] - theta.values[j]);
    CHECK(std::abs(quarter.values[j] - (theta.values[j] + 0.25 * oracle::ksum(diffs) / 4.0)) <= 1e-12);
  }
}

TEST_CASE("reptile and fedavg reject bad input") {
  const std::vector<ModelParams> mismatch{vec({1.0, 2.0})};
  CHECK_THROWS_AS(reptile_update(vec({1.0}), mismatch, 0.5), ContractViolation);
  CHECK_THROWS_AS(reptile_update(vec({1.0}), std::vector<ModelParams>{}, 0.5), ContractViolation);
  const std::vector<ModelParams> ragged{vec({1.0}), vec({1.0, 2.0})};
  CHECK_THROWS_AS(fedavg(ragged), ContractViolation);
  CHECK_THROWS_AS(fedavg(std::vector<ModelParams>{}), ContractViolation);
}

TEST_CASE("fedavg examples") {
  const std::vector<ModelParams> two{vec({1.0, 2.0}), vec({3.0, 4.0})};
  CHECK(fedavg(two).values == std::vector<double>{2.0, 3.0});
  Rng rng(2);
  const ModelParams m = random_vec(rng, 30);
  CHECK(fedavg(std::vector<ModelParams>{m}) == m);
  const std::vector<ModelParams> five(5, m);
  const auto avg = fedavg(five);
  for (std::size_t j = 0; j < 30; ++j) CHECK(std::abs(avg.values[j] - m.values[j]) <= 1e-15 * std::abs(m.values[j]));
}

TEST_CASE("fedavg matches compensated summation, permutation and convex hull") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const int k = 2 + static_cast<int>(uniform_index(rng, 8));
    std::vector<ModelParams> ms;
    for (int i = 0; i < k; ++i) ms.push_back(random_vec(rng, 200, 10.0));
    const auto avg = fedavg(ms);
    auto shuffled = ms;
    std::reverse(shuffled.begin(), shuffled.end());
    std::swap(shuffled.front(), shuffled[shuffled.size() / 2]);
    const auto avg2 = fedavg(shuffled);
    for (std::size_t j = 0; j < 200; ++j) {
      std::vector<double> col;
      for (const auto& m : ms) col.push_back(m.values[j]);
      const double want = oracle::ksum(col) / k;
      CHECK(std::abs(avg.values[j] - want) <= 1e-12);
      CHECK(std::abs(avg2.values[j] - avg.values[j]) <= 1e-12);
      CHECK(avg.values[j] >= *std::min_element(col.begin(), col.end()));
      CHECK(avg.values[j] <= *std::max_element(col.begin(), col.end()));
    }
  }
}

TEST_CASE("two rounds of two agents: two aggregations, 2*2*E episodes") {
  const TrainingSetup s = tiny();
  int rounds_seen = 0;
  TrainOptions o;
  o.on_round = [&](const RoundReport&) { ++rounds_seen; };
  const TrainResult r = run_fml(s, 17, o);
  CHECK(rounds_seen == 2);
  REQUIRE(r.rounds.size() == 2);
  CHECK(r.episodes_run == 2 * 2 * 4);
  for (const auto& rr : r.rounds) {
    REQUIRE(rr.episodes.size() == 2 * 4);
    for (int k = 0; k < 2; ++k)
      for (int e = 0; e < 4; ++e) {
        const auto& rec = rr.episodes[k * 4 + e];
        CHECK(rec.agent == k);
        CHECK(rec.episode == e);
        CHECK(rec.task == e + 1);
      }
  }
}

TEST_CASE("one agent, one round, E = I, beta = 1 is a single Reptile block") {
  TrainingSetup s = tiny();
  s.fml.rounds = 1;
  s.fml.agents = 1;
  s.fml.beta = 1.0;
  const std::uint64_t seed = 23;
  const TrainResult r = run_fml(s, seed);

  const ModelParams anchor = init_params(s.net, init_seed(seed));
  Agent agent(anchor, s.hyper, s.env, agent_seed(seed, 0));
  Environment env = Environment::build(s.env, train_env_seed(seed, 0));
  std::vector<ModelParams> adapted;
  for (int task = 1; task <= 4; ++task) {
    agent.params = anchor;
    run_episode(agent, env, TaskSpec::task(task));
    adapted.push_back(agent.params);
  }
  const ModelParams mean = fedavg(adapted);
  REQUIRE(r.global.size() == mean.size());
  for (std::size_t j = 0; j < mean.size(); ++j) CHECK(std::abs(r.global.values[j] - mean.values[j]) <= 1e-12);
}

TEST_CASE("identical agents upload identical models") {
  TrainingSetup s = tiny();
  s.fml.rounds = 1;
  s.fml.identical_agents = true;
  s.fml.agents = 3;
  const TrainResult three = run_fml(s, 5);
  s.fml.agents = 1;
  const TrainResult one = run_fml(s, 5);
  for (std::size_t j = 0; j < one.global.size(); ++j)
    CHECK(std::abs(three.global.values[j] - one.global.values[j]) <= 1e-12 * std::max(1.0, std::abs(one.global.values[j])));
}

TEST_CASE("parallel and serial rounds agree exactly") {
  TrainingSetup s = tiny();
  s.fml.parallel = true;
  const TrainResult a = run_fml(s, 31);
  s.fml.parallel = false;
  const TrainResult b = run_fml(s, 31);
  CHECK(a.global == b.global);
}

TEST_CASE("baselines use the same budget and initial model") {
  const TrainingSetup s = tiny();
  const TrainResult single = run_baseline(TrainMethod::Single, s, 3);
  const TrainResult reptile = run_baseline(TrainMethod::Reptile, s, 3);
  CHECK(single.episodes_run == s.fml.rounds * s.fml.episodes);
  CHECK(reptile.episodes_run == s.fml.rounds * s.fml.episodes);
  for (const auto& rr : single.rounds)
    for (const auto& e : rr.episodes) CHECK(e.task == 1);
  CHECK(reptile.rounds[1].episodes[2].task == 3);
  CHECK(reptile.rounds[1].episodes[2].episode == 6);

  TrainingSetup frozen = s;
  frozen.hyper.lr = 0.0;
  CHECK(run_baseline(TrainMethod::Single, frozen, 3).global == init_params(s.net, init_seed(3)));
}

TEST_CASE("beta = 0 keeps the block anchor") {
  TrainingSetup s = tiny();
  s.fml.beta = 0.0;
  CHECK(run_baseline(TrainMethod::Reptile, s, 3).global == init_params(s.net, init_seed(3)));
}

TEST_CASE("partial block at the end of a round is still applied") {
  TrainingSetup s = tiny();
  s.fml.rounds = 1;
  s.fml.agents = 1;
  s.fml.episodes = 5;  // one full block plus one task episode
  s.fml.beta = 1.0;
  const TrainResult r = run_fml(s, 8);
  REQUIRE(r.rounds[0].episodes.size() == 5);
  CHECK(r.rounds[0].episodes[4].task == 1);
  s.fml.episodes = 4;
  CHECK_FALSE(run_fml(s, 8).global == r.global);
}

TEST_CASE("per-round checkpoints are written") {
  const auto dir = std::filesystem::temp_directory_path() / "steer_fed_ckpt";
  std::filesystem::remove_all(dir);
  TrainOptions o;
  o.checkpoint_dir = dir;
  const TrainResult r = run_fml(tiny(), 4, o);
  CHECK(std::filesystem::exists(dir / "round_000.ckpt"));
  CHECK(std::filesystem::exists(dir / "round_001.ckpt"));
  CHECK(r.rounds[1].checkpoint == (dir / "round_001.ckpt").string());
  const Checkpoint ck = load_checkpoint(dir / "round_001.ckpt");
  CHECK(ck.params.values[0] == static_cast<float>(r.global.values[0]));
  std::filesystem::remove_all(dir);
}

TEST_CASE("agent failures abort the round with a diagnostic") {
  TrainingSetup s = tiny();
  s.hyper.lr = 1e8;
  s.hyper.reward_scale = 1.0;
  CHECK_THROWS_WITH_AS(run_fml(s, 2), doctest::Contains("round 0 agent"), TrainingError);
}

TEST_CASE("invalid federation settings are rejected") {
  TrainingSetup s = tiny();
  s.fml.agents = 0;
  CHECK_THROWS_AS(run_fml(s, 1), ConfigError);
  s = tiny();
  s.fml.training_tasks = {1, 9};
  CHECK_THROWS_AS(run_fml(s, 1), ConfigError);
  s = tiny();
  s.fml.beta = 1.5;
  CHECK_THROWS_AS(run_fml(s, 1), ConfigError);
}
