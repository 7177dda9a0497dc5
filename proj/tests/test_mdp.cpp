#include <cmath>

#include "doctest.h"
#include "scripted.hpp"
#include "steer/errors.hpp"
#include "steer/mdp.hpp"

using namespace steer;

namespace {

Vehicle on_west(double radius, std::uint64_t id) {
  Vehicle v;
  v.id = id;
  v.x = 500.0 - radius;
  v.y = 500.0;
  v.vx = 8.0;
  v.road_segment = Arm::West;
  return v;
}

void park(Environment& env, double radius) {
  for (int i = 0; i < env.config().n_vehicles; ++i) env.place_vehicle(i, on_west(radius + 5.0 * i, 100 + i));
}

EventRecord ev(EventKind k) {
  EventRecord e;
  e.kind = k;
  return e;
}

}  // namespace

TEST_CASE("action indices round-trip") {
  const EnvConfig c;
  CHECK(action_count(c) == 11);
  CHECK(noop_index(c) == 10);
  for (int i = 0; i < action_count(c); ++i) CHECK(action_index(c, action_from_index(c, i)) == i);
  CHECK(action_from_index(c, 7) == Action::schedule(2, 1));
  CHECK_THROWS_AS(action_from_index(c, 11), ContractViolation);
}

TEST_CASE("state has 47 entries in [0, 1] and is pure") {
  Environment env = Environment::build(EnvConfig{}, 3);
  REQUIRE(state_dim(env.config()) == 47);
  for (int t = 0; t < 2000; ++t) {
    const auto s = encode_state(env);
    REQUIRE(s.size() == 47);
    for (double x : s) REQUIRE((x >= 0.0 && x <= 1.0));
    CHECK(encode_state(env) == s);
    env.advance(env.config().dt_s);
  }
}

TEST_CASE("state layout: availability flags and coverage") {
  Environment env = Environment::build(EnvConfig{}, 4);
  park(env, 250.0);
  auto s = encode_state(env);
  // 5 vehicles * 4 + 5 slots * 3 = 35, then the two flags.
  CHECK(s[35] == 1.0);
  CHECK(s[36] == 1.0);
  for (int v = 0; v < 5; ++v) {
    CHECK(s[37 + 2 * v] > 0.0);       // LTE
    CHECK(s[37 + 2 * v + 1] == 0.0);  // NR, d > 200 m
  }
  env.begin_transmission(0, 0);
  s = encode_state(env);
  CHECK(s[35] == 0.0);
  CHECK(s[36] == 1.0);
  // Eastbound at 8 m/s encodes as (1, 0.5).
  CHECK(s[2] == 1.0);
  CHECK(s[3] == 0.5);
  CHECK(s[0] == doctest::Approx(250.0 / 1000.0));
}

TEST_CASE("legal actions") {
  Environment env = Environment::build(EnvConfig{}, 5);
  park(env, 250.0);
  auto m = legal_actions(env);
  // Everyone is outside NR coverage.
  for (int s = 0; s < 5; ++s) {
    CHECK(m[s] == 1);
    CHECK(m[5 + s] == 0);
  }
  CHECK(m[10] == 1);

  park(env, 20.0);
  env.begin_transmission(1, 0);  // NR busy, LTE idle
  m = legal_actions(env);
  int n_lte = 0;
  for (int s = 0; s < 5; ++s) n_lte += m[s];
  CHECK(n_lte == 5);
  for (int s = 0; s < 5; ++s) CHECK(m[5 + s] == 0);
  CHECK(m[10] == 1);

  env.begin_transmission(0, 1);
  m = legal_actions(env);
  for (int a = 0; a < 10; ++a) CHECK(m[a] == 0);
  CHECK(m[10] == 1);
}

TEST_CASE("legal mask matches an independent enumeration") {
  Environment env = Environment::build(EnvConfig{}, 6);
  for (int t = 0; t < 3000; ++t) {
    const auto m = legal_actions(env);
    for (int r = 0; r < 2; ++r)
      for (int s = 0; s < 5; ++s) {
        const auto& job = env.buffer()[s];
        const auto& v = env.vehicles()[job.owner];
        const double d = std::hypot(v.x - 500.0, v.y - 500.0);
        const bool in_range = d <= env.config().rats[r].max_range_m;
        const bool expect = env.rat_idle(r) && job.frames_remaining - job.frames_in_flight > 0 && in_range;
        REQUIRE(m[r * 5 + s] == (expect ? 1 : 0));
      }
    // Greedy first-legal policy to exercise busy states.
    for (int a = 0; a < 10; ++a)
      if (m[a]) {
        apply_action(env, action_from_index(env.config(), a));
        break;
      }
    env.advance(env.config().dt_s);
  }
}

TEST_CASE("reward components") {
  const Environment env = Environment::build(EnvConfig{}, 1);
  SUBCASE("one job lost, both RATs busy") {
    const std::vector<EventRecord> e{ev(EventKind::JobLost)};
    const auto r = reward_components(e, env);
    CHECK(r.r1_unused_rat == 0.0);
    CHECK(r.r2_lost == -100.0);
  }
  SUBCASE("completion at half the deadline") {
    EventRecord c = ev(EventKind::JobCompleted);
    c.latency_ratio = 0.5;
    const auto r = reward_components(std::vector<EventRecord>{c}, env);
    CHECK(r.r3_success == 10.0);
    CHECK(r.r4_latency == 5.0);
  }
  SUBCASE("no events, both RATs idle") {
    const std::vector<EventRecord> e{ev(EventKind::RatIdle), ev(EventKind::RatIdle)};
    const auto r = reward_components(e, env);
    CHECK(r.r1_unused_rat == -2.0);
    CHECK(r.r5_throughput == 0.0);
    CHECK(r.r6_fairness == 0.0);  // every flow floored at 1 byte, log 1 = 0
  }
  SUBCASE("throughput and fairness from deliveries") {
    EventRecord f = ev(EventKind::FrameDelivered);
    f.vehicle = 2;
    f.bytes = 51200;
    const auto r = reward_components(std::vector<EventRecord>{f, f}, env);
    CHECK(r.r5_throughput == doctest::Approx(0.1 * 102400 / 0.001 / 1e6));
    CHECK(r.r6_fairness == doctest::Approx(std::log(102400.0)));
  }
}

TEST_CASE("task rewards select components") {
  RewardComponents c;
  c.r1_unused_rat = -1;
  c.r2_lost = 7;
  c.r3_success = 11;
  c.r4_latency = 5;
  c.r5_throughput = 13;
  c.r6_fairness = 17;
  CHECK(task_reward(c, TaskSpec::task(3)) == 4.0);
  CHECK(task_reward(c, TaskSpec::task(1)) == -1 + 7 + 11 + 5 + 13 + 17);
  CHECK(task_reward(c, TaskSpec::task(2)) == 16.0);
  CHECK(task_reward(c, TaskSpec::task(4)) == 12.0);
  RewardComponents d;
  d.r2_lost = -100;
  d.r3_success = 10;
  CHECK(task_reward(d, TaskSpec::task(5)) == -90.0);
  CHECK_THROWS_AS(TaskSpec::task(6), ConfigError);
  CHECK_THROWS_AS(TaskSpec::task(0), ConfigError);
}

TEST_CASE("caching rate") {
  Counters c;
  CHECK_FALSE(caching_rate(c).has_value());
  c.jobs_completed = 8;
  c.jobs_lost = 2;
  c.bytes_completed = 800;
  c.bytes_lost = 150;
  c.bytes_lost_delivered = 50;
  CHECK(caching_rate(c)->packets == doctest::Approx(0.8));
  CHECK(caching_rate(c)->bytes == doctest::Approx(0.8));
  Counters ok;
  ok.jobs_completed = 3;
  ok.bytes_completed = 30;
  CHECK(caching_rate(ok)->packets == 1.0);
  CHECK(caching_rate(ok)->bytes == 1.0);
}

TEST_CASE("throughput and fairness formulas") {
  CHECK(throughput(1e6, 0.0, 1.0) == 1e6);
  CHECK(throughput(0.0, 0.0, 2.0) == 0.0);
  CHECK_THROWS_AS(throughput(1.0, 1.0, 0.0), ContractViolation);
  const std::vector<double> ones(5, 1.0), es(5, std::exp(1.0)), zero{0.0, 5.0};
  CHECK(fairness(ones) == 0.0);
  CHECK(fairness(es) == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(std::isfinite(fairness(zero)));
  CHECK(fairness(zero) == doctest::Approx(std::log(5.0)));
}

TEST_CASE("hand-traced three-job episode") {
  const auto t = scripted::run();
  const Counters d = t.env.counters() - t.start;
  CHECK(d.jobs_completed == 1);
  CHECK(d.jobs_lost == 2);
  CHECK(d.bytes_completed == 102400);
  CHECK(d.bytes_lost == 256000);
  CHECK(d.bytes_lost_delivered == 51200);
  CHECK(d.frames_delivered == 3);
  const auto cr = caching_rate(d);
  REQUIRE(cr.has_value());
  CHECK(cr->packets == 1.0 / 3.0);
  CHECK(cr->bytes == 0.25);
  CHECK(throughput(static_cast<double>(d.bytes_completed), static_cast<double>(d.bytes_lost_delivered), 0.007) ==
        153600.0 / 0.007);

  REQUIRE(t.steps.size() == 7);
  double latency = -1.0;
  for (const auto& e : t.steps[3].events)
    if (e.kind == EventKind::JobCompleted) latency = e.latency_ratio;
  CHECK(latency == doctest::Approx(0.4).epsilon(1e-12));

  const double frame_r5 = 0.1 * 51200 / 0.001 / 1e6;
  const double expect_r5[] = {0, frame_r5, 0, frame_r5, 0, frame_r5, 0};
  const double expect_r6[] = {0, std::log(51200.0), 0, std::log(51200.0), 0, std::log(51200.0), 0};
  for (int k = 0; k < 7; ++k) {
    const auto& r = t.steps[k].rewards;
    CHECK(r.r1_unused_rat == 0.0);
    CHECK(r.r5_throughput == doctest::Approx(expect_r5[k]).epsilon(1e-12));
    CHECK(r.r6_fairness == doctest::Approx(expect_r6[k]).epsilon(1e-12));
  }
  CHECK(t.steps[3].rewards.r3_success == 10.0);
  CHECK(t.steps[3].rewards.r4_latency == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(t.steps[6].rewards.r2_lost == -200.0);

  double task1 = 0.0;
  for (const auto& s : t.steps) task1 += task_reward(s.rewards, TaskSpec::task(1));
  CHECK(task1 == doctest::Approx(10 + 6 + 3 * frame_r5 + 3 * std::log(51200.0) - 200).epsilon(1e-12));
  // The RAT is freed by the loss of the job it was serving.
  CHECK(t.env.rat_idle(0));
}

TEST_CASE("play_step queries once per idle RAT") {
  Environment env = Environment::build(EnvConfig{}, 12);
  park(env, 20.0);
  int calls = 0;
  const auto out = play_step(env, [&](const Environment& e, const ActionMask& m) {
    ++calls;
    for (int a = 0; a < static_cast<int>(m.size()); ++a)
      if (m[a]) return action_from_index(e.config(), a);
    return Action::no_op();
  });
  CHECK(calls == 2);
  CHECK(out.queries == 2);
  // The NR frame (<= 40 m) lands within the tick; the LTE one does not.
  CHECK_FALSE(env.rat_idle(0));
  CHECK(env.rat_idle(1));
  CHECK(env.counters().frames_delivered == 1);
}
