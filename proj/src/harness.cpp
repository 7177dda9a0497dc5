#include "steer/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "steer/errors.hpp"

namespace steer {

std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // no "-0.000000"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

namespace {

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Sample standard deviation; 0 for fewer than two values.
double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

Action heuristic_choice(const Environment& env, const ActionMask& legal) { return heuristic_action(env, legal); }

}  // namespace

std::vector<RunResult> evaluate_policy(const Chooser& choose, const EvalProtocol& p) {
  const TaskSpec task = TaskSpec::task(p.eval_task);
  std::vector<RunResult> out;
  for (std::uint64_t s : p.unseen_seeds) {
    Environment env = Environment::build(p.env, s);
    const EpisodeStats st = run_policy_episode(env, choose, task, p.steps);
    RunResult r{s, 0.0, 0.0};
    if (st.caching) {
      r.packets = st.caching->packets;
      r.bytes = st.caching->bytes;
    }
    out.push_back(r);
  }
  return out;
}

EvalProtocol make_protocol(const ExperimentConfig& c, std::uint64_t seed) {
  validate(c);
  EvalProtocol p;
  p.env = c.env;
  p.eval_task = c.fml.eval_task;
  p.steps = c.eval_steps();
  p.adaptation_budget = c.eval.adaptation_budget;
  p.adapt_epsilon = c.adapt_epsilon();
  for (int r = 0; r < c.eval.validation_runs; ++r)
    p.unseen_seeds.push_back(derive_seed(seed, {4, static_cast<std::uint64_t>(r)}));
  p.adaptation_seed = derive_seed(seed, {5});
  p.adaptation_agent_seed = derive_seed(seed, {6});

  std::vector<std::uint64_t> training;
  for (int k = 0; k < c.fml.agents; ++k) training.push_back(train_env_seed(seed, k));
  std::vector<std::uint64_t> unseen = p.unseen_seeds;
  unseen.push_back(p.adaptation_seed);
  for (std::uint64_t u : unseen)
    if (std::find(training.begin(), training.end(), u) != training.end())
      throw ConfigError("unseen environment seed collides with a training seed");

  p.heuristic_runs = evaluate_policy(heuristic_choice, p);
  double sum = 0.0;
  for (const auto& r : p.heuristic_runs) sum += r.packets;
  p.hep_reference = sum / static_cast<double>(p.heuristic_runs.size());
  if (!(p.hep_reference > 0.0)) throw ConfigError("heuristic caches nothing on the unseen environments");
  return p;
}

ZeroShot score_runs(std::vector<RunResult> runs, double hep_reference) {
  ZeroShot z;
  std::vector<double> packets, bytes;
  for (const auto& r : runs) {
    z.performance.push_back(100.0 * r.packets / hep_reference);
    packets.push_back(r.packets);
    bytes.push_back(r.bytes);
  }
  z.runs = std::move(runs);
  z.mean = mean_of(z.performance);
  z.std = std_of(z.performance);
  z.mean_packets = mean_of(packets);
  z.mean_bytes = mean_of(bytes);
  return z;
}

ZeroShot evaluate_zero_shot(const ModelParams& params, const EvalProtocol& p) {
  return score_runs(evaluate_policy(greedy_chooser(params), p), p.hep_reference);
}

AdaptationResult adapt(const ModelParams& params, const EvalProtocol& p, const DqnHyper& hyper) {
  AdaptationResult res;
  Agent agent(params, hyper, p.env, p.adaptation_agent_seed);
  Environment env = Environment::build(p.env, p.adaptation_seed);
  const TaskSpec task = TaskSpec::task(p.eval_task);
  EpisodeOptions opts;
  opts.epsilon = p.adapt_epsilon;
  opts.steps = p.steps;
  for (int e = 0; e <= p.adaptation_budget; ++e) {
    if (e > 0) run_episode(agent, env, task, opts);
    res.curve.push_back(evaluate_zero_shot(agent.params, p));
    if (!res.hep_episode && res.curve.back().mean_packets >= p.hep_reference) res.hep_episode = e;
  }
  res.final_params = agent.params;
  return res;
}

std::optional<int> episodes_to_hep(const ModelParams& params, const EvalProtocol& p, const DqnHyper& hyper) {
  return adapt(params, p, hyper).hep_episode;
}

const MethodSummary& ComparisonReport::method(const std::string& name) const {
  for (const auto& m : summary)
    if (m.method == name) return m;
  throw ContractViolation("no method '" + name + "' in report");
}

ComparisonReport summarize(std::vector<SeedReport> seeds, int adaptation_budget) {
  ComparisonReport r;
  r.adaptation_budget = adaptation_budget;
  for (const auto& name : kMethods) {
    MethodSummary m;
    m.method = name;
    std::vector<double> perf, hep, fp, fb;
    for (const auto& s : seeds) {
      for (const auto& row : s.rows) {
        if (row.method != name) continue;
        perf.insert(perf.end(), row.zero_shot_runs.begin(), row.zero_shot_runs.end());
        hep.push_back(row.hep_episode ? *row.hep_episode : adaptation_budget + 1);
        if (row.hep_episode) m.hep_reached += 1;
        fp.push_back(row.final_packets);
        fb.push_back(row.final_bytes);
      }
    }
    m.zero_shot_mean = mean_of(perf);
    m.zero_shot_std = std_of(perf);
    m.hep_mean = mean_of(hep);
    m.final_packets = mean_of(fp);
    m.final_bytes = mean_of(fb);
    r.summary.push_back(m);
  }
  r.seeds = std::move(seeds);
  return r;
}

std::string episodes_csv_header() {
  return "method,seed,round,agent,episode,task,return,caching_packets,caching_bytes,jobs_lost,epsilon\n";
}

std::string episode_csv_line(const std::string& method, std::uint64_t seed, const EpisodeRecord& r) {
  std::ostringstream os;
  const auto& st = r.stats;
  os << method << ',' << seed << ',' << r.round << ',' << r.agent << ',' << r.episode << ',' << r.task << ','
     << fmt(st.episode_return) << ',' << (st.caching ? fmt(st.caching->packets) : "") << ','
     << (st.caching ? fmt(st.caching->bytes) : "") << ',' << st.jobs_lost << ',' << fmt(st.epsilon) << '\n';
  return os.str();
}

std::string format_summary(const ComparisonReport& r) {
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-10s %12s %10s %10s %8s %14s %12s\n", "method", "zero-shot %", "std", "HEP ep",
                "reached", "final packets", "final bytes");
  os << line;
  for (const auto& m : r.summary) {
    std::snprintf(line, sizeof line, "%-10s %12.2f %10.2f %10.2f %5d/%-2zu %14.4f %12.4f\n", m.method.c_str(),
                  m.zero_shot_mean, m.zero_shot_std, m.hep_mean, m.hep_reached, r.seeds.size(), m.final_packets,
                  m.final_bytes);
    os << line;
  }
  os << "seeds: " << r.seeds.size() << ", adaptation budget: " << r.adaptation_budget
     << " (a missed HEP counts as " << r.adaptation_budget + 1 << ")\n";
  return os.str();
}

std::string summary_json(const ComparisonReport& r) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["adaptation_budget"] = r.adaptation_budget;
  j["methods"] = ordered_json::array();
  for (const auto& m : r.summary)
    j["methods"].push_back({{"method", m.method},
                            {"zero_shot_mean", m.zero_shot_mean},
                            {"zero_shot_std", m.zero_shot_std},
                            {"hep_mean", m.hep_mean},
                            {"hep_reached", m.hep_reached},
                            {"final_packets", m.final_packets},
                            {"final_bytes", m.final_bytes}});
  j["seeds"] = ordered_json::array();
  for (const auto& s : r.seeds) {
    ordered_json rows = ordered_json::array();
    for (const auto& row : s.rows)
      rows.push_back({{"method", row.method},
                      {"zero_shot_mean", row.zero_shot_mean},
                      {"zero_shot_std", row.zero_shot_std},
                      {"hep_episode", row.hep_episode ? ordered_json(*row.hep_episode) : ordered_json(nullptr)},
                      {"final_packets", row.final_packets},
                      {"final_bytes", row.final_bytes}});
    j["seeds"].push_back({{"seed", s.seed}, {"hep_reference", s.hep_reference}, {"rows", rows}});
  }
  return j.dump(2) + "\n";
}

namespace {

/// CSV sinks for one comparison; all no-ops without an output directory.
class Sinks {
 public:
  explicit Sinks(const std::optional<std::filesystem::path>& dir) {
    if (!dir) return;
    std::filesystem::create_directories(*dir);
    dir_ = *dir;
    open(episodes_, "episodes.csv", episodes_csv_header());
    open(eval_, "eval.csv", "method,seed,adapt_episode,run,env_seed,packets,bytes,performance\n");
    open(adaptation_, "adaptation.csv", "method,seed,adapt_episode,mean_packets,mean_bytes,performance,at_hep\n");
  }

  bool enabled() const { return dir_.has_value(); }

  void episode(const std::string& m, std::uint64_t seed, const EpisodeRecord& r) {
    if (enabled()) episodes_ << episode_csv_line(m, seed, r);
  }

  void validation(const std::string& m, std::uint64_t seed, int adapt_episode, const ZeroShot& z, double ref) {
    if (!enabled()) return;
    for (std::size_t i = 0; i < z.runs.size(); ++i)
      eval_ << m << ',' << seed << ',' << adapt_episode << ',' << i << ',' << z.runs[i].env_seed << ','
            << fmt(z.runs[i].packets) << ',' << fmt(z.runs[i].bytes) << ',' << fmt(z.performance[i]) << '\n';
    adaptation_ << m << ',' << seed << ',' << adapt_episode << ',' << fmt(z.mean_packets) << ','
                << fmt(z.mean_bytes) << ',' << fmt(z.mean) << ',' << (z.mean_packets >= ref ? 1 : 0) << '\n';
  }

  void finish(const ComparisonReport& r) {
    if (!enabled()) return;
    std::ofstream summary(*dir_ / "summary.csv");
    summary << "method,zero_shot_mean,zero_shot_std,hep_mean,hep_reached,final_packets,final_bytes\n";
    for (const auto& m : r.summary)
      summary << m.method << ',' << fmt(m.zero_shot_mean) << ',' << fmt(m.zero_shot_std) << ',' << fmt(m.hep_mean)
              << ',' << m.hep_reached << ',' << fmt(m.final_packets) << ',' << fmt(m.final_bytes) << '\n';
    std::ofstream(*dir_ / "summary.json") << summary_json(r);
    std::ofstream(*dir_ / "summary.txt") << format_summary(r);
    for (auto* f : {&episodes_, &eval_, &adaptation_}) {
      f->flush();
      if (!*f) throw ConfigError("failed writing outputs under " + dir_->string());
    }
  }

 private:
  void open(std::ofstream& f, const char* name, const std::string& header) {
    f.open(*dir_ / name, std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + (*dir_ / name).string());
    f << header;
  }

  std::optional<std::filesystem::path> dir_;
  std::ofstream episodes_, eval_, adaptation_;
};

}  // namespace

ComparisonReport run_comparison(const ExperimentConfig& c, const CompareOptions& opts) {
  validate(c);
  Sinks sinks(opts.out_dir);
  auto log = [&](const std::string& s) {
    if (opts.log) opts.log(s);
  };
  if (opts.out_dir) std::ofstream(*opts.out_dir / "config.json") << dump_config(c);

  std::vector<SeedReport> reports;
  for (std::uint64_t seed : c.seeds) {
    SeedReport sr;
    sr.seed = seed;
    const EvalProtocol p = make_protocol(c, seed);
    sr.hep_reference = p.hep_reference;

    const ZeroShot h = score_runs(p.heuristic_runs, p.hep_reference);
    sinks.validation("heuristic", seed, 0, h, p.hep_reference);
    sr.rows.push_back({"heuristic", h.mean, h.std, 0, h.mean_packets, h.mean_bytes, h.performance});
    log("seed " + std::to_string(seed) + ": heuristic packets " + fmt(p.hep_reference));

    for (TrainMethod m : {TrainMethod::Single, TrainMethod::Reptile, TrainMethod::Fml}) {
      const std::string name = to_string(m);
      TrainOptions topts;
      topts.on_round = [&](const RoundReport& rr) {
        for (const auto& e : rr.episodes) sinks.episode(name, seed, e);
      };
      TrainResult trained;
      try {
        trained = train(m, c.training(), seed, topts);
      } catch (const std::exception& e) {
        throw TrainingError("seed " + std::to_string(seed) + " method " + name + ": " + e.what());
      }
      const AdaptationResult ad = adapt(trained.global, p, c.dqn);
      for (std::size_t e = 0; e < ad.curve.size(); ++e)
        sinks.validation(name, seed, static_cast<int>(e), ad.curve[e], p.hep_reference);
      const ZeroShot& zs = ad.curve.front();
      sr.rows.push_back({name, zs.mean, zs.std, ad.hep_episode, ad.curve.back().mean_packets,
                         ad.curve.back().mean_bytes, zs.performance});
      log("seed " + std::to_string(seed) + ": " + name + " zero-shot " + fmt(zs.mean) + "% HEP " +
          (ad.hep_episode ? std::to_string(*ad.hep_episode) : std::string("-")));
    }
    reports.push_back(std::move(sr));
  }
  ComparisonReport r = summarize(std::move(reports), c.eval.adaptation_budget);
  sinks.finish(r);
  return r;
}

}  // namespace steer
