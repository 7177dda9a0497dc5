#include "steer/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "steer/errors.hpp"

namespace steer {

using nlohmann::json;

void validate(const ExperimentConfig& c) {
  validate(c.env);
  validate(c.net);
  validate(c.dqn);
  validate(c.fml);
  if (c.net.input_dim != static_cast<int>(state_dim(c.env)) || c.net.output_dim != action_count(c.env))
    throw ConfigError("net input/output dimensions do not match the environment");
  if (c.eval.validation_runs < 1) throw ConfigError("eval.validation_runs must be >= 1");
  if (c.eval.adaptation_budget < 0) throw ConfigError("eval.adaptation_budget must be >= 0");
  if (c.eval.steps && *c.eval.steps < 1) throw ConfigError("eval.steps must be >= 1");
  if (c.eval.adapt_epsilon && !(*c.eval.adapt_epsilon >= 0.0 && *c.eval.adapt_epsilon <= 1.0))
    throw ConfigError("eval.adapt_epsilon must be in [0, 1]");
  if (c.seeds.empty()) throw ConfigError("seeds must not be empty");
}

ExperimentConfig paper_profile() { return {}; }

ExperimentConfig desk_profile() {
  ExperimentConfig c;
  c.env.episode_len_steps = 1000;
  c.fml.rounds = 4;
  c.fml.agents = 3;
  c.fml.episodes = 20;
  c.net.hidden = {64, 64};
  c.dqn.eps_decay_steps = 20000;
  // With only N*E = 80 episodes, the full meta step and a larger lr keep the
  // anchor from lagging behind the per-task models.
  c.dqn.lr = 3e-3;
  c.fml.beta = 1.0;
  c.eval.adaptation_budget = 10;
  return c;
}

ExperimentConfig preset(const std::string& name) {
  if (name == "paper") return paper_profile();
  if (name == "desk") return desk_profile();
  throw ConfigError("unknown preset '" + name + "' (expected paper or desk)");
}

namespace {

/// Reads known keys of one JSON object and rejects the rest.
class Section {
 public:
  Section(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + " must be an object");
  }

  template <class T>
  void get(const char* key, T& out) {
    if (!j_.contains(key)) return;
    seen_.insert(key);
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(path(key) + ": " + e.what());
    }
  }

  template <class T>
  void get(const char* key, std::optional<T>& out) {
    if (!j_.contains(key)) return;
    if (j_.at(key).is_null()) {
      seen_.insert(key);
      out.reset();
      return;
    }
    T v{};
    get(key, v);
    out = v;
  }

  const json* child(const char* key) {
    if (!j_.contains(key)) return nullptr;
    seen_.insert(key);
    return &j_.at(key);
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown config key '" + path(k) + "'");
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

RatKind parse_kind(const std::string& s, const std::string& where) {
  if (s == "lte") return RatKind::Lte;
  if (s == "nr") return RatKind::Nr;
  throw ConfigError(where + ": unknown RAT kind '" + s + "' (expected lte or nr)");
}

const char* kind_name(RatKind k) { return k == RatKind::Nr ? "nr" : "lte"; }

RatConfig read_rat(const json& j, const std::string& where) {
  RatConfig r;
  if (j.is_object() && j.contains("kind")) {
    const auto kind = parse_kind(j.at("kind").get<std::string>(), where);
    r = kind == RatKind::Nr ? default_nr() : default_lte();
  }
  Section s(j, where);
  std::string kind = kind_name(r.kind);
  s.get("kind", kind);
  s.get("id", r.id);
  s.get("name", r.name);
  s.get("bandwidth_hz", r.bandwidth_hz);
  s.get("tx_power_w", r.tx_power_w);
  s.get("antenna_gain", r.antenna_gain);
  s.get("pathloss_c", r.pathloss_c);
  s.get("pathloss_alpha", r.pathloss_alpha);
  s.get("noise_w", r.noise_w);
  s.get("interference_w", r.interference_w);
  s.get("fading_h", r.fading_h);
  s.get("max_range_m", r.max_range_m);
  s.finish();
  return r;
}

json write_rat(const RatConfig& r) {
  return {{"id", r.id},
          {"name", r.name},
          {"kind", kind_name(r.kind)},
          {"bandwidth_hz", r.bandwidth_hz},
          {"tx_power_w", r.tx_power_w},
          {"antenna_gain", r.antenna_gain},
          {"pathloss_c", r.pathloss_c},
          {"pathloss_alpha", r.pathloss_alpha},
          {"noise_w", r.noise_w},
          {"interference_w", r.interference_w},
          {"fading_h", r.fading_h},
          {"max_range_m", r.max_range_m}};
}

void read_env(const json& j, EnvConfig& e) {
  Section s(j, "env");
  s.get("n_vehicles", e.n_vehicles);
  s.get("buffer_size", e.buffer_size);
  s.get("dt_s", e.dt_s);
  s.get("vehicle_speed_mps", e.vehicle_speed_mps);
  s.get("map_size_m", e.map_size_m);
  s.get("bytes_per_frame", e.bytes_per_frame);
  s.get("episode_len_steps", e.episode_len_steps);
  s.get("rayleigh_fading", e.rayleigh_fading);
  s.get("frame_timeout_factor", e.frame_timeout_factor);
  if (const json* jt = s.child("job_types")) {
    if (!jt->is_array()) throw ConfigError("env.job_types must be an array");
    e.job_types.clear();
    for (std::size_t i = 0; i < jt->size(); ++i) {
      JobType t;
      Section js((*jt)[i], "env.job_types[" + std::to_string(i) + "]");
      js.get("name", t.name);
      js.get("frames", t.frames);
      js.get("deadline_s", t.deadline_s);
      js.finish();
      e.job_types.push_back(t);
    }
  }
  if (const json* jr = s.child("rats")) {
    if (!jr->is_array()) throw ConfigError("env.rats must be an array");
    e.rats.clear();
    for (std::size_t i = 0; i < jr->size(); ++i)
      e.rats.push_back(read_rat((*jr)[i], "env.rats[" + std::to_string(i) + "]"));
  }
  if (const json* jw = s.child("reward")) {
    Section rs(*jw, "env.reward");
    rs.get("throughput_unit_bytes", e.reward.throughput_unit_bytes);
    rs.get("fairness_floor_bytes", e.reward.fairness_floor_bytes);
    rs.finish();
  }
  s.finish();
}

json write_env(const EnvConfig& e) {
  json jobs = json::array();
  for (const auto& t : e.job_types) jobs.push_back({{"name", t.name}, {"frames", t.frames}, {"deadline_s", t.deadline_s}});
  json rats = json::array();
  for (const auto& r : e.rats) rats.push_back(write_rat(r));
  return {{"n_vehicles", e.n_vehicles},
          {"buffer_size", e.buffer_size},
          {"dt_s", e.dt_s},
          {"vehicle_speed_mps", e.vehicle_speed_mps},
          {"map_size_m", e.map_size_m},
          {"bytes_per_frame", e.bytes_per_frame},
          {"episode_len_steps", e.episode_len_steps},
          {"rayleigh_fading", e.rayleigh_fading},
          {"frame_timeout_factor", e.frame_timeout_factor},
          {"job_types", jobs},
          {"rats", rats},
          {"reward",
           {{"throughput_unit_bytes", e.reward.throughput_unit_bytes},
            {"fairness_floor_bytes", e.reward.fairness_floor_bytes}}}};
}

template <class T>
json opt(const std::optional<T>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  ExperimentConfig c;
  if (j.contains("preset")) c = preset(j.at("preset").get<std::string>());
  Section top(j, "");
  std::string preset_name;
  top.get("preset", preset_name);
  top.get("seeds", c.seeds);
  if (const json* e = top.child("env")) read_env(*e, c.env);
  if (const json* n = top.child("net")) {
    Section s(*n, "net");
    s.get("hidden", c.net.hidden);
    s.finish();
  }
  if (const json* d = top.child("dqn")) {
    Section s(*d, "dqn");
    s.get("gamma", c.dqn.gamma);
    s.get("lr", c.dqn.lr);
    s.get("eps_start", c.dqn.eps_start);
    s.get("eps_end", c.dqn.eps_end);
    s.get("eps_decay_steps", c.dqn.eps_decay_steps);
    s.get("minibatch", c.dqn.minibatch);
    s.get("replay_capacity", c.dqn.replay_capacity);
    s.get("train_every", c.dqn.train_every);
    s.get("reward_scale", c.dqn.reward_scale);
    s.finish();
  }
  if (const json* f = top.child("fml")) {
    Section s(*f, "fml");
    s.get("rounds", c.fml.rounds);
    s.get("agents", c.fml.agents);
    s.get("episodes", c.fml.episodes);
    s.get("meta_tasks", c.fml.meta_tasks);
    s.get("beta", c.fml.beta);
    s.get("training_tasks", c.fml.training_tasks);
    s.get("eval_task", c.fml.eval_task);
    s.get("parallel", c.fml.parallel);
    s.get("identical_agents", c.fml.identical_agents);
    s.finish();
  }
  if (const json* v = top.child("eval")) {
    Section s(*v, "eval");
    s.get("validation_runs", c.eval.validation_runs);
    s.get("adaptation_budget", c.eval.adaptation_budget);
    s.get("steps", c.eval.steps);
    s.get("adapt_epsilon", c.eval.adapt_epsilon);
    s.finish();
  }
  top.finish();

  // Network ends are fixed by the environment.
  c.net.input_dim = static_cast<int>(state_dim(c.env));
  c.net.output_dim = action_count(c.env);
  validate(c);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string dump_config(const ExperimentConfig& c) {
  const json j = {
      {"seeds", c.seeds},
      {"env", write_env(c.env)},
      {"net", {{"hidden", c.net.hidden}}},
      {"dqn",
       {{"gamma", c.dqn.gamma},
        {"lr", c.dqn.lr},
        {"eps_start", c.dqn.eps_start},
        {"eps_end", c.dqn.eps_end},
        {"eps_decay_steps", c.dqn.eps_decay_steps},
        {"minibatch", c.dqn.minibatch},
        {"replay_capacity", c.dqn.replay_capacity},
        {"train_every", c.dqn.train_every},
        {"reward_scale", c.dqn.reward_scale}}},
      {"fml",
       {{"rounds", c.fml.rounds},
        {"agents", c.fml.agents},
        {"episodes", c.fml.episodes},
        {"meta_tasks", c.fml.meta_tasks},
        {"beta", c.fml.beta},
        {"training_tasks", c.fml.training_tasks},
        {"eval_task", c.fml.eval_task},
        {"parallel", c.fml.parallel},
        {"identical_agents", c.fml.identical_agents}}},
      {"eval",
       {{"validation_runs", c.eval.validation_runs},
        {"adaptation_budget", c.eval.adaptation_budget},
        {"steps", opt(c.eval.steps)},
        {"adapt_epsilon", opt(c.eval.adapt_epsilon)}}}};
  return j.dump(2) + "\n";
}

}  // namespace steer
