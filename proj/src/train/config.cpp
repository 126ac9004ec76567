#include "ltc/train/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace ltc::train {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& val) {
  char* end = nullptr;
  const double x = std::strtod(val.c_str(), &end);
  if (end == val.c_str() || *end != '\0')
    throw ConfigError("config: bad number for " + key + ": '" + val + "'");
  return x;
}

long long parse_int(const std::string& key, const std::string& val) {
  char* end = nullptr;
  const long long x = std::strtoll(val.c_str(), &end, 10);
  if (end == val.c_str() || *end != '\0')
    throw ConfigError("config: bad integer for " + key + ": '" + val + "'");
  return x;
}

bool parse_bool(const std::string& key, const std::string& val) {
  if (val == "true" || val == "1" || val == "on") return true;
  if (val == "false" || val == "0" || val == "off") return false;
  throw ConfigError("config: bad boolean for " + key + ": '" + val + "'");
}

std::vector<int> parse_int_list(const std::string& key, const std::string& val) {
  std::vector<int> out;
  std::stringstream ss(val);
  std::string item;
  while (std::getline(ss, item, ','))
    out.push_back(static_cast<int>(parse_int(key, trim(item))));
  if (out.empty()) throw ConfigError("config: empty list for " + key);
  return out;
}

void apply_entry(TrainConfig& c, const std::string& key, const std::string& val) {
  auto d = [&] { return parse_double(key, val); };
  auto i = [&] { return static_cast<int>(parse_int(key, val)); };
  auto u = [&] { return static_cast<std::uint64_t>(parse_int(key, val)); };
  auto b = [&] { return parse_bool(key, val); };

  if (key == "env.task") c.task = val;
  else if (key == "env.num_envs") c.num_envs = i();
  else if (key == "env.episode_length") c.episode_length = i();
  else if (key == "env.use_shape_feature") c.use_shape_feature = b();
  else if (key == "rand.mass_lo") c.rand.mass_lo = d();
  else if (key == "rand.mass_hi") c.rand.mass_hi = d();
  else if (key == "rand.friction_lo") c.rand.friction_lo = d();
  else if (key == "rand.friction_hi") c.rand.friction_hi = d();
  else if (key == "rand.length_jitter") c.rand.length_jitter = d();
  else if (key == "rand.spawn_pos_jitter") c.rand.spawn_pos_jitter = d();
  else if (key == "rand.spawn_angle_jitter") c.rand.spawn_angle_jitter = d();
  else if (key == "rand.spawn_vel_jitter") c.rand.spawn_vel_jitter = d();
  else if (key == "reward.w_p") c.reward.w_p = d();
  else if (key == "reward.w_o") c.reward.w_o = d();
  else if (key == "reward.w_a") c.reward.w_a = d();
  else if (key == "reward.c1") c.reward.c1 = d();
  else if (key == "reward.c2") c.reward.c2 = d();
  else if (key == "net.hidden") c.hidden = parse_int_list(key, val);
  else if (key == "net.batch_norm") c.batch_norm = b();
  else if (key == "net.penultimate_norm") c.penultimate_norm = b();
  else if (key == "net.final_layer_scale") c.final_layer_scale = d();
  else if (key == "net.init_log_std") c.init_log_std = d();
  else if (key == "hybrid.beta1") c.hybrid.beta1 = d();
  else if (key == "hybrid.beta2") c.hybrid.beta2 = d();
  else if (key == "hybrid.beta3") c.hybrid.beta3 = d();
  else if (key == "hybrid.alpha") c.hybrid.alpha = d();
  else if (key == "hybrid.k_start") c.hybrid.k_start = d();
  else if (key == "hybrid.k_end") c.hybrid.k_end = d();
  else if (key == "hybrid.k_intrinsic") c.hybrid.k_intrinsic = d();
  else if (key == "hybrid.gamma") c.hybrid.gamma = d();
  else if (key == "hybrid.clip_eps") c.hybrid.clip_eps = d();
  else if (key == "hybrid.use_gae") c.hybrid.use_gae = b();
  else if (key == "hybrid.gae_lambda") c.hybrid.gae_lambda = d();
  else if (key == "hybrid.normalize_advantage") c.hybrid.normalize_advantage = b();
  else if (key == "shape.corpus_per_category") c.corpus_per_category = i();
  else if (key == "shape.points_per_cloud") c.points_per_cloud = i();
  else if (key == "train.seed") c.seed = u();
  else if (key == "train.total_env_steps") c.total_env_steps = u();
  else if (key == "train.stop_env_steps") c.stop_env_steps = u();
  else if (key == "train.horizon") c.horizon = i();
  else if (key == "train.epochs") c.epochs = i();
  else if (key == "train.minibatches") c.minibatches = i();
  else if (key == "train.lr_policy") c.lr_policy = d();
  else if (key == "train.lr_value") c.lr_value = d();
  else if (key == "train.lr_lyapunov") c.lr_lyapunov = d();
  else if (key == "train.entropy_coef") c.entropy_coef = d();
  else if (key == "train.eval_every_updates") c.eval_every_updates = u();
  else if (key == "train.eval_episodes") c.eval_episodes = i();
  else if (key == "train.success_threshold") {
    c.success_threshold = d();
    c.threshold_set = true;
  } else {
    throw ConfigError("config: unknown key '" + key + "'");
  }
}

}  // namespace

TrainConfig parse_config_text(const std::string& text) {
  TrainConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: line " + std::to_string(lineno) + " is not key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: empty key on line " + std::to_string(lineno));
    apply_entry(cfg, key, val);
  }
  cfg.validate();
  return cfg;
}

TrainConfig load_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open '" + path + "'");
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_config_text(buf.str());
}

void TrainConfig::validate() const {
  if (num_envs < 1) throw ConfigError("config: env.num_envs must be >= 1");
  if (episode_length < 1) throw ConfigError("config: env.episode_length must be >= 1");
  if (horizon < 1) throw ConfigError("config: train.horizon must be >= 1");
  if (epochs < 1) throw ConfigError("config: train.epochs must be >= 1");
  if (minibatches < 1) throw ConfigError("config: train.minibatches must be >= 1");
  if ((num_envs * horizon) % minibatches != 0)
    throw ConfigError("config: num_envs * horizon must divide evenly into minibatches");
  if (lr_policy < 0.0 || lr_value < 0.0 || lr_lyapunov < 0.0)
    throw ConfigError("config: learning rates must be non-negative");
  if (entropy_coef < 0.0) throw ConfigError("config: train.entropy_coef must be >= 0");
  if (eval_every_updates < 1) throw ConfigError("config: train.eval_every_updates must be >= 1");
  if (eval_episodes < 1) throw ConfigError("config: train.eval_episodes must be >= 1");
  if (stop_env_steps > total_env_steps)
    throw ConfigError("config: train.stop_env_steps must not exceed train.total_env_steps");
  if (hidden.empty()) throw ConfigError("config: net.hidden must have at least one layer");
  for (int h : hidden)
    if (h < 1) throw ConfigError("config: net.hidden entries must be >= 1");
  if (corpus_per_category < 1) throw ConfigError("config: shape.corpus_per_category must be >= 1");
  if (points_per_cloud < 64) throw ConfigError("config: shape.points_per_cloud must be >= 64");
  hybrid.validate();
  rand.validate();
  reward.validate();
  build_task().validate();
}

env::TaskSpec TrainConfig::build_task() const {
  env::TaskSpec t = env::make_task(task);
  t.episode_length = episode_length;
  t.reward = reward;
  return t;
}

double TrainConfig::resolved_threshold() const {
  return threshold_set ? success_threshold : build_task().suggested_threshold;
}

namespace {

void put(std::string& out, const std::string& key, const std::string& val) {
  out += key;
  out += " = ";
  out += val;
  out += "\n";
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

}  // namespace

std::string resolved_config_text(const TrainConfig& c) {
  std::string out;
  put(out, "env.task", c.task);
  put(out, "env.num_envs", std::to_string(c.num_envs));
  put(out, "env.episode_length", std::to_string(c.episode_length));
  put(out, "env.use_shape_feature", fmt_bool(c.use_shape_feature));
  put(out, "rand.mass_lo", fmt_double(c.rand.mass_lo));
  put(out, "rand.mass_hi", fmt_double(c.rand.mass_hi));
  put(out, "rand.friction_lo", fmt_double(c.rand.friction_lo));
  put(out, "rand.friction_hi", fmt_double(c.rand.friction_hi));
  put(out, "rand.length_jitter", fmt_double(c.rand.length_jitter));
  put(out, "rand.spawn_pos_jitter", fmt_double(c.rand.spawn_pos_jitter));
  put(out, "rand.spawn_angle_jitter", fmt_double(c.rand.spawn_angle_jitter));
  put(out, "rand.spawn_vel_jitter", fmt_double(c.rand.spawn_vel_jitter));
  put(out, "reward.w_p", fmt_double(c.reward.w_p));
  put(out, "reward.w_o", fmt_double(c.reward.w_o));
  put(out, "reward.w_a", fmt_double(c.reward.w_a));
  put(out, "reward.c1", fmt_double(c.reward.c1));
  put(out, "reward.c2", fmt_double(c.reward.c2));
  std::string hidden;
  for (std::size_t idx = 0; idx < c.hidden.size(); ++idx) {
    if (idx) hidden += ",";
    hidden += std::to_string(c.hidden[idx]);
  }
  put(out, "net.hidden", hidden);
  put(out, "net.batch_norm", fmt_bool(c.batch_norm));
  put(out, "net.penultimate_norm", fmt_bool(c.penultimate_norm));
  put(out, "net.final_layer_scale", fmt_double(c.final_layer_scale));
  put(out, "net.init_log_std", fmt_double(c.init_log_std));
  put(out, "hybrid.beta1", fmt_double(c.hybrid.beta1));
  put(out, "hybrid.beta2", fmt_double(c.hybrid.beta2));
  put(out, "hybrid.beta3", fmt_double(c.hybrid.beta3));
  put(out, "hybrid.alpha", fmt_double(c.hybrid.alpha));
  put(out, "hybrid.k_start", fmt_double(c.hybrid.k_start));
  put(out, "hybrid.k_end", fmt_double(c.hybrid.k_end));
  put(out, "hybrid.k_intrinsic", fmt_double(c.hybrid.k_intrinsic));
  put(out, "hybrid.gamma", fmt_double(c.hybrid.gamma));
  put(out, "hybrid.clip_eps", fmt_double(c.hybrid.clip_eps));
  put(out, "hybrid.use_gae", fmt_bool(c.hybrid.use_gae));
  put(out, "hybrid.gae_lambda", fmt_double(c.hybrid.gae_lambda));
  put(out, "hybrid.normalize_advantage", fmt_bool(c.hybrid.normalize_advantage));
  put(out, "shape.corpus_per_category", std::to_string(c.corpus_per_category));
  put(out, "shape.points_per_cloud", std::to_string(c.points_per_cloud));
  put(out, "train.seed", std::to_string(c.seed));
  put(out, "train.total_env_steps", std::to_string(c.total_env_steps));
  put(out, "train.stop_env_steps", std::to_string(c.stop_env_steps));
  put(out, "train.horizon", std::to_string(c.horizon));
  put(out, "train.epochs", std::to_string(c.epochs));
  put(out, "train.minibatches", std::to_string(c.minibatches));
  put(out, "train.lr_policy", fmt_double(c.lr_policy));
  put(out, "train.lr_value", fmt_double(c.lr_value));
  put(out, "train.lr_lyapunov", fmt_double(c.lr_lyapunov));
  put(out, "train.entropy_coef", fmt_double(c.entropy_coef));
  put(out, "train.eval_every_updates", std::to_string(c.eval_every_updates));
  put(out, "train.eval_episodes", std::to_string(c.eval_episodes));
  put(out, "train.success_threshold", fmt_double(c.resolved_threshold()));
  return out;
}

}  // namespace ltc::train
