#pragma once

#include <cstdint>
#include <string>

#include "ltc/adv/hybrid.hpp"
#include "ltc/env/toss_catch.hpp"

namespace ltc::train {

// Everything a training run needs, resolvable to and from the flat
// `key = value` config format. Defaults here are the shipped defaults;
// resolved_config_text materializes all of them so a run can be replayed
// from its own output directory.
struct TrainConfig {
  // env.*
  std::string task = "underarm";
  int num_envs = 64;
  int episode_length = 100;
  bool use_shape_feature = true;
  env::RandomizationSpec rand;

  // reward.*
  reward::RewardConfig reward;

  // net.*
  std::vector<int> hidden = {256, 256, 128};
  bool batch_norm = true;
  bool penultimate_norm = true;
  double final_layer_scale = 0.01;
  double init_log_std = -0.69314718055994531;  // std 0.5

  // hybrid.*
  adv::HybridConfig hybrid;

  // shape.*
  int corpus_per_category = 50;
  int points_per_cloud = 256;

  // train.*
  std::uint64_t seed = 1;
  std::uint64_t total_env_steps = 2'000'000;
  // Stop collection at this step count while schedules still span
  // total_env_steps; 0 means run to the end. Split runs stay bit-equal to
  // uninterrupted ones because nothing downstream reads it.
  std::uint64_t stop_env_steps = 0;
  int horizon = 8;
  int epochs = 4;
  int minibatches = 4;
  double lr_policy = 3e-4;
  double lr_value = 3e-4;
  double lr_lyapunov = 1e-3;
  double entropy_coef = 0.003;
  std::uint64_t eval_every_updates = 500;
  int eval_episodes = 10;
  double success_threshold = 0.0;  // 0 = take the task default
  bool threshold_set = false;

  void validate() const;
  env::TaskSpec build_task() const;
  double resolved_threshold() const;
};

// Parses flat `key = value` lines; '#' starts a comment, blank lines are
// skipped, unknown keys are errors. Later lines override earlier ones.
TrainConfig parse_config_text(const std::string& text);
TrainConfig load_config_file(const std::string& path);

// All keys, all values materialized, doubles at full precision. Feeding the
// output back through parse_config_text reproduces the config exactly.
std::string resolved_config_text(const TrainConfig& cfg);

}  // namespace ltc::train
