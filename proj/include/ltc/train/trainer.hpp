#pragma once

#include <array>
#include <deque>
#include <iosfwd>

#include "ltc/loss/losses.hpp"
#include "ltc/nn/adam.hpp"
#include "ltc/shape/features.hpp"
#include "ltc/train/config.hpp"
#include "ltc/train/rollout.hpp"

namespace ltc::train {

struct EvalReport {
  int episodes = 0;
  double threshold = 0.0;
  bool disturbed = false;
  double success_rate = 0.0;
  double mean_return = 0.0;
  double mean_length = 0.0;
  std::array<std::int64_t, 5> reason_counts{};  // indexed by DoneReason
  Vec episode_returns;
};

struct MetricsRow {
  std::uint64_t update = 0;
  std::uint64_t env_steps = 0;
  std::uint64_t episodes = 0;
  double return_last = 0.0;     // raw: most recently finished episode
  double return_mean100 = 0.0;  // smoothed: rolling 100-episode window
  double success_rate100 = 0.0;
  loss::LossReport losses;
  double k = 0.0;
};

std::string metrics_header();
std::string metrics_row_text(const MetricsRow& row);

class Trainer {
 public:
  explicit Trainer(const TrainConfig& cfg);

  // One horizon of steps from every env; episodes continue across calls.
  RolloutBatch collect();

  // Advantages once from the pre-update networks, then epochs x minibatches
  // of gradient steps. A non-finite loss aborts the whole update and
  // restores the pre-update parameters and optimizer states.
  loss::LossReport update(RolloutBatch& batch, double k_now);

  // The full loop: writes resolved-config.txt, metrics.csv, eval.csv and
  // checkpoints into out_dir (created if needed).
  void train(const std::string& out_dir);

  // Deterministic-mean policy; success = return > threshold. Disturbed mode
  // filters every observation the policy sees through perturb_observation.
  // Consumes a fresh eval stream each call; training streams are untouched.
  EvalReport evaluate(int episodes, double threshold, bool disturb,
                      const std::string& dump_dir = "");

  void save_checkpoint(std::ostream& os) const;
  void load_checkpoint(std::istream& is);

  // Ramp position for the update that starts at the current step count.
  double k_now() const;

  std::uint64_t env_steps() const { return env_steps_; }
  std::uint64_t updates_done() const { return updates_; }
  std::uint64_t episodes_done() const { return episodes_; }
  const TrainConfig& config() const { return cfg_; }
  const env::TaskSpec& task() const { return task_; }
  const env::ObsScaler& scaler() const { return scaler_; }
  const shape::Corpus& corpus() const { return corpus_; }
  const nets::GaussianPolicy& policy() const { return policy_; }
  const nets::ValueCritic& value_critic() const { return value_; }
  const nets::LyapunovCritic& lyapunov_critic() const { return lyap_; }
  double threshold() const { return threshold_; }

 private:
  void write_checkpoint_file(const std::string& path) const;
  double window_mean(const std::deque<double>& w) const;

  TrainConfig cfg_;
  env::TaskSpec task_;
  env::ObsScaler scaler_;
  shape::Corpus corpus_;

  nets::GaussianPolicy policy_;
  nets::ValueCritic value_;
  nets::LyapunovCritic lyap_;
  nn::AdamState opt_policy_;
  nn::AdamState opt_value_;
  nn::AdamState opt_lyap_;
  nn::AdamVecState opt_log_std_;

  std::vector<env::TossCatchEnv> envs_;
  Mat cur_obs_;  // raw (unscaled) current observation per env
  Vec env_return_;
  std::vector<std::uint64_t> env_len_;
  Rng action_rng_;
  Rng shuffle_rng_;

  std::uint64_t env_steps_ = 0;
  std::uint64_t updates_ = 0;
  std::uint64_t episodes_ = 0;
  std::uint64_t evals_ = 0;
  std::deque<double> window_returns_;
  std::deque<std::uint8_t> window_success_;
  double last_return_ = 0.0;
  double threshold_ = 15.0;

  friend std::string checkpoint_config_text(std::istream& is);
};

// Reads just the embedded resolved config from a checkpoint stream.
std::string checkpoint_config_text(std::istream& is);

}  // namespace ltc::train
