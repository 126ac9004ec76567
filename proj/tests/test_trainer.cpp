#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "ltc/adv/hybrid.hpp"
#include "ltc/nn/serialize.hpp"
#include "ltc/train/trainer.hpp"

using namespace ltc;
namespace fs = std::filesystem;

namespace {

// Small nets and few envs keep each trainer test well under a second.
train::TrainConfig tiny_config() {
  train::TrainConfig cfg;
  cfg.task = "underarm";
  cfg.num_envs = 8;
  cfg.episode_length = 10;
  cfg.hidden = {16, 16};
  cfg.corpus_per_category = 6;
  cfg.points_per_cloud = 128;
  cfg.seed = 42;
  cfg.total_env_steps = 4096;
  cfg.horizon = 8;
  cfg.epochs = 2;
  cfg.minibatches = 2;
  cfg.eval_episodes = 2;
  return cfg;
}

std::string mlp_bytes(const nn::MlpParams& p) {
  std::ostringstream os(std::ios::binary);
  nn::write_mlp(os, p);
  return os.str();
}

std::string net_snapshot(const train::Trainer& t) {
  std::ostringstream os(std::ios::binary);
  nn::write_mlp(os, t.policy().body);
  nn::io::write_vec(os, t.policy().log_std);
  nn::write_mlp(os, t.value_critic().body);
  nn::write_mlp(os, t.lyapunov_critic().body);
  return os.str();
}

bool reports_identical(const loss::LossReport& a, const loss::LossReport& b) {
  return a.policy_loss == b.policy_loss && a.value_loss == b.value_loss &&
         a.lyapunov_risk == b.lyapunov_risk && a.entropy == b.entropy &&
         a.clip_fraction == b.clip_fraction;
}

}  // namespace

TEST_CASE("collect returns a time-major batch with aligned episode flags") {
  train::Trainer t(tiny_config());
  train::RolloutBatch b = t.collect();

  CHECK(b.num_envs == 8);
  CHECK(b.horizon == 8);
  CHECK(b.size() == 64);
  CHECK(b.obs.rows == 64);
  CHECK(b.obs.cols == env::obs::kDim);
  CHECK(b.next_obs.rows == 64);
  CHECK(b.action_raw.cols == env::kActionDim);
  CHECK(b.index(0, 0) == 0);
  CHECK(b.index(1, 0) == b.num_envs);
  CHECK(t.env_steps() == 64);

  int dones = 0;
  for (int i = 0; i < b.size(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    CHECK(std::isfinite(b.reward[k]));
    CHECK(std::isfinite(b.log_prob_old[k]));
    if (b.done[k]) {
      ++dones;
      CHECK(b.done_reason[k] > 0);  // a finished episode names its reason
    }
  }
  // episode_length 10 over 8 steps/env: some envs finished, none twice.
  CHECK(t.episodes_done() == static_cast<std::uint64_t>(dones));
}

TEST_CASE("episodes persist across collect calls") {
  train::Trainer t(tiny_config());
  t.collect();
  t.collect();  // by 16 steps every env has passed the 10-step timeout
  CHECK(t.env_steps() == 128);
  CHECK(t.episodes_done() >= 8);
}

TEST_CASE("two trainers from the same config evolve bit-identically") {
  train::Trainer a(tiny_config());
  train::Trainer b(tiny_config());
  for (int it = 0; it < 3; ++it) {
    train::RolloutBatch ba = a.collect();
    train::RolloutBatch bb = b.collect();
    const loss::LossReport ra = a.update(ba, a.k_now());
    const loss::LossReport rb = b.update(bb, b.k_now());
    CHECK(reports_identical(ra, rb));
  }
  CHECK(net_snapshot(a) == net_snapshot(b));
  CHECK(a.env_steps() == b.env_steps());
  CHECK(a.episodes_done() == b.episodes_done());
}

TEST_CASE("a poisoned batch aborts the update and restores parameters") {
  train::Trainer t(tiny_config());
  train::RolloutBatch b = t.collect();
  const std::string before = net_snapshot(t);
  const std::uint64_t updates_before = t.updates_done();

  b.reward[3] = std::numeric_limits<double>::quiet_NaN();
  const loss::LossReport rep = t.update(b, t.k_now());

  CHECK(!std::isfinite(rep.policy_loss));  // the abort is visible in the log
  CHECK(net_snapshot(t) == before);
  CHECK(t.updates_done() == updates_before + 1);

  // The trainer keeps working on clean data afterwards.
  train::RolloutBatch c = t.collect();
  const loss::LossReport ok = t.update(c, t.k_now());
  CHECK(std::isfinite(ok.policy_loss));
  CHECK(net_snapshot(t) != before);
}

TEST_CASE("k_now follows the configured ramp over collected steps") {
  train::TrainConfig cfg = tiny_config();
  cfg.hybrid.k_start = 0.2;
  cfg.hybrid.k_end = 0.8;
  train::Trainer t(cfg);
  CHECK(t.k_now() == doctest::Approx(0.2).epsilon(1e-12));

  // The ramp is stretched so the run's final update starts at k_end: its
  // denominator is total minus one update's worth of steps.
  const std::uint64_t spu =
      static_cast<std::uint64_t>(cfg.num_envs) * static_cast<std::uint64_t>(cfg.horizon);
  const std::uint64_t span = cfg.total_env_steps - spu;
  double prev = t.k_now();
  for (int it = 0; it < 4; ++it) {
    t.collect();
    const double k = t.k_now();
    CHECK(k >= prev);
    CHECK(k == doctest::Approx(adv::k_schedule(t.env_steps(), span, 0.2, 0.8)).epsilon(1e-12));
    prev = k;
  }
  CHECK(prev == doctest::Approx(0.2 + 0.6 * 256.0 / 4032.0).epsilon(1e-12));
}

TEST_CASE("train writes config, metrics, eval rows, and a final checkpoint") {
  const fs::path dir = fs::temp_directory_path() / "ltc_test_trainer_out";
  fs::remove_all(dir);

  train::TrainConfig cfg = tiny_config();
  cfg.total_env_steps = 3 * 64;  // exactly three updates
  cfg.eval_every_updates = 2;
  train::Trainer t(cfg);
  t.train(dir.string());

  CHECK(fs::exists(dir / "resolved-config.txt"));
  CHECK(fs::exists(dir / "metrics.csv"));
  CHECK(fs::exists(dir / "eval.csv"));
  CHECK(fs::exists(dir / "checkpoint_final.ckpt"));

  std::ifstream metrics(dir / "metrics.csv");
  std::string line;
  std::getline(metrics, line);
  CHECK(line == train::metrics_header());
  int rows = 0;
  while (std::getline(metrics, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);

  std::ifstream eval(dir / "eval.csv");
  int eval_lines = 0;
  while (std::getline(eval, line))
    if (!line.empty()) ++eval_lines;
  CHECK(eval_lines >= 2);  // header plus the update-2 eval

  // The resolved config in the directory replays to the same config.
  std::ifstream rc(dir / "resolved-config.txt");
  std::stringstream buf;
  buf << rc.rdbuf();
  CHECK(train::resolved_config_text(train::parse_config_text(buf.str())) == buf.str());

  fs::remove_all(dir);
}

TEST_CASE("evaluate classifies success purely by the return threshold") {
  train::Trainer t(tiny_config());

  train::EvalReport all = t.evaluate(3, -1e15, false);
  CHECK(all.episodes == 3);
  CHECK(all.success_rate == 1.0);

  train::EvalReport none = t.evaluate(3, 1e15, false);
  CHECK(none.success_rate == 0.0);
  CHECK(none.episode_returns.size() == 3);

  std::int64_t reasons = 0;
  for (auto c : none.reason_counts) reasons += c;
  CHECK(reasons == 3);
  CHECK(none.mean_length > 0.0);

  // Disturbed evaluation runs the same machinery on perturbed observations.
  train::EvalReport dist = t.evaluate(2, 0.0, true);
  CHECK(dist.episodes == 2);
  CHECK(dist.disturbed);
  for (double r : dist.episode_returns) CHECK(std::isfinite(r));
}

TEST_CASE("evaluation does not disturb the training stream") {
  train::Trainer a(tiny_config());
  train::Trainer b(tiny_config());
  b.evaluate(2, 0.0, false);
  b.evaluate(2, 0.0, true);

  train::RolloutBatch ba = a.collect();
  train::RolloutBatch bb = b.collect();
  CHECK(reports_identical(a.update(ba, a.k_now()), b.update(bb, b.k_now())));
  CHECK(net_snapshot(a) == net_snapshot(b));
}

TEST_CASE("checkpoint round-trip resumes the exact parameter trajectory") {
  train::Trainer a(tiny_config());
  for (int it = 0; it < 2; ++it) {
    train::RolloutBatch b = a.collect();
    a.update(b, a.k_now());
  }
  std::stringstream ckpt(std::ios::in | std::ios::out | std::ios::binary);
  a.save_checkpoint(ckpt);

  train::Trainer b(tiny_config());
  ckpt.seekg(0);
  b.load_checkpoint(ckpt);
  CHECK(b.env_steps() == a.env_steps());
  CHECK(b.updates_done() == a.updates_done());
  CHECK(b.episodes_done() == a.episodes_done());
  CHECK(net_snapshot(b) == net_snapshot(a));

  train::RolloutBatch ba = a.collect();
  train::RolloutBatch bb = b.collect();
  CHECK(reports_identical(a.update(ba, a.k_now()), b.update(bb, b.k_now())));
  CHECK(net_snapshot(a) == net_snapshot(b));
}

TEST_CASE("a checkpoint embeds the resolved config it was trained with") {
  train::TrainConfig cfg = tiny_config();
  train::Trainer t(cfg);
  std::stringstream ckpt(std::ios::in | std::ios::out | std::ios::binary);
  t.save_checkpoint(ckpt);

  ckpt.seekg(0);
  const std::string text = train::checkpoint_config_text(ckpt);
  CHECK(text == train::resolved_config_text(cfg));
  CHECK(train::resolved_config_text(train::parse_config_text(text)) == text);
}

TEST_CASE("config text round-trips and rejects unknown keys") {
  const train::TrainConfig cfg = tiny_config();
  const std::string text = train::resolved_config_text(cfg);
  const train::TrainConfig back = train::parse_config_text(text);
  CHECK(train::resolved_config_text(back) == text);

  CHECK_THROWS_AS(train::parse_config_text("definitely.not.a.key = 3\n"), ConfigError);
  CHECK_THROWS_AS(train::parse_config_text("env.num_envs = not_a_number\n"), ConfigError);

  // Later lines override earlier ones.
  const train::TrainConfig dup =
      train::parse_config_text("train.horizon = 4\ntrain.horizon = 9\n");
  CHECK(dup.horizon == 9);
}

TEST_CASE("metrics rows carry the update counters in order") {
  train::Trainer t(tiny_config());
  train::RolloutBatch b = t.collect();
  const loss::LossReport rep = t.update(b, t.k_now());

  train::MetricsRow row;
  row.update = t.updates_done();
  row.env_steps = t.env_steps();
  row.episodes = t.episodes_done();
  row.losses = rep;
  row.k = t.k_now();
  const std::string text = train::metrics_row_text(row);

  // Same comma count as the header, starts with the counters.
  const auto commas = [](const std::string& s) {
    return std::count(s.begin(), s.end(), ',');
  };
  CHECK(commas(text) == commas(train::metrics_header()));
  CHECK(text.rfind("1,64,", 0) == 0);
}
