#include "ltc/train/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ltc/adv/hybrid.hpp"

namespace ltc::train {

namespace {

std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool report_finite(const loss::LossReport& r) {
  return std::isfinite(r.policy_loss) && std::isfinite(r.value_loss) &&
         std::isfinite(r.lyapunov_risk) && std::isfinite(r.entropy) &&
         std::isfinite(r.clip_fraction);
}

shape::ShapeCategory category_for(int index) {
  return static_cast<shape::ShapeCategory>(index % 3);
}

}  // namespace

std::string metrics_header() {
  return "update,env_steps,episodes,return_last,return_mean_100,success_rate_100,"
         "policy_loss,value_loss,lyapunov_risk,entropy,clip_fraction,k";
}

std::string metrics_row_text(const MetricsRow& r) {
  std::string out;
  out += std::to_string(r.update) + ",";
  out += std::to_string(r.env_steps) + ",";
  out += std::to_string(r.episodes) + ",";
  out += fmt17(r.return_last) + ",";
  out += fmt17(r.return_mean100) + ",";
  out += fmt17(r.success_rate100) + ",";
  out += fmt17(r.losses.policy_loss) + ",";
  out += fmt17(r.losses.value_loss) + ",";
  out += fmt17(r.losses.lyapunov_risk) + ",";
  out += fmt17(r.losses.entropy) + ",";
  out += fmt17(r.losses.clip_fraction) + ",";
  out += fmt17(r.k);
  return out;
}

Trainer::Trainer(const TrainConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  task_ = cfg_.build_task();
  cfg_.hybrid.dt = task_.world.dt;  // the Lie derivative uses the control period
  threshold_ = cfg_.resolved_threshold();
  scaler_ = env::make_scaler(task_);

  Rng corpus_rng = Rng::stream(cfg_.seed, Stream::kShapeCorpus, 0);
  corpus_ = shape::build_corpus(cfg_.corpus_per_category, cfg_.points_per_cloud, corpus_rng);

  nn::MlpOptions policy_opts;
  policy_opts.batch_norm = cfg_.batch_norm;
  policy_opts.penultimate_norm = cfg_.penultimate_norm;
  policy_opts.final_layer_scale = cfg_.final_layer_scale;
  nn::MlpOptions critic_opts = policy_opts;
  critic_opts.final_layer_scale = 1.0;

  Rng init_policy = Rng::stream(cfg_.seed, Stream::kInit, 0);
  Rng init_value = Rng::stream(cfg_.seed, Stream::kInit, 1);
  Rng init_lyap = Rng::stream(cfg_.seed, Stream::kInit, 2);
  policy_.body = nn::make_mlp(env::obs::kDim, cfg_.hidden, env::kActionDim, init_policy,
                              policy_opts);
  policy_.log_std.assign(env::kActionDim, cfg_.init_log_std);
  value_.body = nn::make_mlp(env::obs::kDim, cfg_.hidden, 1, init_value, critic_opts);
  lyap_.body = nn::make_mlp(env::obs::kDim, cfg_.hidden, 1, init_lyap, critic_opts);
  lyap_.equilibrium_obs = scaler_.apply(env::equilibrium_observation(task_));

  opt_policy_ = nn::AdamState::init(policy_.body);
  opt_value_ = nn::AdamState::init(value_.body);
  opt_lyap_ = nn::AdamState::init(lyap_.body);
  opt_log_std_ = nn::AdamVecState::init(policy_.log_std.size());

  envs_.reserve(static_cast<std::size_t>(cfg_.num_envs));
  cur_obs_ = Mat(cfg_.num_envs, env::obs::kDim);
  for (int e = 0; e < cfg_.num_envs; ++e) {
    envs_.emplace_back(task_, cfg_.rand, category_for(e), corpus_.pca, cfg_.use_shape_feature,
                       Rng::stream(cfg_.seed, Stream::kEnv, static_cast<std::uint64_t>(e)));
    const Vec o = envs_.back().observation();
    for (int j = 0; j < env::obs::kDim; ++j) cur_obs_(e, j) = o[static_cast<std::size_t>(j)];
  }
  env_return_.assign(static_cast<std::size_t>(cfg_.num_envs), 0.0);
  env_len_.assign(static_cast<std::size_t>(cfg_.num_envs), 0);
  action_rng_ = Rng::stream(cfg_.seed, Stream::kActionNoise, 0);
  shuffle_rng_ = Rng::stream(cfg_.seed, Stream::kShuffle, 0);
}

RolloutBatch Trainer::collect() {
  const int n = cfg_.num_envs;
  const int h = cfg_.horizon;
  const int total = n * h;
  RolloutBatch b;
  b.num_envs = n;
  b.horizon = h;
  b.obs = Mat(total, env::obs::kDim);
  b.next_obs = Mat(total, env::obs::kDim);
  b.lyap_obs = Mat(total, env::obs::kDim);
  b.lyap_next_obs = Mat(total, env::obs::kDim);
  b.action_raw = Mat(total, env::kActionDim);
  b.log_prob_old.assign(static_cast<std::size_t>(total), 0.0);
  b.reward.assign(static_cast<std::size_t>(total), 0.0);
  b.done.assign(static_cast<std::size_t>(total), 0);
  b.done_reason.assign(static_cast<std::size_t>(total), 0);

  const Vec std = nets::policy_std(policy_);
  Vec raw(env::obs::kDim);
  Vec action_raw(env::kActionDim), action(env::kActionDim);

  for (int t = 0; t < h; ++t) {
    Mat sobs(n, env::obs::kDim);
    for (int e = 0; e < n; ++e) {
      raw.assign(cur_obs_.row(e), cur_obs_.row(e) + env::obs::kDim);
      const Vec s = scaler_.apply(raw);
      for (int j = 0; j < env::obs::kDim; ++j) sobs(e, j) = s[static_cast<std::size_t>(j)];
    }
    const Mat mean = nn::forward_eval(policy_.body, sobs);

    for (int e = 0; e < n; ++e) {
      const int i = b.index(t, e);
      raw.assign(cur_obs_.row(e), cur_obs_.row(e) + env::obs::kDim);
      for (int j = 0; j < env::obs::kDim; ++j) b.obs(i, j) = sobs(e, j);
      const Vec lobs = scaler_.apply(env::to_goal_relative(raw));
      for (int j = 0; j < env::obs::kDim; ++j) b.lyap_obs(i, j) = lobs[static_cast<std::size_t>(j)];

      for (int j = 0; j < env::kActionDim; ++j) {
        const std::size_t sj = static_cast<std::size_t>(j);
        action_raw[sj] = mean(e, j) + std[sj] * action_rng_.normal();
        action[sj] = clamp(action_raw[sj], -1.0, 1.0);
        b.action_raw(i, j) = action_raw[sj];
      }
      b.log_prob_old[static_cast<std::size_t>(i)] =
          nets::gaussian_log_prob(mean.row(e), std.data(), action_raw.data(), env::kActionDim);

      env::TossCatchEnv::StepOut out = envs_[static_cast<std::size_t>(e)].step(action);
      b.reward[static_cast<std::size_t>(i)] = out.reward.total;
      b.done[static_cast<std::size_t>(i)] = out.done ? 1 : 0;
      b.done_reason[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(out.reason);
      env_return_[static_cast<std::size_t>(e)] += out.reward.total;
      env_len_[static_cast<std::size_t>(e)] += 1;

      const Vec& raw_next = out.obs;
      const Vec snext = scaler_.apply(raw_next);
      for (int j = 0; j < env::obs::kDim; ++j) b.next_obs(i, j) = snext[static_cast<std::size_t>(j)];
      const Vec lnext = scaler_.apply(env::to_goal_relative(raw_next));
      for (int j = 0; j < env::obs::kDim; ++j)
        b.lyap_next_obs(i, j) = lnext[static_cast<std::size_t>(j)];

      if (out.done) {
        const double ret = env_return_[static_cast<std::size_t>(e)];
        last_return_ = ret;
        window_returns_.push_back(ret);
        window_success_.push_back(ret > threshold_ ? 1 : 0);
        if (window_returns_.size() > 100) window_returns_.pop_front();
        if (window_success_.size() > 100) window_success_.pop_front();
        episodes_ += 1;
        env_return_[static_cast<std::size_t>(e)] = 0.0;
        env_len_[static_cast<std::size_t>(e)] = 0;
        const Vec fresh = envs_[static_cast<std::size_t>(e)].reset();
        for (int j = 0; j < env::obs::kDim; ++j) cur_obs_(e, j) = fresh[static_cast<std::size_t>(j)];
      } else {
        for (int j = 0; j < env::obs::kDim; ++j)
          cur_obs_(e, j) = raw_next[static_cast<std::size_t>(j)];
      }
    }
    env_steps_ += static_cast<std::uint64_t>(n);
  }
  return b;
}

loss::LossReport Trainer::update(RolloutBatch& batch, double k_now) {
  adv::batch_advantages(batch, value_, lyap_, cfg_.hybrid, k_now);

  struct Snapshot {
    nets::GaussianPolicy policy;
    nets::ValueCritic value;
    nets::LyapunovCritic lyap;
    nn::AdamState op, ov, ol;
    nn::AdamVecState ols;
  };
  const Snapshot before{policy_, value_, lyap_, opt_policy_, opt_value_, opt_lyap_, opt_log_std_};

  loss::UpdateConfig ucfg;
  ucfg.clip_eps = cfg_.hybrid.clip_eps;
  ucfg.entropy_coef = cfg_.entropy_coef;
  ucfg.dt = cfg_.hybrid.dt;

  nn::AdamConfig apol, aval, alya;
  apol.lr = cfg_.lr_policy;
  aval.lr = cfg_.lr_value;
  alya.lr = cfg_.lr_lyapunov;

  const int total = batch.size();
  const int mb_size = total / cfg_.minibatches;
  std::vector<int> perm(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) perm[static_cast<std::size_t>(i)] = i;

  loss::LossReport acc;
  int count = 0;
  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    shuffle_indices(perm, shuffle_rng_);
    for (int mb = 0; mb < cfg_.minibatches; ++mb) {
      const std::vector<int> rows(perm.begin() + mb * mb_size,
                                  perm.begin() + (mb + 1) * mb_size);
      loss::UpdateGrads grads;
      loss::UpdateCaches caches;
      const loss::LossReport rep =
          loss::update_losses(batch, rows, policy_, value_, lyap_, ucfg, &grads, &caches);
      if (!report_finite(rep)) {
        policy_ = before.policy;
        value_ = before.value;
        lyap_ = before.lyap;
        opt_policy_ = before.op;
        opt_value_ = before.ov;
        opt_lyap_ = before.ol;
        opt_log_std_ = before.ols;
        updates_ += 1;
        return rep;  // non-finite fields make the abort visible in the log
      }
      nn::adam_step(policy_.body, grads.policy, opt_policy_, apol);
      nn::adam_step(policy_.log_std, grads.dlog_std, opt_log_std_, apol);
      nn::adam_step(value_.body, grads.value, opt_value_, aval);
      nn::adam_step(lyap_.body, grads.lyap, opt_lyap_, alya);
      nn::update_running_stats(policy_.body, caches.policy);
      nn::update_running_stats(value_.body, caches.value);
      nn::update_running_stats(lyap_.body, caches.lyap);
      acc.policy_loss += rep.policy_loss;
      acc.value_loss += rep.value_loss;
      acc.lyapunov_risk += rep.lyapunov_risk;
      acc.entropy += rep.entropy;
      acc.clip_fraction += rep.clip_fraction;
      count += 1;
    }
  }
  acc.policy_loss /= count;
  acc.value_loss /= count;
  acc.lyapunov_risk /= count;
  acc.entropy /= count;
  acc.clip_fraction /= count;
  updates_ += 1;
  return acc;
}

double Trainer::k_now() const {
  const std::uint64_t spu =
      static_cast<std::uint64_t>(cfg_.num_envs) * static_cast<std::uint64_t>(cfg_.horizon);
  // The last update of a full run starts at total - spu; stretching the ramp
  // to that point makes the logged k hit k_end exactly.
  const std::uint64_t denom = cfg_.total_env_steps > spu ? cfg_.total_env_steps - spu : 1;
  return adv::k_schedule(env_steps_, denom, cfg_.hybrid.k_start, cfg_.hybrid.k_end);
}

double Trainer::window_mean(const std::deque<double>& w) const {
  if (w.empty()) return 0.0;
  double s = 0.0;
  for (double x : w) s += x;
  return s / static_cast<double>(w.size());
}

void Trainer::train(const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  {
    std::ofstream rc(out_dir + "/resolved-config.txt");
    if (!rc) fail("train: cannot write resolved-config.txt in " + out_dir);
    rc << resolved_config_text(cfg_);
  }
  std::ofstream metrics(out_dir + "/metrics.csv");
  if (!metrics) fail("train: cannot write metrics.csv in " + out_dir);
  metrics << metrics_header() << "\n";
  std::ofstream evalcsv(out_dir + "/eval.csv");
  if (!evalcsv) fail("train: cannot write eval.csv in " + out_dir);
  evalcsv << "update,env_steps,episodes,threshold,success_rate,mean_return,mean_length,"
             "n_none,n_fell,n_out_of_bounds,n_timeout,n_success_hold\n";

  const std::uint64_t stop =
      cfg_.stop_env_steps == 0 ? cfg_.total_env_steps : cfg_.stop_env_steps;

  while (env_steps_ < stop) {
    const double k = k_now();
    RolloutBatch batch = collect();
    const loss::LossReport rep = update(batch, k);

    MetricsRow row;
    row.update = updates_;
    row.env_steps = env_steps_;
    row.episodes = episodes_;
    row.return_last = last_return_;
    row.return_mean100 = window_mean(window_returns_);
    double succ = 0.0;
    if (!window_success_.empty()) {
      for (std::uint8_t s : window_success_) succ += s;
      succ /= static_cast<double>(window_success_.size());
    }
    row.success_rate100 = succ;
    row.losses = rep;
    row.k = k;
    metrics << metrics_row_text(row) << "\n";
    metrics.flush();
    if (!metrics) fail("train: metrics.csv write failed");

    if (updates_ % cfg_.eval_every_updates == 0) {
      const EvalReport er = evaluate(cfg_.eval_episodes, threshold_, false);
      evalcsv << updates_ << ',' << env_steps_ << ',' << er.episodes << ',' << fmt17(er.threshold)
              << ',' << fmt17(er.success_rate) << ',' << fmt17(er.mean_return) << ','
              << fmt17(er.mean_length);
      for (std::int64_t c : er.reason_counts) evalcsv << ',' << c;
      evalcsv << "\n";
      evalcsv.flush();
      write_checkpoint_file(out_dir + "/checkpoint_step" + std::to_string(env_steps_) + ".ckpt");
    }
  }
  write_checkpoint_file(out_dir + "/checkpoint_final.ckpt");
}

EvalReport Trainer::evaluate(int episodes, double threshold, bool disturb,
                             const std::string& dump_dir) {
  check(episodes >= 1, "evaluate: episodes must be >= 1");
  namespace fs = std::filesystem;
  if (!dump_dir.empty()) fs::create_directories(dump_dir);

  const std::uint64_t eval_index = evals_;
  evals_ += 1;
  Rng dist_rng = Rng::stream(cfg_.seed, Stream::kDisturb, eval_index);
  const env::DisturbanceSpec dspec;

  EvalReport rep;
  rep.episodes = episodes;
  rep.threshold = threshold;
  rep.disturbed = disturb;

  double ret_sum = 0.0, len_sum = 0.0;
  int successes = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    env::TossCatchEnv env(task_, cfg_.rand, category_for(ep), corpus_.pca,
                          cfg_.use_shape_feature,
                          Rng::stream(cfg_.seed, Stream::kEvalEnv,
                                      eval_index * 1000000ull + static_cast<std::uint64_t>(ep)));
    std::ofstream dump;
    if (!dump_dir.empty()) {
      char name[32];
      std::snprintf(name, sizeof name, "/episode_%04d.csv", ep);
      dump.open(dump_dir + name);
      if (!dump) fail("evaluate: cannot write episode dump in " + dump_dir);
      env::write_trajectory_header(dump);
    }

    double ret = 0.0;
    int len = 0;
    env::DoneReason reason = env::DoneReason::kNone;
    for (;;) {
      Vec raw = env.observation();
      if (disturb) raw = env::perturb_observation(raw, dspec, dist_rng);
      const Vec action = nets::policy_mean_action(policy_, scaler_.apply(raw));
      const env::TossCatchEnv::StepOut out = env.step(action);
      ret += out.reward.total;
      len += 1;
      if (dump.is_open()) env::write_trajectory_row(dump, env.state(), out.reward, out.reason);
      if (out.done) {
        reason = out.reason;
        break;
      }
    }
    ret_sum += ret;
    len_sum += len;
    if (ret > threshold) successes += 1;
    rep.reason_counts[static_cast<std::size_t>(reason)] += 1;
    rep.episode_returns.push_back(ret);
  }
  rep.success_rate = static_cast<double>(successes) / static_cast<double>(episodes);
  rep.mean_return = ret_sum / static_cast<double>(episodes);
  rep.mean_length = len_sum / static_cast<double>(episodes);
  return rep;
}

void Trainer::write_checkpoint_file(const std::string& path) const {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail("checkpoint: cannot open " + path + " for writing");
  save_checkpoint(f);
  f.flush();
  if (!f) fail("checkpoint: write to " + path + " failed");
}

}  // namespace ltc::train
