#include "reference/scalar_ref.hpp"

#include <cmath>

namespace ltc::ref {

namespace {

constexpr double kNormEps = 1e-8;

struct LayerStash {
  Mat x;
  Mat z;
  Vec mean;
  Vec var;
  Mat xhat;
  Mat y;  // post-activation, before any penultimate normalization
};

Mat forward_stash(const nn::MlpParams& p, const Mat& input, nn::Mode mode,
                  std::vector<LayerStash>* stash, Vec* pen_norm) {
  const std::size_t nl = p.layers.size();
  if (stash) stash->assign(nl, LayerStash{});
  Mat cur = input;
  for (std::size_t li = 0; li < nl; ++li) {
    const nn::Layer& L = p.layers[li];
    const int n = cur.rows, in = L.in_dim(), out = L.out_dim();
    Mat z(n, out);
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < out; ++r) {
        double acc = L.b[static_cast<std::size_t>(r)];
        for (int c = 0; c < in; ++c) acc += L.w(r, c) * cur(i, c);
        z(i, r) = acc;
      }
    LayerStash* ls = stash ? &(*stash)[li] : nullptr;
    if (ls) {
      ls->x = cur;
      ls->z = z;
    }

    Mat y = z;
    if (L.has_bn) {
      Vec mean(static_cast<std::size_t>(out), 0.0), var(static_cast<std::size_t>(out), 0.0);
      if (mode == nn::Mode::kTrain) {
        for (int j = 0; j < out; ++j) {
          double m = 0.0;
          for (int i = 0; i < n; ++i) m += z(i, j);
          m /= n;
          double v = 0.0;
          for (int i = 0; i < n; ++i) {
            const double d = z(i, j) - m;
            v += d * d;
          }
          mean[static_cast<std::size_t>(j)] = m;
          var[static_cast<std::size_t>(j)] = v / n;
        }
      } else {
        mean = L.bn_running_mean;
        var = L.bn_running_var;
      }
      Mat xhat(n, out);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < out; ++j) {
          const std::size_t sj = static_cast<std::size_t>(j);
          const double xh = (z(i, j) - mean[sj]) / std::sqrt(var[sj] + p.bn_eps);
          xhat(i, j) = xh;
          y(i, j) = L.bn_scale[sj] * xh + L.bn_shift[sj];
        }
      if (ls) {
        ls->mean = std::move(mean);
        ls->var = std::move(var);
        ls->xhat = std::move(xhat);
      }
    }
    if (L.has_elu)
      for (double& v : y.a) v = v > 0.0 ? v : std::expm1(v);
    if (ls) ls->y = y;

    if (p.penultimate_norm && li + 2 == nl) {
      if (pen_norm) pen_norm->assign(static_cast<std::size_t>(n), 0.0);
      for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < y.cols; ++j) s += y(i, j) * y(i, j);
        const double norm = std::sqrt(s);
        if (pen_norm) (*pen_norm)[static_cast<std::size_t>(i)] = norm;
        const double inv = 1.0 / (norm + kNormEps);
        for (int j = 0; j < y.cols; ++j) y(i, j) *= inv;
      }
    }
    cur = std::move(y);
  }
  return cur;
}

}  // namespace

Mat forward_serial(const nn::MlpParams& p, const Mat& input, nn::Mode mode) {
  return forward_stash(p, input, mode, nullptr, nullptr);
}

nn::GradBundle backward_serial(const nn::MlpParams& p, const Mat& input, const Mat& doutput) {
  std::vector<LayerStash> stash;
  Vec pen_norm;
  forward_stash(p, input, nn::Mode::kTrain, &stash, &pen_norm);

  nn::GradBundle grads = nn::zero_grads(p);
  const int n = doutput.rows;
  Mat d = doutput;

  for (int li = static_cast<int>(p.layers.size()) - 1; li >= 0; --li) {
    const nn::Layer& L = p.layers[static_cast<std::size_t>(li)];
    const LayerStash& ls = stash[static_cast<std::size_t>(li)];
    nn::LayerGrads& lg = grads.layers[static_cast<std::size_t>(li)];
    const int out = L.out_dim(), in = L.in_dim();

    if (L.has_elu)
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < out; ++j)
          d(i, j) *= ls.y(i, j) > 0.0 ? 1.0 : ls.y(i, j) + 1.0;

    if (L.has_bn) {
      for (int j = 0; j < out; ++j) {
        const std::size_t sj = static_cast<std::size_t>(j);
        const double m = ls.mean[sj];
        const double invstd = 1.0 / std::sqrt(ls.var[sj] + p.bn_eps);
        const double scale = L.bn_scale[sj];
        double dscale = 0.0, dshift = 0.0, dvar = 0.0, dmean_a = 0.0, dzsum = 0.0;
        for (int i = 0; i < n; ++i) {
          const double dy = d(i, j);
          dscale += dy * ls.xhat(i, j);
          dshift += dy;
          const double dxhat = dy * scale;
          const double zc = ls.z(i, j) - m;
          dvar += dxhat * zc;
          dmean_a += dxhat;
          dzsum += zc;
        }
        dvar *= -0.5 * invstd * invstd * invstd;
        const double dmean = -dmean_a * invstd + dvar * (-2.0 * dzsum / n);
        for (int i = 0; i < n; ++i) {
          const double dxhat = d(i, j) * scale;
          const double zc = ls.z(i, j) - m;
          d(i, j) = dxhat * invstd + dvar * 2.0 * zc / n + dmean / n;
        }
        lg.dscale[sj] = dscale;
        lg.dshift[sj] = dshift;
      }
    }

    for (int r = 0; r < out; ++r) {
      double db = 0.0;
      for (int i = 0; i < n; ++i) {
        const double dz = d(i, r);
        db += dz;
        for (int c = 0; c < in; ++c) lg.dw(r, c) += dz * ls.x(i, c);
      }
      lg.db[static_cast<std::size_t>(r)] = db;
    }

    if (li == 0) break;
    Mat dx(n, in);
    for (int i = 0; i < n; ++i)
      for (int r = 0; r < out; ++r) {
        const double dz = d(i, r);
        for (int c = 0; c < in; ++c) dx(i, c) += dz * L.w(r, c);
      }

    if (p.penultimate_norm && li == static_cast<int>(p.layers.size()) - 1) {
      const LayerStash& prev = stash[static_cast<std::size_t>(li - 1)];
      for (int i = 0; i < n; ++i) {
        const double norm = pen_norm[static_cast<std::size_t>(i)];
        const double s = norm + kNormEps;
        double dot = 0.0;
        for (int c = 0; c < in; ++c) dot += prev.y(i, c) * dx(i, c);
        const double coef = norm > 0.0 ? dot / (s * s * norm) : 0.0;
        for (int c = 0; c < in; ++c) dx(i, c) = dx(i, c) / s - prev.y(i, c) * coef;
      }
    }
    d = std::move(dx);
  }
  return grads;
}

PlainPpo::PlainPpo(const train::TrainConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  task_ = cfg_.build_task();
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
  policy_.body =
      nn::make_mlp(env::obs::kDim, cfg_.hidden, env::kActionDim, init_policy, policy_opts);
  policy_.log_std.assign(env::kActionDim, cfg_.init_log_std);
  value_.body = nn::make_mlp(env::obs::kDim, cfg_.hidden, 1, init_value, critic_opts);
  opt_policy_ = nn::AdamState::init(policy_.body);
  opt_value_ = nn::AdamState::init(value_.body);
  opt_log_std_ = nn::AdamVecState::init(policy_.log_std.size());

  cur_obs_ = Mat(cfg_.num_envs, env::obs::kDim);
  for (int e = 0; e < cfg_.num_envs; ++e) {
    envs_.emplace_back(task_, cfg_.rand, static_cast<shape::ShapeCategory>(e % 3), corpus_.pca,
                       cfg_.use_shape_feature,
                       Rng::stream(cfg_.seed, Stream::kEnv, static_cast<std::uint64_t>(e)));
    const Vec o = envs_.back().observation();
    for (int j = 0; j < env::obs::kDim; ++j) cur_obs_(e, j) = o[static_cast<std::size_t>(j)];
  }
  action_rng_ = Rng::stream(cfg_.seed, Stream::kActionNoise, 0);
  shuffle_rng_ = Rng::stream(cfg_.seed, Stream::kShuffle, 0);
}

train::RolloutBatch PlainPpo::collect() {
  const int n = cfg_.num_envs, h = cfg_.horizon;
  train::RolloutBatch b;
  b.num_envs = n;
  b.horizon = h;
  const int total = n * h;
  b.obs = Mat(total, env::obs::kDim);
  b.next_obs = Mat(total, env::obs::kDim);
  b.action_raw = Mat(total, env::kActionDim);
  b.log_prob_old.assign(static_cast<std::size_t>(total), 0.0);
  b.reward.assign(static_cast<std::size_t>(total), 0.0);
  b.done.assign(static_cast<std::size_t>(total), 0);

  const Vec std = nets::policy_std(policy_);
  Vec raw(env::obs::kDim), action_raw(env::kActionDim), action(env::kActionDim);
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
      for (int j = 0; j < env::obs::kDim; ++j) b.obs(i, j) = sobs(e, j);
      for (int j = 0; j < env::kActionDim; ++j) {
        const std::size_t sj = static_cast<std::size_t>(j);
        action_raw[sj] = mean(e, j) + std[sj] * action_rng_.normal();
        action[sj] = clamp(action_raw[sj], -1.0, 1.0);
        b.action_raw(i, j) = action_raw[sj];
      }
      b.log_prob_old[static_cast<std::size_t>(i)] =
          nets::gaussian_log_prob(mean.row(e), std.data(), action_raw.data(), env::kActionDim);
      const env::TossCatchEnv::StepOut out = envs_[static_cast<std::size_t>(e)].step(action);
      b.reward[static_cast<std::size_t>(i)] = out.reward.total;
      b.done[static_cast<std::size_t>(i)] = out.done ? 1 : 0;
      const Vec snext = scaler_.apply(out.obs);
      for (int j = 0; j < env::obs::kDim; ++j)
        b.next_obs(i, j) = snext[static_cast<std::size_t>(j)];
      if (out.done) {
        const Vec fresh = envs_[static_cast<std::size_t>(e)].reset();
        for (int j = 0; j < env::obs::kDim; ++j)
          cur_obs_(e, j) = fresh[static_cast<std::size_t>(j)];
      } else {
        for (int j = 0; j < env::obs::kDim; ++j)
          cur_obs_(e, j) = out.obs[static_cast<std::size_t>(j)];
      }
    }
  }
  return b;
}

void PlainPpo::one_update() {
  train::RolloutBatch b = collect();
  const int total = b.size();

  b.v = nets::value_batch(value_, b.obs);
  b.v_next = nets::value_batch(value_, b.next_obs);
  b.value_target.resize(static_cast<std::size_t>(total));
  Vec adv(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    const double mask = b.done[k] != 0 ? 0.0 : 1.0;
    b.value_target[k] = b.reward[k] + cfg_.hybrid.gamma * b.v_next[k] * mask;
    adv[k] = b.reward[k] + cfg_.hybrid.gamma * b.v_next[k] * mask - b.v[k];
  }
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= total;
  double var = 0.0;
  for (double a : adv) {
    const double d = a - mean;
    var += d * d;
  }
  var /= total;
  const double inv = 1.0 / (std::sqrt(var) + 1e-8);
  b.a_norm.resize(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i)
    b.a_norm[static_cast<std::size_t>(i)] = (adv[static_cast<std::size_t>(i)] - mean) * inv;

  nn::AdamConfig apol, aval;
  apol.lr = cfg_.lr_policy;
  aval.lr = cfg_.lr_value;

  const int mb_size = total / cfg_.minibatches;
  std::vector<int> perm(static_cast<std::size_t>(total));
  for (int i = 0; i < total; ++i) perm[static_cast<std::size_t>(i)] = i;

  for (int epoch = 0; epoch < cfg_.epochs; ++epoch) {
    shuffle_indices(perm, shuffle_rng_);
    for (int mb = 0; mb < cfg_.minibatches; ++mb) {
      const std::vector<int> rows(perm.begin() + mb * mb_size, perm.begin() + (mb + 1) * mb_size);
      const int m = static_cast<int>(rows.size());

      Mat obs_mb(m, b.obs.cols);
      for (int i = 0; i < m; ++i)
        for (int c = 0; c < b.obs.cols; ++c)
          obs_mb(i, c) = b.obs(rows[static_cast<std::size_t>(i)], c);

      nn::ForwardCache pol_cache;
      const Mat pmean = nn::forward(policy_.body, obs_mb, nn::Mode::kTrain, &pol_cache);
      const Vec std = nets::policy_std(policy_);
      const int adim = policy_.action_dim();
      Mat dmean(m, adim);
      Vec dlog_std(std.size(), 0.0);
      for (int i = 0; i < m; ++i) {
        const int row = rows[static_cast<std::size_t>(i)];
        const double* a_raw = b.action_raw.row(row);
        const double lp_new = nets::gaussian_log_prob(pmean.row(i), std.data(), a_raw, adim);
        const double lp_old = b.log_prob_old[static_cast<std::size_t>(row)];
        const double a = b.a_norm[static_cast<std::size_t>(row)];
        const double ratio = std::exp(lp_new - lp_old);
        const double unclipped = ratio * a;
        const double clipped = clamp(ratio, 1.0 - cfg_.hybrid.clip_eps,
                                     1.0 + cfg_.hybrid.clip_eps) * a;
        const double dlp = (unclipped <= clipped) ? ratio * a : 0.0;
        const double scale = -dlp / m;
        for (int j = 0; j < adim; ++j) {
          const std::size_t sj = static_cast<std::size_t>(j);
          const double z = a_raw[j] - pmean(i, j);
          dmean(i, j) = scale * z / (std[sj] * std[sj]);
          dlog_std[sj] += scale * (z * z / (std[sj] * std[sj]) - 1.0);
        }
      }
      for (std::size_t j = 0; j < std.size(); ++j) {
        const double raw = std::exp(policy_.log_std[j]);
        const bool free_j = raw > nets::kStdFloor && raw < nets::kStdCeil;
        if (!free_j)
          dlog_std[j] = 0.0;
        else
          dlog_std[j] -= cfg_.entropy_coef;
      }

      nn::ForwardCache val_cache;
      const Mat v_out = nn::forward(value_.body, obs_mb, nn::Mode::kTrain, &val_cache);
      Mat dv(m, 1);
      for (int i = 0; i < m; ++i) {
        const double tgt = b.value_target[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
        dv(i, 0) = 2.0 * (v_out(i, 0) - tgt) / m;
      }

      const nn::GradBundle gp = nn::backward(policy_.body, pol_cache, dmean);
      const nn::GradBundle gv = nn::backward(value_.body, val_cache, dv);
      nn::adam_step(policy_.body, gp, opt_policy_, apol);
      nn::adam_step(policy_.log_std, dlog_std, opt_log_std_, apol);
      nn::adam_step(value_.body, gv, opt_value_, aval);
      nn::update_running_stats(policy_.body, pol_cache);
      nn::update_running_stats(value_.body, val_cache);
    }
  }
}

}  // namespace ltc::ref
