#include "ltc/loss/losses.hpp"

#include <cmath>

namespace ltc::loss {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

double ppo_surrogate(double lp_new, double lp_old, double advantage, double clip_eps) {
  const double ratio = std::exp(lp_new - lp_old);
  const double clipped = clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

double value_loss(const Vec& v_pred, const Vec& target) {
  check(v_pred.size() == target.size() && !v_pred.empty(), "value_loss: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < v_pred.size(); ++i) {
    const double d = v_pred[i] - target[i];
    s += d * d;
  }
  return s / static_cast<double>(v_pred.size());
}

double lyapunov_risk(const Vec& vl, const Vec& vl_next, double dt, double vl_eq) {
  check(vl.size() == vl_next.size() && !vl.empty(), "lyapunov_risk: size mismatch");
  check(dt > 0.0, "lyapunov_risk: dt must be positive");
  double s = 0.0;
  for (std::size_t i = 0; i < vl.size(); ++i) {
    const double lie = (vl_next[i] - vl[i]) / dt;
    s += std::max(-vl[i], 0.0) + std::max(0.0, lie);
  }
  return s / static_cast<double>(vl.size()) + vl_eq * vl_eq;
}

double clip_fraction(const Vec& ratios, double clip_eps) {
  check(!ratios.empty(), "clip_fraction: empty input");
  int clipped = 0;
  for (double r : ratios)
    if (r < 1.0 - clip_eps || r > 1.0 + clip_eps) ++clipped;
  return static_cast<double>(clipped) / static_cast<double>(ratios.size());
}

double policy_entropy(const nets::GaussianPolicy& policy) {
  const Vec std = nets::policy_std(policy);
  double h = 0.0;
  for (double s : std) h += 0.5 * (1.0 + kLog2Pi) + std::log(s);
  return h;
}

namespace {

Mat gather_rows(const Mat& src, const std::vector<int>& rows) {
  Mat out(static_cast<int>(rows.size()), src.cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int c = 0; c < src.cols; ++c) out(static_cast<int>(i), c) = src(rows[i], c);
  return out;
}

}  // namespace

LossReport update_losses(const train::RolloutBatch& batch, const std::vector<int>& rows,
                         const nets::GaussianPolicy& policy, const nets::ValueCritic& value,
                         const nets::LyapunovCritic& lyap, const UpdateConfig& cfg,
                         UpdateGrads* grads, UpdateCaches* caches) {
  const int m = static_cast<int>(rows.size());
  check(m > 0, "update_losses: empty minibatch");
  check(batch.a_norm.size() == static_cast<std::size_t>(batch.size()),
        "update_losses: advantages not computed for this batch");

  LossReport report;

  // ---- Policy: clipped surrogate plus entropy bonus ----
  const Mat obs_mb = gather_rows(batch.obs, rows);
  nn::ForwardCache pol_cache;
  const Mat mean = nn::forward(policy.body, obs_mb, nn::Mode::kTrain, &pol_cache);
  const Vec std = nets::policy_std(policy);
  const int adim = policy.action_dim();
  check(mean.cols == adim, "update_losses: policy output dim mismatch");

  Vec ratios(static_cast<std::size_t>(m));
  Mat dmean(m, adim);
  Vec dlog_std(std.size(), 0.0);
  double surrogate_sum = 0.0;
  for (int i = 0; i < m; ++i) {
    const int row = rows[static_cast<std::size_t>(i)];
    const double* a_raw = batch.action_raw.row(row);
    const double lp_new = nets::gaussian_log_prob(mean.row(i), std.data(), a_raw, adim);
    const double lp_old = batch.log_prob_old[static_cast<std::size_t>(row)];
    const double adv = batch.a_norm[static_cast<std::size_t>(row)];
    const double ratio = std::exp(lp_new - lp_old);
    ratios[static_cast<std::size_t>(i)] = ratio;
    const double unclipped = ratio * adv;
    const double clipped = clamp(ratio, 1.0 - cfg.clip_eps, 1.0 + cfg.clip_eps) * adv;
    surrogate_sum += std::min(unclipped, clipped);
    // Gradient flows through the unclipped branch only when it is the min.
    const double dlp = (unclipped <= clipped) ? ratio * adv : 0.0;
    const double scale = -dlp / m;  // minimizing the negated mean surrogate
    for (int j = 0; j < adim; ++j) {
      const std::size_t sj = static_cast<std::size_t>(j);
      const double z = a_raw[j] - mean(i, j);
      dmean(i, j) = scale * z / (std[sj] * std[sj]);
      dlog_std[sj] += scale * (z * z / (std[sj] * std[sj]) - 1.0);
    }
  }
  report.policy_loss = -surrogate_sum / m;
  report.entropy = policy_entropy(policy);
  report.clip_fraction = clip_fraction(ratios, cfg.clip_eps);

  // log_std gradients gate off where the std clamp is active, and the
  // entropy bonus contributes -entropy_coef per free component.
  for (std::size_t j = 0; j < std.size(); ++j) {
    const double raw = std::exp(policy.log_std[j]);
    const bool free_j = raw > nets::kStdFloor && raw < nets::kStdCeil;
    if (!free_j)
      dlog_std[j] = 0.0;
    else
      dlog_std[j] -= cfg.entropy_coef;
  }

  // ---- Value: MSE to detached targets ----
  const Mat vobs_mb = obs_mb;
  nn::ForwardCache val_cache;
  const Mat v_out = nn::forward(value.body, vobs_mb, nn::Mode::kTrain, &val_cache);
  Vec v_pred(static_cast<std::size_t>(m)), v_tgt(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    v_pred[static_cast<std::size_t>(i)] = v_out(i, 0);
    v_tgt[static_cast<std::size_t>(i)] =
        batch.value_target[static_cast<std::size_t>(rows[static_cast<std::size_t>(i)])];
  }
  report.value_loss = value_loss(v_pred, v_tgt);
  Mat dv(m, 1);
  for (int i = 0; i < m; ++i)
    dv(i, 0) = 2.0 * (v_pred[static_cast<std::size_t>(i)] - v_tgt[static_cast<std::size_t>(i)]) / m;

  // ---- Lyapunov: empirical risk on (s, s') pairs plus the equilibrium pin ----
  // One forward over [s rows | s' rows | equilibrium] so batch norm sees a
  // single consistent batch.
  const int ldim = batch.lyap_obs.cols;
  Mat lobs(2 * m + 1, ldim);
  for (int i = 0; i < m; ++i) {
    const int row = rows[static_cast<std::size_t>(i)];
    for (int c = 0; c < ldim; ++c) {
      lobs(i, c) = batch.lyap_obs(row, c);
      lobs(m + i, c) = batch.lyap_next_obs(row, c);
    }
  }
  check(static_cast<int>(lyap.equilibrium_obs.size()) == ldim,
        "update_losses: equilibrium obs dim mismatch");
  for (int c = 0; c < ldim; ++c)
    lobs(2 * m, c) = lyap.equilibrium_obs[static_cast<std::size_t>(c)];

  nn::ForwardCache lyap_cache;
  const Mat l_out = nn::forward(lyap.body, lobs, nn::Mode::kTrain, &lyap_cache);
  Vec vl(static_cast<std::size_t>(m)), vl_next(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    vl[static_cast<std::size_t>(i)] = l_out(i, 0);
    vl_next[static_cast<std::size_t>(i)] = l_out(m + i, 0);
  }
  const double vl_eq = l_out(2 * m, 0);
  report.lyapunov_risk = lyapunov_risk(vl, vl_next, cfg.dt, vl_eq);

  Mat dl(2 * m + 1, 1);
  for (int i = 0; i < m; ++i) {
    const std::size_t si = static_cast<std::size_t>(i);
    const double lie = (vl_next[si] - vl[si]) / cfg.dt;
    double d_vl = 0.0, d_vln = 0.0;
    if (vl[si] < 0.0) d_vl -= 1.0;          // d max(-v, 0) / dv
    if (lie > 0.0) {
      d_vl -= 1.0 / cfg.dt;                 // d max(0, (v' - v)/dt) / dv
      d_vln += 1.0 / cfg.dt;
    }
    dl(i, 0) = d_vl / m;
    dl(m + i, 0) = d_vln / m;
  }
  dl(2 * m, 0) = 2.0 * vl_eq;

  if (grads) {
    grads->policy = nn::backward(policy.body, pol_cache, dmean);
    grads->dlog_std = std::move(dlog_std);
    grads->value = nn::backward(value.body, val_cache, dv);
    grads->lyap = nn::backward(lyap.body, lyap_cache, dl);
  }
  if (caches) {
    caches->policy = std::move(pol_cache);
    caches->value = std::move(val_cache);
    caches->lyap = std::move(lyap_cache);
  }
  return report;
}

LossReport total_update_losses(const train::RolloutBatch& batch,
                               const nets::GaussianPolicy& policy,
                               const nets::ValueCritic& value,
                               const nets::LyapunovCritic& lyap, const UpdateConfig& cfg,
                               UpdateGrads* grads) {
  std::vector<int> rows(static_cast<std::size_t>(batch.size()));
  for (int i = 0; i < batch.size(); ++i) rows[static_cast<std::size_t>(i)] = i;
  return update_losses(batch, rows, policy, value, lyap, cfg, grads, nullptr);
}

}  // namespace ltc::loss
