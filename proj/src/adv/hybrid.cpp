#include "ltc/adv/hybrid.hpp"

#include <cmath>

namespace ltc::adv {

void HybridConfig::validate() const {
  auto unit = [](double b) { return b >= 0.0 && b <= 1.0; };
  if (!unit(beta1) || !unit(beta2) || !unit(beta3))
    throw ConfigError("HybridConfig: advantage weights must lie in [0, 1]");
  if (std::fabs(beta1 + beta2 + beta3 - 1.0) > 1e-9)
    throw ConfigError("HybridConfig: advantage weights must sum to 1");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw ConfigError("HybridConfig: alpha must lie in (0, 1)");
  if (!(k_start > 0.0 && k_start <= k_end && k_end <= 1.0))
    throw ConfigError("HybridConfig: need 0 < k_start <= k_end <= 1");
  if (!(k_intrinsic > 0.0)) throw ConfigError("HybridConfig: k_intrinsic must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ConfigError("HybridConfig: gamma must lie in [0, 1)");
  if (!(dt > 0.0)) throw ConfigError("HybridConfig: dt must be positive");
  if (!(clip_eps > 0.0 && clip_eps < 1.0))
    throw ConfigError("HybridConfig: clip_eps must lie in (0, 1)");
  if (!(gae_lambda >= 0.0 && gae_lambda <= 1.0))
    throw ConfigError("HybridConfig: gae_lambda must lie in [0, 1]");
}

double td_advantage(double reward, double v, double v_next, bool done, double gamma) {
  return reward + gamma * v_next * (done ? 0.0 : 1.0) - v;
}

double lie_derivative(double vl, double vl_next, double dt) {
  check(dt > 0.0, "lie_derivative: dt must be positive");
  return (vl_next - vl) / dt;
}

double lyapunov_advantage(double vl, double vl_next, double dt, double k, double alpha) {
  const double cap = k * std::pow(std::max(vl, 0.0), alpha);
  const double decrease = -lie_derivative(vl, vl_next, dt);
  return std::min(cap, decrease);
}

double intrinsic_advantage(double v, double v_next, double k_intrinsic) {
  return std::min(k_intrinsic * (v_next - v), 0.0);
}

double hybrid_advantage(double a_td, double a_lyap, double a_intr, const HybridConfig& cfg) {
  return cfg.beta1 * a_td + cfg.beta2 * a_lyap + cfg.beta3 * a_intr;
}

double k_schedule(std::uint64_t env_steps, std::uint64_t total_env_steps,
                  double k_start, double k_end) {
  check(total_env_steps > 0, "k_schedule: total_env_steps must be positive");
  double frac = static_cast<double>(env_steps) / static_cast<double>(total_env_steps);
  if (frac > 1.0) frac = 1.0;
  return k_start + (k_end - k_start) * frac;
}

void batch_advantages(train::RolloutBatch& batch, const nets::ValueCritic& value,
                      const nets::LyapunovCritic& lyap, const HybridConfig& cfg,
                      double k_now) {
  cfg.validate();
  const int n = batch.size();
  check(n > 0, "batch_advantages: empty batch");
  check(batch.obs.rows == n && batch.next_obs.rows == n, "batch_advantages: ragged batch");

  batch.v = nets::value_batch(value, batch.obs);
  batch.v_next = nets::value_batch(value, batch.next_obs);
  batch.vl = nets::lyapunov_batch(lyap, batch.lyap_obs);
  batch.vl_next = nets::lyapunov_batch(lyap, batch.lyap_next_obs);

  batch.a_td.resize(n);
  batch.a_lyap.resize(n);
  batch.a_intr.resize(n);
  batch.a_all.resize(n);
  batch.value_target.resize(n);

  for (int i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    const bool done = batch.done[k] != 0;
    batch.value_target[k] =
        batch.reward[k] + cfg.gamma * batch.v_next[k] * (done ? 0.0 : 1.0);
    batch.a_td[k] = td_advantage(batch.reward[k], batch.v[k], batch.v_next[k], done, cfg.gamma);
    batch.a_lyap[k] = lyapunov_advantage(batch.vl[k], batch.vl_next[k], cfg.dt, k_now, cfg.alpha);
    batch.a_intr[k] = intrinsic_advantage(batch.v[k], batch.v_next[k], cfg.k_intrinsic);
  }

  if (cfg.use_gae) {
    // Replace the one-step TD residuals with lambda-weighted sums along each
    // env's row, walking backward and cutting at episode boundaries.
    for (int e = 0; e < batch.num_envs; ++e) {
      double carry = 0.0;
      for (int t = batch.horizon - 1; t >= 0; --t) {
        const std::size_t i = static_cast<std::size_t>(batch.index(t, e));
        const double delta =
            td_advantage(batch.reward[i], batch.v[i], batch.v_next[i], batch.done[i] != 0, cfg.gamma);
        carry = delta + cfg.gamma * cfg.gae_lambda * (batch.done[i] != 0 ? 0.0 : 1.0) * carry;
        batch.a_td[i] = carry;
      }
    }
  }

  for (int i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    batch.a_all[k] = hybrid_advantage(batch.a_td[k], batch.a_lyap[k], batch.a_intr[k], cfg);
  }

  if (cfg.normalize_advantage) {
    double mean = 0.0;
    for (double a : batch.a_all) mean += a;
    mean /= n;
    double var = 0.0;
    for (double a : batch.a_all) {
      const double d = a - mean;
      var += d * d;
    }
    var /= n;
    const double inv = 1.0 / (std::sqrt(var) + 1e-8);
    batch.a_norm.resize(n);
    for (int i = 0; i < n; ++i) {
      const std::size_t k = static_cast<std::size_t>(i);
      batch.a_norm[k] = (batch.a_all[k] - mean) * inv;
    }
  } else {
    batch.a_norm = batch.a_all;
  }
}

}  // namespace ltc::adv
