#include "ltc/nets/networks.hpp"

#include <cmath>

namespace ltc::nets {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

Vec policy_std(const GaussianPolicy& policy) {
  Vec std(policy.log_std.size());
  for (std::size_t i = 0; i < std.size(); ++i)
    std[i] = clamp(std::exp(policy.log_std[i]), kStdFloor, kStdCeil);
  return std;
}

double gaussian_log_prob(const double* mean, const double* std, const double* action, int dim) {
  double lp = 0.0;
  for (int i = 0; i < dim; ++i) {
    const double z = (action[i] - mean[i]) / std[i];
    lp += -0.5 * z * z - std::log(std[i]) - 0.5 * kLog2Pi;
  }
  return lp;
}

ActionSample policy_act(const GaussianPolicy& policy, const Vec& obs, Rng& rng) {
  for (double v : obs) check(std::isfinite(v), "policy_act: non-finite observation");
  const Vec mean = nn::forward_eval1(policy.body, obs);
  const Vec std = policy_std(policy);
  check(mean.size() == std.size(), "policy_act: log_std dim mismatch");
  ActionSample s;
  const int dim = static_cast<int>(mean.size());
  s.action_raw.resize(mean.size());
  s.action.resize(mean.size());
  for (int i = 0; i < dim; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    s.action_raw[k] = mean[k] + std[k] * rng.normal();
    s.action[k] = clamp(s.action_raw[k], -1.0, 1.0);
  }
  s.log_prob = gaussian_log_prob(mean.data(), std.data(), s.action_raw.data(), dim);
  return s;
}

Vec policy_mean_action(const GaussianPolicy& policy, const Vec& obs) {
  Vec mean = nn::forward_eval1(policy.body, obs);
  for (double& v : mean) v = clamp(v, -1.0, 1.0);
  return mean;
}

double policy_log_prob(const GaussianPolicy& policy, const Vec& obs, const Vec& action_raw) {
  const Vec mean = nn::forward_eval1(policy.body, obs);
  const Vec std = policy_std(policy);
  check(action_raw.size() == mean.size(), "policy_log_prob: action dim mismatch");
  return gaussian_log_prob(mean.data(), std.data(), action_raw.data(),
                           static_cast<int>(mean.size()));
}

double value(const ValueCritic& critic, const Vec& obs) {
  return nn::forward_eval1(critic.body, obs)[0];
}

Vec value_batch(const ValueCritic& critic, const Mat& obs) {
  const Mat out = nn::forward_eval(critic.body, obs);
  Vec v(static_cast<std::size_t>(out.rows));
  for (int i = 0; i < out.rows; ++i) v[static_cast<std::size_t>(i)] = out(i, 0);
  return v;
}

double lyapunov(const LyapunovCritic& critic, const Vec& goal_rel_obs) {
  return nn::forward_eval1(critic.body, goal_rel_obs)[0];
}

Vec lyapunov_batch(const LyapunovCritic& critic, const Mat& goal_rel_obs) {
  const Mat out = nn::forward_eval(critic.body, goal_rel_obs);
  Vec v(static_cast<std::size_t>(out.rows));
  for (int i = 0; i < out.rows; ++i) v[static_cast<std::size_t>(i)] = out(i, 0);
  return v;
}

double lyapunov_at_equilibrium(const LyapunovCritic& critic) {
  check(!critic.equilibrium_obs.empty(), "lyapunov_at_equilibrium: equilibrium not set");
  return lyapunov(critic, critic.equilibrium_obs);
}

}  // namespace ltc::nets
