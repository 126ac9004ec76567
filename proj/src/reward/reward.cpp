#include "ltc/reward/reward.hpp"

#include <cmath>

namespace ltc::reward {

void RewardConfig::validate() const {
  if (!(c1 >= 0.0 && c2 >= 0.0))
    throw ConfigError("RewardConfig: bonus/penalty magnitudes must be non-negative");
  if (!(w_p > 0.0 && w_o > 0.0 && w_a > 0.0))
    throw ConfigError("RewardConfig: shaping weights must be positive");
}

double position_reward(const env::Vec2& p_g, const env::Vec2& p_c, const RewardConfig& cfg) {
  const double dx = p_g[0] - p_c[0];
  const double dy = p_g[1] - p_c[1];
  return -cfg.w_p * std::sqrt(dx * dx + dy * dy);
}

double orientation_reward(double theta_g, double theta_c, const RewardConfig& cfg) {
  return -cfg.w_o * std::fabs(wrap_angle(theta_g - theta_c));
}

double action_penalty(const Vec& action, const RewardConfig& cfg) {
  double s = 0.0;
  for (double a : action) s += a * a;
  return -cfg.w_a * s;
}

RewardTerms total_reward(const env::EnvState& state, const Vec& action,
                         env::DoneReason done_reason, const RewardConfig& cfg) {
  RewardTerms t;
  t.r_p = position_reward(state.target_pos, state.object.pos, cfg);
  t.r_o = orientation_reward(state.target_angle, state.object.angle, cfg);
  t.r_a = action_penalty(action, cfg);
  if (done_reason == env::DoneReason::kSuccessHold) t.r_succ = cfg.c1;
  if (done_reason == env::DoneReason::kFell) t.r_fall = -cfg.c2;
  t.total = t.r_p + t.r_o + t.r_a + t.r_succ + t.r_fall;
  return t;
}

}  // namespace ltc::reward
