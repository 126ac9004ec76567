#pragma once

#include "ltc/env/state.hpp"

namespace ltc::reward {

struct RewardConfig {
  double w_p = 1.0;    // position shaping weight
  double w_o = 0.3;    // orientation shaping weight
  double w_a = 0.01;   // action penalty weight
  double c1 = 10.0;    // success bonus
  double c2 = 5.0;     // fall penalty (positive magnitude, subtracted)

  void validate() const;
};

// -w_p * ||p_g - p_c||.
double position_reward(const env::Vec2& p_g, const env::Vec2& p_c, const RewardConfig& cfg);

// -w_o * |wrap(theta_g - theta_c)|, wrap into (-pi, pi]. Planar reduction of
// the quaternion geodesic distance.
double orientation_reward(double theta_g, double theta_c, const RewardConfig& cfg);

// -w_a * sum(a_i^2).
double action_penalty(const Vec& action, const RewardConfig& cfg);

struct RewardTerms {
  double r_p = 0.0;
  double r_o = 0.0;
  double r_a = 0.0;
  double r_succ = 0.0;
  double r_fall = 0.0;
  double total = 0.0;
};

// Shaped terms from the post-step state, plus the success bonus / fall
// penalty keyed off the done reason. total is the exact sum of the parts.
RewardTerms total_reward(const env::EnvState& state, const Vec& action,
                         env::DoneReason done_reason, const RewardConfig& cfg);

}  // namespace ltc::reward
