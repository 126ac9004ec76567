#pragma once

#include <cstdint>

#include "ltc/common.hpp"

namespace ltc::train {

// One on-policy update's worth of transitions. Rows are time-major:
// index(t, e) = t * num_envs + e for step t in [0, horizon).
// Observations are stored in network coordinates (already scaled; the
// lyap_* pair additionally goal-relative), actions pre-clamp.
struct RolloutBatch {
  int num_envs = 0;
  int horizon = 0;

  Mat obs;
  Mat next_obs;
  Mat lyap_obs;
  Mat lyap_next_obs;
  Mat action_raw;
  Vec log_prob_old;
  Vec reward;
  std::vector<std::uint8_t> done;
  std::vector<std::uint8_t> done_reason;

  // Filled by adv::batch_advantages.
  Vec v;
  Vec v_next;
  Vec vl;
  Vec vl_next;
  Vec a_td;
  Vec a_lyap;
  Vec a_intr;
  Vec a_all;     // raw hybrid combination
  Vec a_norm;    // batch-standardized a_all, what the surrogate consumes
  Vec value_target;

  int size() const { return num_envs * horizon; }
  int index(int t, int e) const { return t * num_envs + e; }
};

}  // namespace ltc::train
