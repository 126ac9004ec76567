#pragma once

#include "ltc/nn/mlp.hpp"

namespace ltc::nets {

// Diagonal Gaussian policy: the MLP outputs the action mean, log_std is a
// free state-independent parameter vector.
struct GaussianPolicy {
  nn::MlpParams body;
  Vec log_std;

  int action_dim() const { return body.output_dim(); }
};

struct ValueCritic {
  nn::MlpParams body;
};

// Lyapunov critic evaluates goal-relative observations and remembers the
// equilibrium point its risk objective anchors to zero.
struct LyapunovCritic {
  nn::MlpParams body;
  Vec equilibrium_obs;
};

constexpr double kStdFloor = 1e-4;
constexpr double kStdCeil = 10.0;

// exp(log_std) clamped to [kStdFloor, kStdCeil].
Vec policy_std(const GaussianPolicy& policy);

struct ActionSample {
  Vec action;      // clamped to [-1, 1], what the environment sees
  Vec action_raw;  // pre-clamp draw, what the density refers to
  double log_prob;
};

// Draws mean + std * xi with xi ~ N(0, I). The log density is evaluated at
// the raw (pre-clamp) action. Rejects non-finite observations.
ActionSample policy_act(const GaussianPolicy& policy, const Vec& obs, Rng& rng);

// Deterministic head: just the clamped mean.
Vec policy_mean_action(const GaussianPolicy& policy, const Vec& obs);

// Log density of a raw action under the current policy at obs.
double policy_log_prob(const GaussianPolicy& policy, const Vec& obs, const Vec& action_raw);

// Log density given a precomputed mean (shared by the batched update path).
double gaussian_log_prob(const double* mean, const double* std, const double* action, int dim);

double value(const ValueCritic& critic, const Vec& obs);
Vec value_batch(const ValueCritic& critic, const Mat& obs);

double lyapunov(const LyapunovCritic& critic, const Vec& goal_rel_obs);
Vec lyapunov_batch(const LyapunovCritic& critic, const Mat& goal_rel_obs);
double lyapunov_at_equilibrium(const LyapunovCritic& critic);

}  // namespace ltc::nets
