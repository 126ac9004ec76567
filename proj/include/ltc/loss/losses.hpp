#pragma once

#include "ltc/nets/networks.hpp"
#include "ltc/train/rollout.hpp"

namespace ltc::loss {

// Per-sample clipped surrogate objective (to be maximized):
// min(ratio * A, clip(ratio, 1-eps, 1+eps) * A) with ratio = exp(lp_new - lp_old).
double ppo_surrogate(double lp_new, double lp_old, double advantage, double clip_eps);

// Mean squared error against detached targets.
double value_loss(const Vec& v_pred, const Vec& target);

// Empirical risk: mean over pairs of max(-vl, 0) + max(0, (vl_next - vl)/dt),
// plus the squared value at the equilibrium point.
double lyapunov_risk(const Vec& vl, const Vec& vl_next, double dt, double vl_eq);

// Fraction of ratios strictly outside [1-eps, 1+eps].
double clip_fraction(const Vec& ratios, double clip_eps);

// Gaussian entropy of the policy's current (clamped) std.
double policy_entropy(const nets::GaussianPolicy& policy);

struct LossReport {
  double policy_loss = 0.0;     // negated mean surrogate, entropy excluded
  double value_loss = 0.0;
  double lyapunov_risk = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
};

struct UpdateConfig {
  double clip_eps = 0.2;
  double entropy_coef = 0.003;
  double dt = 1.0 / 60.0;  // Lie-term scaling inside the risk
};

struct UpdateGrads {
  nn::GradBundle policy;
  Vec dlog_std;
  nn::GradBundle value;
  nn::GradBundle lyap;
};

struct UpdateCaches {
  nn::ForwardCache policy;
  nn::ForwardCache value;
  nn::ForwardCache lyap;
};

// Evaluates all three losses on the selected batch rows and, if `grads` is
// non-null, their exact parameter gradients:
//   minimize  -mean(surrogate) - entropy_coef * H(policy)   (policy, log_std)
//   minimize  value_loss                                    (value critic)
//   minimize  lyapunov_risk                                 (Lyapunov critic)
// The three objectives are independent; no gradient crosses networks.
// batch.a_norm and batch.value_target must be filled (see batch_advantages).
// Pure in the sense that no running statistics are updated; the train-mode
// caches are exposed through `caches` so the caller can fold them in.
LossReport update_losses(const train::RolloutBatch& batch, const std::vector<int>& rows,
                         const nets::GaussianPolicy& policy, const nets::ValueCritic& value,
                         const nets::LyapunovCritic& lyap, const UpdateConfig& cfg,
                         UpdateGrads* grads, UpdateCaches* caches);

// Whole-batch convenience wrapper over update_losses.
LossReport total_update_losses(const train::RolloutBatch& batch,
                               const nets::GaussianPolicy& policy,
                               const nets::ValueCritic& value,
                               const nets::LyapunovCritic& lyap, const UpdateConfig& cfg,
                               UpdateGrads* grads);

}  // namespace ltc::loss
