#pragma once

#include "ltc/nets/networks.hpp"
#include "ltc/train/rollout.hpp"

namespace ltc::adv {

// Weights and schedule constants for the hybrid advantage
// a = beta1 * a_td + beta2 * a_lyap + beta3 * a_intr.
struct HybridConfig {
  double beta1 = 0.6;
  double beta2 = 0.25;
  double beta3 = 0.15;
  double alpha = 0.7;        // finite-time exponent, in (0, 1)
  double k_start = 0.1;      // convergence gain ramps k_start -> k_end
  double k_end = 1.0;
  double k_intrinsic = 0.5;
  double gamma = 0.99;
  double dt = 1.0 / 60.0;    // control period for the Lie derivative
  double clip_eps = 0.2;
  bool use_gae = false;
  double gae_lambda = 0.95;
  bool normalize_advantage = true;

  void validate() const;
};

// One-step TD residual; `done` masks the bootstrap.
double td_advantage(double reward, double v, double v_next, bool done, double gamma);

// Discrete-time Lie derivative of the Lyapunov value along the transition.
double lie_derivative(double vl, double vl_next, double dt);

// Stability advantage: capped at the finite-time decrease requirement
// k * max(vl, 0)^alpha, and equal to the actual decrease rate -Ldot when
// that is smaller. Never exceeds the cap.
double lyapunov_advantage(double vl, double vl_next, double dt, double k, double alpha);

// Non-positive shaping: punishes drops in the value estimate, never rewards.
double intrinsic_advantage(double v, double v_next, double k_intrinsic);

double hybrid_advantage(double a_td, double a_lyap, double a_intr, const HybridConfig& cfg);

// Linear ramp of the convergence gain over training progress.
double k_schedule(std::uint64_t env_steps, std::uint64_t total_env_steps,
                  double k_start, double k_end);

// Evaluates both critics on the batch (eval mode) and fills every advantage
// and target column. a_norm standardizes a_all over the batch unless
// normalization is disabled, in which case it aliases a_all.
void batch_advantages(train::RolloutBatch& batch, const nets::ValueCritic& value,
                      const nets::LyapunovCritic& lyap, const HybridConfig& cfg,
                      double k_now);

}  // namespace ltc::adv
