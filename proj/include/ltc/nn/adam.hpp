#pragma once

#include "ltc/nn/mlp.hpp"

namespace ltc::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// First/second moment estimates mirror the parameter tensors.
struct AdamState {
  GradBundle m;
  GradBundle v;
  std::uint64_t t = 0;
  static AdamState init(const MlpParams& params) {
    return AdamState{zero_grads(params), zero_grads(params), 0};
  }
};

void adam_step(MlpParams& params, const GradBundle& grads, AdamState& state,
               const AdamConfig& cfg);

// Flat variant for parameter vectors that live outside an MLP (log_std).
struct AdamVecState {
  Vec m;
  Vec v;
  std::uint64_t t = 0;
  static AdamVecState init(std::size_t n) { return AdamVecState{Vec(n, 0.0), Vec(n, 0.0), 0}; }
};

void adam_step(Vec& params, const Vec& grads, AdamVecState& state, const AdamConfig& cfg);

}  // namespace ltc::nn
