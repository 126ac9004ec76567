#pragma once

#include "ltc/common.hpp"

namespace ltc::nn {

enum class Mode { kTrain, kEval };

// One affine layer, optionally followed by batch normalization and ELU.
// Hidden layers of the standard stack carry both; the output layer neither.
struct Layer {
  Mat w;  // out x in
  Vec b;  // out
  bool has_bn = false;
  bool has_elu = false;
  Vec bn_scale;
  Vec bn_shift;
  Vec bn_running_mean;
  Vec bn_running_var;

  int in_dim() const { return w.cols; }
  int out_dim() const { return w.rows; }
};

struct MlpParams {
  std::vector<Layer> layers;
  // L2-normalize the input of the final layer (the penultimate activation).
  bool penultimate_norm = true;
  double bn_eps = 1e-5;
  double bn_momentum = 0.99;

  int input_dim() const { return layers.front().in_dim(); }
  int output_dim() const { return layers.back().out_dim(); }
  std::size_t parameter_count() const;
};

struct MlpOptions {
  bool batch_norm = true;
  bool penultimate_norm = true;
  // Multiplier on the output layer's init range; small values keep the
  // initial policy near zero-mean.
  double final_layer_scale = 1.0;
};

// Hidden layers get [linear -> batch norm -> ELU]; the output layer is a
// plain linear map on the (optionally normalized) penultimate activation.
// Weights and biases start uniform in +-1/sqrt(fan_in).
MlpParams make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
                   Rng& rng, const MlpOptions& opts = {});

struct LayerCache {
  Mat x;       // layer input
  Mat z;       // pre-normalization affine output
  Mat xhat;    // batch-normalized z (train mode only)
  Vec mean;    // per-feature stats used by this pass
  Vec var;
  Mat y;       // post-activation output
};

struct ForwardCache {
  Mode mode = Mode::kEval;
  std::vector<LayerCache> layers;
  Vec pen_norm;  // per-item L2 norm of the raw penultimate activation
};

// Pure function of (params, input); running stats are read but never
// written here. Train mode normalizes with batch statistics and requires
// at least two rows when any layer carries batch norm.
Mat forward(const MlpParams& params, const Mat& input, Mode mode, ForwardCache* cache);

inline Mat forward_eval(const MlpParams& params, const Mat& input) {
  return forward(params, input, Mode::kEval, nullptr);
}

// Single-observation convenience wrapper around the eval path.
Vec forward_eval1(const MlpParams& params, const Vec& input);

// Fold the batch statistics captured in `cache` into the running estimates:
// running = momentum * running + (1 - momentum) * batch.
void update_running_stats(MlpParams& params, const ForwardCache& cache);

struct LayerGrads {
  Mat dw;
  Vec db;
  Vec dscale;
  Vec dshift;
};

struct GradBundle {
  std::vector<LayerGrads> layers;
  void add_scaled(const GradBundle& other, double s);
  void scale(double s);
};

GradBundle zero_grads(const MlpParams& params);

// Backpropagate dL/doutput through the cached forward pass. Returns the
// parameter gradients and, if dinput is non-null, dL/dinput. The cache must
// come from a train-mode forward; eval caches lack the stats the batch-norm
// backward needs, and we refuse to guess.
GradBundle backward(const MlpParams& params, const ForwardCache& cache,
                    const Mat& doutput, Mat* dinput = nullptr);

// Max over checked parameters of |analytic - numeric| / max(|analytic|,
// |numeric|, 1e-3 * tensor grad scale, 1e-8), with central differences at
// step h on the train-mode scalar loss sum(forward(input)). Slots whose
// analytic and numeric values both fall below the finite-difference noise
// floor (~eps * |loss| / 2h) are skipped: central differences carry no signal
// there, and batch norm makes some true gradients exactly zero.
// `max_per_tensor` < 0 checks everything; otherwise an evenly-strided subset
// of each tensor is checked.
double grad_check(const MlpParams& params, const Mat& input, double h,
                  int max_per_tensor = -1);

}  // namespace ltc::nn
