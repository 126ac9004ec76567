#include "ltc/nn/adam.hpp"

#include <cmath>

namespace ltc::nn {

namespace {

void adam_apply(double* p, const double* g, double* m, double* v, std::size_t n,
                const AdamConfig& cfg, double bc1, double bc2) {
#pragma omp parallel for schedule(static)
  for (long long k = 0; k < static_cast<long long>(n); ++k) {
    m[k] = cfg.beta1 * m[k] + (1.0 - cfg.beta1) * g[k];
    v[k] = cfg.beta2 * v[k] + (1.0 - cfg.beta2) * g[k] * g[k];
    const double mhat = m[k] / bc1;
    const double vhat = v[k] / bc2;
    p[k] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

}  // namespace

void adam_step(MlpParams& params, const GradBundle& grads, AdamState& state,
               const AdamConfig& cfg) {
  check(grads.layers.size() == params.layers.size(), "adam_step: grad shape mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    Layer& l = params.layers[li];
    const LayerGrads& g = grads.layers[li];
    LayerGrads& m = state.m.layers[li];
    LayerGrads& v = state.v.layers[li];
    adam_apply(l.w.a.data(), g.dw.a.data(), m.dw.a.data(), v.dw.a.data(), l.w.a.size(), cfg, bc1, bc2);
    adam_apply(l.b.data(), g.db.data(), m.db.data(), v.db.data(), l.b.size(), cfg, bc1, bc2);
    if (l.has_bn) {
      adam_apply(l.bn_scale.data(), g.dscale.data(), m.dscale.data(), v.dscale.data(),
                 l.bn_scale.size(), cfg, bc1, bc2);
      adam_apply(l.bn_shift.data(), g.dshift.data(), m.dshift.data(), v.dshift.data(),
                 l.bn_shift.size(), cfg, bc1, bc2);
    }
  }
}

void adam_step(Vec& params, const Vec& grads, AdamVecState& state, const AdamConfig& cfg) {
  check(params.size() == grads.size() && params.size() == state.m.size(),
        "adam_step: vector shape mismatch");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  adam_apply(params.data(), grads.data(), state.m.data(), state.v.data(), params.size(), cfg, bc1, bc2);
}

}  // namespace ltc::nn
