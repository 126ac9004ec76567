#include "ltc/nn/mlp.hpp"

#include <cmath>
#include <limits>

namespace ltc::nn {

namespace {

constexpr double kNormEps = 1e-8;

double elu(double x) { return x > 0.0 ? x : std::expm1(x); }

// y = elu(x) lets us recover the slope without caching x: exp(x) = y + 1
// on the negative branch.
double elu_slope_from_output(double y) { return y > 0.0 ? 1.0 : y + 1.0; }

void affine_forward(const Layer& layer, const Mat& x, Mat& z) {
  const int n = x.rows, in = layer.in_dim(), out = layer.out_dim();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    const double* xi = x.row(i);
    double* zi = z.row(i);
    for (int r = 0; r < out; ++r) {
      const double* wr = layer.w.row(r);
      double acc = layer.b[static_cast<std::size_t>(r)];
      for (int c = 0; c < in; ++c) acc += wr[c] * xi[c];
      zi[r] = acc;
    }
  }
}

// Per-feature batch statistics, biased variance. Each feature is reduced
// serially by one thread, so totals never depend on the thread count.
void batch_mean_var(const Mat& z, Vec& mean, Vec& var) {
  const int n = z.rows, f = z.cols;
  mean.assign(f, 0.0);
  var.assign(f, 0.0);
#pragma omp parallel for schedule(static)
  for (int j = 0; j < f; ++j) {
    double m = 0.0;
    for (int i = 0; i < n; ++i) m += z(i, j);
    m /= n;
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = z(i, j) - m;
      v += d * d;
    }
    mean[j] = m;
    var[j] = v / n;
  }
}

}  // namespace

std::size_t MlpParams::parameter_count() const {
  std::size_t n = 0;
  for (const Layer& l : layers) {
    n += l.w.size() + l.b.size();
    if (l.has_bn) n += l.bn_scale.size() + l.bn_shift.size();
  }
  return n;
}

MlpParams make_mlp(int input_dim, const std::vector<int>& hidden, int output_dim,
                   Rng& rng, const MlpOptions& opts) {
  check(input_dim > 0 && output_dim > 0, "make_mlp: dims must be positive");
  MlpParams p;
  p.penultimate_norm = opts.penultimate_norm;
  std::vector<int> dims;
  dims.push_back(input_dim);
  for (int h : hidden) {
    check(h > 0, "make_mlp: hidden dims must be positive");
    dims.push_back(h);
  }
  dims.push_back(output_dim);

  for (std::size_t li = 0; li + 1 < dims.size(); ++li) {
    const bool is_output = li + 2 == dims.size();
    Layer l;
    l.w = Mat(dims[li + 1], dims[li]);
    l.b.assign(dims[li + 1], 0.0);
    double range = 1.0 / std::sqrt(static_cast<double>(dims[li]));
    if (is_output) range *= opts.final_layer_scale;
    for (int r = 0; r < l.w.rows; ++r)
      for (int c = 0; c < l.w.cols; ++c) l.w(r, c) = rng.uniform(-range, range);
    for (int r = 0; r < l.w.rows; ++r) l.b[static_cast<std::size_t>(r)] = rng.uniform(-range, range);
    if (!is_output) {
      l.has_elu = true;
      if (opts.batch_norm) {
        l.has_bn = true;
        l.bn_scale.assign(dims[li + 1], 1.0);
        l.bn_shift.assign(dims[li + 1], 0.0);
        l.bn_running_mean.assign(dims[li + 1], 0.0);
        l.bn_running_var.assign(dims[li + 1], 1.0);
      }
    }
    p.layers.push_back(std::move(l));
  }
  return p;
}

Mat forward(const MlpParams& params, const Mat& input, Mode mode, ForwardCache* cache) {
  check(!params.layers.empty(), "forward: empty network");
  check(input.cols == params.input_dim(), "forward: input dim mismatch");
  check(input.rows >= 1, "forward: empty batch");
  if (mode == Mode::kTrain) {
    for (const Layer& l : params.layers)
      if (l.has_bn)
        check(input.rows >= 2, "forward: train-mode batch norm needs at least 2 rows");
  }
  if (cache) {
    cache->mode = mode;
    cache->layers.assign(params.layers.size(), LayerCache{});
    cache->pen_norm.clear();
  }

  const int n = input.rows;
  const std::size_t nl = params.layers.size();
  Mat cur = input;
  for (std::size_t li = 0; li < nl; ++li) {
    const Layer& layer = params.layers[li];
    check(cur.cols == layer.in_dim(), "forward: layer dim mismatch");
    Mat z(n, layer.out_dim());
    affine_forward(layer, cur, z);

    LayerCache* lc = cache ? &cache->layers[li] : nullptr;
    if (lc) {
      lc->x = cur;
      lc->z = z;
    }

    Mat y;
    if (layer.has_bn) {
      const int f = layer.out_dim();
      Vec mean, var;
      if (mode == Mode::kTrain) {
        batch_mean_var(z, mean, var);
      } else {
        mean = layer.bn_running_mean;
        var = layer.bn_running_var;
      }
      y = Mat(n, f);
      Mat xhat(mode == Mode::kTrain && lc ? n : 0, f);
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < f; ++j) {
          double xh = (z(i, j) - mean[static_cast<std::size_t>(j)]) /
                      std::sqrt(var[static_cast<std::size_t>(j)] + params.bn_eps);
          if (xhat.rows > 0) xhat(i, j) = xh;
          y(i, j) = layer.bn_scale[static_cast<std::size_t>(j)] * xh +
                    layer.bn_shift[static_cast<std::size_t>(j)];
        }
      }
      if (lc) {
        lc->xhat = std::move(xhat);
        lc->mean = std::move(mean);
        lc->var = std::move(var);
      }
    } else {
      y = std::move(z);  // cache already holds its own copy of z
    }

    if (layer.has_elu) {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        double* yi = y.row(i);
        for (int j = 0; j < y.cols; ++j) yi[j] = elu(yi[j]);
      }
    }
    if (lc) lc->y = y;

    // L2-normalize what feeds the output layer.
    if (params.penultimate_norm && li + 2 == nl) {
      Vec norms(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        const double* yi = y.row(i);
        double s = 0.0;
        for (int j = 0; j < y.cols; ++j) s += yi[j] * yi[j];
        double norm = std::sqrt(s);
        norms[static_cast<std::size_t>(i)] = norm;
        double inv = 1.0 / (norm + kNormEps);
        double* w = y.row(i);
        for (int j = 0; j < y.cols; ++j) w[j] *= inv;
      }
      if (cache) cache->pen_norm = std::move(norms);
    }
    cur = std::move(y);
  }
  return cur;
}

Vec forward_eval1(const MlpParams& params, const Vec& input) {
  Mat m(1, static_cast<int>(input.size()));
  for (int c = 0; c < m.cols; ++c) m(0, c) = input[static_cast<std::size_t>(c)];
  Mat out = forward_eval(params, m);
  Vec r(static_cast<std::size_t>(out.cols));
  for (int c = 0; c < out.cols; ++c) r[static_cast<std::size_t>(c)] = out(0, c);
  return r;
}

void update_running_stats(MlpParams& params, const ForwardCache& cache) {
  check(cache.mode == Mode::kTrain, "update_running_stats: needs a train-mode cache");
  check(cache.layers.size() == params.layers.size(), "update_running_stats: cache mismatch");
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    Layer& l = params.layers[li];
    if (!l.has_bn) continue;
    const LayerCache& lc = cache.layers[li];
    check(lc.mean.size() == l.bn_running_mean.size(), "update_running_stats: stats missing");
    for (std::size_t j = 0; j < l.bn_running_mean.size(); ++j) {
      l.bn_running_mean[j] = params.bn_momentum * l.bn_running_mean[j] +
                             (1.0 - params.bn_momentum) * lc.mean[j];
      l.bn_running_var[j] = params.bn_momentum * l.bn_running_var[j] +
                            (1.0 - params.bn_momentum) * lc.var[j];
    }
  }
}

GradBundle zero_grads(const MlpParams& params) {
  GradBundle g;
  g.layers.resize(params.layers.size());
  for (std::size_t li = 0; li < params.layers.size(); ++li) {
    const Layer& l = params.layers[li];
    g.layers[li].dw = Mat(l.w.rows, l.w.cols);
    g.layers[li].db.assign(l.b.size(), 0.0);
    if (l.has_bn) {
      g.layers[li].dscale.assign(l.bn_scale.size(), 0.0);
      g.layers[li].dshift.assign(l.bn_shift.size(), 0.0);
    }
  }
  return g;
}

void GradBundle::add_scaled(const GradBundle& other, double s) {
  check(layers.size() == other.layers.size(), "GradBundle::add_scaled: shape mismatch");
  for (std::size_t li = 0; li < layers.size(); ++li) {
    LayerGrads& a = layers[li];
    const LayerGrads& b = other.layers[li];
    for (std::size_t k = 0; k < a.dw.a.size(); ++k) a.dw.a[k] += s * b.dw.a[k];
    for (std::size_t k = 0; k < a.db.size(); ++k) a.db[k] += s * b.db[k];
    for (std::size_t k = 0; k < a.dscale.size(); ++k) a.dscale[k] += s * b.dscale[k];
    for (std::size_t k = 0; k < a.dshift.size(); ++k) a.dshift[k] += s * b.dshift[k];
  }
}

void GradBundle::scale(double s) {
  for (LayerGrads& l : layers) {
    for (double& v : l.dw.a) v *= s;
    for (double& v : l.db) v *= s;
    for (double& v : l.dscale) v *= s;
    for (double& v : l.dshift) v *= s;
  }
}

GradBundle backward(const MlpParams& params, const ForwardCache& cache,
                    const Mat& doutput, Mat* dinput) {
  check(cache.mode == Mode::kTrain,
        "backward: eval-mode caches lack batch statistics; run a train-mode forward");
  check(cache.layers.size() == params.layers.size(), "backward: cache/params mismatch");
  check(doutput.cols == params.output_dim(), "backward: doutput dim mismatch");
  const int n = doutput.rows;
  check(n == cache.layers.front().x.rows, "backward: doutput batch mismatch");

  GradBundle grads = zero_grads(params);
  Mat d = doutput;  // dL/d(current layer output)

  for (int li = static_cast<int>(params.layers.size()) - 1; li >= 0; --li) {
    const Layer& layer = params.layers[static_cast<std::size_t>(li)];
    const LayerCache& lc = cache.layers[static_cast<std::size_t>(li)];
    LayerGrads& lg = grads.layers[static_cast<std::size_t>(li)];
    const int out = layer.out_dim(), in = layer.in_dim();

    // Through ELU: d y -> d bn_out, using slope recovered from y.
    if (layer.has_elu) {
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        double* di = d.row(i);
        const double* yi = lc.y.row(i);
        for (int j = 0; j < out; ++j) di[j] *= elu_slope_from_output(yi[j]);
      }
    }

    // Through batch norm: d bn_out -> d z, plus scale/shift grads.
    if (layer.has_bn) {
#pragma omp parallel for schedule(static)
      for (int j = 0; j < out; ++j) {
        const double m = lc.mean[static_cast<std::size_t>(j)];
        const double invstd = 1.0 / std::sqrt(lc.var[static_cast<std::size_t>(j)] + params.bn_eps);
        const double scale = layer.bn_scale[static_cast<std::size_t>(j)];
        double dscale = 0.0, dshift = 0.0, dvar = 0.0, dmean_a = 0.0, dzsum = 0.0;
        for (int i = 0; i < n; ++i) {
          const double dy = d(i, j);
          dscale += dy * lc.xhat(i, j);
          dshift += dy;
          const double dxhat = dy * scale;
          const double zc = lc.z(i, j) - m;
          dvar += dxhat * zc;
          dmean_a += dxhat;
          dzsum += zc;
        }
        dvar *= -0.5 * invstd * invstd * invstd;
        const double dmean = -dmean_a * invstd + dvar * (-2.0 * dzsum / n);
        for (int i = 0; i < n; ++i) {
          const double dxhat = d(i, j) * scale;
          const double zc = lc.z(i, j) - m;
          d(i, j) = dxhat * invstd + dvar * 2.0 * zc / n + dmean / n;
        }
        lg.dscale[static_cast<std::size_t>(j)] = dscale;
        lg.dshift[static_cast<std::size_t>(j)] = dshift;
      }
    }

    // Through the affine map: weight/bias grads and dL/dx.
#pragma omp parallel for schedule(static)
    for (int r = 0; r < out; ++r) {
      double* dwr = lg.dw.row(r);
      double db = 0.0;
      for (int i = 0; i < n; ++i) {
        const double dz = d(i, r);
        db += dz;
        const double* xi = lc.x.row(i);
        for (int c = 0; c < in; ++c) dwr[c] += dz * xi[c];
      }
      lg.db[static_cast<std::size_t>(r)] = db;
    }

    const bool need_dx = li > 0 || dinput != nullptr;
    if (!need_dx) continue;
    Mat dx(n, in);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) {
      double* dxi = dx.row(i);
      const double* di = d.row(i);
      for (int r = 0; r < out; ++r) {
        const double dz = di[r];
        const double* wr = layer.w.row(r);
        for (int c = 0; c < in; ++c) dxi[c] += dz * wr[c];
      }
    }

    // Undo the penultimate normalization: dx is currently the gradient wrt
    // the normalized vector; map it back to the raw activation.
    if (params.penultimate_norm && li == static_cast<int>(params.layers.size()) - 1 &&
        params.layers.size() >= 2) {
      const LayerCache& prev = cache.layers[params.layers.size() - 2];
      check(cache.pen_norm.size() == static_cast<std::size_t>(n),
            "backward: missing penultimate norms in cache");
#pragma omp parallel for schedule(static)
      for (int i = 0; i < n; ++i) {
        const double norm = cache.pen_norm[static_cast<std::size_t>(i)];
        const double s = norm + kNormEps;
        const double* yi = prev.y.row(i);  // raw activation
        double* dxi = dx.row(i);
        double dot = 0.0;
        for (int c = 0; c < in; ++c) dot += yi[c] * dxi[c];
        const double coef = norm > 0.0 ? dot / (s * s * norm) : 0.0;
        for (int c = 0; c < in; ++c) dxi[c] = dxi[c] / s - yi[c] * coef;
      }
    }

    if (li == 0) {
      if (dinput) *dinput = std::move(dx);
    } else {
      d = std::move(dx);
    }
  }
  return grads;
}

namespace {

double loss_sum(const MlpParams& params, const Mat& input) {
  Mat out = forward(params, input, Mode::kTrain, nullptr);
  double s = 0.0;
  for (double v : out.a) s += v;
  return s;
}

// Central difference on one parameter slot.
double numeric_grad(MlpParams& params, double* slot, const Mat& input, double h) {
  const double orig = *slot;
  *slot = orig + h;
  const double lp = loss_sum(params, input);
  *slot = orig - h;
  const double lm = loss_sum(params, input);
  *slot = orig;
  return (lp - lm) / (2.0 * h);
}

}  // namespace

double grad_check(const MlpParams& params, const Mat& input, double h, int max_per_tensor) {
  MlpParams work = params;
  ForwardCache cache;
  Mat out = forward(work, input, Mode::kTrain, &cache);
  Mat ones(out.rows, out.cols);
  for (double& v : ones.a) v = 1.0;
  GradBundle analytic = backward(work, cache, ones);

  // Central differences carry ~eps*|loss|/(2h) of absolute cancellation
  // noise. Slots whose analytic and numeric values both sit below that noise
  // (times a safety margin) are unmeasurable by finite differences; batch-norm
  // makes pre-BN bias gradients exactly zero, for example. Skipping them keeps
  // the check strict where it has signal.
  const double loss0 = loss_sum(work, input);
  const double fd_noise =
      std::numeric_limits<double>::epsilon() * std::max(1.0, std::fabs(loss0)) / (2.0 * h);
  const double measurable = 1e3 * fd_noise;

  double worst = 0.0;
  auto check_tensor = [&](double* data, std::size_t size, const double* adata) {
    if (size == 0) return;
    std::size_t m = max_per_tensor < 0 ? size
                                       : std::min<std::size_t>(size, static_cast<std::size_t>(max_per_tensor));
    std::size_t stride = std::max<std::size_t>(1, size / m);
    double amax = 0.0;
    for (std::size_t k = 0; k < size; ++k) amax = std::max(amax, std::fabs(adata[k]));
    const double floor = std::max(1e-8, 1e-3 * amax);
    std::size_t checked = 0;
    for (std::size_t k = 0; k < size && checked < m; k += stride, ++checked) {
      double num = numeric_grad(work, data + k, input, h);
      if (std::fabs(adata[k]) < measurable && std::fabs(num) < measurable) continue;
      double scale = std::max(std::max(std::fabs(adata[k]), std::fabs(num)), floor);
      worst = std::max(worst, std::fabs(adata[k] - num) / scale);
    }
  };

  for (std::size_t li = 0; li < work.layers.size(); ++li) {
    Layer& l = work.layers[li];
    LayerGrads& g = analytic.layers[li];
    check_tensor(l.w.a.data(), l.w.a.size(), g.dw.a.data());
    check_tensor(l.b.data(), l.b.size(), g.db.data());
    if (l.has_bn) {
      check_tensor(l.bn_scale.data(), l.bn_scale.size(), g.dscale.data());
      check_tensor(l.bn_shift.data(), l.bn_shift.size(), g.dshift.data());
    }
  }
  return worst;
}

}  // namespace ltc::nn
