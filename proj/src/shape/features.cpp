#include "ltc/shape/features.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace ltc::shape {

PointCloud sample_superellipsoid(const SuperellipsoidSpec& spec, int n, Rng& rng) {
  check(n >= 64, "sample_superellipsoid: need at least 64 points");
  check(spec.ax > 0 && spec.ay > 0 && spec.az > 0 && spec.exponent > 1.0,
        "sample_superellipsoid: spec must be positive with exponent > 1");
  const double p = spec.exponent;
  const double a[3] = {spec.ax, spec.ay, spec.az};

  // Radial ray casts from uniform directions land on the surface with density
  // cos(gamma) / r^2 per unit area (gamma = angle between the surface normal
  // and the ray). Importance-resampling candidates with weight r^2/cos(gamma)
  // recovers an area-uniform sample even at extreme aspect ratios, where the
  // raw ray casts would crowd the waist and starve the tips.
  const int m = std::max(4096, 16 * n);
  std::vector<std::array<double, 3>> cand(static_cast<std::size_t>(m));
  std::vector<double> weight(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    double u[3], norm;
    do {
      u[0] = rng.normal();
      u[1] = rng.normal();
      u[2] = rng.normal();
      norm = std::sqrt(u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
    } while (norm < 1e-12);
    for (double& v : u) v /= norm;
    double level = 0.0;
    for (int d = 0; d < 3; ++d) level += std::pow(std::fabs(u[d] / a[d]), p);
    const double t = std::pow(level, -1.0 / p);
    const std::array<double, 3> q{t * u[0], t * u[1], t * u[2]};
    // Gradient of sum_d |x_d/a_d|^p is the (unnormalized) outward normal.
    double g[3], gn = 0.0;
    for (int d = 0; d < 3; ++d) {
      g[d] = p / a[d] * std::pow(std::fabs(q[d] / a[d]), p - 1.0) *
             (q[d] < 0.0 ? -1.0 : 1.0);
      gn += g[d] * g[d];
    }
    gn = std::sqrt(gn);
    const double cos_gamma =
        std::max(1e-9, (g[0] * u[0] + g[1] * u[1] + g[2] * u[2]) / gn);
    cand[static_cast<std::size_t>(i)] = q;
    weight[static_cast<std::size_t>(i)] = t * t / cos_gamma;
  }

  // Systematic resampling: n evenly spaced quantiles of the weight CDF.
  double total = 0.0;
  for (double wi : weight) total += wi;
  PointCloud cloud;
  cloud.points.resize(static_cast<std::size_t>(n));
  const double stride = total / n;
  double pointer = rng.uniform(0.0, stride);
  double cum = weight[0];
  std::size_t j = 0;
  for (int i = 0; i < n; ++i) {
    while (cum < pointer && j + 1 < cand.size()) cum += weight[++j];
    cloud.points[static_cast<std::size_t>(i)] = cand[j];
    pointer += stride;
  }

  // Uniform rescale so the bounding box max edge is exactly 1.
  double lo[3] = {cloud.points[0][0], cloud.points[0][1], cloud.points[0][2]};
  double hi[3] = {lo[0], lo[1], lo[2]};
  for (const auto& q : cloud.points)
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], q[d]);
      hi[d] = std::max(hi[d], q[d]);
    }
  double edge = 0.0;
  for (int d = 0; d < 3; ++d) edge = std::max(edge, hi[d] - lo[d]);
  check(edge > 0.0, "sample_superellipsoid: degenerate cloud");
  const double s = 1.0 / edge;
  for (auto& q : cloud.points)
    for (int d = 0; d < 3; ++d) q[d] *= s;
  return cloud;
}

SuperellipsoidSpec sample_category_spec(ShapeCategory category, Rng& rng) {
  SuperellipsoidSpec spec;
  switch (category) {
    case ShapeCategory::kElongated:
      spec.ay = 0.15 + 0.05 * rng.uniform(-1.0, 1.0);
      spec.az = 0.15 + 0.05 * rng.uniform(-1.0, 1.0);
      break;
    case ShapeCategory::kFlat:
      spec.ay = 0.7 + 0.2 * rng.uniform(-1.0, 1.0);
      spec.az = 0.08 + 0.04 * rng.uniform(-1.0, 1.0);
      break;
    case ShapeCategory::kRegular:
      spec.ay = 0.8 + 0.2 * rng.uniform(-1.0, 1.0);
      spec.az = 0.8 + 0.2 * rng.uniform(-1.0, 1.0);
      break;
  }
  spec.exponent = rng.uniform(1.7, 3.2);
  return spec;
}

PointCloud generate_cloud(ShapeCategory category, int n, Rng& rng) {
  const SuperellipsoidSpec spec = sample_category_spec(category, rng);
  return sample_superellipsoid(spec, n, rng);
}

std::array<double, 8> descriptor(const PointCloud& cloud) {
  const std::size_t n = cloud.points.size();
  check(n >= 3, "descriptor: too few points");
  double mean[3] = {0, 0, 0};
  for (const auto& q : cloud.points)
    for (int d = 0; d < 3; ++d) mean[d] += q[d];
  for (int d = 0; d < 3; ++d) mean[d] /= static_cast<double>(n);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& q : cloud.points) {
    Eigen::Vector3d c(q[0] - mean[0], q[1] - mean[1], q[2] - mean[2]);
    cov += c * c.transpose();
  }
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);
  check(es.info() == Eigen::Success, "descriptor: eigensolver failed");
  // Ascending from Eigen; we want descending.
  double l1 = es.eigenvalues()(2);
  double l2 = es.eigenvalues()(1);
  double l3 = es.eigenvalues()(0);
  l1 = std::max(l1, 0.0);
  l2 = std::max(l2, 0.0);
  l3 = std::max(l3, 0.0);
  check(l1 > 0.0, "descriptor: degenerate (zero-variance) cloud");
  return {l1, l2, l3, l2 / l1, l3 / l1, (l2 - l3) / l1, (l1 - l2) / l1, l3 / l1};
}

PcaModel pca_fit(const std::vector<std::array<double, 8>>& descriptors) {
  const std::size_t n = descriptors.size();
  check(n >= 3, "pca_fit: need at least 3 samples");
  PcaModel model;
  model.mean.assign(8, 0.0);
  for (const auto& d : descriptors)
    for (int j = 0; j < 8; ++j) model.mean[static_cast<std::size_t>(j)] += d[static_cast<std::size_t>(j)];
  for (double& m : model.mean) m /= static_cast<double>(n);

  Eigen::Matrix<double, 8, 8> cov = Eigen::Matrix<double, 8, 8>::Zero();
  for (const auto& d : descriptors) {
    Eigen::Matrix<double, 8, 1> c;
    for (int j = 0; j < 8; ++j)
      c(j) = d[static_cast<std::size_t>(j)] - model.mean[static_cast<std::size_t>(j)];
    cov += c * c.transpose();
  }
  cov /= static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> es(cov);
  check(es.info() == Eigen::Success, "pca_fit: eigensolver failed");
  double total = 0.0;
  for (int j = 0; j < 8; ++j) total += std::max(es.eigenvalues()(j), 0.0);
  check(total > 0.0, "pca_fit: zero-variance input spans no dimensions");

  const double l1 = std::max(es.eigenvalues()(7), 0.0);
  const double l2 = std::max(es.eigenvalues()(6), 0.0);
  model.explained1 = l1 / total;
  model.explained2 = l2 / total;
  model.rank_deficient = l2 <= 1e-12 * std::max(l1, 1e-300);

  auto take_axis = [&](int col) {
    Vec axis(8);
    double best = 0.0;
    int best_j = 0;
    for (int j = 0; j < 8; ++j) {
      axis[static_cast<std::size_t>(j)] = es.eigenvectors()(j, col);
      if (std::fabs(axis[static_cast<std::size_t>(j)]) > best) {
        best = std::fabs(axis[static_cast<std::size_t>(j)]);
        best_j = j;
      }
    }
    if (axis[static_cast<std::size_t>(best_j)] < 0.0)
      for (double& v : axis) v = -v;
    return axis;
  };
  model.axis1 = take_axis(7);
  model.axis2 = take_axis(6);
  return model;
}

ShapeFeature2D pca_project(const PcaModel& model, const std::array<double, 8>& d) {
  check(model.mean.size() == 8, "pca_project: model not fitted");
  ShapeFeature2D f;
  for (int j = 0; j < 8; ++j) {
    const double c = d[static_cast<std::size_t>(j)] - model.mean[static_cast<std::size_t>(j)];
    f.x += model.axis1[static_cast<std::size_t>(j)] * c;
    f.y += model.axis2[static_cast<std::size_t>(j)] * c;
  }
  return f;
}

double cluster_separation(const std::vector<ShapeFeature2D>& features,
                          const std::vector<ShapeCategory>& labels) {
  const std::size_t n = features.size();
  check(n == labels.size() && n >= 2, "cluster_separation: bad input sizes");
  auto dist = [&](std::size_t i, std::size_t j) {
    const double dx = features[i].x - features[j].x;
    const double dy = features[i].y - features[j].y;
    return std::sqrt(dx * dx + dy * dy);
  };
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double a_sum = 0.0;
    int a_cnt = 0;
    double b_best = -1.0;
    for (int cat = 0; cat < 3; ++cat) {
      const auto c = static_cast<ShapeCategory>(cat);
      if (c == labels[i]) continue;
      double s = 0.0;
      int cnt = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (labels[j] == c) {
          s += dist(i, j);
          ++cnt;
        }
      if (cnt == 0) continue;
      const double m = s / cnt;
      if (b_best < 0.0 || m < b_best) b_best = m;
    }
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && labels[j] == labels[i]) {
        a_sum += dist(i, j);
        ++a_cnt;
      }
    if (a_cnt == 0 || b_best < 0.0) continue;  // singleton clusters score 0
    const double a = a_sum / a_cnt;
    const double denom = std::max(a, b_best);
    total += denom > 0.0 ? (b_best - a) / denom : 0.0;
  }
  return total / static_cast<double>(n);
}

double linear_probe_accuracy(const std::vector<ShapeFeature2D>& features,
                             const std::vector<ShapeCategory>& labels) {
  const std::size_t n = features.size();
  check(n == labels.size() && n >= 3, "linear_probe_accuracy: bad input sizes");

  // Standardize the two inputs, then full-batch softmax regression.
  double mx = 0, my = 0;
  for (const auto& f : features) {
    mx += f.x;
    my += f.y;
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sx = 0, sy = 0;
  for (const auto& f : features) {
    sx += (f.x - mx) * (f.x - mx);
    sy += (f.y - my) * (f.y - my);
  }
  sx = std::sqrt(sx / static_cast<double>(n)) + 1e-12;
  sy = std::sqrt(sy / static_cast<double>(n)) + 1e-12;

  double w[3][2] = {{0, 0}, {0, 0}, {0, 0}};
  double b[3] = {0, 0, 0};
  const double lr = 0.5;
  for (int iter = 0; iter < 800; ++iter) {
    double gw[3][2] = {{0, 0}, {0, 0}, {0, 0}};
    double gb[3] = {0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
      const double x0 = (features[i].x - mx) / sx;
      const double x1 = (features[i].y - my) / sy;
      double logits[3], peak = -1e300;
      for (int c = 0; c < 3; ++c) {
        logits[c] = w[c][0] * x0 + w[c][1] * x1 + b[c];
        peak = std::max(peak, logits[c]);
      }
      double z = 0.0;
      for (int c = 0; c < 3; ++c) z += std::exp(logits[c] - peak);
      for (int c = 0; c < 3; ++c) {
        const double p = std::exp(logits[c] - peak) / z;
        const double t = static_cast<int>(labels[i]) == c ? 1.0 : 0.0;
        const double g = (p - t) / static_cast<double>(n);
        gw[c][0] += g * x0;
        gw[c][1] += g * x1;
        gb[c] += g;
      }
    }
    for (int c = 0; c < 3; ++c) {
      w[c][0] -= lr * gw[c][0];
      w[c][1] -= lr * gw[c][1];
      b[c] -= lr * gb[c];
    }
  }

  int correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x0 = (features[i].x - mx) / sx;
    const double x1 = (features[i].y - my) / sy;
    int arg = 0;
    double best = -1e300;
    for (int c = 0; c < 3; ++c) {
      const double l = w[c][0] * x0 + w[c][1] * x1 + b[c];
      if (l > best) {
        best = l;
        arg = c;
      }
    }
    if (arg == static_cast<int>(labels[i])) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(n);
}

std::vector<std::array<double, 2>> convex_hull_2d(const std::vector<std::array<double, 2>>& pts) {
  std::vector<std::array<double, 2>> p = pts;
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  const std::size_t n = p.size();
  if (n <= 2) return p;
  auto cross = [](const std::array<double, 2>& o, const std::array<double, 2>& a,
                  const std::array<double, 2>& b) {
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
  };
  std::vector<std::array<double, 2>> hull(2 * n);
  std::size_t k = 0;
  for (std::size_t i = 0; i < n; ++i) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
    hull[k++] = p[i];
  }
  const std::size_t lower = k + 1;
  for (std::size_t i = n - 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], p[i]) <= 0) --k;
    hull[k++] = p[i];
  }
  hull.resize(k - 1);
  return hull;
}

bool point_in_convex_hull(const std::array<double, 2>& q,
                          const std::vector<std::array<double, 2>>& hull, double slack) {
  if (hull.empty()) return false;
  if (hull.size() == 1)
    return std::fabs(q[0] - hull[0][0]) <= slack && std::fabs(q[1] - hull[0][1]) <= slack;
  if (hull.size() == 2) {
    // Distance to the segment.
    const double vx = hull[1][0] - hull[0][0], vy = hull[1][1] - hull[0][1];
    const double wx = q[0] - hull[0][0], wy = q[1] - hull[0][1];
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0 ? (wx * vx + wy * vy) / len2 : 0.0;
    t = clamp(t, 0.0, 1.0);
    const double dx = wx - t * vx, dy = wy - t * vy;
    return std::sqrt(dx * dx + dy * dy) <= slack;
  }
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    const double cr = (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]);
    if (cr < -slack) return false;
  }
  return true;
}

Corpus build_corpus(int per_category, int points_per_cloud, Rng& rng) {
  check(per_category >= 3, "build_corpus: need at least 3 clouds per category");
  Corpus corpus;
  for (int cat = 0; cat < 3; ++cat) {
    for (int i = 0; i < per_category; ++i) {
      const auto c = static_cast<ShapeCategory>(cat);
      corpus.descriptors.push_back(descriptor(generate_cloud(c, points_per_cloud, rng)));
      corpus.labels.push_back(c);
    }
  }
  corpus.pca = pca_fit(corpus.descriptors);
  corpus.features.reserve(corpus.descriptors.size());
  for (const auto& d : corpus.descriptors)
    corpus.features.push_back(pca_project(corpus.pca, d));
  return corpus;
}

}  // namespace ltc::shape
