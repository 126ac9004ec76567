#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "ltc/shape/features.hpp"

using namespace ltc;
using namespace ltc::shape;

namespace {

double rel_diff(double a, double b, double scale) {
  return std::fabs(a - b) / std::max(scale, 1e-12);
}

PointCloud rotated(const PointCloud& cloud, const Eigen::Matrix3d& r) {
  PointCloud out;
  out.points.reserve(cloud.points.size());
  for (const auto& p : cloud.points) {
    Eigen::Vector3d v = r * Eigen::Vector3d(p[0], p[1], p[2]);
    out.points.push_back({v[0], v[1], v[2]});
  }
  return out;
}

}  // namespace

TEST_CASE("sphere sample is a size-normalized shell with isotropic spectrum") {
  Rng rng(7);
  SuperellipsoidSpec sphere;  // ax=ay=az=1, exponent 2
  PointCloud cloud = sample_superellipsoid(sphere, 4096, rng);
  REQUIRE(cloud.points.size() == 4096);

  // Size normalization: max bounding-box edge equals 1.
  double lo[3] = {1e9, 1e9, 1e9}, hi[3] = {-1e9, -1e9, -1e9};
  for (const auto& p : cloud.points)
    for (int d = 0; d < 3; ++d) {
      lo[d] = std::min(lo[d], p[d]);
      hi[d] = std::max(hi[d], p[d]);
    }
  const double max_edge =
      std::max({hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]});
  CHECK(max_edge == doctest::Approx(1.0).epsilon(1e-9));

  // Every point sits on the shell: distance to centroid ~ 0.5.
  double cx = 0, cy = 0, cz = 0;
  for (const auto& p : cloud.points) {
    cx += p[0];
    cy += p[1];
    cz += p[2];
  }
  cx /= 4096;
  cy /= 4096;
  cz /= 4096;
  for (int i = 0; i < 4096; i += 97) {
    const auto& p = cloud.points[static_cast<std::size_t>(i)];
    const double r = std::sqrt((p[0] - cx) * (p[0] - cx) + (p[1] - cy) * (p[1] - cy) +
                               (p[2] - cz) * (p[2] - cz));
    CHECK(r == doctest::Approx(0.5).epsilon(0.05));
  }

  // Isotropic covariance: all three eigenvalues close, shape ratios near a ball.
  auto d = descriptor(cloud);
  CHECK(d[3] > 0.9);       // l2/l1
  CHECK(d[4] > 0.9);       // l3/l1
  CHECK(d[6] < 0.1);       // elongation
  CHECK(d[5] < 0.1);       // flatness
  CHECK(d[7] > 0.9);       // sphericity
}

TEST_CASE("elongated category has a dominant first eigenvalue") {
  Rng rng(11);
  SuperellipsoidSpec spec;
  spec.ax = 1.0;
  spec.ay = 0.15;
  spec.az = 0.15;
  PointCloud cloud = sample_superellipsoid(spec, 2048, rng);
  auto d = descriptor(cloud);
  // l1/l2 ~ (ax/ay)^2 ~ 44; demand at least an order of magnitude.
  CHECK(d[0] / std::max(d[1], 1e-12) > 10.0);
  CHECK(d[6] > 0.8);  // elongation (l1-l2)/l1
}

TEST_CASE("a perfect line has elongation exactly 1") {
  PointCloud line;
  for (int i = 0; i < 64; ++i)
    line.points.push_back({static_cast<double>(i) / 63.0, 0.0, 0.0});
  auto d = descriptor(line);
  CHECK(d[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d[2] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(d[6] == doctest::Approx(1.0).epsilon(1e-12));  // elongation
  CHECK(d[7] == doctest::Approx(0.0).epsilon(1e-12));  // sphericity
}

TEST_CASE("descriptor is rotation invariant") {
  Rng rng(23);
  PointCloud cloud = generate_cloud(ShapeCategory::kFlat, 1024, rng);
  auto base = descriptor(cloud);

  Eigen::Matrix3d r =
      (Eigen::AngleAxisd(0.83, Eigen::Vector3d::UnitZ()) *
       Eigen::AngleAxisd(-1.21, Eigen::Vector3d::UnitY()) *
       Eigen::AngleAxisd(2.47, Eigen::Vector3d::UnitX()))
          .toRotationMatrix();
  auto rot = descriptor(rotated(cloud, r));
  for (int i = 0; i < 8; ++i) CHECK(rel_diff(base[static_cast<std::size_t>(i)],
                                             rot[static_cast<std::size_t>(i)],
                                             std::fabs(base[0])) < 1e-6);
}

TEST_CASE("descriptor is stable across sampling draws at n=512") {
  Rng rng(31);
  SuperellipsoidSpec spec;
  spec.ax = 1.0;
  spec.ay = 0.6;
  spec.az = 0.25;
  auto a = descriptor(sample_superellipsoid(spec, 512, rng));
  auto b = descriptor(sample_superellipsoid(spec, 512, rng));
  // Sample-covariance eigenvalues carry ~sqrt(2/n) ~ 6% relative error at
  // n=512; allow 25% of l1 for the eigenvalues and 0.15 absolute for the
  // dimensionless ratio components (worst observed over 20 paired draws was
  // 16% and 0.09).
  for (int i = 0; i < 3; ++i)
    CHECK(std::fabs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]) <
          0.25 * a[0]);
  for (int i = 3; i < 8; ++i)
    CHECK(std::fabs(a[static_cast<std::size_t>(i)] - b[static_cast<std::size_t>(i)]) < 0.15);
}

TEST_CASE("pca matches an Eigen eigendecomposition oracle") {
  Rng rng(101);
  std::vector<std::array<double, 8>> descs;
  std::vector<ShapeCategory> labels;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 40; ++i) {
      const auto cat = static_cast<ShapeCategory>(c);
      descs.push_back(descriptor(generate_cloud(cat, 256, rng)));
      labels.push_back(cat);
    }
  PcaModel model = pca_fit(descs);

  // Orthonormal axes.
  double dot = 0, n1 = 0, n2 = 0;
  for (int i = 0; i < 8; ++i) {
    dot += model.axis1[static_cast<std::size_t>(i)] * model.axis2[static_cast<std::size_t>(i)];
    n1 += model.axis1[static_cast<std::size_t>(i)] * model.axis1[static_cast<std::size_t>(i)];
    n2 += model.axis2[static_cast<std::size_t>(i)] * model.axis2[static_cast<std::size_t>(i)];
  }
  CHECK(std::fabs(dot) < 1e-9);
  CHECK(n1 == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(n2 == doctest::Approx(1.0).epsilon(1e-9));

  // Projected features are centered.
  double mx = 0, my = 0;
  for (const auto& d : descs) {
    auto f = pca_project(model, d);
    mx += f.x;
    my += f.y;
  }
  mx /= static_cast<double>(descs.size());
  my /= static_cast<double>(descs.size());
  CHECK(std::fabs(mx) < 1e-9);
  CHECK(std::fabs(my) < 1e-9);

  // Oracle: covariance eigensystem via Eigen.
  const int n = static_cast<int>(descs.size());
  Eigen::MatrixXd x(n, 8);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < 8; ++j)
      x(i, j) = descs[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] -
                model.mean[static_cast<std::size_t>(j)];
  Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  Eigen::VectorXd evals = es.eigenvalues();  // ascending
  const double total = evals.sum();
  CHECK(model.explained1 ==
        doctest::Approx(evals(7) / total).epsilon(1e-8));
  CHECK(model.explained2 ==
        doctest::Approx(evals(6) / total).epsilon(1e-8));

  // Axis alignment with the oracle eigenvectors (up to overall sign).
  Eigen::VectorXd v1 = es.eigenvectors().col(7), v2 = es.eigenvectors().col(6);
  double a1 = 0, a2 = 0;
  for (int i = 0; i < 8; ++i) {
    a1 += v1(i) * model.axis1[static_cast<std::size_t>(i)];
    a2 += v2(i) * model.axis2[static_cast<std::size_t>(i)];
  }
  CHECK(std::fabs(a1) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::fabs(a2) == doctest::Approx(1.0).epsilon(1e-8));

  // Sign convention: the largest-magnitude element of each axis is positive.
  auto check_sign = [](const Vec& axis) {
    double best = 0.0;
    for (double v : axis)
      if (std::fabs(v) > std::fabs(best)) best = v;
    CHECK(best > 0.0);
  };
  check_sign(model.axis1);
  check_sign(model.axis2);
}

TEST_CASE("silhouette behaves on trivial geometries") {
  SUBCASE("two tight distant clusters separate cleanly") {
    std::vector<ShapeFeature2D> f;
    std::vector<ShapeCategory> l;
    for (int i = 0; i < 8; ++i) {
      f.push_back({0.01 * i, 0.0});
      l.push_back(ShapeCategory::kElongated);
      f.push_back({10.0 + 0.01 * i, 0.0});
      l.push_back(ShapeCategory::kFlat);
    }
    CHECK(cluster_separation(f, l) > 0.98);
  }
  SUBCASE("coincident clusters give non-positive separation") {
    std::vector<ShapeFeature2D> f;
    std::vector<ShapeCategory> l;
    for (int i = 0; i < 8; ++i) {
      f.push_back({0.1 * i, 0.0});
      l.push_back(i % 2 == 0 ? ShapeCategory::kElongated : ShapeCategory::kFlat);
    }
    CHECK(cluster_separation(f, l) <= 0.0);
  }
  SUBCASE("all-identical points contribute zero") {
    std::vector<ShapeFeature2D> f(6, ShapeFeature2D{1.0, 1.0});
    std::vector<ShapeCategory> l(6, ShapeCategory::kRegular);
    l[0] = ShapeCategory::kFlat;
    CHECK(cluster_separation(f, l) == doctest::Approx(0.0));
  }
}

TEST_CASE("convex hull basics") {
  std::vector<std::array<double, 2>> pts = {
      {0, 0}, {1, 0}, {1, 1}, {0, 1}, {0.5, 0.5}, {0.25, 0.75}};
  auto hull = convex_hull_2d(pts);
  REQUIRE(hull.size() == 4);  // interior points dropped

  // Counterclockwise orientation: positive signed area.
  double area2 = 0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    area2 += a[0] * b[1] - b[0] * a[1];
  }
  CHECK(area2 == doctest::Approx(2.0));  // twice the unit square area

  CHECK(point_in_convex_hull({0.5, 0.5}, hull));
  CHECK(point_in_convex_hull({0.0, 0.0}, hull));       // vertex counts as inside
  CHECK(point_in_convex_hull({0.5, 1.0}, hull));       // edge counts as inside
  CHECK(!point_in_convex_hull({1.2, 0.5}, hull));
  CHECK(!point_in_convex_hull({-0.001, 0.5}, hull));
  CHECK(point_in_convex_hull({-0.001, 0.5}, hull, 0.01));  // slack admits it
}

TEST_CASE("default corpus separates categories") {
  Rng rng(424242);
  Corpus corpus = build_corpus(50, 256, rng);
  REQUIRE(corpus.descriptors.size() == 150);
  REQUIRE(corpus.features.size() == 150);
  CHECK(cluster_separation(corpus.features, corpus.labels) >= 0.5);
  CHECK(linear_probe_accuracy(corpus.features, corpus.labels) >= 0.95);
}
