#pragma once

#include <array>

#include "ltc/common.hpp"

namespace ltc::shape {

enum class ShapeCategory { kElongated, kFlat, kRegular };

inline const char* category_name(ShapeCategory c) {
  switch (c) {
    case ShapeCategory::kElongated: return "elongated";
    case ShapeCategory::kFlat: return "flat";
    case ShapeCategory::kRegular: return "regular";
  }
  return "?";
}

// Size-normalized: bounding box max edge = 1 (uniform rescale).
struct PointCloud {
  std::vector<std::array<double, 3>> points;
};

struct SuperellipsoidSpec {
  double ax = 1.0, ay = 1.0, az = 1.0;  // semi-axis ratios
  double exponent = 2.0;                // 2 = ellipsoid, higher = boxier
};

// Surface sample of |x/ax|^p + |y/ay|^p + |z/az|^p = 1, then size-normalized.
PointCloud sample_superellipsoid(const SuperellipsoidSpec& spec, int n, Rng& rng);

// Per-object jittered axis ratios:
//   elongated (1, 0.15+-0.05, 0.15+-0.05)
//   flat      (1, 0.7+-0.2,   0.08+-0.04)
//   regular   (1, 0.8+-0.2,   0.8+-0.2)
SuperellipsoidSpec sample_category_spec(ShapeCategory category, Rng& rng);

PointCloud generate_cloud(ShapeCategory category, int n, Rng& rng);

// Rotation-invariant 8-vector from the point covariance spectrum:
// [l1, l2, l3, l2/l1, l3/l1, (l2-l3)/l1 flatness, (l1-l2)/l1 elongation,
//  l3/l1 sphericity], eigenvalues sorted descending.
std::array<double, 8> descriptor(const PointCloud& cloud);

struct ShapeFeature2D {
  double x = 0.0;
  double y = 0.0;
};

struct PcaModel {
  Vec mean;                       // dim 8
  Vec axis1, axis2;               // orthonormal principal directions
  double explained1 = 0.0;        // variance ratios, axis1 >= axis2
  double explained2 = 0.0;
  bool rank_deficient = false;    // axis2 taken from the orthonormal completion
};

// Centered PCA to two components. Sign convention: the largest-magnitude
// element of each axis is positive. Needs >= 3 samples spanning >= 2 dims;
// on rank-deficient input the second axis still comes out orthonormal
// (eigenvectors of a symmetric matrix) and the model is flagged.
PcaModel pca_fit(const std::vector<std::array<double, 8>>& descriptors);

ShapeFeature2D pca_project(const PcaModel& model, const std::array<double, 8>& descriptor);

// Mean silhouette coefficient over Euclidean distance with the given labels.
// Degenerate points (zero spread) contribute 0.
double cluster_separation(const std::vector<ShapeFeature2D>& features,
                          const std::vector<ShapeCategory>& labels);

// Train accuracy of a small softmax regression on the 2D features.
double linear_probe_accuracy(const std::vector<ShapeFeature2D>& features,
                             const std::vector<ShapeCategory>& labels);

// Andrew monotone chain; returns hull vertices in counterclockwise order.
std::vector<std::array<double, 2>> convex_hull_2d(const std::vector<std::array<double, 2>>& pts);
bool point_in_convex_hull(const std::array<double, 2>& p,
                          const std::vector<std::array<double, 2>>& hull, double slack = 1e-9);

struct Corpus {
  std::vector<std::array<double, 8>> descriptors;
  std::vector<ShapeCategory> labels;
  std::vector<ShapeFeature2D> features;  // filled after pca_fit
  PcaModel pca;
};

// The default training corpus: `per_category` clouds per category at
// `points_per_cloud` samples, descriptors extracted, PCA fitted, features
// projected. The PCA fitted here is what training freezes and checkpoints.
Corpus build_corpus(int per_category, int points_per_cloud, Rng& rng);

}  // namespace ltc::shape
