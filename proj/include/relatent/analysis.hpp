#pragma once

#include <cstdint>
#include <vector>

namespace relatent {

/// Row-major point set, n points of dimension d.
struct PointSet {
  int n = 0;
  int d = 0;
  std::vector<double> values;

  const double* row(int i) const { return values.data() + static_cast<std::size_t>(i) * d; }
};

struct KMeansResult {
  std::vector<int> assignments;   // [n]
  std::vector<double> centroids;  // [k * d]
  double inertia = 0.0;
  int k = 0;
};

/// Lloyd's algorithm, k-means++ seeding, 10 restarts keeping the best
/// inertia. Deterministic for a fixed seed. Empty clusters are re-seeded
/// at the farthest point.
KMeansResult kmeans(const PointSet& points, int k, std::uint64_t seed);

/// Nearest-centroid assignment of new points to a fitted clustering.
std::vector<int> kmeans_assign(const KMeansResult& fit, const PointSet& points);

/// Mean silhouette over all points, Euclidean distances. Requires at least
/// two clusters and no singleton-only clustering.
double silhouette_score(const PointSet& points,
                        const std::vector<int>& assignments);

struct ChooseKResult {
  int best_k = 0;
  std::vector<int> ks;
  std::vector<double> scores;
};

/// Runs kmeans for every k and picks the best silhouette (ties -> smaller
/// k). Scores more than `max_points` points on a seeded subsample.
ChooseKResult choose_k(const PointSet& points, const std::vector<int>& ks,
                       std::uint64_t seed, int max_points = 5000);

/// Fraction of points correctly matched under the best cluster-to-label
/// matching. Exhaustive over permutations up to 10 clusters/labels,
/// Hungarian assignment beyond that.
double cluster_accuracy(const std::vector<int>& assignments,
                        const std::vector<int>& labels);

/// Mean-centered projection onto the top-2 principal axes. Degenerate
/// directions are zero-filled; each axis is oriented so its
/// largest-magnitude loading is positive.
PointSet pca_project(const PointSet& points, int out_dim = 2);

/// Eigenvalues of the covariance matrix, descending (used by tests).
std::vector<double> pca_eigenvalues(const PointSet& points);

}  // namespace relatent
