#include "relatent/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "relatent/errors.hpp"
#include "relatent/rng.hpp"

namespace relatent {

namespace {

double sq_dist(const double* a, const double* b, int d) {
  double acc = 0.0;
  for (int k = 0; k < d; ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

int nearest_centroid(const double* point, const std::vector<double>& centroids,
                     int k, int d) {
  int best = 0;
  double best_dist = std::numeric_limits<double>::max();
  for (int c = 0; c < k; ++c) {
    const double dist = sq_dist(point, centroids.data() + static_cast<std::size_t>(c) * d, d);
    if (dist < best_dist) {
      best_dist = dist;
      best = c;
    }
  }
  return best;
}

std::vector<double> seed_plus_plus(const PointSet& points, int k, Rng& rng) {
  const int n = points.n, d = points.d;
  std::vector<double> centroids(static_cast<std::size_t>(k) * d);
  std::vector<double> min_dist(static_cast<std::size_t>(n),
                               std::numeric_limits<double>::max());
  int first = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
  std::copy(points.row(first), points.row(first) + d, centroids.begin());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      const double dist = sq_dist(points.row(i),
                                  centroids.data() + static_cast<std::size_t>(c - 1) * d, d);
      min_dist[static_cast<std::size_t>(i)] =
          std::min(min_dist[static_cast<std::size_t>(i)], dist);
      total += min_dist[static_cast<std::size_t>(i)];
    }
    int pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        acc += min_dist[static_cast<std::size_t>(i)];
        if (acc >= target) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n)));
    }
    std::copy(points.row(pick), points.row(pick) + d,
              centroids.begin() + static_cast<std::size_t>(c) * d);
  }
  return centroids;
}

KMeansResult lloyd(const PointSet& points, int k, Rng& rng) {
  const int n = points.n, d = points.d;
  constexpr int kMaxIters = 300;
  KMeansResult result;
  result.k = k;
  result.centroids = seed_plus_plus(points, k, rng);
  result.assignments.assign(static_cast<std::size_t>(n), -1);

  std::vector<double> sums(static_cast<std::size_t>(k) * d);
  std::vector<int> counts(static_cast<std::size_t>(k));
  for (int iter = 0; iter < kMaxIters; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      const int c = nearest_centroid(points.row(i), result.centroids, k, d);
      if (c != result.assignments[static_cast<std::size_t>(i)]) {
        result.assignments[static_cast<std::size_t>(i)] = c;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      const int c = result.assignments[static_cast<std::size_t>(i)];
      ++counts[static_cast<std::size_t>(c)];
      const double* p = points.row(i);
      double* s = sums.data() + static_cast<std::size_t>(c) * d;
      for (int x = 0; x < d; ++x) s[x] += p[x];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] == 0) {
        // Re-seed an empty cluster at the point farthest from its centroid.
        int far = 0;
        double far_dist = -1.0;
        for (int i = 0; i < n; ++i) {
          const int a = result.assignments[static_cast<std::size_t>(i)];
          const double dist = sq_dist(points.row(i),
                                      result.centroids.data() + static_cast<std::size_t>(a) * d, d);
          if (dist > far_dist) {
            far_dist = dist;
            far = i;
          }
        }
        std::copy(points.row(far), points.row(far) + d,
                  result.centroids.begin() + static_cast<std::size_t>(c) * d);
        continue;
      }
      double* s = sums.data() + static_cast<std::size_t>(c) * d;
      double* ctr = result.centroids.data() + static_cast<std::size_t>(c) * d;
      for (int x = 0; x < d; ++x) {
        ctr[x] = s[x] / counts[static_cast<std::size_t>(c)];
      }
    }
  }
  result.inertia = 0.0;
  for (int i = 0; i < n; ++i) {
    result.inertia += sq_dist(points.row(i),
                              result.centroids.data() +
                                  static_cast<std::size_t>(result.assignments[static_cast<std::size_t>(i)]) * d,
                              d);
  }
  return result;
}

}  // namespace

KMeansResult kmeans(const PointSet& points, int k, std::uint64_t seed) {
  if (k < 1) throw ContractError("kmeans: k must be >= 1");
  if (points.n < k) {
    throw ContractError("kmeans: " + std::to_string(points.n) +
                        " points cannot form " + std::to_string(k) + " clusters");
  }
  constexpr int kRestarts = 10;
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::max();
  for (int restart = 0; restart < kRestarts; ++restart) {
    Rng rng = Rng::derive(seed, 0x6B6D, static_cast<std::uint64_t>(restart));
    KMeansResult run = lloyd(points, k, rng);
    if (run.inertia < best.inertia) best = std::move(run);
  }
  return best;
}

std::vector<int> kmeans_assign(const KMeansResult& fit, const PointSet& points) {
  std::vector<int> assignments(static_cast<std::size_t>(points.n));
  for (int i = 0; i < points.n; ++i) {
    assignments[static_cast<std::size_t>(i)] =
        nearest_centroid(points.row(i), fit.centroids, fit.k, points.d);
  }
  return assignments;
}

double silhouette_score(const PointSet& points,
                        const std::vector<int>& assignments) {
  const int n = points.n;
  if (static_cast<int>(assignments.size()) != n) {
    throw ContractError("silhouette_score: assignment size mismatch");
  }
  int k = 0;
  for (int a : assignments) k = std::max(k, a + 1);
  if (k < 2) throw ContractError("silhouette_score: need at least 2 clusters");
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int a : assignments) {
    if (a < 0) throw ContractError("silhouette_score: negative cluster id");
    ++counts[static_cast<std::size_t>(a)];
  }
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw ContractError("silhouette_score: empty cluster " + std::to_string(c));
    }
  }
  bool any_multi = false;
  for (int c = 0; c < k; ++c) any_multi = any_multi || counts[static_cast<std::size_t>(c)] > 1;
  if (!any_multi) {
    throw ContractError("silhouette_score: every cluster is a singleton");
  }

  double total = 0.0;
  std::vector<double> dist_sum(static_cast<std::size_t>(k));
  for (int i = 0; i < n; ++i) {
    std::fill(dist_sum.begin(), dist_sum.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      dist_sum[static_cast<std::size_t>(assignments[static_cast<std::size_t>(j)])] +=
          std::sqrt(sq_dist(points.row(i), points.row(j), points.d));
    }
    const int own = assignments[static_cast<std::size_t>(i)];
    const int own_count = counts[static_cast<std::size_t>(own)];
    if (own_count == 1) {
      // Isolated point: s(i) = 0 by convention.
      continue;
    }
    const double a = dist_sum[static_cast<std::size_t>(own)] / (own_count - 1);
    double b = std::numeric_limits<double>::max();
    for (int c = 0; c < k; ++c) {
      if (c == own) continue;
      b = std::min(b, dist_sum[static_cast<std::size_t>(c)] /
                          counts[static_cast<std::size_t>(c)]);
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / n;
}

ChooseKResult choose_k(const PointSet& points, const std::vector<int>& ks,
                       std::uint64_t seed, int max_points) {
  if (ks.empty()) throw ContractError("choose_k: empty k range");

  // Silhouette is O(n^2); score on a seeded subsample when large.
  PointSet scored = points;
  std::vector<int> kept;
  if (points.n > max_points) {
    Rng rng = Rng::derive(seed, 0x5AB5, 1);
    kept.resize(static_cast<std::size_t>(points.n));
    std::iota(kept.begin(), kept.end(), 0);
    for (int i = 0; i < max_points; ++i) {
      const int j = i + static_cast<int>(rng.uniform_int(
                            static_cast<std::uint64_t>(points.n - i)));
      std::swap(kept[static_cast<std::size_t>(i)], kept[static_cast<std::size_t>(j)]);
    }
    kept.resize(static_cast<std::size_t>(max_points));
    std::sort(kept.begin(), kept.end());
    scored.n = max_points;
    scored.values.clear();
    for (int idx : kept) {
      scored.values.insert(scored.values.end(), points.row(idx),
                           points.row(idx) + points.d);
    }
  }

  ChooseKResult result;
  double best_score = -2.0;
  for (int k : ks) {
    KMeansResult fit = kmeans(points, k, seed);
    std::vector<int> assignments =
        kept.empty() ? fit.assignments : kmeans_assign(fit, scored);
    const double score = silhouette_score(scored, assignments);
    result.ks.push_back(k);
    result.scores.push_back(score);
    if (score > best_score) {
      best_score = score;
      result.best_k = k;
    }
  }
  return result;
}

namespace {

/// Max-weight assignment on a square cost matrix (Kuhn-Munkres with
/// potentials, O(n^3)). Returns the total matched weight.
double hungarian_max(const std::vector<std::vector<double>>& weight) {
  const int n = static_cast<int>(weight.size());
  // Minimize negated weights; standard JV-style potentials on a 1-indexed grid.
  std::vector<double> u(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<double> v(static_cast<std::size_t>(n + 1), 0.0);
  std::vector<int> match(static_cast<std::size_t>(n + 1), 0);
  std::vector<int> way(static_cast<std::size_t>(n + 1), 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(n + 1),
                             std::numeric_limits<double>::max());
    std::vector<char> used(static_cast<std::size_t>(n + 1), 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = match[static_cast<std::size_t>(j0)];
      double delta = std::numeric_limits<double>::max();
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = -weight[static_cast<std::size_t>(i0 - 1)][static_cast<std::size_t>(j - 1)] -
                           u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(match[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (match[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      match[static_cast<std::size_t>(j0)] = match[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  double total = 0.0;
  for (int j = 1; j <= n; ++j) {
    const int i = match[static_cast<std::size_t>(j)];
    if (i >= 1) total += weight[static_cast<std::size_t>(i - 1)][static_cast<std::size_t>(j - 1)];
  }
  return total;
}

}  // namespace

double cluster_accuracy(const std::vector<int>& assignments,
                        const std::vector<int>& labels) {
  if (assignments.size() != labels.size()) {
    throw ContractError("cluster_accuracy: " + std::to_string(assignments.size()) +
                        " assignments vs " + std::to_string(labels.size()) +
                        " labels");
  }
  if (assignments.empty()) throw ContractError("cluster_accuracy: empty input");
  int n_clusters = 0, n_labels = 0;
  for (int a : assignments) n_clusters = std::max(n_clusters, a + 1);
  for (int l : labels) n_labels = std::max(n_labels, l + 1);
  const int size = std::max(n_clusters, n_labels);
  std::vector<std::vector<double>> confusion(
      static_cast<std::size_t>(size),
      std::vector<double>(static_cast<std::size_t>(size), 0.0));
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    confusion[static_cast<std::size_t>(assignments[i])][static_cast<std::size_t>(labels[i])] += 1.0;
  }

  double matched = 0.0;
  if (size <= 10) {
    std::vector<int> perm(static_cast<std::size_t>(size));
    std::iota(perm.begin(), perm.end(), 0);
    do {
      double total = 0.0;
      for (int c = 0; c < size; ++c) {
        total += confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])];
      }
      matched = std::max(matched, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
  } else {
    matched = hungarian_max(confusion);
  }
  return matched / static_cast<double>(assignments.size());
}

namespace {

/// Jacobi eigenvalue iteration for small symmetric matrices.
void jacobi_eigen(std::vector<double>& a, int n, std::vector<double>& values,
                  std::vector<double>& vectors) {
  vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) vectors[static_cast<std::size_t>(i) * n + i] = 1.0;
  auto at = [&](int r, int c) -> double& {
    return a[static_cast<std::size_t>(r) * n + c];
  };
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) off += at(p, q) * at(p, q);
    }
    if (off < 1e-24) break;
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(at(p, q)) < 1e-300) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cos_r = 1.0 / std::sqrt(t * t + 1.0);
        const double sin_r = t * cos_r;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = cos_r * akp - sin_r * akq;
          at(k, q) = sin_r * akp + cos_r * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = cos_r * apk - sin_r * aqk;
          at(q, k) = sin_r * apk + cos_r * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = vectors[static_cast<std::size_t>(k) * n + p];
          const double vkq = vectors[static_cast<std::size_t>(k) * n + q];
          vectors[static_cast<std::size_t>(k) * n + p] = cos_r * vkp - sin_r * vkq;
          vectors[static_cast<std::size_t>(k) * n + q] = sin_r * vkp + cos_r * vkq;
        }
      }
    }
  }
  values.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) values[static_cast<std::size_t>(i)] = at(i, i);
}

struct PcaBasis {
  std::vector<double> mean;
  std::vector<double> axes;    // [n_axes * d], descending eigenvalue
  std::vector<double> values;  // all eigenvalues, descending
};

PcaBasis pca_basis(const PointSet& points) {
  const int n = points.n, d = points.d;
  if (n < 2) throw ContractError("pca: need at least 2 points");
  PcaBasis basis;
  basis.mean.assign(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) basis.mean[static_cast<std::size_t>(k)] += points.row(i)[k];
  }
  for (double& m : basis.mean) m /= n;

  std::vector<double> cov(static_cast<std::size_t>(d) * d, 0.0);
  for (int i = 0; i < n; ++i) {
    const double* p = points.row(i);
    for (int r = 0; r < d; ++r) {
      const double vr = p[r] - basis.mean[static_cast<std::size_t>(r)];
      for (int c = r; c < d; ++c) {
        cov[static_cast<std::size_t>(r) * d + c] +=
            vr * (p[c] - basis.mean[static_cast<std::size_t>(c)]);
      }
    }
  }
  for (int r = 0; r < d; ++r) {
    for (int c = r; c < d; ++c) {
      cov[static_cast<std::size_t>(r) * d + c] /= n;
      cov[static_cast<std::size_t>(c) * d + r] = cov[static_cast<std::size_t>(r) * d + c];
    }
  }
  std::vector<double> values, vectors;
  jacobi_eigen(cov, d, values, vectors);
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return values[static_cast<std::size_t>(a)] > values[static_cast<std::size_t>(b)];
  });
  basis.values.resize(static_cast<std::size_t>(d));
  basis.axes.assign(static_cast<std::size_t>(d) * d, 0.0);
  for (int rank = 0; rank < d; ++rank) {
    const int src = order[static_cast<std::size_t>(rank)];
    basis.values[static_cast<std::size_t>(rank)] = values[static_cast<std::size_t>(src)];
    // Column src of `vectors` is the eigenvector.
    double* axis = basis.axes.data() + static_cast<std::size_t>(rank) * d;
    for (int k = 0; k < d; ++k) {
      axis[k] = vectors[static_cast<std::size_t>(k) * d + src];
    }
    // Sign convention: largest-magnitude loading positive.
    int arg = 0;
    for (int k = 1; k < d; ++k) {
      if (std::abs(axis[k]) > std::abs(axis[arg])) arg = k;
    }
    if (axis[arg] < 0.0) {
      for (int k = 0; k < d; ++k) axis[k] = -axis[k];
    }
  }
  return basis;
}

}  // namespace

PointSet pca_project(const PointSet& points, int out_dim) {
  PcaBasis basis = pca_basis(points);
  const int n = points.n, d = points.d;
  PointSet out;
  out.n = n;
  out.d = out_dim;
  out.values.assign(static_cast<std::size_t>(n) * out_dim, 0.0);
  const int usable = std::min(out_dim, d);
  for (int i = 0; i < n; ++i) {
    const double* p = points.row(i);
    for (int c = 0; c < usable; ++c) {
      // Components with (numerically) zero variance are left at zero.
      if (basis.values[static_cast<std::size_t>(c)] <= 1e-18) continue;
      const double* axis = basis.axes.data() + static_cast<std::size_t>(c) * d;
      double acc = 0.0;
      for (int k = 0; k < d; ++k) {
        acc += (p[k] - basis.mean[static_cast<std::size_t>(k)]) * axis[k];
      }
      out.values[static_cast<std::size_t>(i) * out_dim + c] = acc;
    }
  }
  return out;
}

std::vector<double> pca_eigenvalues(const PointSet& points) {
  return pca_basis(points).values;
}

}  // namespace relatent
