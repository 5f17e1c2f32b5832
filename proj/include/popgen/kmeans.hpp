#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <thread>
#include <vector>

#include "popgen/common.hpp"
#include "popgen/matrix.hpp"

namespace popgen {

struct KMeansModel {
  std::size_t k = 0;
  Matrix2D centroids;  // k x d
  std::vector<std::size_t> assignments;
  double wcss = 0.0;
  std::size_t iterations_run = 0;
};

struct ElbowReport {
  std::vector<std::pair<std::size_t, double>> entries;  // (k, best wcss)
};

// Nearest centroid by squared Euclidean distance; ties break to the lowest
// centroid index.
inline std::vector<std::size_t> assign_step(const Matrix2D& points,
                                            const Matrix2D& centroids) {
  if (points.cols() != centroids.cols())
    throw numeric_error("ShapeMismatch", "assign_step dimension");
  std::vector<std::size_t> out(points.rows());
  for (std::size_t i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < centroids.rows(); ++j) {
      const double d =
          squared_distance(points.row(i), centroids.row(j), points.cols());
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    out[i] = best_j;
  }
  return out;
}

inline double wcss(const Matrix2D& points, const Matrix2D& centroids,
                   const std::vector<std::size_t>& assignments) {
  if (points.rows() != assignments.size() ||
      points.cols() != centroids.cols())
    throw numeric_error("ShapeMismatch", "wcss inputs");
  double total = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i)
    total += squared_distance(points.row(i),
                              centroids.row(assignments[i]), points.cols());
  return total;
}

// Means of cluster members; an empty cluster is re-seeded to the point
// farthest from its assigned centroid.
inline Matrix2D update_step(const Matrix2D& points,
                            const std::vector<std::size_t>& assignments,
                            std::size_t k) {
  Matrix2D centroids(k, points.cols());
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.rows(); ++i) {
    const std::size_t j = assignments[i];
    ++counts[j];
    for (std::size_t c = 0; c < points.cols(); ++c)
      centroids(j, c) += points(i, c);
  }
  for (std::size_t j = 0; j < k; ++j)
    if (counts[j] > 0)
      for (std::size_t c = 0; c < points.cols(); ++c)
        centroids(j, c) /= static_cast<double>(counts[j]);

  for (std::size_t j = 0; j < k; ++j) {
    if (counts[j] > 0) continue;
    // farthest point from its current centroid
    double best = -1.0;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < points.rows(); ++i) {
      const double d = squared_distance(
          points.row(i), centroids.row(assignments[i]), points.cols());
      if (d > best) {
        best = d;
        best_i = i;
      }
    }
    for (std::size_t c = 0; c < points.cols(); ++c)
      centroids(j, c) = points(best_i, c);
  }
  return centroids;
}

namespace detail {

inline KMeansModel lloyd_once(const Matrix2D& points, std::size_t k,
                              std::size_t max_iterations, Rng& rng) {
  const std::size_t n = points.rows();
  // k distinct points as initial centroids
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), 0);
  for (std::size_t j = 0; j < k; ++j) {
    std::uniform_int_distribution<std::size_t> pick(j, n - 1);
    std::swap(pool[j], pool[pick(rng)]);
  }
  Matrix2D centroids(k, points.cols());
  for (std::size_t j = 0; j < k; ++j)
    std::copy(points.row(pool[j]), points.row(pool[j]) + points.cols(),
              centroids.row(j));

  KMeansModel model;
  model.k = k;
  std::vector<std::size_t> assignments = assign_step(points, centroids);
  double current = wcss(points, centroids, assignments);
  for (std::size_t iter = 0; iter < max_iterations; ++iter) {
    centroids = update_step(points, assignments, k);
    auto next = assign_step(points, centroids);
    const double next_wcss = wcss(points, centroids, next);
    if (next_wcss > current + 1e-9 * std::max(1.0, current))
      throw numeric_error("LloydMonotonicity",
                          "WCSS increased within a restart");
    ++model.iterations_run;
    const bool stable = next == assignments;
    assignments = std::move(next);
    current = next_wcss;
    if (stable) break;
  }
  model.centroids = std::move(centroids);
  model.assignments = std::move(assignments);
  model.wcss = current;
  return model;
}

}  // namespace detail

// Restarts are independent; `workers` > 1 runs them on threads. The winner
// is the minimum-WCSS restart, ties broken by restart index, so the result
// does not depend on scheduling.
inline KMeansModel kmeans_fit(const Matrix2D& points, std::size_t k,
                              std::size_t max_iterations = 300,
                              std::size_t restarts = 100,
                              std::uint64_t seed = 0,
                              std::size_t workers = 1) {
  if (k < 1 || k > points.rows())
    throw config_error("KTooLarge", "k must be in [1, sample count]");
  std::vector<KMeansModel> models(restarts);
  auto run_range = [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      Rng rng = make_rng(derive_seed(seed, r));
      models[r] = detail::lloyd_once(points, k, max_iterations, rng);
    }
  };
  if (workers <= 1 || restarts < 2) {
    run_range(0, restarts);
  } else {
    const std::size_t n_threads = std::min(workers, restarts);
    std::vector<std::thread> threads;
    const std::size_t chunk = (restarts + n_threads - 1) / n_threads;
    for (std::size_t t = 0; t < n_threads; ++t)
      threads.emplace_back(run_range, t * chunk,
                           std::min(restarts, (t + 1) * chunk));
    for (auto& th : threads) th.join();
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < restarts; ++r)
    if (models[r].wcss < models[best].wcss) best = r;
  return std::move(models[best]);
}

inline ElbowReport elbow_sweep(const Matrix2D& points,
                               const std::vector<std::size_t>& k_range,
                               std::size_t restarts = 100,
                               std::uint64_t seed = 0,
                               std::size_t workers = 1) {
  ElbowReport report;
  for (std::size_t k : k_range) {
    const auto model = kmeans_fit(points, k, 300, restarts, seed, workers);
    report.entries.emplace_back(k, model.wcss);
  }
  // Best-of-restarts WCSS must be non-increasing in k; a violated entry is
  // re-run with more restarts.
  for (std::size_t i = 1; i < report.entries.size(); ++i) {
    std::size_t extra = restarts;
    while (report.entries[i].second >
               report.entries[i - 1].second * (1.0 + 1e-12) &&
           extra <= 16 * restarts) {
      extra *= 2;
      const auto model =
          kmeans_fit(points, report.entries[i].first, 300, extra,
                     derive_seed(seed, 0xe1b0 + i), workers);
      report.entries[i].second =
          std::min(report.entries[i].second, model.wcss);
    }
  }
  return report;
}

}  // namespace popgen
