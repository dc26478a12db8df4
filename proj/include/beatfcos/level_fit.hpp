#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace beatfcos {

// Result of clustering interval lengths. boundaries has k + 1 entries: 0,
// the k - 1 midpoints between adjacent centroids, +inf.
struct LevelFit {
  std::vector<double> centroids;
  std::vector<double> boundaries;
  double inertia = 0.0;
  int iterations = 0;
};

struct KMeansOptions {
  int max_iterations = 300;
  double tolerance = 1e-12;
  // Independent k-means++ restarts; the lowest-inertia run wins.
  int restarts = 10;
};

// Seeded 1D k-means (k-means++ initialisation, Lloyd iterations). The input
// is sorted internally, so the result does not depend on input order.
// Throws std::invalid_argument for k < 1, non-positive lengths, or k larger
// than the number of distinct values.
LevelFit kmeans_1d(std::span<const double> lengths, int k, std::uint64_t seed,
                   const KMeansOptions& options = {});

// Index i of the bin (boundaries[i], boundaries[i+1]] holding s.
int fit_bin(const LevelFit& fit, double s);

}  // namespace beatfcos
