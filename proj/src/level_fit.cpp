#include "beatfcos/level_fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace beatfcos {
namespace {

// Sorted data lets the nearest-centroid partition be read off the midpoints:
// cluster j owns the contiguous run of points in (mid_{j-1}, mid_j].
std::vector<std::size_t> partition_starts(const std::vector<double>& data,
                                          const std::vector<double>& centroids) {
  const std::size_t k = centroids.size();
  std::vector<std::size_t> start(k + 1, 0);
  start[k] = data.size();
  for (std::size_t j = 1; j < k; ++j) {
    const double mid = 0.5 * (centroids[j - 1] + centroids[j]);
    start[j] = static_cast<std::size_t>(std::upper_bound(data.begin(), data.end(), mid) -
                                        data.begin());
  }
  return start;
}

double inertia_of(const std::vector<double>& data, const std::vector<double>& centroids) {
  const auto start = partition_starts(data, centroids);
  double total = 0.0;
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    for (std::size_t i = start[j]; i < start[j + 1]; ++i) {
      const double d = data[i] - centroids[j];
      total += d * d;
    }
  }
  return total;
}

std::vector<double> kmeanspp_init(const std::vector<double>& data, int k, std::mt19937_64& rng) {
  std::vector<double> centroids;
  centroids.reserve(static_cast<std::size_t>(k));
  std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
  centroids.push_back(data[pick(rng)]);
  std::vector<double> d2(data.size());
  while (static_cast<int>(centroids.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (double c : centroids) best = std::min(best, (data[i] - c) * (data[i] - c));
      d2[i] = best;
      total += best;
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      double target = u(rng);
      for (chosen = 0; chosen + 1 < data.size(); ++chosen) {
        target -= d2[chosen];
        if (target < 0.0) break;
      }
    }
    centroids.push_back(data[chosen]);
  }
  std::sort(centroids.begin(), centroids.end());
  return centroids;
}

LevelFit lloyd(const std::vector<double>& data, std::vector<double> centroids,
               const KMeansOptions& options) {
  LevelFit fit;
  const std::size_t k = centroids.size();
  for (int it = 0; it < options.max_iterations; ++it) {
    fit.iterations = it + 1;
    auto start = partition_starts(data, centroids);
    std::vector<double> next(k);
    for (std::size_t j = 0; j < k; ++j) {
      if (start[j] == start[j + 1]) {
        // Empty cluster: reseed at the point farthest from its own centroid.
        double worst = -1.0;
        std::size_t worst_i = 0;
        for (std::size_t c = 0; c < k; ++c) {
          for (std::size_t i = start[c]; i < start[c + 1]; ++i) {
            const double d = std::abs(data[i] - centroids[c]);
            if (d > worst) {
              worst = d;
              worst_i = i;
            }
          }
        }
        next[j] = data[worst_i];
        continue;
      }
      double s = 0.0;
      for (std::size_t i = start[j]; i < start[j + 1]; ++i) s += data[i];
      next[j] = s / static_cast<double>(start[j + 1] - start[j]);
    }
    std::sort(next.begin(), next.end());
    double shift = 0.0;
    for (std::size_t j = 0; j < k; ++j) shift = std::max(shift, std::abs(next[j] - centroids[j]));
    centroids = std::move(next);
    if (shift <= options.tolerance) break;
  }
  fit.centroids = std::move(centroids);
  fit.inertia = inertia_of(data, fit.centroids);
  return fit;
}

}  // namespace

LevelFit kmeans_1d(std::span<const double> lengths, int k, std::uint64_t seed,
                   const KMeansOptions& options) {
  if (k < 1) throw std::invalid_argument("k must be at least 1");
  if (lengths.empty()) throw std::invalid_argument("no interval lengths to cluster");
  std::vector<double> data(lengths.begin(), lengths.end());
  for (double v : data) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("interval lengths must be positive and finite");
    }
  }
  std::sort(data.begin(), data.end());
  std::size_t n_distinct = data.empty() ? 0 : 1;
  for (std::size_t i = 1; i < data.size(); ++i) n_distinct += data[i] != data[i - 1] ? 1 : 0;
  if (static_cast<std::size_t>(k) > n_distinct) {
    throw std::invalid_argument("k exceeds the number of distinct lengths");
  }

  std::mt19937_64 rng(seed);
  LevelFit best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int run = 0; run < std::max(1, options.restarts); ++run) {
    LevelFit fit = lloyd(data, kmeanspp_init(data, k, rng), options);
    if (fit.inertia < best.inertia) best = std::move(fit);
  }

  best.boundaries.reserve(static_cast<std::size_t>(k) + 1);
  best.boundaries.push_back(0.0);
  for (int j = 1; j < k; ++j) {
    best.boundaries.push_back(0.5 * (best.centroids[static_cast<std::size_t>(j) - 1] +
                                     best.centroids[static_cast<std::size_t>(j)]));
  }
  best.boundaries.push_back(std::numeric_limits<double>::infinity());
  return best;
}

int fit_bin(const LevelFit& fit, double s) {
  const auto it = std::lower_bound(fit.boundaries.begin() + 1, fit.boundaries.end(), s);
  return static_cast<int>(it - fit.boundaries.begin()) - 1;
}

}  // namespace beatfcos
