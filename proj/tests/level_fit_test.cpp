#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "beatfcos/level_fit.hpp"
#include "beatfcos/pyramid.hpp"

namespace bf = beatfcos;

namespace {

std::vector<double> planted(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> noise(-0.02, 0.02);
  std::vector<double> out;
  for (double c : {0.4, 0.75, 1.2, 2.0, 3.0}) {
    for (int i = 0; i < 1000; ++i) out.push_back(c + noise(rng));
  }
  return out;
}

double inertia_of(const std::vector<double>& xs, const std::vector<double>& centroids) {
  double s = 0.0;
  for (double x : xs) {
    double best = std::numeric_limits<double>::infinity();
    for (double c : centroids) best = std::min(best, (x - c) * (x - c));
    s += best;
  }
  return s;
}

}  // namespace

TEST(KMeans, PlantedClusters) {
  const auto xs = planted(21);
  const auto fit = bf::kmeans_1d(xs, 5, 1);
  const std::vector<double> want{0.4, 0.75, 1.2, 2.0, 3.0};
  ASSERT_EQ(fit.centroids.size(), 5u);
  ASSERT_EQ(fit.boundaries.size(), 6u);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(fit.centroids[i], want[i], 0.01);
  EXPECT_EQ(fit.boundaries.front(), 0.0);
  EXPECT_TRUE(std::isinf(fit.boundaries.back()));
  for (std::size_t i = 1; i < 5; ++i) {
    EXPECT_EQ(fit.boundaries[i], (fit.centroids[i - 1] + fit.centroids[i]) / 2.0);
  }
  EXPECT_NEAR(fit.inertia, inertia_of(xs, fit.centroids), 1e-9);
}

TEST(KMeans, NearestCentroidPartition) {
  const auto xs = planted(22);
  const auto fit = bf::kmeans_1d(xs, 5, 7);
  for (double x : xs) {
    const int b = bf::fit_bin(fit, x);
    ASSERT_GT(x, fit.boundaries[static_cast<std::size_t>(b)]);
    ASSERT_LE(x, fit.boundaries[static_cast<std::size_t>(b) + 1]);
    std::size_t nearest = 0;
    for (std::size_t i = 1; i < fit.centroids.size(); ++i) {
      if (std::abs(x - fit.centroids[i]) < std::abs(x - fit.centroids[nearest])) nearest = i;
    }
    ASSERT_EQ(static_cast<std::size_t>(b), nearest);
  }
}

TEST(KMeans, SingleCluster) {
  const auto fit = bf::kmeans_1d(std::vector<double>{0.5, 0.6, 0.7}, 1, 3);
  ASSERT_EQ(fit.boundaries.size(), 2u);
  EXPECT_EQ(fit.boundaries[0], 0.0);
  EXPECT_TRUE(std::isinf(fit.boundaries[1]));
  EXPECT_NEAR(fit.centroids[0], 0.6, 1e-12);
}

TEST(KMeans, Errors) {
  EXPECT_THROW(bf::kmeans_1d(std::vector<double>{0.5, 0.5, 0.6}, 3, 1), std::invalid_argument);
  EXPECT_THROW(bf::kmeans_1d(std::vector<double>{0.5}, 0, 1), std::invalid_argument);
  EXPECT_THROW(bf::kmeans_1d(std::vector<double>{}, 1, 1), std::invalid_argument);
  EXPECT_THROW(bf::kmeans_1d(std::vector<double>{0.5, -1.0}, 1, 1), std::invalid_argument);
  EXPECT_NO_THROW(bf::kmeans_1d(std::vector<double>{0.5, 0.5, 0.6}, 2, 1));
}

TEST(KMeans, PermutationInvariantAndDeterministic) {
  auto xs = planted(23);
  const auto a = bf::kmeans_1d(xs, 5, 99);
  std::mt19937_64 rng(4);
  std::shuffle(xs.begin(), xs.end(), rng);
  const auto b = bf::kmeans_1d(xs, 5, 99);
  EXPECT_EQ(a.centroids, b.centroids);
  EXPECT_EQ(a.boundaries, b.boundaries);
  EXPECT_EQ(a.inertia, b.inertia);
}

TEST(KMeans, LloydNeverIncreasesInertia) {
  // capping iterations at t and t+1 traces the Lloyd sequence of one restart
  std::mt19937_64 rng(5);
  std::lognormal_distribution<double> d(-0.3, 0.6);
  std::vector<double> xs(2000);
  for (auto& x : xs) x = d(rng);
  bf::KMeansOptions opt;
  opt.restarts = 1;
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= 40; ++it) {
    opt.max_iterations = it;
    const auto fit = bf::kmeans_1d(xs, 5, 17, opt);
    EXPECT_LE(fit.inertia, prev * (1.0 + 1e-12));
    prev = fit.inertia;
  }
}

TEST(KMeans, StandardLimitsDriveLevels) {
  bf::LevelConfig cfg;
  cfg.size_limits = {0.0, 0.546, 0.955, 1.588, 2.359, std::numeric_limits<double>::infinity()};
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(bf::level_for_length(0.5, cfg), 0);
  EXPECT_EQ(bf::level_for_length(1.0, cfg), 2);
  EXPECT_EQ(bf::level_for_length(3.0, cfg), 4);
}
