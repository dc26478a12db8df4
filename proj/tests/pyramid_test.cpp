#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "beatfcos/error.hpp"
#include "beatfcos/pyramid.hpp"
#include "test_util.hpp"

namespace bf = beatfcos;
using bf::Interval;
using bf::LevelConfig;

namespace {

// One level whose stride is exactly one second: anchors sit at 0.5, 1.5, ...
LevelConfig unit_stride(double beat_radius = 2.5) {
  LevelConfig cfg;
  cfg.sample_rate = 128.0;
  cfg.base_level = 7;
  cfg.num_levels = 1;
  cfg.size_limits = {0.0, std::numeric_limits<double>::infinity()};
  cfg.sub_box_radius = {beat_radius, 4.5};
  return cfg;
}

}  // namespace

TEST(LevelForLength, StandardLimits) {
  const LevelConfig cfg;
  EXPECT_EQ(bf::level_for_length(0.5, cfg), 0);
  EXPECT_EQ(bf::level_for_length(1.0, cfg), 2);
  EXPECT_EQ(bf::level_for_length(3.0, cfg), 4);
  // upper limits are inclusive
  EXPECT_EQ(bf::level_for_length(0.546, cfg), 0);
  EXPECT_EQ(bf::level_for_length(0.5461, cfg), 1);
  EXPECT_EQ(bf::level_for_length(2.359, cfg), 3);
  EXPECT_EQ(bf::level_for_length(1e6, cfg), 4);
  EXPECT_THROW(bf::level_for_length(0.0, cfg), std::invalid_argument);
}

TEST(LevelConfig, Validation) {
  LevelConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.size_limits = {0.0, 1.0, 0.5, 2.0, 3.0, std::numeric_limits<double>::infinity()};
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = LevelConfig{};
  cfg.size_limits.pop_back();
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = LevelConfig{};
  cfg.sub_box_radius[1] = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = LevelConfig{};
  EXPECT_EQ(cfg.stride_samples(0), 128);
  EXPECT_EQ(cfg.stride_samples(4), 2048);
}

TEST(AnchorGrid, Examples) {
  const LevelConfig cfg;
  const auto g = bf::anchor_grid(1024, cfg);
  ASSERT_EQ(g.levels[0].size(), 8u);
  for (std::size_t i = 0; i < 8; ++i) {
    EXPECT_NEAR(g.levels[0][i].position * cfg.sample_rate, 64.0 + 128.0 * static_cast<double>(i), 1e-9);
    EXPECT_EQ(g.levels[0][i].index, i);
  }
  const auto one = bf::anchor_grid(1, cfg);
  ASSERT_EQ(one.levels[0].size(), 1u);
  EXPECT_NEAR(one.levels[0][0].position, 64.0 / cfg.sample_rate, 1e-15);

  const auto big = bf::anchor_grid(std::int64_t{1} << 21, cfg);
  EXPECT_EQ(big.levels[4].size(), 1024u);
  EXPECT_EQ(big.levels[0].size(), 16384u);
  EXPECT_EQ(bf::anchors_on_level(std::int64_t{1} << 21, cfg, 4), 1024u);
  EXPECT_EQ(bf::anchors_on_level(129, cfg, 0), 2u);
  EXPECT_THROW(bf::anchor_grid(0, cfg), std::invalid_argument);
}

TEST(AssignTargets, SubBoxExample) {
  // Interval of length 18 starting 7.5 cells in; the anchor two strides in
  // is positive, the one four strides in is outside the 2.5-stride sub-box.
  const LevelConfig cfg = unit_stride();
  const auto grid = bf::anchor_grid(64 * 128, cfg);
  const std::vector<Interval> beats{Interval(7.5, 25.5)};
  const auto t = bf::assign_targets(beats, {}, grid, cfg);
  const auto& a = t.levels[0][9];  // position 9.5
  ASSERT_TRUE(a.positive());
  EXPECT_NEAR(a.reg_l, 2.0, 1e-12);
  EXPECT_NEAR(a.reg_r, 16.0, 1e-12);
  EXPECT_NEAR(a.quality, std::sqrt(16.0 / 18.0), 1e-12);
  EXPECT_NEAR(a.quality, 0.9428, 1e-4);
  EXPECT_TRUE(t.levels[0][8].positive());    // 8.5
  EXPECT_FALSE(t.levels[0][10].positive());  // 10.5 is the open end of [7.5, 10)
  EXPECT_FALSE(t.levels[0][11].positive());  // 11.5
  EXPECT_FALSE(t.levels[0][7].positive());   // 7.5 sits on the left edge
  EXPECT_EQ(t.num_positive(), 2u);
}

TEST(AssignTargets, IntervalLengthMode) {
  LevelConfig cfg = unit_stride();
  cfg.sub_box_mode = bf::SubBoxMode::IntervalLength;
  const auto grid = bf::anchor_grid(64 * 128, cfg);
  const std::vector<Interval> beats{Interval(7.5, 25.5)};
  const auto t = bf::assign_targets(beats, {}, grid, cfg);
  // radius * length >= length, so the whole interior is positive
  EXPECT_EQ(t.num_positive(), 17u);  // centres 8.5 .. 24.5
}

TEST(AssignTargets, LevelsAreDisjoint) {
  const LevelConfig cfg;
  const auto grid = bf::anchor_grid(static_cast<std::int64_t>(5.0 * cfg.sample_rate), cfg);
  const std::vector<Interval> beats{Interval(1.0, 1.5)};
  const std::vector<Interval> downs{Interval(1.0, 3.0, bf::IntervalClass::Downbeat)};
  const auto t = bf::assign_targets(beats, downs, grid, cfg);
  for (std::size_t li = 0; li < t.levels.size(); ++li) {
    for (const auto& a : t.levels[li]) {
      if (!a.positive()) continue;
      if (li == 0) {
        EXPECT_EQ(a.cls[0], 1);
        EXPECT_EQ(a.cls[1], 0);
      } else {
        EXPECT_EQ(li, 3u);
        EXPECT_EQ(a.cls[0], 0);
        EXPECT_EQ(a.cls[1], 1);
      }
    }
  }
}

TEST(AssignTargets, ShortestIntervalOwnsRegression) {
  LevelConfig cfg = unit_stride(30.0);
  cfg.sub_box_radius = {30.0, 30.0};
  const auto grid = bf::anchor_grid(64 * 128, cfg);
  const std::vector<Interval> beats{Interval(2.0, 12.0)};
  const std::vector<Interval> downs{Interval(3.0, 8.0, bf::IntervalClass::Downbeat)};
  const auto t = bf::assign_targets(beats, downs, grid, cfg);
  const auto& a = t.levels[0][4];  // 4.5, inside both
  EXPECT_EQ(a.cls[0], 1);
  EXPECT_EQ(a.cls[1], 1);
  EXPECT_EQ(a.matched, 1);
  EXPECT_NEAR(a.reg_l, 1.5, 1e-12);
  EXPECT_NEAR(a.reg_r, 3.5, 1e-12);
  EXPECT_EQ(t.levels[0][2].matched, 0);  // 2.5, only in the beat interval
}

TEST(AssignTargets, RejectsIntervalPastTrackEnd) {
  const LevelConfig cfg;
  const auto grid = bf::anchor_grid(22050, cfg);
  const std::vector<Interval> beats{Interval(0.5, 1.5)};
  EXPECT_THROW(bf::assign_targets(beats, {}, grid, cfg), bf::AnnotationError);
}

TEST(AssignTargets, CenternessTargets) {
  const LevelConfig cfg = unit_stride();
  const auto grid = bf::anchor_grid(64 * 128, cfg);
  const std::vector<Interval> beats{Interval(7.5, 25.5)};
  const auto t = bf::assign_targets(beats, {}, grid, cfg, bf::QualityMode::Centerness);
  EXPECT_NEAR(t.levels[0][9].quality, std::sqrt(2.0 / 16.0), 1e-12);
  EXPECT_DOUBLE_EQ(bf::quality_target(1.0, 1.0, bf::QualityMode::Centerness), 1.0);
}

TEST(AssignTargets, RandomSequenceProperties) {
  const LevelConfig cfg;
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto seq = bf::testing::random_sequence(rng, 2, 30);
    const auto ivs = bf::intervals_from_beats(seq);
    const auto samples = static_cast<std::int64_t>((seq.times().back() + 1.0) * cfg.sample_rate);
    const auto grid = bf::anchor_grid(samples, cfg);
    const auto t = bf::assign_targets(ivs.beats, ivs.downbeats, grid, cfg);

    LevelConfig wider = cfg;
    wider.sub_box_radius = {cfg.sub_box_radius[0] * 1.7, cfg.sub_box_radius[1] * 1.3};
    const auto tw = bf::assign_targets(ivs.beats, ivs.downbeats, grid, wider);

    for (std::size_t li = 0; li < t.levels.size(); ++li) {
      const double stride_s = cfg.stride_seconds(static_cast<int>(li));
      for (std::size_t i = 0; i < t.levels[li].size(); ++i) {
        const auto& a = t.levels[li][i];
        // monotone sub-box growth
        for (int c = 0; c < bf::kNumClasses; ++c) {
          if (a.cls[static_cast<std::size_t>(c)]) ASSERT_TRUE(tw.levels[li][i].cls[static_cast<std::size_t>(c)]);
        }
        if (!a.positive()) {
          ASSERT_EQ(a.matched, -1);
          continue;
        }
        const auto& iv = t.intervals[static_cast<std::size_t>(a.matched)];
        const double pos = grid.levels[li][i].position;
        ASSERT_GT(pos, iv.left());
        ASSERT_LT(pos, iv.right());
        ASSERT_GE(a.reg_l, 0.0);
        ASSERT_GE(a.reg_r, 0.0);
        ASSERT_GT(a.reg_l + a.reg_r, 0.0);
        ASSERT_NEAR(pos - a.reg_l * stride_s, iv.left(), 1e-9);
        ASSERT_NEAR(pos + a.reg_r * stride_s, iv.right(), 1e-9);
        ASSERT_NEAR(a.quality, std::sqrt(a.reg_r / (a.reg_l + a.reg_r)), 1e-12);
      }
    }
  }
}

TEST(AssignTargets, PeriodicGridCoverage) {
  // every beat interval gets a positive anchor for periods in [0.33, 1.0] s
  const LevelConfig cfg;
  for (double p = 0.33; p <= 1.0 + 1e-9; p += 0.01) {
    for (double offset : {0.0, 0.0013, 0.0271, 0.31}) {
      std::vector<double> times;
      for (double t = 0.2 + offset; t < 12.0; t += p) times.push_back(t);
      const auto seq = bf::BeatSequence::beats_only(times);
      const auto ivs = bf::intervals_from_beats(seq);
      const auto grid = bf::anchor_grid(static_cast<std::int64_t>(13.0 * cfg.sample_rate), cfg);
      const auto t = bf::assign_targets(ivs.beats, {}, grid, cfg);
      std::vector<int> hits(ivs.beats.size(), 0);
      for (const auto& level : t.levels) {
        for (const auto& a : level) {
          if (a.positive()) ++hits[static_cast<std::size_t>(a.matched)];
        }
      }
      for (std::size_t k = 0; k < hits.size(); ++k) {
        ASSERT_GE(hits[k], 1) << "period " << p << " interval " << k;
      }
    }
  }
}

TEST(AssignTargets, LeftnessDecreasesToTheRight) {
  LevelConfig cfg = unit_stride(50.0);
  const auto grid = bf::anchor_grid(64 * 128, cfg);
  const std::vector<Interval> beats{Interval(3.2, 40.0)};
  const auto t = bf::assign_targets(beats, {}, grid, cfg);
  double prev = 2.0;
  int positives = 0;
  for (const auto& a : t.levels[0]) {
    if (!a.positive()) continue;
    ++positives;
    EXPECT_LT(a.quality, prev);
    prev = a.quality;
  }
  EXPECT_GT(positives, 30);
}
