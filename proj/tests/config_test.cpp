#include <gtest/gtest.h>

#include <nlohmann/json.hpp>

#include <fstream>
#include <set>

#include "beatfcos/config.hpp"
#include "beatfcos/error.hpp"
#include "test_util.hpp"

namespace bf = beatfcos;

TEST(Config, DefaultsValidate) {
  const bf::RunConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  EXPECT_EQ(cfg.decode.nms, bf::NmsMode::SoftLinear);
  EXPECT_EQ(cfg.loss.quality, bf::QualityMode::Leftness);
  EXPECT_EQ(cfg.levels.num_levels, 5);
}

TEST(Config, JsonRoundTrip) {
  bf::RunConfig cfg;
  cfg.seed = 77;
  cfg.decode.iou_threshold = 0.3;
  cfg.train.epochs = 3;
  cfg.val_corpus.meters = {2, 3};
  const auto text = bf::config_json(cfg);
  bf::RunConfig back;
  bf::merge_config_json(back, text);
  EXPECT_EQ(bf::config_json(back), text);
  EXPECT_EQ(bf::config_hash(back), bf::config_hash(cfg));
}

TEST(Config, PartialMergeAndUnknownKeys) {
  bf::RunConfig cfg;
  bf::merge_config_json(cfg, R"({"decode": {"nms": "hard"}, "seed": 9})");
  EXPECT_EQ(cfg.decode.nms, bf::NmsMode::Hard);
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.decode.iou_threshold, bf::RunConfig{}.decode.iou_threshold);
  EXPECT_THROW(bf::merge_config_json(cfg, R"({"decode": {"nmz": "hard"}})"), bf::FormatError);
  EXPECT_THROW(bf::merge_config_json(cfg, R"({"bogus": 1})"), bf::FormatError);
  EXPECT_THROW(bf::merge_config_json(cfg, R"({"decode": {"nms": "other"}})"), bf::FormatError);
  EXPECT_THROW(bf::merge_config_json(cfg, R"({"seed": "x"})"), bf::FormatError);
  EXPECT_THROW(bf::merge_config_json(cfg, "{"), bf::FormatError);
  EXPECT_EQ(cfg.seed, 9u);  // failed merges leave it alone
}

TEST(Config, FilePrecedence) {
  bf::testing::TempDir dir;
  {
    std::ofstream(dir / "a.json") << R"({"seed": 5, "jobs": 2})";
    std::ofstream(dir / "b.json") << R"({"seed": 6})";
  }
  bf::RunConfig cfg;
  bf::merge_config_file(cfg, dir / "a.json");
  bf::merge_config_file(cfg, dir / "b.json");
  EXPECT_EQ(cfg.seed, 6u);
  EXPECT_EQ(cfg.jobs, 2);
  EXPECT_THROW(bf::merge_config_file(cfg, dir / "none.json"), bf::FormatError);
}

TEST(Config, HashChangesWithContent) {
  bf::RunConfig a, b;
  EXPECT_EQ(bf::config_hash(a), bf::config_hash(b));
  b.decode.sigma = 0.6;
  EXPECT_NE(bf::config_hash(a), bf::config_hash(b));
  EXPECT_EQ(bf::config_hash(a).size(), 16u);
}

TEST(Config, DerivedSeedsDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 50; ++s) {
    for (std::uint64_t stream = 0; stream < 10; ++stream) seen.insert(bf::derive_seed(s, stream));
  }
  EXPECT_EQ(seen.size(), 500u);
  EXPECT_EQ(bf::derive_seed(1, 2), bf::derive_seed(1, 2));
  bf::RunConfig cfg;
  EXPECT_NE(cfg.corpus(bf::Split::Train).seed, cfg.corpus(bf::Split::Test).seed);
}

TEST(Config, ModeNames) {
  for (auto m : {bf::NmsMode::Hard, bf::NmsMode::SoftLinear, bf::NmsMode::SoftGaussian}) {
    EXPECT_EQ(bf::parse_nms_mode(bf::nms_mode_name(m)), m);
  }
  EXPECT_EQ(bf::parse_nms_mode("soft"), bf::NmsMode::SoftLinear);
  EXPECT_EQ(bf::parse_quality_mode("centerness"), bf::QualityMode::Centerness);
  EXPECT_THROW(bf::parse_quality_mode("middle"), bf::FormatError);
}

TEST(Config, ValidateRejects) {
  bf::RunConfig cfg;
  cfg.jobs = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = {};
  cfg.min_confidence = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}
