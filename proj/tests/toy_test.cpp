#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

#include "beatfcos/config.hpp"
#include "beatfcos/error.hpp"
#include "beatfcos/pipeline.hpp"
#include "beatfcos/toy.hpp"

namespace bf = beatfcos;
namespace toy = beatfcos::toy;

namespace {

toy::SynthSpec short_spec(double bpm, int meter, std::uint64_t seed, double duration = 8.0) {
  toy::SynthSpec s;
  s.tempo_bpm = bpm;
  s.meter = meter;
  s.duration = duration;
  s.first_beat = 0.13;
  s.seed = seed;
  return s;
}

}  // namespace

TEST(Synth, BeatCountAndPositions) {
  toy::SynthSpec s;  // 120 BPM, 4/4, 10 s
  const auto t = toy::synth_track(s);
  EXPECT_EQ(t.annotation.size(), 20u);
  EXPECT_EQ(t.audio.samples.size(), 220500u);
  EXPECT_EQ(t.annotation.downbeat_times().size(), 5u);
  EXPECT_EQ((*t.annotation.positions())[0], 1);
  EXPECT_EQ((*t.annotation.positions())[3], 4);
  for (std::size_t i = 1; i < t.annotation.size(); ++i) {
    EXPECT_NEAR(t.annotation.times()[i] - t.annotation.times()[i - 1], 0.5, 1e-12);
  }
}

TEST(Synth, FixedLengthPadsAndCrops) {
  toy::SynthSpec s;
  s.fit_samples = std::int64_t{1} << 21;
  const auto padded = toy::synth_track(s);
  EXPECT_EQ(padded.audio.samples.size(), std::size_t{1} << 21);
  EXPECT_EQ(padded.annotation.size(), 20u);
  for (std::size_t i = 220500; i < padded.audio.samples.size(); i += 997) ASSERT_EQ(padded.audio.samples[i], 0.0f);
  s.fit_samples = 22050 * 4;
  const auto cropped = toy::synth_track(s);
  EXPECT_EQ(cropped.audio.samples.size(), 88200u);
  EXPECT_EQ(cropped.annotation.size(), 8u);
  const auto p = toy::extract_pyramid(padded.audio.samples, bf::LevelConfig{});
  EXPECT_EQ(p.anchors(0), std::size_t{1} << 14);
}

TEST(Synth, DriftShortensIntervals) {
  toy::SynthSpec s;
  s.tempo_drift = 0.3;
  const auto track = toy::synth_track(s);
  const auto& ts = track.annotation.times();
  for (std::size_t i = 2; i < ts.size(); ++i) EXPECT_LT(ts[i] - ts[i - 1], ts[i - 1] - ts[i - 2]);
}

TEST(Synth, DeterministicAndValidated) {
  toy::SynthSpec s;
  s.seed = 11;
  EXPECT_EQ(toy::synth_track(s).audio.samples, toy::synth_track(s).audio.samples);
  s.seed = 12;
  toy::SynthSpec other = s;
  other.seed = 13;
  EXPECT_NE(toy::synth_track(s).audio.samples, toy::synth_track(other).audio.samples);
  s.meter = 5;
  EXPECT_THROW(toy::synth_track(s), std::invalid_argument);
  toy::CorpusSpec c;
  c.num_tracks = 7;
  const auto a = toy::make_corpus(c);
  const auto b = toy::make_corpus(c);
  ASSERT_EQ(a.size(), 7u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].tempo_bpm, b[i].tempo_bpm);
    EXPECT_GE(a[i].tempo_bpm, 60.0);
    EXPECT_LE(a[i].tempo_bpm, 180.0);
  }
}

TEST(Features, PyramidShapes) {
  const bf::LevelConfig cfg;
  const std::vector<float> audio(std::size_t{1} << 21, 0.0f);
  const auto p = toy::extract_pyramid(audio, cfg);
  ASSERT_EQ(p.levels.size(), 5u);
  EXPECT_EQ(p.anchors(0), std::size_t{1} << 14);
  EXPECT_EQ(p.anchors(4), std::size_t{1} << 10);
  // silence: no onset evidence anywhere, everything finite
  for (std::size_t li = 0; li < p.levels.size(); ++li) {
    for (std::size_t i = 0; i < p.anchors(li); ++i) {
      const auto row = p.row(li, i);
      for (double v : row) ASSERT_TRUE(std::isfinite(v));
      for (int f = toy::kOnsetAfter; f <= toy::kOnsetLag5; ++f) ASSERT_EQ(row[static_cast<std::size_t>(f)], 0.0);
    }
  }
  // odd lengths follow the anchor grid
  const std::vector<float> odd(12345, 0.0f);
  const auto q = toy::extract_pyramid(odd, cfg);
  for (int li = 0; li < 5; ++li) {
    EXPECT_EQ(q.anchors(static_cast<std::size_t>(li)), bf::anchors_on_level(12345, cfg, li));
  }
}

TEST(Features, SingleClickPeaksAtItsCell) {
  const bf::LevelConfig cfg;
  std::vector<float> audio(22050 * 3, 0.0f);
  const std::size_t at = 22050 + 700;
  for (std::size_t i = 0; i < 400; ++i) {
    audio[at + i] = static_cast<float>(0.8 * std::sin(0.3 * i) * std::exp(-static_cast<double>(i) / 150.0));
  }
  const auto env = toy::onset_envelope(audio, cfg.sample_rate);
  std::size_t best = 0;
  for (std::size_t f = 1; f < env.onset.size(); ++f) {
    if (env.onset[f] > env.onset[best]) best = f;
  }
  EXPECT_NEAR(env.frame_time(best), static_cast<double>(at) / cfg.sample_rate, 0.02);

  const auto p = toy::extract_pyramid(audio, cfg);
  const auto grid = bf::anchor_grid(static_cast<std::int64_t>(audio.size()), cfg);
  std::size_t peak = 0;
  for (std::size_t i = 0; i < p.anchors(0); ++i) {
    if (p.row(0, i)[toy::kOnsetAfter] > p.row(0, peak)[toy::kOnsetAfter]) peak = i;
  }
  EXPECT_NEAR(grid.levels[0][peak].position, static_cast<double>(at) / cfg.sample_rate, 0.02);
  EXPECT_GT(p.row(0, peak)[toy::kOnsetAfter], 0.0);
}

TEST(Heads, GradientMatchesFiniteDifferences) {
  const bf::LevelConfig cfg;
  std::vector<toy::SynthSpec> specs{short_spec(100, 4, 1, 6.0), short_spec(150, 3, 2, 6.0)};
  const auto tracks = toy::prepare_corpus(specs, cfg, bf::QualityMode::Leftness);
  auto heads = toy::init_heads(cfg, 3, 0.3);
  std::vector<toy::FeaturePyramid> pyr{tracks[0].features, tracks[1].features};
  toy::fit_normalizer(heads, pyr);
  const std::vector<const toy::PreparedTrack*> batch{&tracks[0], &tracks[1]};
  const bf::LossConfig lc;
  std::vector<double> grad;
  toy::batch_loss(heads, batch, lc, &grad);
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick(0, heads.params.size() - 1);
  for (int probe = 0; probe < 40; ++probe) {
    const std::size_t i = pick(rng);
    const double h = 1e-5;
    auto plus = heads, minus = heads;
    plus.params[i] += h;
    minus.params[i] -= h;
    const double fd = (toy::batch_loss(plus, batch, lc, nullptr).total -
                       toy::batch_loss(minus, batch, lc, nullptr).total) / (2 * h);
    ASSERT_NEAR(grad[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "param " << i;
  }
}

TEST(Heads, ZeroLearningRateLeavesParams) {
  bf::RunConfig rc;
  const std::vector<toy::SynthSpec> specs{short_spec(120, 4, 1)};
  const auto tracks = toy::prepare_corpus(specs, rc.levels, bf::QualityMode::Leftness);
  auto heads = toy::init_heads(rc.levels, 1);
  auto tc = rc.train_config();
  tc.lr = 0.0;
  tc.epochs = 2;
  tc.passes_per_epoch = 1;
  const auto res = toy::train_toy(tracks, {}, heads, tc);
  EXPECT_EQ(res.heads.params, heads.params);
  ASSERT_EQ(res.log.size(), 2u);
  EXPECT_EQ(res.log[0].total, res.log[1].total);
}

TEST(Heads, OverfitsOneTrack) {
  bf::RunConfig rc;
  const std::vector<toy::SynthSpec> specs{short_spec(110, 4, 4, 12.0)};
  const auto tracks = toy::prepare_corpus(specs, rc.levels, bf::QualityMode::Leftness);
  auto heads = toy::init_heads(rc.levels, 2);
  std::vector<toy::FeaturePyramid> pyr{tracks[0].features};
  toy::fit_normalizer(heads, pyr);
  auto tc = rc.train_config();
  tc.epochs = 15;
  tc.lr = 3e-2;
  tc.passes_per_epoch = 20;
  const auto res = toy::train_toy(tracks, tracks, heads, tc);
  EXPECT_LT(res.log.back().total, res.log.front().total);
  // every annotated beat has a prediction within one stride of its level
  const auto pred = toy::predict(tracks[0], res.heads, rc.levels, rc.decode);
  const auto& ann = tracks[0].annotation.times();
  double worst = 0.0;
  for (std::size_t i = 0; i + 1 < ann.size(); ++i) {
    const int level = bf::level_for_length(ann[i + 1] - ann[i], rc.levels);
    double nearest = 1e9;
    for (double t : pred.times()) nearest = std::min(nearest, std::abs(t - ann[i]));
    worst = std::max(worst, nearest / rc.levels.stride_seconds(level));
  }
  std::printf("overfit: %zu predicted, %zu annotated, worst error %.2f strides\n", pred.size(), ann.size(), worst);
  EXPECT_LE(worst, 1.0);

  // checkpoint round trip keeps predictions bit-identical
  const auto text = toy::checkpoint_json(res.heads, rc.levels, {"test", "h", 1, ""});
  bf::LevelConfig lv;
  const auto back = toy::load_checkpoint_json(text, &lv);
  EXPECT_EQ(back.params, res.heads.params);
  EXPECT_EQ(lv.size_limits, rc.levels.size_limits);
  EXPECT_EQ(toy::predict(tracks[0], back, lv, rc.decode).times(),
            toy::predict(tracks[0], res.heads, rc.levels, rc.decode).times());
  EXPECT_THROW(toy::load_checkpoint_json("{\"format\":\"x\"}"), bf::FormatError);
}

TEST(Heads, SilencePredictsNothing) {
  bf::RunConfig rc;
  rc.train_corpus.num_tracks = 8;
  rc.val_corpus.num_tracks = 3;
  rc.train.epochs = 4;
  const auto specs = toy::make_corpus(rc.corpus(bf::Split::Train));
  const auto vspecs = toy::make_corpus(rc.corpus(bf::Split::Validation));
  const auto train = toy::prepare_corpus(specs, rc.levels, bf::QualityMode::Leftness);
  const auto val = toy::prepare_corpus(vspecs, rc.levels, bf::QualityMode::Leftness);
  auto heads = toy::init_heads(rc.levels, 2);
  std::vector<toy::FeaturePyramid> pyr;
  for (const auto& t : train) pyr.push_back(t.features);
  toy::fit_normalizer(heads, pyr);
  const auto res = toy::train_toy(train, val, heads, rc.train_config());
  const std::vector<float> silence(22050 * 6, 0.0f);
  EXPECT_TRUE(toy::predict(silence, res.heads, rc.levels, rc.decode).empty());
  // same audio, same heads: same output
  const auto a = toy::predict(train[0], res.heads, rc.levels, rc.decode);
  EXPECT_EQ(a.times(), toy::predict(train[0], res.heads, rc.levels, rc.decode).times());
}

TEST(Heads, FullCorpusLossAtLeastHalves) {
  const bf::RunConfig rc;  // 50 tracks, 30 epochs
  const auto data = bf::prepare_toy(rc, rc.loss.quality, false);
  const auto res = bf::train_heads(rc, data, rc.loss.quality);
  ASSERT_EQ(res.log.size(), 30u);
  EXPECT_LE(res.log.back().total, 0.5 * res.log.front().total)
      << res.log.front().total << " -> " << res.log.back().total;
}
