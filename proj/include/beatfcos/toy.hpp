#pragma once

// Desk-scale stand-in for a trained backbone: synthetic click tracks, a
// deterministic onset-statistics feature pyramid, per-level linear heads and
// an Adam training loop over the detection loss.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "beatfcos/decoding.hpp"
#include "beatfcos/evaluation.hpp"
#include "beatfcos/io.hpp"
#include "beatfcos/losses.hpp"
#include "beatfcos/pyramid.hpp"

namespace beatfcos::toy {

// ---- synthesis -------------------------------------------------------------

struct SynthSpec {
  double tempo_bpm = 120.0;
  // Relative tempo change over the track; the tempo moves linearly in time
  // from tempo_bpm to tempo_bpm * (1 + tempo_drift).
  double tempo_drift = 0.0;
  int meter = 4;
  double duration = 10.0;
  double first_beat = 0.0;  // seconds
  double click_amplitude = 0.4;
  double click_decay = 0.008;  // seconds, exponential time constant
  double click_frequency = 1000.0;
  double noise_floor = 0.005;  // white-noise standard deviation
  std::uint64_t seed = 0;
  // When positive, the audio is zero-padded or cropped to exactly this many
  // samples (2^21 reproduces the fixed training length); clicks past the end
  // are dropped from the annotation.
  std::int64_t fit_samples = 0;

  // Throws std::invalid_argument when the spec cannot produce a track.
  void validate() const;
};

struct SynthTrack {
  Audio audio;
  BeatSequence annotation;
};

// Decaying clicks on the (possibly drifting) tempo grid; downbeats at twice
// the click amplitude. The annotation lists the exact click onsets.
SynthTrack synth_track(const SynthSpec& spec, double sample_rate = kDefaultSampleRate);

struct CorpusSpec {
  int num_tracks = 50;
  double tempo_min = 60.0;
  double tempo_max = 180.0;
  std::vector<int> meters{3, 4};
  double duration = 10.0;
  double max_drift = 0.0;
  double noise_floor = 0.005;
  std::int64_t fit_samples = 0;  // see SynthSpec::fit_samples
  std::uint64_t seed = 1;
};

std::vector<SynthSpec> make_corpus(const CorpusSpec& corpus);

// ---- features --------------------------------------------------------------

inline constexpr int kFeatureWidth = 21;
inline constexpr int kHeadOutputs = 5;  // 2 class logits, 2 log-offsets, 1 quality logit

// Index layout of one feature row.
enum Feature : int {
  kOnsetAfter = 0,     // onset mass in the half cell after the anchor
  kOnsetLag0 = 1,      // lag [0, 0.5) strides before the anchor
  kOnsetLag1 = 2,      // [0.5, 1)
  kOnsetLag2 = 3,      // [1, 1.5)
  kOnsetLag3 = 4,      // [1.5, 2.5)
  kOnsetLag4 = 5,      // [2.5, 3.5)
  kOnsetLag5 = 6,      // [3.5, 5)
  kFrontLag = 7,       // log lag of the latest onset front, strides
  kFrontAccent = 8,    // onset mass of that front
  kLogPeriod = 9,      // log(beat period / stride)
  kLogPeriodSq = 10,
  kLogBar = 11,        // log(bar period / stride)
  kLogBarSq = 12,
  kBeatSupport = 13,   // onset mass one beat period earlier
  kBarSupport = 14,    // onset mass one bar earlier
  kDensity = 15,       // onset mass over the last beat period
  kNextSupport = 16,   // onset mass one beat period after the latest front
  kNextBarSupport = 17,  // same, one bar after
  kBeatEvidence = 18,  // next-beat support, gated by a recent front and a beat period in the level's range
  kBarEvidence = 19,   // same for the bar period
  kAccentContrast = 20,  // log ratio of the front's click mass to its louder neighbouring beat
};

struct FeaturePyramid {
  int width = kFeatureWidth;
  // Per level: anchors * width values, row-major.
  std::vector<std::vector<double>> levels;

  std::size_t anchors(std::size_t level) const noexcept { return levels[level].size() / static_cast<std::size_t>(width); }
  std::span<const double> row(std::size_t level, std::size_t anchor) const noexcept {
    return std::span<const double>(levels[level]).subspan(anchor * static_cast<std::size_t>(width),
                                                          static_cast<std::size_t>(width));
  }
};

// Onset envelope: rectified first difference of short-window energy.
struct OnsetEnvelope {
  static constexpr std::size_t kWindow = 256;
  static constexpr std::size_t kHop = 32;
  double sample_rate = kDefaultSampleRate;
  std::vector<double> energy;
  std::vector<double> onset;

  // Time stamp of frame f: the end of its analysis window.
  double frame_time(std::size_t f) const noexcept {
    return static_cast<double>(f * kHop + kWindow) / sample_rate;
  }
};

OnsetEnvelope onset_envelope(std::span<const float> audio, double sample_rate);

// Deterministic; level lengths equal anchor_grid counts. All onset features
// are normalised by the loudest energy frame of the preceding four seconds.
FeaturePyramid extract_pyramid(std::span<const float> audio, const LevelConfig& cfg);

// ---- heads -----------------------------------------------------------------

struct ToyHeads {
  int width = kFeatureWidth;
  int num_levels = 0;
  // Per level: kHeadOutputs x width weights (row-major) then kHeadOutputs biases.
  std::vector<double> params;
  // Per level feature standardisation applied before the linear map.
  std::vector<double> feature_mean;
  std::vector<double> feature_scale;
  // Adam state.
  std::vector<double> adam_m;
  std::vector<double> adam_v;
  std::int64_t adam_step = 0;
  QualityMode quality = QualityMode::Leftness;

  std::size_t level_param_count() const noexcept {
    return static_cast<std::size_t>(kHeadOutputs) * static_cast<std::size_t>(width + 1);
  }
  std::span<double> level_params(int level) noexcept {
    return std::span<double>(params).subspan(static_cast<std::size_t>(level) * level_param_count(),
                                             level_param_count());
  }
  std::span<const double> level_params(int level) const noexcept {
    return std::span<const double>(params).subspan(
        static_cast<std::size_t>(level) * level_param_count(), level_param_count());
  }
};

// Small seeded weights; class bias at a 1% prior, offset biases at each
// level's typical interval geometry.
ToyHeads init_heads(const LevelConfig& cfg, std::uint64_t seed, double init_std = 0.01);

// Sets feature standardisation from a set of pyramids (mean / std per level).
void fit_normalizer(ToyHeads& heads, std::span<const FeaturePyramid> pyramids);

// Raw outputs for every anchor.
std::vector<std::vector<HeadOutput>> forward(const ToyHeads& heads, const FeaturePyramid& feats);

PredictionSet activate_all(const std::vector<std::vector<HeadOutput>>& raw);

// ---- training --------------------------------------------------------------

struct PreparedTrack {
  FeaturePyramid features;
  AnchorGrid grid;
  TargetSet targets;
  BeatSequence annotation;
};

PreparedTrack prepare_track(const SynthTrack& track, const LevelConfig& cfg, QualityMode quality);
std::vector<PreparedTrack> prepare_corpus(std::span<const SynthSpec> specs, const LevelConfig& cfg,
                                          QualityMode quality, int jobs = 1);

// Batch loss (mean over anchors per item, mean over items) and, when grad is
// non-null, its gradient with respect to heads.params.
LossBreakdown batch_loss(const ToyHeads& heads, std::span<const PreparedTrack* const> batch,
                         const LossConfig& cfg, std::vector<double>* grad);

struct TrainConfig {
  int epochs = 30;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int batch_size = 16;
  // Full passes over the training tracks per epoch.
  int passes_per_epoch = 10;
  int patience = 3;
  double lr_factor = 0.1;
  std::uint64_t seed = 0;
  LevelConfig levels;
  LossConfig loss;
  DecodeConfig decode;
  EvalConfig eval;
  int jobs = 1;
};

struct TrainResult {
  ToyHeads heads;
  std::vector<LossLogRow> log;
};

// Adam (L2 weight decay, no gradient clipping); the learning rate drops by
// lr_factor when validation joint F-measure has not improved for `patience`
// epochs, and the heads from the best validation epoch are returned. Throws
// TrainingError if the loss becomes non-finite.
TrainResult train_toy(std::span<const PreparedTrack> train, std::span<const PreparedTrack> val,
                      ToyHeads heads, const TrainConfig& cfg);

// extract_pyramid, forward, decode.
BeatSequence predict(std::span<const float> audio, const ToyHeads& heads, const LevelConfig& cfg,
                     const DecodeConfig& decode);
BeatSequence predict(const PreparedTrack& track, const ToyHeads& heads, const LevelConfig& cfg,
                     const DecodeConfig& decode);

// Pre-suppression detections of a prepared track.
ClassDetections raw_detections(const PreparedTrack& track, const ToyHeads& heads,
                               const LevelConfig& cfg, const DecodeConfig& decode);

std::vector<MetricReport> evaluate_heads(std::span<const PreparedTrack> tracks,
                                         const ToyHeads& heads, const LevelConfig& cfg,
                                         const DecodeConfig& decode, const EvalConfig& eval,
                                         int jobs = 1);

// ---- checkpoints -------------------------------------------------------------

inline constexpr std::string_view kCheckpointFormat = "beatfcos-toy-heads";
inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_json(const ToyHeads& heads, const LevelConfig& cfg,
                            const Provenance& provenance);
// Throws FormatError on a wrong format tag, version, or shape.
ToyHeads load_checkpoint_json(std::string_view text, LevelConfig* cfg = nullptr);

}  // namespace beatfcos::toy
