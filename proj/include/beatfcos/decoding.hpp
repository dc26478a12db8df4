#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "beatfcos/geometry.hpp"
#include "beatfcos/losses.hpp"
#include "beatfcos/pyramid.hpp"

namespace beatfcos {

enum class ScoreMode { ClsTimesQuality, ClsOnly };
enum class NmsMode { Hard, SoftLinear, SoftGaussian };
enum class SoftNmsDecay { Linear, Gaussian };

struct DecodeConfig {
  ScoreMode score_mode = ScoreMode::ClsTimesQuality;
  NmsMode nms = NmsMode::SoftLinear;
  double pre_filter = 0.05;
  double iou_threshold = 0.2;
  // Soft-NMS drops detections whose decayed score falls below this.
  double score_threshold = 0.2;
  double sigma = 0.5;
  // Beat times closer than this are merged after decoding.
  double merge_window = 0.010;
  // Discard detections whose right edge lies past the end of the track;
  // no target interval can end there.
  bool drop_past_end = true;
};

struct Detection {
  Interval interval;
  double score;
  int source_level = 0;
  std::size_t source_index = 0;
};

using ClassDetections = std::array<std::vector<Detection>, kNumClasses>;

// One candidate per anchor and class: interval [pos - l * stride, pos + r *
// stride] (left clamped at 0), score per ScoreMode. Candidates scoring below
// pre_filter are dropped. Each list is ordered by (level, index).
ClassDetections score_and_collect(const PredictionSet& preds, const AnchorGrid& grid,
                                  const LevelConfig& cfg, const DecodeConfig& decode);

// Strict weak order used to rank detections: score desc, left asc, level asc,
// index asc.
bool ranks_before(const Detection& a, const Detection& b) noexcept;

// Greedy hard NMS for a single class. Output sorted by left edge.
std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold);

// Soft-NMS for a single class. Linear decay multiplies by (1 - IoU) when the
// IoU exceeds iou_threshold; Gaussian decay multiplies by exp(-IoU^2 / sigma).
// Detections whose score falls below final_score_threshold are removed.
// Output sorted by left edge and carries decayed scores.
std::vector<Detection> soft_nms(std::vector<Detection> dets, double iou_threshold,
                                SoftNmsDecay decay, double sigma, double final_score_threshold);

// Dispatches on decode.nms.
std::vector<Detection> suppress(std::vector<Detection> dets, const DecodeConfig& decode);

// Inverse of intervals_from_beats on suppressed detections: left edges of both
// classes plus the rightmost beat right edge become beats, downbeat left edges
// plus the rightmost downbeat right edge become downbeats. That last downbeat
// edge lands on the nearest beat when within half the median beat spacing,
// otherwise it is added as a beat too. Times within merge_window of each
// other collapse to the highest-scoring one.
BeatSequence detections_to_beats(std::span<const Detection> beats,
                                 std::span<const Detection> downbeats,
                                 double merge_window = 0.010);

// score_and_collect, suppress per class, detections_to_beats.
BeatSequence decode(const PredictionSet& preds, const AnchorGrid& grid, const LevelConfig& cfg,
                    const DecodeConfig& decode);

}  // namespace beatfcos
