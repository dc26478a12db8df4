#include "beatfcos/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <tuple>

#include "beatfcos/kernels.hpp"

namespace beatfcos {

ClassDetections score_and_collect(const PredictionSet& preds, const AnchorGrid& grid,
                                  const LevelConfig& cfg, const DecodeConfig& decode) {
  if (preds.size() != grid.levels.size()) {
    throw std::invalid_argument("predictions do not match the anchor grid");
  }
  ClassDetections out;
  const double end = grid.duration(cfg) + 1e-9;
  for (std::size_t li = 0; li < grid.levels.size(); ++li) {
    const auto& anchors = grid.levels[li];
    if (preds[li].size() != anchors.size()) {
      throw std::invalid_argument("prediction count differs from anchor count");
    }
    const double stride_s = cfg.stride_seconds(static_cast<int>(li));
    for (std::size_t i = 0; i < anchors.size(); ++i) {
      const AnchorPrediction& p = preds[li][i];
      const double quality =
          decode.score_mode == ScoreMode::ClsTimesQuality ? p.leftness_prob : 1.0;
      const double left = std::max(0.0, anchors[i].position - p.reg_l * stride_s);
      const double right = anchors[i].position + p.reg_r * stride_s;
      if (!(right > left) || !std::isfinite(right)) continue;
      if (decode.drop_past_end && right > end) continue;
      for (int c = 0; c < kNumClasses; ++c) {
        const double score = std::clamp(p.cls_prob[c] * quality, 0.0, 1.0);
        if (score < decode.pre_filter) continue;
        out[static_cast<std::size_t>(c)].push_back(
            {Interval(left, right, static_cast<IntervalClass>(c)), score, static_cast<int>(li), i});
      }
    }
  }
  return out;
}

bool ranks_before(const Detection& a, const Detection& b) noexcept {
  if (a.score != b.score) return a.score > b.score;
  if (a.interval.left() != b.interval.left()) return a.interval.left() < b.interval.left();
  return std::tie(a.source_level, a.source_index) < std::tie(b.source_level, b.source_index);
}

namespace {

void sort_by_left(std::vector<Detection>& dets) {
  std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.interval.left() != b.interval.left()) return a.interval.left() < b.interval.left();
    return ranks_before(a, b);
  });
}

}  // namespace

std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
  std::sort(dets.begin(), dets.end(), ranks_before);
  const std::size_t n = dets.size();
  std::vector<double> lefts(n), rights(n), ious(n);
  for (std::size_t i = 0; i < n; ++i) {
    lefts[i] = dets[i].interval.left();
    rights[i] = dets[i].interval.right();
  }
  std::vector<std::uint8_t> suppressed(n, 0);
  std::vector<Detection> kept;
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < n; ++i) {
    if (suppressed[i]) continue;
    kept.push_back(dets[i]);
    const std::size_t rest = n - i - 1;
    if (rest == 0) break;
    k.iou_one_to_many(lefts[i], rights[i], lefts.data() + i + 1, rights.data() + i + 1,
                      ious.data(), rest);
    for (std::size_t j = 0; j < rest; ++j) {
      if (ious[j] > iou_threshold) suppressed[i + 1 + j] = 1;
    }
  }
  sort_by_left(kept);
  return kept;
}

std::vector<Detection> soft_nms(std::vector<Detection> dets, double iou_threshold,
                                SoftNmsDecay decay, double sigma, double final_score_threshold) {
  // Live detections are kept compact: slot i of lefts/rights mirrors dets[i].
  std::vector<Detection> out;
  out.reserve(dets.size());
  std::vector<double> lefts, rights, ious(dets.size());
  for (const auto& d : dets) {
    lefts.push_back(d.interval.left());
    rights.push_back(d.interval.right());
  }
  const auto& k = kernels::active();
  auto remove_at = [&](std::size_t i) {
    dets[i] = dets.back();
    dets.pop_back();
    lefts[i] = lefts.back();
    lefts.pop_back();
    rights[i] = rights.back();
    rights.pop_back();
  };
  while (!dets.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < dets.size(); ++i) {
      if (ranks_before(dets[i], dets[best])) best = i;
    }
    const Detection top = dets[best];
    out.push_back(top);
    remove_at(best);
    if (dets.empty()) break;
    k.iou_one_to_many(top.interval.left(), top.interval.right(), lefts.data(), rights.data(),
                      ious.data(), dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
      const double o = ious[i];
      if (decay == SoftNmsDecay::Linear) {
        if (o > iou_threshold) dets[i].score *= 1.0 - o;
      } else {
        dets[i].score *= std::exp(-(o * o) / sigma);
      }
    }
    // Iterate backwards so swap-removal never skips an element.
    for (std::size_t i = dets.size(); i-- > 0;) {
      if (dets[i].score < final_score_threshold) remove_at(i);
    }
  }
  sort_by_left(out);
  return out;
}

std::vector<Detection> suppress(std::vector<Detection> dets, const DecodeConfig& decode) {
  switch (decode.nms) {
    case NmsMode::Hard:
      // Same keep threshold as the soft variants, applied up front.
      std::erase_if(dets, [&](const Detection& d) { return d.score < decode.score_threshold; });
      return nms(std::move(dets), decode.iou_threshold);
    case NmsMode::SoftLinear:
      return soft_nms(std::move(dets), decode.iou_threshold, SoftNmsDecay::Linear, decode.sigma,
                      decode.score_threshold);
    case NmsMode::SoftGaussian:
      return soft_nms(std::move(dets), decode.iou_threshold, SoftNmsDecay::Gaussian, decode.sigma,
                      decode.score_threshold);
  }
  return dets;
}

namespace {

struct TimedScore {
  double time;
  double score;
};

void add_lefts(std::span<const Detection> dets, std::vector<TimedScore>& out) {
  for (const auto& d : dets) out.push_back({d.interval.left(), d.score});
}

std::optional<TimedScore> rightmost_edge(std::span<const Detection> dets) {
  if (dets.empty()) return std::nullopt;
  const Detection* last = &dets.front();
  for (const auto& d : dets) {
    if (d.interval.right() > last->interval.right()) last = &d;
  }
  return TimedScore{last->interval.right(), last->score};
}

double nearest_time(const std::vector<double>& sorted, double t) {
  const auto it = std::lower_bound(sorted.begin(), sorted.end(), t);
  if (it == sorted.end()) return sorted.back();
  if (it != sorted.begin() && t - *(it - 1) < *it - t) return *(it - 1);
  return *it;
}

double median_spacing(const std::vector<double>& sorted) {
  if (sorted.size() < 2) return 0.0;
  std::vector<double> gaps(sorted.size() - 1);
  for (std::size_t i = 1; i < sorted.size(); ++i) gaps[i - 1] = sorted[i] - sorted[i - 1];
  const auto mid = gaps.begin() + static_cast<std::ptrdiff_t>(gaps.size() / 2);
  std::nth_element(gaps.begin(), mid, gaps.end());
  return *mid;
}

// Chains of times closer than window collapse onto their best-scoring member.
std::vector<double> merge_times(std::vector<TimedScore> entries, double window) {
  std::sort(entries.begin(), entries.end(),
            [](const TimedScore& a, const TimedScore& b) { return a.time < b.time; });
  std::vector<double> out;
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t best = i;
    std::size_t j = i + 1;
    while (j < entries.size() && entries[j].time - entries[j - 1].time < window) {
      if (entries[j].score > entries[best].score) best = j;
      ++j;
    }
    out.push_back(entries[best].time);
    i = j;
  }
  return out;
}

}  // namespace

BeatSequence detections_to_beats(std::span<const Detection> beats,
                                 std::span<const Detection> downbeats, double merge_window) {
  std::vector<TimedScore> beat_entries;
  add_lefts(beats, beat_entries);
  add_lefts(downbeats, beat_entries);
  if (auto end = rightmost_edge(beats)) beat_entries.push_back(*end);
  std::vector<double> beat_times = merge_times(beat_entries, merge_window);

  std::vector<TimedScore> down_entries;
  add_lefts(downbeats, down_entries);
  if (auto end = rightmost_edge(downbeats)) {
    // The bar's right edge comes from a coarse level; land it on a nearby
    // beat rather than minting a new one.
    const double reach = 0.5 * median_spacing(beat_times);
    if (!beat_times.empty() && std::abs(nearest_time(beat_times, end->time) - end->time) <= reach) {
      end->time = nearest_time(beat_times, end->time);
    } else {
      beat_entries.push_back(*end);
      beat_times = merge_times(beat_entries, merge_window);
    }
    down_entries.push_back(*end);
  }

  std::vector<double> down_times;
  // Snap every downbeat onto the merged beat it belongs to.
  for (double t : merge_times(std::move(down_entries), merge_window)) {
    const double snapped = nearest_time(beat_times, t);
    if (down_times.empty() || down_times.back() != snapped) down_times.push_back(snapped);
  }
  return BeatSequence::with_downbeats(std::move(beat_times), std::move(down_times));
}

BeatSequence decode(const PredictionSet& preds, const AnchorGrid& grid, const LevelConfig& cfg,
                    const DecodeConfig& decode) {
  ClassDetections dets = score_and_collect(preds, grid, cfg, decode);
  auto beats = suppress(std::move(dets[0]), decode);
  auto downs = suppress(std::move(dets[1]), decode);
  return detections_to_beats(beats, downs, decode.merge_window);
}

}  // namespace beatfcos
