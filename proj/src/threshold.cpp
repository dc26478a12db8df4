#include "beatfcos/threshold.hpp"

#include <algorithm>
#include <stdexcept>

#include "beatfcos/error.hpp"

namespace beatfcos {

std::vector<ConfidenceBin> default_confidence_bins() {
  return {{0.0, 0.1}, {0.1, 0.2}, {0.2, 0.3}, {0.3, 0.4},
          {0.4, 0.5}, {0.5, 0.6}, {0.6, 0.7}, {0.7, 1.0}};
}

IoUHistogram::IoUHistogram(std::vector<ConfidenceBin> bins) : bins_(std::move(bins)) {
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    if (!(bins_[i].high > bins_[i].low)) throw std::invalid_argument("empty confidence bin");
    if (i > 0 && bins_[i].low < bins_[i - 1].high) {
      throw std::invalid_argument("confidence bins must be ascending and disjoint");
    }
  }
  for (auto& c : counts_) c.assign(bins_.size(), Row{});
}

std::optional<std::size_t> IoUHistogram::confidence_bin(double score) const noexcept {
  for (std::size_t i = 0; i < bins_.size(); ++i) {
    const bool above = score > bins_[i].low || (i == 0 && score == bins_[i].low);
    if (above && score <= bins_[i].high) return i;
  }
  return std::nullopt;
}

int IoUHistogram::iou_bin(double iou) noexcept {
  return std::clamp(static_cast<int>(iou * kIouBins), 0, kIouBins - 1);
}

void IoUHistogram::add(IntervalClass cls, double score, double iou) {
  if (const auto b = confidence_bin(score)) {
    counts_[static_cast<std::size_t>(class_index(cls))][*b][static_cast<std::size_t>(iou_bin(iou))] += 1.0;
  }
}

void IoUHistogram::merge(const IoUHistogram& other) {
  if (other.bins_.size() != bins_.size()) throw std::invalid_argument("bin layout mismatch");
  for (std::size_t c = 0; c < counts_.size(); ++c) {
    for (std::size_t b = 0; b < bins_.size(); ++b) {
      for (int i = 0; i < kIouBins; ++i) counts_[c][b][i] += other.counts_[c][b][i];
    }
  }
}

double IoUHistogram::count(IntervalClass cls, std::size_t conf_bin, int iou_bin) const noexcept {
  return counts_[static_cast<std::size_t>(class_index(cls))][conf_bin][static_cast<std::size_t>(iou_bin)];
}

double IoUHistogram::row_total(IntervalClass cls, std::size_t conf_bin) const noexcept {
  double s = 0.0;
  for (double v : counts_[static_cast<std::size_t>(class_index(cls))][conf_bin]) s += v;
  return s;
}

double IoUHistogram::mass(IntervalClass cls, std::size_t conf_bin, int iou_bin) const noexcept {
  const double total = row_total(cls, conf_bin);
  return total > 0.0 ? count(cls, conf_bin, iou_bin) / total : 0.0;
}

bool IoUHistogram::empty() const noexcept {
  for (const auto& c : counts_) {
    for (const auto& row : c) {
      for (double v : row) {
        if (v != 0.0) return false;
      }
    }
  }
  return true;
}

IoUHistogram neighbor_iou_histogram(std::span<const ClassDetections> tracks,
                                    std::vector<ConfidenceBin> bins) {
  IoUHistogram hist(std::move(bins));
  std::vector<Detection> sorted;
  for (const auto& track : tracks) {
    for (const auto& dets : track) {
      if (dets.size() < 2) continue;
      sorted.assign(dets.begin(), dets.end());
      std::sort(sorted.begin(), sorted.end(), [](const Detection& a, const Detection& b) {
        if (a.interval.left() != b.interval.left()) return a.interval.left() < b.interval.left();
        if (a.interval.right() != b.interval.right()) return a.interval.right() < b.interval.right();
        return ranks_before(a, b);
      });
      for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
        hist.add(sorted[i].interval.cls(), sorted[i].score,
                 iou(sorted[i].interval, sorted[i + 1].interval));
      }
    }
  }
  return hist;
}

ThresholdSelection select_iou_threshold(const IoUHistogram& hist, double min_confidence,
                                        std::optional<IntervalClass> cls) {
  ThresholdSelection sel{};
  sel.aggregate.fill(0.0);
  bool any_row = false;
  const auto& bins = hist.confidence_bins();
  for (std::size_t b = 0; b < bins.size(); ++b) {
    if (bins[b].low < min_confidence) continue;
    any_row = true;
    for (int c = 0; c < kNumClasses; ++c) {
      const auto ic = static_cast<IntervalClass>(c);
      if (cls && *cls != ic) continue;
      for (int i = 0; i < kIouBins; ++i) sel.aggregate[static_cast<std::size_t>(i)] += hist.count(ic, b, i);
    }
  }
  if (!any_row) throw AnalysisError("no confidence bin at or above the minimum confidence");
  double total = 0.0;
  for (double v : sel.aggregate) total += v;
  if (total <= 0.0) throw AnalysisError("no high-confidence detections in histogram");
  for (double& v : sel.aggregate) v /= total;

  const auto& a = sel.aggregate;
  constexpr int kHalf = kIouBins / 2;
  sel.low_mode_bin = static_cast<int>(std::max_element(a.begin(), a.begin() + kHalf) - a.begin());
  // Last maximum so a plateau reaching the top bin counts as the upper mode.
  sel.high_mode_bin = kHalf;
  for (int i = kHalf; i < kIouBins; ++i) {
    if (a[static_cast<std::size_t>(i)] >= a[static_cast<std::size_t>(sel.high_mode_bin)]) sel.high_mode_bin = i;
  }
  if (sel.high_mode_bin - sel.low_mode_bin < 2) throw AnalysisError("no separation");
  sel.valley_bin = sel.low_mode_bin + 1;
  for (int i = sel.low_mode_bin + 1; i < sel.high_mode_bin; ++i) {
    if (a[static_cast<std::size_t>(i)] < a[static_cast<std::size_t>(sel.valley_bin)]) sel.valley_bin = i;
  }
  const double valley = a[static_cast<std::size_t>(sel.valley_bin)];
  if (!(valley < a[static_cast<std::size_t>(sel.low_mode_bin)]) ||
      !(valley < a[static_cast<std::size_t>(sel.high_mode_bin)])) {
    throw AnalysisError("no separation");
  }
  sel.threshold = static_cast<double>(sel.valley_bin + 1) / kIouBins;
  return sel;
}

}  // namespace beatfcos
