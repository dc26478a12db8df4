#pragma once

#include <array>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "beatfcos/decoding.hpp"

namespace beatfcos {

inline constexpr int kIouBins = 10;

struct ConfidenceBin {
  double low;
  double high;  // bin is (low, high]; the first bin also takes score == low
};

// The eight confidence ranges of the reference figure:
// 0-0.1, 0.1-0.2, ..., 0.6-0.7, 0.7-1.
std::vector<ConfidenceBin> default_confidence_bins();

// Counts of neighbouring-detection IoUs per class, per confidence bin, per
// IoU bin (10 uniform bins over [0, 1], the last closed on the right).
class IoUHistogram {
 public:
  explicit IoUHistogram(std::vector<ConfidenceBin> bins = default_confidence_bins());

  const std::vector<ConfidenceBin>& confidence_bins() const noexcept { return bins_; }

  // Index of the confidence bin holding score, if any.
  std::optional<std::size_t> confidence_bin(double score) const noexcept;
  static int iou_bin(double iou) noexcept;

  void add(IntervalClass cls, double score, double iou);
  // Associative, commutative merge; bins must match.
  void merge(const IoUHistogram& other);

  double count(IntervalClass cls, std::size_t conf_bin, int iou_bin) const noexcept;
  double row_total(IntervalClass cls, std::size_t conf_bin) const noexcept;
  // Normalised frequency; 0 for an empty row.
  double mass(IntervalClass cls, std::size_t conf_bin, int iou_bin) const noexcept;
  bool empty() const noexcept;

 private:
  using Row = std::array<double, kIouBins>;
  std::vector<ConfidenceBin> bins_;
  std::array<std::vector<Row>, kNumClasses> counts_;
};

// Each detection contributes the IoU with its successor in left-edge order,
// filed under its own score. Detection lists are per track; classes are kept
// apart.
IoUHistogram neighbor_iou_histogram(std::span<const ClassDetections> tracks,
                                    std::vector<ConfidenceBin> bins = default_confidence_bins());

struct ThresholdSelection {
  double threshold;
  int low_mode_bin;
  int high_mode_bin;
  int valley_bin;
  std::array<double, kIouBins> aggregate;
};

// Pools rows whose lower bound is >= min_confidence (optionally for a single
// class), finds the low-IoU mode in bins 0-4 and the high-IoU mode in bins
// 5-9, and returns the right edge of the lowest-mass bin strictly between
// them (ties to the smaller threshold). Throws AnalysisError when no row
// qualifies or the valley is not lower than both modes ("no separation").
ThresholdSelection select_iou_threshold(const IoUHistogram& hist, double min_confidence = 0.2,
                                        std::optional<IntervalClass> cls = std::nullopt);

}  // namespace beatfcos
