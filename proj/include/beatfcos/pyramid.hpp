#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "beatfcos/geometry.hpp"

namespace beatfcos {

// How the width of the left-biased positive sub-box is measured.
//   Stride:         width = radius * level stride (default)
//   IntervalLength: width = radius * interval length (literal reading; with
//                   radii >= 1 the sub-box covers the whole interval)
enum class SubBoxMode { Stride, IntervalLength };

// Quality target learned by the third head.
//   Leftness:   sqrt(r / (l + r)), largest next to the interval's left edge
//   Centerness: sqrt(min(l, r) / max(l, r)), the symmetric baseline
enum class QualityMode { Leftness, Centerness };

// Pyramid geometry: levels base_level .. base_level + num_levels - 1, level i
// has one anchor per 2^i samples.
struct LevelConfig {
  double sample_rate = 22050.0;
  int base_level = 7;
  int num_levels = 5;
  // m_0 .. m_num_levels in seconds; first 0, last +inf, strictly ascending.
  std::vector<double> size_limits = default_size_limits();
  // Sub-box radius per class, in units of the sub-box mode.
  std::array<double, kNumClasses> sub_box_radius{2.5, 4.5};
  SubBoxMode sub_box_mode = SubBoxMode::Stride;

  static std::vector<double> default_size_limits();

  // Throws std::invalid_argument on a malformed configuration.
  void validate() const;

  int pyramid_level(int level_index) const noexcept { return base_level + level_index; }
  std::int64_t stride_samples(int level_index) const noexcept {
    return std::int64_t{1} << pyramid_level(level_index);
  }
  double stride_seconds(int level_index) const noexcept {
    return static_cast<double>(stride_samples(level_index)) / sample_rate;
  }
};

// Index of the level whose (m_{i-1}, m_i] range contains s. Requires s > 0.
int level_for_length(double s, const LevelConfig& cfg);

struct AnchorPoint {
  int level_index;
  std::size_t index;
  double position;  // seconds, centre of the stride cell
};

struct AnchorGrid {
  std::int64_t track_samples = 0;
  std::vector<std::vector<AnchorPoint>> levels;

  std::size_t total() const noexcept;
  double duration(const LevelConfig& cfg) const noexcept {
    return static_cast<double>(track_samples) / cfg.sample_rate;
  }
};

// ceil(track_samples / 2^level) anchors per level, at cell centres.
AnchorGrid anchor_grid(std::int64_t track_samples, const LevelConfig& cfg);

// Anchor count of one level without materialising the grid.
std::size_t anchors_on_level(std::int64_t track_samples, const LevelConfig& cfg, int level_index);

double quality_target(double l, double r, QualityMode mode) noexcept;

struct AnchorTarget {
  std::array<std::uint8_t, kNumClasses> cls{0, 0};
  // Stride-normalised distances from the anchor to the matched interval's
  // left and right edges. Meaningful only for positive anchors.
  double reg_l = 0.0;
  double reg_r = 0.0;
  double quality = 0.0;
  std::int32_t matched = -1;  // index into TargetSet::intervals

  bool positive() const noexcept { return cls[0] != 0 || cls[1] != 0; }
};

struct TargetSet {
  std::vector<Interval> intervals;  // beat intervals first, then downbeat intervals
  std::vector<std::vector<AnchorTarget>> levels;

  std::size_t num_anchors() const noexcept;
  std::size_t num_positive() const noexcept;
};

// Labels every anchor of the grid. An interval is handled only by the level
// picked by level_for_length; on that level an anchor is positive when its
// position lies in (x1, min(x1 + radius * width, x2)). When an anchor is
// positive for several intervals the shortest one owns the regression slot.
// Throws AnnotationError when an interval extends past the end of the track.
TargetSet assign_targets(std::span<const Interval> beat_intervals,
                         std::span<const Interval> downbeat_intervals, const AnchorGrid& grid,
                         const LevelConfig& cfg, QualityMode quality = QualityMode::Leftness);

}  // namespace beatfcos
