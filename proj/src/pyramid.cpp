#include "beatfcos/pyramid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "beatfcos/error.hpp"

namespace beatfcos {

std::vector<double> LevelConfig::default_size_limits() {
  return {0.0, 0.546, 0.955, 1.588, 2.359, std::numeric_limits<double>::infinity()};
}

void LevelConfig::validate() const {
  if (!(sample_rate > 0.0) || !std::isfinite(sample_rate)) {
    throw std::invalid_argument("sample_rate must be positive");
  }
  if (num_levels < 1 || base_level < 0 || base_level + num_levels > 40) {
    throw std::invalid_argument("invalid pyramid level range");
  }
  if (static_cast<int>(size_limits.size()) != num_levels + 1) {
    throw std::invalid_argument("size_limits must have num_levels + 1 entries");
  }
  if (size_limits.front() != 0.0 || !std::isinf(size_limits.back()) || size_limits.back() < 0) {
    throw std::invalid_argument("size_limits must start at 0 and end at +inf");
  }
  for (std::size_t i = 1; i < size_limits.size(); ++i) {
    if (!(size_limits[i] > size_limits[i - 1])) {
      throw std::invalid_argument("size_limits must be strictly ascending");
    }
  }
  for (double r : sub_box_radius) {
    if (!(r > 0.0) || !std::isfinite(r)) throw std::invalid_argument("radii must be positive");
  }
}

int level_for_length(double s, const LevelConfig& cfg) {
  if (!(s > 0.0)) throw std::invalid_argument("interval length must be positive");
  // First limit >= s; the level is the one ending there.
  const auto it = std::lower_bound(cfg.size_limits.begin() + 1, cfg.size_limits.end(), s);
  return static_cast<int>(it - cfg.size_limits.begin()) - 1;
}

std::size_t anchors_on_level(std::int64_t track_samples, const LevelConfig& cfg,
                             int level_index) {
  const std::int64_t stride = cfg.stride_samples(level_index);
  return static_cast<std::size_t>((track_samples + stride - 1) / stride);
}

AnchorGrid anchor_grid(std::int64_t track_samples, const LevelConfig& cfg) {
  if (track_samples <= 0) throw std::invalid_argument("track length must be positive");
  AnchorGrid grid;
  grid.track_samples = track_samples;
  grid.levels.resize(static_cast<std::size_t>(cfg.num_levels));
  for (int li = 0; li < cfg.num_levels; ++li) {
    const std::size_t n = anchors_on_level(track_samples, cfg, li);
    const double stride = static_cast<double>(cfg.stride_samples(li));
    auto& level = grid.levels[static_cast<std::size_t>(li)];
    level.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      level.push_back({li, i, (static_cast<double>(i) + 0.5) * stride / cfg.sample_rate});
    }
  }
  return grid;
}

std::size_t AnchorGrid::total() const noexcept {
  std::size_t n = 0;
  for (const auto& l : levels) n += l.size();
  return n;
}

double quality_target(double l, double r, QualityMode mode) noexcept {
  if (mode == QualityMode::Leftness) return std::sqrt(r / (l + r));
  return std::sqrt(std::min(l, r) / std::max(l, r));
}

std::size_t TargetSet::num_anchors() const noexcept {
  std::size_t n = 0;
  for (const auto& l : levels) n += l.size();
  return n;
}

std::size_t TargetSet::num_positive() const noexcept {
  std::size_t n = 0;
  for (const auto& l : levels) {
    n += static_cast<std::size_t>(
        std::count_if(l.begin(), l.end(), [](const AnchorTarget& t) { return t.positive(); }));
  }
  return n;
}

namespace {

void label_interval(const Interval& iv, std::int32_t iv_index, const AnchorGrid& grid,
                    const LevelConfig& cfg, QualityMode quality, TargetSet& out) {
  const int li = level_for_length(iv.length(), cfg);
  const double stride_s = cfg.stride_seconds(li);
  const double radius = cfg.sub_box_radius[static_cast<std::size_t>(class_index(iv.cls()))];
  const double width = cfg.sub_box_mode == SubBoxMode::Stride ? stride_s : iv.length();
  const double x1 = iv.left();
  const double hi = std::min(x1 + radius * width, iv.right());

  const auto& anchors = grid.levels[static_cast<std::size_t>(li)];
  auto& targets = out.levels[static_cast<std::size_t>(li)];
  // First cell whose centre could exceed x1.
  const double first = std::floor(x1 / stride_s - 0.5);
  std::size_t idx = first < 0.0 ? 0 : static_cast<std::size_t>(first);
  for (; idx < anchors.size(); ++idx) {
    const double pos = anchors[idx].position;
    if (pos <= x1) continue;
    if (pos >= hi) break;
    AnchorTarget& t = targets[idx];
    t.cls[static_cast<std::size_t>(class_index(iv.cls()))] = 1;
    const bool take = t.matched < 0 ||
                      iv.length() < out.intervals[static_cast<std::size_t>(t.matched)].length();
    if (take) {
      t.matched = iv_index;
      t.reg_l = (pos - x1) / stride_s;
      t.reg_r = (iv.right() - pos) / stride_s;
      t.quality = quality_target(t.reg_l, t.reg_r, quality);
    }
  }
}

}  // namespace

TargetSet assign_targets(std::span<const Interval> beat_intervals,
                         std::span<const Interval> downbeat_intervals, const AnchorGrid& grid,
                         const LevelConfig& cfg, QualityMode quality) {
  if (static_cast<int>(grid.levels.size()) != cfg.num_levels) {
    throw std::invalid_argument("anchor grid does not match level configuration");
  }
  TargetSet out;
  out.intervals.reserve(beat_intervals.size() + downbeat_intervals.size());
  out.intervals.insert(out.intervals.end(), beat_intervals.begin(), beat_intervals.end());
  out.intervals.insert(out.intervals.end(), downbeat_intervals.begin(), downbeat_intervals.end());

  const double duration = grid.duration(cfg);
  for (const auto& iv : out.intervals) {
    if (iv.right() > duration + 1e-9) {
      throw AnnotationError("interval [" + std::to_string(iv.left()) + ", " +
                            std::to_string(iv.right()) + "] extends past the track end at " +
                            std::to_string(duration) + " s");
    }
  }

  out.levels.resize(grid.levels.size());
  for (std::size_t li = 0; li < grid.levels.size(); ++li) {
    out.levels[li].resize(grid.levels[li].size());
  }
  for (std::size_t i = 0; i < out.intervals.size(); ++i) {
    label_interval(out.intervals[i], static_cast<std::int32_t>(i), grid, cfg, quality, out);
  }
  return out;
}

}  // namespace beatfcos
