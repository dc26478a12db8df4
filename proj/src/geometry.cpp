#include "beatfcos/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "beatfcos/error.hpp"

namespace beatfcos {

std::string_view class_name(IntervalClass c) noexcept {
  return c == IntervalClass::Beat ? "beat" : "downbeat";
}

Interval::Interval(double left, double right, IntervalClass cls)
    : left_(left), right_(right), cls_(cls) {
  if (!std::isfinite(left) || !std::isfinite(right)) {
    throw std::invalid_argument("interval endpoints must be finite");
  }
  if (left < 0.0) {
    throw std::invalid_argument("interval starts before 0: " + std::to_string(left));
  }
  if (!(left < right)) {
    throw std::invalid_argument("interval must satisfy left < right, got [" +
                                std::to_string(left) + ", " + std::to_string(right) + "]");
  }
}

double iou_raw(double al, double ar, double bl, double br) noexcept {
  const double inter = std::max(0.0, std::min(ar, br) - std::max(al, bl));
  const double uni = (ar - al) + (br - bl) - inter;
  return inter / uni;
}

double giou_raw(double al, double ar, double bl, double br) noexcept {
  const double inter = std::max(0.0, std::min(ar, br) - std::max(al, bl));
  const double uni = (ar - al) + (br - bl) - inter;
  const double hull = std::max(ar, br) - std::min(al, bl);
  // hull - union is exactly 0 for overlapping pairs; rounding can make it negative
  return inter / uni - std::max(0.0, hull - uni) / hull;
}

double iou(const Interval& a, const Interval& b) noexcept {
  return iou_raw(a.left(), a.right(), b.left(), b.right());
}

double giou(const Interval& a, const Interval& b) noexcept {
  return giou_raw(a.left(), a.right(), b.left(), b.right());
}

void validate_beat_times(std::span<const double> times) {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (!std::isfinite(times[i]) || times[i] < 0.0) {
      throw AnnotationError("beat " + std::to_string(i) + " has an invalid time");
    }
    if (i > 0) {
      if (times[i] <= times[i - 1]) {
        throw AnnotationError("beat times not ascending at index " + std::to_string(i));
      }
      if (times[i] - times[i - 1] < kMinBeatSpacing) {
        throw AnnotationError("beats closer than 1 ms at index " + std::to_string(i));
      }
    }
  }
}

BeatSequence BeatSequence::with_positions(std::vector<double> times, std::vector<int> positions) {
  validate_beat_times(times);
  if (positions.size() != times.size()) {
    throw AnnotationError("positions length differs from times length");
  }
  for (int p : positions) {
    if (p < 1) throw AnnotationError("metrical position must be >= 1");
  }
  BeatSequence s;
  s.times_ = std::move(times);
  s.positions_ = std::move(positions);
  return s;
}

BeatSequence BeatSequence::with_downbeats(std::vector<double> times,
                                          std::vector<double> downbeats) {
  validate_beat_times(times);
  validate_beat_times(downbeats);
  BeatSequence s;
  s.times_ = std::move(times);
  s.downbeats_ = std::move(downbeats);
  return s;
}

BeatSequence BeatSequence::beats_only(std::vector<double> times) {
  validate_beat_times(times);
  BeatSequence s;
  s.times_ = std::move(times);
  return s;
}

std::vector<double> BeatSequence::downbeat_times() const {
  if (downbeats_) return *downbeats_;
  std::vector<double> out;
  if (positions_) {
    for (std::size_t i = 0; i < times_.size(); ++i) {
      if ((*positions_)[i] == 1) out.push_back(times_[i]);
    }
  }
  return out;
}

IntervalSet intervals_from_beats(const BeatSequence& seq) {
  IntervalSet out;
  const auto& t = seq.times();
  for (std::size_t i = 1; i < t.size(); ++i) {
    out.beats.emplace_back(t[i - 1], t[i], IntervalClass::Beat);
  }
  const auto d = seq.downbeat_times();
  for (std::size_t i = 1; i < d.size(); ++i) {
    out.downbeats.emplace_back(d[i - 1], d[i], IntervalClass::Downbeat);
  }
  return out;
}

}  // namespace beatfcos
