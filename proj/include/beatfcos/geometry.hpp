#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace beatfcos {

enum class IntervalClass : std::uint8_t { Beat = 0, Downbeat = 1 };

inline constexpr int kNumClasses = 2;

constexpr int class_index(IntervalClass c) noexcept { return static_cast<int>(c); }
std::string_view class_name(IntervalClass c) noexcept;

// A half-open time span in seconds. Construction rejects zero-length,
// inverted, negative or non-finite spans.
class Interval {
 public:
  Interval(double left, double right, IntervalClass cls = IntervalClass::Beat);

  double left() const noexcept { return left_; }
  double right() const noexcept { return right_; }
  double length() const noexcept { return right_ - left_; }
  IntervalClass cls() const noexcept { return cls_; }

  friend bool operator==(const Interval&, const Interval&) = default;

 private:
  double left_;
  double right_;
  IntervalClass cls_;
};

// 1D intersection-over-union; the class tag is ignored.
double iou(const Interval& a, const Interval& b) noexcept;

// Generalized IoU: IoU minus the fraction of the hull not covered by the union.
double giou(const Interval& a, const Interval& b) noexcept;

// Raw-coordinate variants used by the kernels and gradient code. Callers
// guarantee left < right for both spans.
double iou_raw(double al, double ar, double bl, double br) noexcept;
double giou_raw(double al, double ar, double bl, double br) noexcept;

// Minimum spacing between two annotated beats.
inline constexpr double kMinBeatSpacing = 1e-3;

// Beat times plus metrical information. Downbeat information is carried either
// as per-beat metrical positions (position 1 marks a downbeat) or, for
// prediction-only sequences, as a separate ascending list of downbeat times.
// A sequence may also carry no downbeat information at all.
class BeatSequence {
 public:
  BeatSequence() = default;

  static BeatSequence with_positions(std::vector<double> times, std::vector<int> positions);
  static BeatSequence with_downbeats(std::vector<double> times, std::vector<double> downbeats);
  static BeatSequence beats_only(std::vector<double> times);

  const std::vector<double>& times() const noexcept { return times_; }
  const std::optional<std::vector<int>>& positions() const noexcept { return positions_; }
  bool has_downbeats() const noexcept { return positions_.has_value() || downbeats_.has_value(); }
  // Downbeat times; empty when the sequence carries no downbeat information.
  std::vector<double> downbeat_times() const;

  std::size_t size() const noexcept { return times_.size(); }
  bool empty() const noexcept { return times_.empty(); }

 private:
  std::vector<double> times_;
  std::optional<std::vector<int>> positions_;
  std::optional<std::vector<double>> downbeats_;
};

// Throws AnnotationError unless times are finite, >= 0, and ascending with at
// least kMinBeatSpacing between neighbours.
void validate_beat_times(std::span<const double> times);

struct IntervalSet {
  std::vector<Interval> beats;
  std::vector<Interval> downbeats;
};

// Consecutive beats form beat intervals; consecutive downbeats form downbeat
// intervals, so every downbeat is represented twice.
IntervalSet intervals_from_beats(const BeatSequence& seq);

}  // namespace beatfcos
