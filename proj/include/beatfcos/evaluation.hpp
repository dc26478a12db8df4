#pragma once

#include <array>
#include <optional>
#include <span>
#include <vector>

#include "beatfcos/geometry.hpp"

namespace beatfcos {

struct EvalConfig {
  double f_measure_window = 0.07;    // seconds, +/-
  double continuity_tolerance = 0.175;  // fraction of the local inter-beat interval
  double skip_seconds = 5.0;          // leading region ignored by every metric
  bool include_triple_variations = false;
};

struct MatchCounts {
  std::size_t hits = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
};

// One-to-one matching of estimated to reference times within +/- window,
// sweeping both ascending lists once.
MatchCounts match_beats(std::span<const double> est, std::span<const double> ref, double window);

// Drops times before skip_seconds.
std::vector<double> trim_leading(std::span<const double> times, double skip_seconds);

// F-measure after trimming; nullopt when the trimmed reference is empty.
std::optional<double> f_measure(std::span<const double> est, std::span<const double> ref,
                                const EvalConfig& cfg = {});

struct ContinuityScores {
  double cmlc = 0.0;
  double cmlt = 0.0;
  double amlc = 0.0;
  double amlt = 0.0;
};

// The annotation sequences AML accepts: identity, double tempo, the two
// half-tempo phases, offbeat (and the triple/third variants when enabled).
std::vector<std::vector<double>> metrical_variations(std::span<const double> ref,
                                                     bool include_triple = false);

struct SegmentScore {
  double longest;  // longest continuously correct run / annotations
  double total;    // correct beats / annotations
};

// Continuity score of est against a single annotation sequence (no trimming).
SegmentScore continuity_against(std::span<const double> est, std::span<const double> ref,
                                double tolerance);

// CML and AML continuity after trimming; nullopt when fewer than two
// reference beats remain.
std::optional<ContinuityScores> continuity(std::span<const double> est,
                                           std::span<const double> ref,
                                           const EvalConfig& cfg = {});

struct ClassMetrics {
  std::optional<double> f_measure;
  std::optional<ContinuityScores> continuity;
  MatchCounts counts;
  bool applicable() const noexcept { return f_measure.has_value(); }
};

struct MetricReport {
  std::array<ClassMetrics, kNumClasses> classes;
  // Mean of beat and downbeat F-measure; nullopt if either is not applicable.
  std::optional<double> joint_f_measure;

  const ClassMetrics& beat() const noexcept { return classes[0]; }
  const ClassMetrics& downbeat() const noexcept { return classes[1]; }
};

ClassMetrics evaluate_times(std::span<const double> est, std::span<const double> ref,
                            const EvalConfig& cfg = {});

// Downbeat metrics are not applicable when either sequence lacks downbeat
// information.
MetricReport joint_report(const BeatSequence& est, const BeatSequence& ref,
                          const EvalConfig& cfg = {});

// Unweighted per-track mean of every applicable field.
struct SummaryRow {
  std::size_t tracks = 0;
  double f_measure = 0.0;
  ContinuityScores continuity;
};
struct DatasetSummary {
  std::array<SummaryRow, kNumClasses> classes;
  std::optional<double> joint_f_measure;
};
DatasetSummary summarize(std::span<const MetricReport> reports);

}  // namespace beatfcos
