#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "beatfcos/evaluation.hpp"
#include "beatfcos/geometry.hpp"
#include "beatfcos/level_fit.hpp"
#include "beatfcos/losses.hpp"
#include "beatfcos/pyramid.hpp"
#include "beatfcos/threshold.hpp"

namespace beatfcos {

inline constexpr std::string_view kVersion = "0.1.0";
inline constexpr std::string_view kSchemaVersion = "1";
inline constexpr double kDefaultSampleRate = 22050.0;

// ---- annotations ----------------------------------------------------------

// Rows "time [position]", whitespace separated, '#' starts a comment line.
// A file with only a time column yields a beats-only sequence. Throws
// FormatError (with the 1-based line number) on malformed or non-ascending
// rows.
BeatSequence parse_beats_text(std::string_view text);
BeatSequence parse_beats(const std::filesystem::path& path);

// Six decimals. Sequences with downbeats carry a position column; beats
// preceding the first downbeat are numbered from 2.
void write_beats(std::ostream& os, const BeatSequence& seq);
void write_beats(const std::filesystem::path& path, const BeatSequence& seq,
                 std::string_view header = {});

// ---- audio -----------------------------------------------------------------

struct Audio {
  std::vector<float> samples;
  double sample_rate = kDefaultSampleRate;
};

// 16-bit PCM only, mono or stereo (channels averaged), scaled by 1/32768.
Audio read_wav_native(const std::filesystem::path& path);
Audio read_wav_bytes(std::span<const std::uint8_t> bytes);
// read_wav_native followed by linear resampling to target_rate.
Audio read_wav(const std::filesystem::path& path, double target_rate = kDefaultSampleRate);

std::vector<float> resample_linear(std::span<const float> x, double from_rate, double to_rate);

// 16-bit PCM mono, samples clipped to [-1, 1].
void write_wav(const std::filesystem::path& path, const Audio& audio);

// ---- reports ---------------------------------------------------------------

struct Provenance {
  std::string command;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string config;  // compact JSON of the full run configuration, may be empty
};

// "<prefix>beatfcos <version> command=<c> config_hash=<h> seed=<s>"
std::string provenance_line(const Provenance& p, std::string_view prefix = "# ");
// provenance_line, then "<prefix>config=<json>" when a config is attached.
std::string provenance_header(const Provenance& p, std::string_view prefix = "# ");

// FNV-1a 64-bit, hex encoded.
std::string fnv1a_hex(std::string_view data);

inline constexpr std::string_view kMetricCsvHeader = "class,f1,cmlc,cmlt,amlc,amlt";

struct MetricRow {
  std::string label;
  std::optional<double> f1;
  std::optional<ContinuityScores> continuity;
};

std::vector<MetricRow> metric_rows(const MetricReport& report);
std::vector<MetricRow> metric_rows(const DatasetSummary& summary);

// Header row followed by one row per entry; "nan" marks not-applicable.
void write_metric_csv(std::ostream& os, std::span<const MetricRow> rows);
// "F1 / CMLt / AMLt" table, one line per class.
void write_metric_table(std::ostream& os, std::span<const MetricRow> rows);

std::string metric_report_json(const MetricReport& report, const Provenance& p);

// One row per (class, confidence bin): class,conf_low,conf_high,count,m0..m9
void write_histogram_csv(std::ostream& os, const IoUHistogram& hist);
// Two rows of small multiples (beats, downbeats), one panel per confidence bin.
void write_histogram_svg(std::ostream& os, const IoUHistogram& hist, std::string_view comment = {});

struct LossLogRow {
  int epoch = 0;
  double cls = 0.0;
  double reg = 0.0;
  double lft = 0.0;
  double total = 0.0;
  double lr = 0.0;
  std::optional<double> val_beat_f1;
  std::optional<double> val_downbeat_f1;
};

inline constexpr std::string_view kLossLogHeader =
    "epoch,cls,reg,lft,total,lr,val_beat_f1,val_downbeat_f1";
void write_loss_log(std::ostream& os, std::span<const LossLogRow> rows);

// ---- JSON artifacts ----------------------------------------------------------

// Positive anchors only; negatives are implied by "anchors" per level.
std::string targets_json(const TargetSet& targets, const AnchorGrid& grid, const LevelConfig& cfg,
                         const Provenance& p);

// {centroids, boundaries} with "inf" for the open upper limit.
std::string level_fit_json(const LevelFit& fit, std::size_t num_lengths, const Provenance& p);
// Size limits from a level-fit JSON object or a bare array ("inf" allowed).
std::vector<double> parse_size_limits(std::string_view text);

inline constexpr std::string_view kHeadOutputsFormat = "beatfcos-head-outputs";

// Activated per-anchor predictions for one track.
struct HeadOutputs {
  LevelConfig levels;
  std::int64_t track_samples = 0;
  PredictionSet predictions;
};

std::string head_outputs_json(const HeadOutputs& h, const Provenance& p);
// Level count and size limits come from base; rate, base level and track
// length from the file. Throws FormatError on shape or range problems.
HeadOutputs parse_head_outputs(std::string_view text, const LevelConfig& base);

// Opens path for writing or throws std::runtime_error naming the path.
std::ofstream open_output(const std::filesystem::path& path);

}  // namespace beatfcos
