#include "beatfcos/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "beatfcos/config.hpp"
#include "beatfcos/decoding.hpp"
#include "beatfcos/error.hpp"
#include "beatfcos/evaluation.hpp"
#include "beatfcos/io.hpp"
#include "beatfcos/level_fit.hpp"
#include "beatfcos/parallel.hpp"
#include "beatfcos/pipeline.hpp"
#include "beatfcos/pyramid.hpp"
#include "beatfcos/threshold.hpp"
#include "beatfcos/toy.hpp"

namespace fs = std::filesystem;

namespace beatfcos::cli {

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt(double v, int digits = 3) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// ---- shared option groups ---------------------------------------------------

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::string levels_path;
};

void add_common(CLI::App* sub, CommonFlags& f) {
  sub->add_option("--config", f.config_path, "JSON config file, applied after $BEATFCOS_CONFIG");
  sub->add_option("--seed", f.seed, "master seed");
  sub->add_option("--jobs", f.jobs, "worker threads for per-track work")->check(CLI::PositiveNumber);
  sub->add_option("--levels", f.levels_path, "size limits from fit-levels JSON");
}

struct DecodeFlags {
  std::optional<std::string> nms;
  std::optional<double> iou;
  std::optional<double> score;
  std::optional<double> sigma;
};

void add_decode(CLI::App* sub, DecodeFlags& f) {
  sub->add_option("--nms", f.nms, "suppression: hard, soft-linear, soft-gaussian")
      ->check(CLI::IsMember({"hard", "soft-linear", "soft-gaussian"}));
  sub->add_option("--iou-thresh", f.iou, "IoU threshold")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--score-thresh", f.score, "final score threshold")->check(CLI::Range(0.0, 1.0));
  sub->add_option("--sigma", f.sigma, "Gaussian Soft-NMS sigma")->check(CLI::PositiveNumber);
}

struct TrainFlags {
  std::optional<int> epochs;
  std::optional<double> lr;
  std::optional<double> weight_decay;
  std::optional<int> batch_size;
  std::optional<int> passes;
  std::optional<int> patience;
  std::optional<int> train_tracks;
  std::optional<int> val_tracks;
  std::optional<int> test_tracks;
};

void add_train(CLI::App* sub, TrainFlags& f) {
  sub->add_option("--epochs", f.epochs, "training epochs")->check(CLI::NonNegativeNumber);
  sub->add_option("--lr", f.lr, "Adam learning rate")->check(CLI::NonNegativeNumber);
  sub->add_option("--weight-decay", f.weight_decay, "L2 weight decay")->check(CLI::NonNegativeNumber);
  sub->add_option("--batch-size", f.batch_size, "tracks per step")->check(CLI::PositiveNumber);
  sub->add_option("--passes", f.passes, "passes over the training set per epoch")->check(CLI::PositiveNumber);
  sub->add_option("--patience", f.patience, "stale epochs before the LR drops")->check(CLI::PositiveNumber);
  sub->add_option("--train-tracks", f.train_tracks, "synthetic training tracks")->check(CLI::PositiveNumber);
  sub->add_option("--val-tracks", f.val_tracks, "synthetic validation tracks")->check(CLI::PositiveNumber);
  sub->add_option("--test-tracks", f.test_tracks, "synthetic held-out tracks")->check(CLI::PositiveNumber);
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunConfig load_config(const CommonFlags& f) {
  RunConfig cfg;
  try {
    if (auto p = env_config_path()) merge_config_file(cfg, *p);
    if (!f.config_path.empty()) merge_config_file(cfg, f.config_path);
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.jobs) cfg.jobs = *f.jobs;
  if (!f.levels_path.empty()) {
    cfg.levels.size_limits = parse_size_limits(read_text(f.levels_path));
    cfg.levels.num_levels = static_cast<int>(cfg.levels.size_limits.size()) - 1;
  }
  return cfg;
}

void apply(RunConfig& cfg, const DecodeFlags& f) {
  if (f.nms) cfg.decode.nms = parse_nms_mode(*f.nms);
  if (f.iou) cfg.decode.iou_threshold = *f.iou;
  if (f.score) cfg.decode.score_threshold = *f.score;
  if (f.sigma) cfg.decode.sigma = *f.sigma;
}

void apply(RunConfig& cfg, const TrainFlags& f) {
  if (f.epochs) cfg.train.epochs = *f.epochs;
  if (f.lr) cfg.train.lr = *f.lr;
  if (f.weight_decay) cfg.train.weight_decay = *f.weight_decay;
  if (f.batch_size) cfg.train.batch_size = *f.batch_size;
  if (f.passes) cfg.train.passes_per_epoch = *f.passes;
  if (f.patience) cfg.train.patience = *f.patience;
  if (f.train_tracks) cfg.train_corpus.num_tracks = *f.train_tracks;
  if (f.val_tracks) cfg.val_corpus.num_tracks = *f.val_tracks;
  if (f.test_tracks) cfg.test_corpus.num_tracks = *f.test_tracks;
}

void finalize(const RunConfig& cfg) {
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

Provenance provenance(const std::string& command, const RunConfig& cfg) {
  return {command, config_hash(cfg), cfg.seed, config_json(cfg)};
}

// Writes to path, or to out when path is empty or "-".
template <class Fn>
void emit(const std::string& path, std::ostream& out, Fn&& write) {
  if (path.empty() || path == "-") {
    write(out);
    return;
  }
  auto f = open_output(path);
  write(f);
  if (!f) throw std::runtime_error("write failed: " + path);
}

// Regular files directly under dir (or dir itself when it is a file), sorted.
std::vector<fs::path> list_files(const fs::path& p) {
  std::vector<fs::path> out;
  if (fs::is_regular_file(p)) {
    out.push_back(p);
    return out;
  }
  if (!fs::is_directory(p)) throw FormatError("no such file or directory: " + p.string());
  for (const auto& e : fs::directory_iterator(p)) {
    if (e.is_regular_file() && e.path().filename().string().front() != '.') out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---- toy helpers -----------------------------------------------------------

struct ModelInput {
  toy::ToyHeads heads;
  LevelConfig levels;
};

ModelInput load_model(const fs::path& path, const RunConfig& cfg) {
  ModelInput m;
  m.levels = cfg.levels;
  m.heads = toy::load_checkpoint_json(read_text(path), &m.levels);
  return m;
}

HeadOutputs model_outputs(const ModelInput& m, std::span<const float> audio) {
  HeadOutputs h;
  h.levels = m.levels;
  h.track_samples = static_cast<std::int64_t>(audio.size());
  const toy::FeaturePyramid feats = toy::extract_pyramid(audio, m.levels);
  h.predictions = toy::activate_all(toy::forward(m.heads, feats));
  return h;
}

// ---- subcommands -------------------------------------------------------------

struct FitLevelsArgs {
  CommonFlags common;
  std::vector<std::string> inputs;
  std::optional<int> k;
  std::string classes = "both";
  std::string out;
};

int run_fit_levels(const FitLevelsArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(a.common);
  finalize(cfg);
  const int k = a.k.value_or(cfg.levels.num_levels);
  std::vector<double> lengths;
  for (const auto& in : a.inputs) {
    for (const auto& file : list_files(in)) {
      const BeatSequence seq = parse_beats(file);
      const IntervalSet ivs = intervals_from_beats(seq);
      if (a.classes != "downbeat") {
        for (const auto& iv : ivs.beats) lengths.push_back(iv.length());
      }
      if (a.classes != "beat") {
        for (const auto& iv : ivs.downbeats) lengths.push_back(iv.length());
      }
    }
  }
  if (lengths.empty()) throw FormatError("no intervals found in the inputs");
  LevelFit fit;
  try {
    fit = kmeans_1d(lengths, k, derive_seed(cfg.seed, 6));
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
  const std::string json = level_fit_json(fit, lengths.size(), provenance("fit-levels", cfg));
  emit(a.out, out, [&](std::ostream& os) { os << json << '\n'; });
  if (!a.out.empty() && a.out != "-") {
    err << "fit " << lengths.size() << " lengths into " << k << " levels; boundaries";
    for (double b : fit.boundaries) err << ' ' << (std::isinf(b) ? std::string("inf") : fmt(b, 4));
    err << '\n';
  }
  return kExitOk;
}

struct TargetsArgs {
  CommonFlags common;
  std::string input;
  std::optional<double> duration;
  std::string wav;
  std::optional<std::string> sub_box;
  std::optional<std::string> quality;
  std::string out;
};

int run_targets(const TargetsArgs& a, std::ostream& out, std::ostream&) {
  RunConfig cfg = load_config(a.common);
  if (a.sub_box) cfg.levels.sub_box_mode = *a.sub_box == "interval" ? SubBoxMode::IntervalLength : SubBoxMode::Stride;
  if (a.quality) cfg.loss.quality = parse_quality_mode(*a.quality);
  finalize(cfg);
  const BeatSequence seq = parse_beats(a.input);
  std::int64_t samples = 0;
  if (!a.wav.empty()) {
    samples = static_cast<std::int64_t>(read_wav(a.wav, cfg.levels.sample_rate).samples.size());
  } else {
    const double last = seq.times().empty() ? 0.0 : seq.times().back();
    const double duration = a.duration.value_or(last + 1.0);
    samples = static_cast<std::int64_t>(std::ceil(duration * cfg.levels.sample_rate));
  }
  if (samples <= 0) throw FormatError("track length must be positive");
  const AnchorGrid grid = anchor_grid(samples, cfg.levels);
  const IntervalSet ivs = intervals_from_beats(seq);
  const TargetSet targets = assign_targets(ivs.beats, ivs.downbeats, grid, cfg.levels, cfg.loss.quality);
  const std::string json = targets_json(targets, grid, cfg.levels, provenance("targets", cfg));
  emit(a.out, out, [&](std::ostream& os) { os << json << '\n'; });
  return kExitOk;
}

struct TrainToyArgs {
  CommonFlags common;
  TrainFlags train;
  DecodeFlags decode;
  std::optional<std::string> quality;
  std::string checkpoint = "toy_heads.json";
  std::string log;
  std::string metrics;
};

int run_train_toy(const TrainToyArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(a.common);
  apply(cfg, a.train);
  apply(cfg, a.decode);
  if (a.quality) cfg.loss.quality = parse_quality_mode(*a.quality);
  finalize(cfg);
  const Provenance prov = provenance("train-toy", cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const ToyData data = prepare_toy(cfg, cfg.loss.quality, true);
  const toy::TrainResult result = train_heads(cfg, data, cfg.loss.quality);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  {
    auto f = open_output(a.checkpoint);
    f << toy::checkpoint_json(result.heads, cfg.levels, prov) << '\n';
  }
  if (!a.log.empty()) {
    emit(a.log, out, [&](std::ostream& os) {
      os << provenance_header(prov) << '\n';
      write_loss_log(os, result.log);
    });
  }
  const auto reports = toy::evaluate_heads(data.test, result.heads, cfg.levels, cfg.decode, cfg.eval, cfg.jobs);
  const auto rows = metric_rows(summarize(reports));
  if (!a.metrics.empty()) {
    emit(a.metrics, out, [&](std::ostream& os) {
      os << provenance_header(prov) << '\n';
      write_metric_csv(os, rows);
    });
  }
  if (!result.log.empty()) {
    const auto& first = result.log.front();
    const auto& last = result.log.back();
    err << "epochs " << result.log.size() << "  loss " << fmt(first.total, 5) << " -> " << fmt(last.total, 5)
        << "  (" << fmt(secs, 1) << " s)\n";
  }
  out << "held-out (" << data.test.size() << " tracks)\n";
  write_metric_table(out, rows);
  return kExitOk;
}

struct DecodeArgs {
  CommonFlags common;
  DecodeFlags decode;
  std::string heads;
  std::string model;
  std::string wav;
  std::string heads_out;
  std::string out;
};

int run_decode(const DecodeArgs& a, std::ostream& out, std::ostream&) {
  RunConfig cfg = load_config(a.common);
  apply(cfg, a.decode);
  finalize(cfg);
  if (a.heads.empty() == a.model.empty()) throw UsageError("give exactly one of --heads or --model");
  if (!a.model.empty() && a.wav.empty()) throw UsageError("--model needs --wav");
  HeadOutputs h;
  if (!a.heads.empty()) {
    h = parse_head_outputs(read_text(a.heads), cfg.levels);
  } else {
    const ModelInput m = load_model(a.model, cfg);
    const Audio audio = read_wav(a.wav, m.levels.sample_rate);
    h = model_outputs(m, audio.samples);
  }
  const Provenance prov = provenance("decode", cfg);
  if (!a.heads_out.empty()) {
    auto f = open_output(a.heads_out);
    f << head_outputs_json(h, prov) << '\n';
  }
  const AnchorGrid grid = anchor_grid(h.track_samples, h.levels);
  const BeatSequence beats = decode(h.predictions, grid, h.levels, cfg.decode);
  emit(a.out, out, [&](std::ostream& os) {
    os << provenance_header(prov) << '\n';
    write_beats(os, beats);
  });
  return kExitOk;
}

struct AnalyzeArgs {
  CommonFlags common;
  std::vector<std::string> heads;
  std::string model;
  std::vector<std::string> wavs;
  std::optional<double> min_conf;
  std::string cls = "all";
  std::string csv;
  std::string svg;
};

int run_analyze_iou(const AnalyzeArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(a.common);
  if (a.min_conf) cfg.min_confidence = *a.min_conf;
  finalize(cfg);
  if (a.heads.empty() == a.model.empty()) throw UsageError("give exactly one of --heads or --model");
  std::vector<ClassDetections> tracks;
  std::string source;
  if (!a.heads.empty()) {
    std::vector<fs::path> files;
    for (const auto& h : a.heads) {
      for (auto& f : list_files(h)) files.push_back(std::move(f));
    }
    tracks.resize(files.size());
    parallel_for(files.size(), cfg.jobs, [&](std::size_t i) {
      const HeadOutputs h = parse_head_outputs(read_text(files[i]), cfg.levels);
      tracks[i] = score_and_collect(h.predictions, anchor_grid(h.track_samples, h.levels), h.levels, cfg.decode);
    });
    source = std::to_string(files.size()) + " head-output files";
  } else {
    const ModelInput m = load_model(a.model, cfg);
    if (!a.wavs.empty()) {
      std::vector<fs::path> files;
      for (const auto& w : a.wavs) {
        for (auto& f : list_files(w)) files.push_back(std::move(f));
      }
      tracks.resize(files.size());
      parallel_for(files.size(), cfg.jobs, [&](std::size_t i) {
        const Audio audio = read_wav(files[i], m.levels.sample_rate);
        const HeadOutputs h = model_outputs(m, audio.samples);
        tracks[i] = score_and_collect(h.predictions, anchor_grid(h.track_samples, h.levels), h.levels, cfg.decode);
      });
      source = std::to_string(files.size()) + " WAV files";
    } else {
      RunConfig mc = cfg;
      mc.levels = m.levels;
      ToyData data;
      data.val = toy::prepare_corpus(toy::make_corpus(mc.corpus(Split::Validation)), mc.levels, m.heads.quality, mc.jobs);
      tracks = validation_detections(mc, data, m.heads);
      source = std::to_string(data.val.size()) + " synthetic validation tracks";
    }
  }
  const IoUHistogram hist = neighbor_iou_histogram(tracks);
  const Provenance prov = provenance("analyze-iou", cfg);
  if (!a.csv.empty()) {
    emit(a.csv, out, [&](std::ostream& os) {
      os << provenance_header(prov) << '\n';
      write_histogram_csv(os, hist);
    });
  }
  if (!a.svg.empty()) {
    emit(a.svg, out, [&](std::ostream& os) { write_histogram_svg(os, hist, provenance_header(prov, "")); });
  }
  std::optional<IntervalClass> cls;
  if (a.cls == "beat") cls = IntervalClass::Beat;
  if (a.cls == "downbeat") cls = IntervalClass::Downbeat;
  err << "histogram from " << source << '\n';
  const ThresholdSelection sel = select_iou_threshold(hist, cfg.min_confidence, cls);
  out << "iou threshold " << fmt(sel.threshold, 2) << '\n';
  return kExitOk;
}

struct EvalArgs {
  CommonFlags common;
  std::string est;
  std::string ref;
  std::string csv;
  std::string summary_csv;
};

int run_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(a.common);
  finalize(cfg);
  const auto ref_files = list_files(a.ref);
  std::map<std::string, fs::path> est_by_stem;
  for (const auto& f : list_files(a.est)) est_by_stem[f.stem().string()] = f;
  std::vector<std::pair<fs::path, fs::path>> pairs;
  std::size_t missing = 0;
  for (const auto& r : ref_files) {
    auto it = est_by_stem.find(r.stem().string());
    if (it == est_by_stem.end()) {
      err << "no estimate for " << r.filename().string() << '\n';
      ++missing;
      continue;
    }
    pairs.emplace_back(it->second, r);
  }
  if (pairs.empty()) throw FormatError("no matching estimate/reference pairs");
  std::vector<MetricReport> reports(pairs.size());
  parallel_for(pairs.size(), cfg.jobs, [&](std::size_t i) {
    reports[i] = joint_report(parse_beats(pairs[i].first), parse_beats(pairs[i].second), cfg.eval);
  });
  const Provenance prov = provenance("eval", cfg);
  if (!a.csv.empty()) {
    emit(a.csv, out, [&](std::ostream& os) {
      os << provenance_header(prov) << '\n';
      os << "track," << kMetricCsvHeader << '\n';
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        std::ostringstream body;
        write_metric_csv(body, metric_rows(reports[i]));
        std::istringstream lines(body.str());
        std::string line;
        std::getline(lines, line);  // header
        while (std::getline(lines, line)) os << pairs[i].second.stem().string() << ',' << line << '\n';
      }
    });
  }
  const auto rows = metric_rows(summarize(reports));
  if (!a.summary_csv.empty()) {
    emit(a.summary_csv, out, [&](std::ostream& os) {
      os << provenance_header(prov) << '\n';
      write_metric_csv(os, rows);
    });
  }
  out << pairs.size() << " tracks";
  if (missing > 0) out << " (" << missing << " references without estimates)";
  out << '\n';
  write_metric_table(out, rows);
  return kExitOk;
}

struct AblateArgs {
  CommonFlags common;
  TrainFlags train;
  std::vector<std::string> cells{"leftness,centerness", "x", "nms,soft"};
  std::string out;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (!std::isspace(static_cast<unsigned char>(c))) {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

int run_ablate(const AblateArgs& a, std::ostream& out, std::ostream& err) {
  RunConfig cfg = load_config(a.common);
  apply(cfg, a.train);
  finalize(cfg);
  std::string joined;
  for (const auto& c : a.cells) joined += c + " ";
  const auto xpos = joined.find(" x ");
  if (xpos == std::string::npos) throw UsageError("--cells expects 'QUALITY,... x NMS,...'");
  std::vector<QualityMode> qualities;
  std::vector<NmsMode> modes;
  try {
    for (const auto& q : split_list(joined.substr(0, xpos))) qualities.push_back(parse_quality_mode(q));
    for (const auto& n : split_list(joined.substr(xpos + 3))) modes.push_back(parse_nms_mode(n));
  } catch (const FormatError& e) {
    throw UsageError(e.what());
  }
  if (qualities.empty() || modes.empty()) throw UsageError("--cells needs at least one entry on each side");

  const Provenance prov = provenance("ablate", cfg);
  std::ostringstream body;
  body << "quality,nms,beat_f1,beat_cmlt,beat_amlt,downbeat_f1,downbeat_cmlt,downbeat_amlt\n";
  for (QualityMode q : qualities) {
    const ToyData data = prepare_toy(cfg, q, true);
    const toy::TrainResult result = train_heads(cfg, data, q);
    for (NmsMode m : modes) {
      DecodeConfig dc = cfg.decode;
      dc.nms = m;
      const auto reports = toy::evaluate_heads(data.test, result.heads, cfg.levels, dc, cfg.eval, cfg.jobs);
      const DatasetSummary s = summarize(reports);
      body << quality_mode_name(q) << ',' << nms_mode_name(m);
      for (const auto& c : s.classes) {
        body << ',' << fmt(c.f_measure, 6) << ',' << fmt(c.continuity.cmlt, 6) << ',' << fmt(c.continuity.amlt, 6);
      }
      body << '\n';
      err << quality_mode_name(q) << " / " << nms_mode_name(m) << ": beat F1 " << fmt(s.classes[0].f_measure)
          << ", downbeat F1 " << fmt(s.classes[1].f_measure) << '\n';
    }
  }
  emit(a.out, out, [&](std::ostream& os) { os << provenance_header(prov) << '\n' << body.str(); });
  return kExitOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Beat and downbeat tracking as 1D anchor-free interval detection", "beatfcos"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  FitLevelsArgs fit;
  auto* fit_cmd = app.add_subcommand("fit-levels", "k-means size limits from .beats interval lengths");
  add_common(fit_cmd, fit.common);
  fit_cmd->add_option("inputs", fit.inputs, ".beats files or directories")->required();
  fit_cmd->add_option("-k", fit.k, "number of levels (default: levels in the config)")->check(CLI::PositiveNumber);
  fit_cmd->add_option("--classes", fit.classes, "lengths to pool: both, beat, downbeat")
      ->check(CLI::IsMember({"both", "beat", "downbeat"}));
  fit_cmd->add_option("-o,--out", fit.out, "output JSON (default stdout)");

  TargetsArgs tg;
  auto* tg_cmd = app.add_subcommand("targets", "anchor targets of one annotation as JSON");
  add_common(tg_cmd, tg.common);
  tg_cmd->add_option("input", tg.input, ".beats annotation")->required();
  auto* dur = tg_cmd->add_option("--duration", tg.duration, "track length in seconds (default: last beat + 1 s)")
                  ->check(CLI::PositiveNumber);
  tg_cmd->add_option("--wav", tg.wav, "take the track length from this WAV")->excludes(dur);
  tg_cmd->add_option("--sub-box", tg.sub_box, "sub-box width: stride or interval")
      ->check(CLI::IsMember({"stride", "interval"}));
  tg_cmd->add_option("--quality", tg.quality, "quality target: leftness or centerness")
      ->check(CLI::IsMember({"leftness", "centerness"}));
  tg_cmd->add_option("-o,--out", tg.out, "output JSON (default stdout)");

  TrainToyArgs tt;
  auto* tt_cmd = app.add_subcommand("train-toy", "train the toy heads on synthetic click tracks");
  add_common(tt_cmd, tt.common);
  add_train(tt_cmd, tt.train);
  add_decode(tt_cmd, tt.decode);
  tt_cmd->add_option("--quality", tt.quality, "quality target: leftness or centerness")
      ->check(CLI::IsMember({"leftness", "centerness"}));
  tt_cmd->add_option("-o,--checkpoint", tt.checkpoint, "checkpoint JSON")->capture_default_str();
  tt_cmd->add_option("--log", tt.log, "per-epoch loss/metric CSV");
  tt_cmd->add_option("--metrics", tt.metrics, "held-out summary CSV");

  DecodeArgs dc;
  auto* dc_cmd = app.add_subcommand("decode", "head outputs or toy model + WAV to a .beats file");
  add_common(dc_cmd, dc.common);
  add_decode(dc_cmd, dc.decode);
  dc_cmd->add_option("--heads", dc.heads, "head-outputs JSON");
  dc_cmd->add_option("--model", dc.model, "toy checkpoint JSON");
  dc_cmd->add_option("--wav", dc.wav, "16-bit PCM WAV (with --model)");
  dc_cmd->add_option("--heads-out", dc.heads_out, "also write the head outputs as JSON");
  dc_cmd->add_option("-o,--out", dc.out, "output .beats (default stdout)");

  AnalyzeArgs an;
  auto* an_cmd = app.add_subcommand("analyze-iou", "neighbour-IoU histograms and threshold pick");
  add_common(an_cmd, an.common);
  an_cmd->add_option("--heads", an.heads, "head-outputs JSON files or directories");
  an_cmd->add_option("--model", an.model, "toy checkpoint (synthetic validation set unless --wav)");
  an_cmd->add_option("--wav", an.wavs, "WAV files or directories (with --model)");
  an_cmd->add_option("--min-conf", an.min_conf, "rows pooled for the pick")->check(CLI::Range(0.0, 1.0));
  an_cmd->add_option("--class", an.cls, "class pooled for the pick: all, beat, downbeat")
      ->check(CLI::IsMember({"all", "beat", "downbeat"}));
  an_cmd->add_option("--csv", an.csv, "histogram CSV");
  an_cmd->add_option("--svg", an.svg, "histogram SVG");

  EvalArgs ev;
  auto* ev_cmd = app.add_subcommand("eval", "score predicted against reference .beats files");
  add_common(ev_cmd, ev.common);
  ev_cmd->add_option("--est", ev.est, "predicted .beats file or directory")->required();
  ev_cmd->add_option("--ref", ev.ref, "reference .beats file or directory")->required();
  ev_cmd->add_option("--csv", ev.csv, "per-track CSV");
  ev_cmd->add_option("--summary-csv", ev.summary_csv, "dataset summary CSV");

  AblateArgs ab;
  auto* ab_cmd = app.add_subcommand("ablate", "quality x suppression grid on the toy pipeline");
  add_common(ab_cmd, ab.common);
  add_train(ab_cmd, ab.train);
  ab_cmd->add_option("--cells", ab.cells, "e.g. leftness,centerness x nms,soft")->expected(1, 3);
  ab_cmd->add_option("-o,--out", ab.out, "output CSV (default stdout)");

  if (argc <= 1) {
    err << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    err << sub->help();
    return kExitUsage;
  }

  try {
    if (fit_cmd->parsed()) return run_fit_levels(fit, out, err);
    if (tg_cmd->parsed()) return run_targets(tg, out, err);
    if (tt_cmd->parsed()) return run_train_toy(tt, out, err);
    if (dc_cmd->parsed()) return run_decode(dc, out, err);
    if (an_cmd->parsed()) return run_analyze_iou(an, out, err);
    if (ev_cmd->parsed()) return run_eval(ev, out, err);
    if (ab_cmd->parsed()) return run_ablate(ab, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}

int dispatch(int argc, const char* const* argv) { return dispatch(argc, argv, std::cout, std::cerr); }

}  // namespace beatfcos::cli
