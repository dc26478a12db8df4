#include "beatfcos/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "beatfcos/error.hpp"

namespace beatfcos {

namespace {

std::string fmt6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

std::string fmt_opt(const std::optional<double>& v) { return v ? fmt6(*v) : "nan"; }

std::string fmt9g(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

// ---- annotations ----------------------------------------------------------

BeatSequence parse_beats_text(std::string_view text) {
  std::vector<double> times;
  std::vector<int> positions;
  std::optional<bool> has_positions;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;

    std::istringstream ss{std::string(line)};
    std::string time_tok, pos_tok, extra;
    ss >> time_tok >> pos_tok >> extra;
    if (!extra.empty()) throw FormatError("too many columns", line_no);

    double t = 0.0;
    try {
      std::size_t used = 0;
      t = std::stod(time_tok, &used);
      if (used != time_tok.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw FormatError("malformed time '" + time_tok + "'", line_no);
    }
    if (!std::isfinite(t) || t < 0.0) throw FormatError("time must be finite and >= 0", line_no);

    const bool row_has_pos = !pos_tok.empty();
    if (has_positions && *has_positions != row_has_pos) {
      throw FormatError("inconsistent column count", line_no);
    }
    has_positions = row_has_pos;
    if (row_has_pos) {
      int p = 0;
      try {
        std::size_t used = 0;
        p = std::stoi(pos_tok, &used);
        if (used != pos_tok.size()) throw std::invalid_argument("trailing characters");
      } catch (const std::exception&) {
        throw FormatError("malformed metrical position '" + pos_tok + "'", line_no);
      }
      if (p < 1) throw FormatError("metrical position must be >= 1", line_no);
      positions.push_back(p);
    }
    if (!times.empty()) {
      if (t <= times.back()) throw FormatError("beat times not ascending", line_no);
      if (t - times.back() < kMinBeatSpacing) {
        throw FormatError("beats closer than 1 ms", line_no);
      }
    }
    times.push_back(t);
  }
  if (has_positions.value_or(false)) {
    return BeatSequence::with_positions(std::move(times), std::move(positions));
  }
  return BeatSequence::beats_only(std::move(times));
}

BeatSequence parse_beats(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_beats_text(buf.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_beats(std::ostream& os, const BeatSequence& seq) {
  const auto& t = seq.times();
  if (seq.positions()) {
    for (std::size_t i = 0; i < t.size(); ++i) os << fmt6(t[i]) << '\t' << (*seq.positions())[i] << '\n';
    return;
  }
  if (!seq.has_downbeats()) {
    for (double v : t) os << fmt6(v) << '\n';
    return;
  }
  const auto downs = seq.downbeat_times();
  std::size_t d = 0;
  int position = 1;  // pickup beats before the first downbeat start at 2
  for (double v : t) {
    while (d < downs.size() && downs[d] < v - 0.5e-6) ++d;
    if (d < downs.size() && std::abs(downs[d] - v) <= 0.5e-6) {
      position = 1;
      ++d;
    } else {
      ++position;
    }
    os << fmt6(v) << '\t' << position << '\n';
  }
}

void write_beats(const std::filesystem::path& path, const BeatSequence& seq,
                 std::string_view header) {
  auto out = open_output(path);
  if (!header.empty()) out << header << '\n';
  write_beats(out, seq);
}

// ---- audio -----------------------------------------------------------------

namespace {

std::uint32_t le32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}
std::uint16_t le16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | p[1] << 8);
}

}  // namespace

Audio read_wav_bytes(std::span<const std::uint8_t> b) {
  if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
      std::memcmp(b.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("not a RIFF/WAVE file");
  }
  std::size_t pos = 12;
  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint16_t bits = 0;
  std::uint32_t rate = 0;
  while (pos + 8 <= b.size()) {
    const std::uint8_t* chunk = b.data() + pos;
    const std::uint32_t size = le32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > b.size()) throw FormatError("truncated WAV chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw FormatError("short fmt chunk");
      const std::uint16_t format = le16(b.data() + body);
      channels = le16(b.data() + body + 2);
      rate = le32(b.data() + body + 4);
      bits = le16(b.data() + body + 14);
      if (format != 1) throw FormatError("unsupported WAV format (only 16-bit PCM)");
      if (bits != 16) throw FormatError("unsupported WAV bit depth (only 16-bit PCM)");
      if (channels < 1 || channels > 2) throw FormatError("unsupported channel count");
      if (rate == 0) throw FormatError("zero sample rate");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw FormatError("data chunk before fmt chunk");
      const std::size_t frames = size / (2u * channels);
      Audio a;
      a.sample_rate = rate;
      a.samples.resize(frames);
      const std::uint8_t* p = b.data() + body;
      for (std::size_t f = 0; f < frames; ++f) {
        double acc = 0.0;
        for (std::uint16_t c = 0; c < channels; ++c) {
          const auto v = static_cast<std::int16_t>(le16(p + 2 * (f * channels + c)));
          acc += static_cast<double>(v) / 32768.0;
        }
        a.samples[f] = static_cast<float>(acc / channels);
      }
      return a;
    }
    pos = body + size + (size & 1u);
  }
  throw FormatError("WAV file has no data chunk");
}

Audio read_wav_native(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), {});
  return read_wav_bytes(bytes);
}

std::vector<float> resample_linear(std::span<const float> x, double from_rate, double to_rate) {
  if (!(from_rate > 0.0) || !(to_rate > 0.0)) throw std::invalid_argument("rates must be positive");
  if (from_rate == to_rate || x.empty()) return {x.begin(), x.end()};
  const auto n_out = static_cast<std::size_t>(
      std::llround(static_cast<double>(x.size()) * to_rate / from_rate));
  std::vector<float> y(n_out);
  const double step = from_rate / to_rate;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double src = static_cast<double>(i) * step;
    const auto i0 = static_cast<std::size_t>(src);
    if (i0 + 1 >= x.size()) {
      y[i] = x.back();
      continue;
    }
    const double frac = src - static_cast<double>(i0);
    y[i] = static_cast<float>((1.0 - frac) * x[i0] + frac * x[i0 + 1]);
  }
  return y;
}

Audio read_wav(const std::filesystem::path& path, double target_rate) {
  Audio a = read_wav_native(path);
  if (a.sample_rate != target_rate) {
    a.samples = resample_linear(a.samples, a.sample_rate, target_rate);
    a.sample_rate = target_rate;
  }
  return a;
}

void write_wav(const std::filesystem::path& path, const Audio& audio) {
  auto out = open_output(path);
  const auto rate = static_cast<std::uint32_t>(std::lround(audio.sample_rate));
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  auto put32 = [&](std::uint32_t v) {
    const char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                       static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
  };
  auto put16 = [&](std::uint16_t v) {
    const char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
    out.write(b, 2);
  };
  out.write("RIFF", 4);
  put32(36 + data_bytes);
  out.write("WAVEfmt ", 8);
  put32(16);
  put16(1);
  put16(1);
  put32(rate);
  put32(rate * 2);
  put16(2);
  put16(16);
  out.write("data", 4);
  put32(data_bytes);
  for (float s : audio.samples) {
    const double c = std::clamp(static_cast<double>(s), -1.0, 1.0);
    const auto v = static_cast<std::int16_t>(std::clamp(std::lround(c * 32768.0), -32768L, 32767L));
    put16(static_cast<std::uint16_t>(v));
  }
}

// ---- reports ---------------------------------------------------------------

std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string provenance_line(const Provenance& p, std::string_view prefix) {
  std::ostringstream os;
  os << prefix << "beatfcos " << kVersion << " command=" << (p.command.empty() ? "-" : p.command)
     << " config_hash=" << (p.config_hash.empty() ? "-" : p.config_hash) << " seed=" << p.seed;
  return os.str();
}

namespace {

nlohmann::ordered_json provenance_json(const Provenance& p) {
  nlohmann::ordered_json j = {{"tool", "beatfcos"},
                              {"version", std::string(kVersion)},
                              {"command", p.command},
                              {"config_hash", p.config_hash},
                              {"seed", p.seed}};
  if (!p.config.empty()) j["config"] = nlohmann::ordered_json::parse(p.config);
  return j;
}

nlohmann::json limits_json(std::span<const double> limits) {
  nlohmann::json out = nlohmann::json::array();
  for (double v : limits) {
    if (std::isinf(v)) {
      out.push_back("inf");
    } else {
      out.push_back(v);
    }
  }
  return out;
}

nlohmann::json parse_json(std::string_view text, std::string_view what) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string(what) + " is not valid JSON: " + e.what());
  }
}

}  // namespace

std::string provenance_header(const Provenance& p, std::string_view prefix) {
  std::string out = provenance_line(p, prefix);
  if (!p.config.empty()) {
    out += '\n';
    out += prefix;
    out += "config=";
    out += p.config;
  }
  return out;
}

std::vector<MetricRow> metric_rows(const MetricReport& report) {
  std::vector<MetricRow> rows;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& m = report.classes[static_cast<std::size_t>(c)];
    rows.push_back({std::string(class_name(static_cast<IntervalClass>(c))), m.f_measure,
                    m.continuity});
  }
  return rows;
}

std::vector<MetricRow> metric_rows(const DatasetSummary& summary) {
  std::vector<MetricRow> rows;
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& s = summary.classes[static_cast<std::size_t>(c)];
    MetricRow row{std::string(class_name(static_cast<IntervalClass>(c))), std::nullopt,
                  std::nullopt};
    if (s.tracks > 0) {
      row.f1 = s.f_measure;
      row.continuity = s.continuity;
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_metric_csv(std::ostream& os, std::span<const MetricRow> rows) {
  os << kMetricCsvHeader << '\n';
  for (const auto& r : rows) {
    os << r.label << ',' << fmt_opt(r.f1);
    if (r.continuity) {
      os << ',' << fmt6(r.continuity->cmlc) << ',' << fmt6(r.continuity->cmlt) << ','
         << fmt6(r.continuity->amlc) << ',' << fmt6(r.continuity->amlt);
    } else {
      os << ",nan,nan,nan,nan";
    }
    os << '\n';
  }
}

void write_metric_table(std::ostream& os, std::span<const MetricRow> rows) {
  auto f3 = [](std::optional<double> v) {
    if (!v) return std::string("-");
    char buf[16];
    std::snprintf(buf, sizeof buf, "%.3f", *v);
    return std::string(buf);
  };
  os << std::left << std::setw(10) << "class" << "F1 / CMLt / AMLt\n";
  for (const auto& r : rows) {
    std::optional<double> cmlt, amlt;
    if (r.continuity) {
      cmlt = r.continuity->cmlt;
      amlt = r.continuity->amlt;
    }
    os << std::left << std::setw(10) << r.label << f3(r.f1) << " / " << f3(cmlt) << " / "
       << f3(amlt) << '\n';
  }
}

std::string metric_report_json(const MetricReport& report, const Provenance& p) {
  nlohmann::ordered_json j;
  j["format"] = "beatfcos-metrics";
  j["schema_version"] = std::string(kSchemaVersion);
  j["provenance"] = provenance_json(p);
  for (int c = 0; c < kNumClasses; ++c) {
    const auto& m = report.classes[static_cast<std::size_t>(c)];
    nlohmann::ordered_json cj;
    cj["f1"] = m.f_measure ? nlohmann::ordered_json(*m.f_measure) : nlohmann::ordered_json();
    if (m.continuity) {
      cj["cmlc"] = m.continuity->cmlc;
      cj["cmlt"] = m.continuity->cmlt;
      cj["amlc"] = m.continuity->amlc;
      cj["amlt"] = m.continuity->amlt;
    } else {
      cj["cmlc"] = cj["cmlt"] = cj["amlc"] = cj["amlt"] = nullptr;
    }
    cj["hits"] = m.counts.hits;
    cj["false_positives"] = m.counts.false_positives;
    cj["false_negatives"] = m.counts.false_negatives;
    j[std::string(class_name(static_cast<IntervalClass>(c)))] = cj;
  }
  j["joint_f1"] =
      report.joint_f_measure ? nlohmann::ordered_json(*report.joint_f_measure) : nlohmann::ordered_json();
  return j.dump(2);
}

void write_histogram_csv(std::ostream& os, const IoUHistogram& hist) {
  os << "class,conf_low,conf_high,count";
  for (int i = 0; i < kIouBins; ++i) os << ",m" << i;
  os << '\n';
  const auto& bins = hist.confidence_bins();
  for (int c = 0; c < kNumClasses; ++c) {
    const auto cls = static_cast<IntervalClass>(c);
    for (std::size_t b = 0; b < bins.size(); ++b) {
      os << class_name(cls) << ',' << fmt6(bins[b].low) << ',' << fmt6(bins[b].high) << ','
         << static_cast<long long>(hist.row_total(cls, b));
      for (int i = 0; i < kIouBins; ++i) os << ',' << fmt6(hist.mass(cls, b, i));
      os << '\n';
    }
  }
}

void write_histogram_svg(std::ostream& os, const IoUHistogram& hist, std::string_view comment) {
  const auto& bins = hist.confidence_bins();
  constexpr int kPanelW = 110;
  constexpr int kPanelH = 90;
  constexpr int kPad = 12;
  constexpr int kTitle = 16;
  const int width = static_cast<int>(bins.size()) * (kPanelW + kPad) + kPad;
  const int height = kNumClasses * (kPanelH + kTitle + kPad) + kPad;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!comment.empty()) os << "<!-- " << comment << " -->\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"10\">\n";
  const char* fills[kNumClasses] = {"#9db3f0", "#f09d9d"};
  for (int c = 0; c < kNumClasses; ++c) {
    const auto cls = static_cast<IntervalClass>(c);
    const int y0 = kPad + c * (kPanelH + kTitle + kPad);
    for (std::size_t b = 0; b < bins.size(); ++b) {
      const int x0 = kPad + static_cast<int>(b) * (kPanelW + kPad);
      double peak = 0.0;
      for (int i = 0; i < kIouBins; ++i) peak = std::max(peak, hist.mass(cls, b, i));
      os << "<g>\n<text x=\"" << x0 + kPanelW / 2 << "\" y=\"" << y0 + 11
         << "\" text-anchor=\"middle\">" << std::setprecision(2) << bins[b].low << " - "
         << bins[b].high << "</text>\n";
      os << "<rect x=\"" << x0 << "\" y=\"" << y0 + kTitle << "\" width=\"" << kPanelW
         << "\" height=\"" << kPanelH << "\" fill=\"none\" stroke=\"#000\"/>\n";
      const double bar_w = static_cast<double>(kPanelW) / kIouBins;
      for (int i = 0; i < kIouBins; ++i) {
        const double m = hist.mass(cls, b, i);
        const double h = peak > 0.0 ? (m / peak) * (kPanelH - 4) : 0.0;
        os << "<rect x=\"" << fmt6(x0 + i * bar_w + 1) << "\" y=\""
           << fmt6(y0 + kTitle + kPanelH - h) << "\" width=\"" << fmt6(bar_w - 2)
           << "\" height=\"" << fmt6(h) << "\" fill=\"" << fills[c]
           << "\" stroke=\"#000\" stroke-width=\"0.5\"><title>" << class_name(cls) << " IoU "
           << fmt6(i / 10.0) << "-" << fmt6((i + 1) / 10.0) << ": " << fmt6(m)
           << "</title></rect>\n";
      }
      os << "</g>\n";
    }
  }
  os << "</svg>\n";
}

void write_loss_log(std::ostream& os, std::span<const LossLogRow> rows) {
  os << kLossLogHeader << '\n';
  for (const auto& r : rows) {
    os << r.epoch << ',' << fmt9g(r.cls) << ',' << fmt9g(r.reg) << ',' << fmt9g(r.lft) << ','
       << fmt9g(r.total) << ',' << fmt9g(r.lr) << ',' << fmt_opt(r.val_beat_f1) << ','
       << fmt_opt(r.val_downbeat_f1) << '\n';
  }
}


std::string targets_json(const TargetSet& targets, const AnchorGrid& grid, const LevelConfig& cfg,
                         const Provenance& p) {
  nlohmann::ordered_json j;
  j["format"] = "beatfcos-targets";
  j["schema_version"] = std::string(kSchemaVersion);
  j["provenance"] = provenance_json(p);
  j["sample_rate"] = cfg.sample_rate;
  j["track_samples"] = grid.track_samples;
  j["size_limits"] = limits_json(cfg.size_limits);
  auto intervals = nlohmann::ordered_json::array();
  for (const auto& iv : targets.intervals) {
    intervals.push_back({{"left", iv.left()}, {"right", iv.right()}, {"class", std::string(class_name(iv.cls()))}});
  }
  j["intervals"] = std::move(intervals);
  auto levels = nlohmann::ordered_json::array();
  for (std::size_t li = 0; li < targets.levels.size(); ++li) {
    const int level = static_cast<int>(li);
    auto positives = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < targets.levels[li].size(); ++i) {
      const auto& t = targets.levels[li][i];
      if (!t.positive()) continue;
      positives.push_back({{"index", i},
                           {"position", grid.levels[li][i].position},
                           {"beat", t.cls[0]},
                           {"downbeat", t.cls[1]},
                           {"reg_l", t.reg_l},
                           {"reg_r", t.reg_r},
                           {"quality", t.quality},
                           {"matched", t.matched}});
    }
    levels.push_back({{"pyramid_level", cfg.pyramid_level(level)},
                      {"stride_samples", cfg.stride_samples(level)},
                      {"anchors", targets.levels[li].size()},
                      {"positives", std::move(positives)}});
  }
  j["levels"] = std::move(levels);
  j["num_anchors"] = targets.num_anchors();
  j["num_positive"] = targets.num_positive();
  return j.dump(1);
}

std::string level_fit_json(const LevelFit& fit, std::size_t num_lengths, const Provenance& p) {
  nlohmann::ordered_json j;
  j["format"] = "beatfcos-level-fit";
  j["schema_version"] = std::string(kSchemaVersion);
  j["provenance"] = provenance_json(p);
  j["num_lengths"] = num_lengths;
  j["centroids"] = fit.centroids;
  j["boundaries"] = limits_json(fit.boundaries);
  j["inertia"] = fit.inertia;
  j["iterations"] = fit.iterations;
  return j.dump(1);
}

std::vector<double> parse_size_limits(std::string_view text) {
  const nlohmann::json j = parse_json(text, "level fit");
  const nlohmann::json* arr = &j;
  if (j.is_object()) {
    if (!j.contains("boundaries")) throw FormatError("level fit has no boundaries");
    arr = &j.at("boundaries");
  }
  if (!arr->is_array()) throw FormatError("size limits must be an array");
  std::vector<double> out;
  for (const auto& v : *arr) {
    if (v.is_string()) {
      if (v.get<std::string>() != "inf") throw FormatError("bad size limit " + v.dump());
      out.push_back(std::numeric_limits<double>::infinity());
    } else if (v.is_number()) {
      out.push_back(v.get<double>());
    } else {
      throw FormatError("bad size limit " + v.dump());
    }
  }
  return out;
}

std::string head_outputs_json(const HeadOutputs& h, const Provenance& p) {
  nlohmann::ordered_json j;
  j["format"] = std::string(kHeadOutputsFormat);
  j["schema_version"] = std::string(kSchemaVersion);
  j["provenance"] = provenance_json(p);
  j["sample_rate"] = h.levels.sample_rate;
  j["base_level"] = h.levels.base_level;
  j["track_samples"] = h.track_samples;
  auto levels = nlohmann::ordered_json::array();
  for (const auto& lv : h.predictions) {
    std::vector<double> cb, cd, rl, rr, q;
    for (const auto& a : lv) {
      cb.push_back(a.cls_prob[0]);
      cd.push_back(a.cls_prob[1]);
      rl.push_back(a.reg_l);
      rr.push_back(a.reg_r);
      q.push_back(a.leftness_prob);
    }
    levels.push_back({{"cls_beat", cb}, {"cls_downbeat", cd}, {"reg_l", rl}, {"reg_r", rr}, {"quality", q}});
  }
  j["levels"] = std::move(levels);
  return j.dump();
}

HeadOutputs parse_head_outputs(std::string_view text, const LevelConfig& base) {
  const nlohmann::json j = parse_json(text, "head outputs");
  try {
    if (j.at("format").get<std::string>() != kHeadOutputsFormat) throw FormatError("not a head-outputs file");
    HeadOutputs h;
    h.levels = base;
    h.levels.sample_rate = j.at("sample_rate").get<double>();
    h.levels.base_level = j.at("base_level").get<int>();
    h.track_samples = j.at("track_samples").get<std::int64_t>();
    const auto& lv = j.at("levels");
    if (!lv.is_array() || lv.size() != static_cast<std::size_t>(h.levels.num_levels)) {
      throw FormatError("head outputs must have " + std::to_string(h.levels.num_levels) + " levels");
    }
    const AnchorGrid grid = anchor_grid(h.track_samples, h.levels);
    for (std::size_t li = 0; li < lv.size(); ++li) {
      const auto cb = lv[li].at("cls_beat").get<std::vector<double>>();
      const auto cd = lv[li].at("cls_downbeat").get<std::vector<double>>();
      const auto rl = lv[li].at("reg_l").get<std::vector<double>>();
      const auto rr = lv[li].at("reg_r").get<std::vector<double>>();
      const auto q = lv[li].at("quality").get<std::vector<double>>();
      const std::size_t n = grid.levels[li].size();
      if (cb.size() != n || cd.size() != n || rl.size() != n || rr.size() != n || q.size() != n) {
        throw FormatError("level " + std::to_string(li) + " needs " + std::to_string(n) + " anchors");
      }
      std::vector<AnchorPrediction> out(n);
      for (std::size_t i = 0; i < n; ++i) {
        out[i].cls_prob = {cb[i], cd[i]};
        out[i].reg_l = rl[i];
        out[i].reg_r = rr[i];
        out[i].leftness_prob = q[i];
        const bool ok = cb[i] >= 0.0 && cb[i] <= 1.0 && cd[i] >= 0.0 && cd[i] <= 1.0 && q[i] >= 0.0 &&
                        q[i] <= 1.0 && rl[i] >= 0.0 && rr[i] >= 0.0 && std::isfinite(rl[i]) &&
                        std::isfinite(rr[i]);
        if (!ok) throw FormatError("level " + std::to_string(li) + " anchor " + std::to_string(i) + " out of range");
      }
      h.predictions.push_back(std::move(out));
    }
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed head outputs: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("malformed head outputs: ") + e.what());
  }
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace beatfcos
