#include "beatfcos/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "beatfcos/error.hpp"
#include "beatfcos/io.hpp"

namespace beatfcos {

using ojson = nlohmann::ordered_json;

namespace {

ojson limits_to_json(const std::vector<double>& limits) {
  ojson out = ojson::array();
  for (double v : limits) {
    if (std::isinf(v)) {
      out.push_back("inf");
    } else {
      out.push_back(v);
    }
  }
  return out;
}

std::vector<double> limits_from_json(const ojson& j) {
  std::vector<double> out;
  for (const auto& v : j) {
    if (v.is_string()) {
      if (v.get<std::string>() != "inf") throw FormatError("size limit must be a number or \"inf\"");
      out.push_back(std::numeric_limits<double>::infinity());
    } else {
      out.push_back(v.get<double>());
    }
  }
  return out;
}

ojson corpus_to_json(const toy::CorpusSpec& c) {
  return {{"tracks", c.num_tracks},     {"tempo_min", c.tempo_min}, {"tempo_max", c.tempo_max},
          {"meters", c.meters},         {"duration", c.duration},   {"max_drift", c.max_drift},
          {"noise_floor", c.noise_floor}, {"fit_samples", c.fit_samples}};
}

toy::CorpusSpec corpus_from_json(const ojson& j) {
  toy::CorpusSpec c;
  c.num_tracks = j.at("tracks").get<int>();
  c.tempo_min = j.at("tempo_min").get<double>();
  c.tempo_max = j.at("tempo_max").get<double>();
  c.meters = j.at("meters").get<std::vector<int>>();
  c.duration = j.at("duration").get<double>();
  c.max_drift = j.at("max_drift").get<double>();
  c.noise_floor = j.at("noise_floor").get<double>();
  c.fit_samples = j.at("fit_samples").get<std::int64_t>();
  return c;
}

std::string_view score_mode_name(ScoreMode m) {
  return m == ScoreMode::ClsOnly ? "cls-only" : "cls-x-quality";
}

ScoreMode parse_score_mode(std::string_view s) {
  if (s == "cls-x-quality") return ScoreMode::ClsTimesQuality;
  if (s == "cls-only") return ScoreMode::ClsOnly;
  throw FormatError("unknown score mode '" + std::string(s) + "'");
}

ojson to_json(const RunConfig& c) {
  const auto& lv = c.levels;
  const auto& t = c.train;
  ojson j;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["levels"] = {{"sample_rate", lv.sample_rate},
                 {"base_level", lv.base_level},
                 {"num_levels", lv.num_levels},
                 {"size_limits", limits_to_json(lv.size_limits)},
                 {"sub_box_radius", lv.sub_box_radius},
                 {"sub_box_mode", lv.sub_box_mode == SubBoxMode::Stride ? "stride" : "interval"}};
  j["loss"] = {{"gamma", c.loss.focal.gamma},
               {"alpha", c.loss.focal.alpha},
               {"w_cls", c.loss.weights.cls},
               {"w_reg", c.loss.weights.reg},
               {"w_lft", c.loss.weights.lft},
               {"quality", std::string(quality_mode_name(c.loss.quality))}};
  j["decode"] = {{"score_mode", std::string(score_mode_name(c.decode.score_mode))},
                 {"nms", std::string(nms_mode_name(c.decode.nms))},
                 {"pre_filter", c.decode.pre_filter},
                 {"iou_thresh", c.decode.iou_threshold},
                 {"score_thresh", c.decode.score_threshold},
                 {"sigma", c.decode.sigma},
                 {"merge_window", c.decode.merge_window},
                 {"drop_past_end", c.decode.drop_past_end}};
  j["eval"] = {{"f_window", c.eval.f_measure_window},
               {"continuity_tolerance", c.eval.continuity_tolerance},
               {"skip_seconds", c.eval.skip_seconds},
               {"triple_variations", c.eval.include_triple_variations}};
  j["corpus"] = {{"train", corpus_to_json(c.train_corpus)},
                 {"val", corpus_to_json(c.val_corpus)},
                 {"test", corpus_to_json(c.test_corpus)}};
  j["train"] = {{"epochs", t.epochs},
                {"lr", t.lr},
                {"weight_decay", t.weight_decay},
                {"batch_size", t.batch_size},
                {"passes_per_epoch", t.passes_per_epoch},
                {"patience", t.patience},
                {"lr_factor", t.lr_factor}};
  j["analysis"] = {{"min_confidence", c.min_confidence}};
  return j;
}

RunConfig from_json(const ojson& j) {
  RunConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  c.jobs = j.at("jobs").get<int>();
  const auto& lv = j.at("levels");
  c.levels.sample_rate = lv.at("sample_rate").get<double>();
  c.levels.base_level = lv.at("base_level").get<int>();
  c.levels.num_levels = lv.at("num_levels").get<int>();
  c.levels.size_limits = limits_from_json(lv.at("size_limits"));
  c.levels.sub_box_radius = lv.at("sub_box_radius").get<std::array<double, kNumClasses>>();
  const auto mode = lv.at("sub_box_mode").get<std::string>();
  if (mode == "stride") {
    c.levels.sub_box_mode = SubBoxMode::Stride;
  } else if (mode == "interval") {
    c.levels.sub_box_mode = SubBoxMode::IntervalLength;
  } else {
    throw FormatError("sub_box_mode must be \"stride\" or \"interval\"");
  }
  const auto& ls = j.at("loss");
  c.loss.focal.gamma = ls.at("gamma").get<double>();
  c.loss.focal.alpha = ls.at("alpha").get<double>();
  c.loss.weights.cls = ls.at("w_cls").get<double>();
  c.loss.weights.reg = ls.at("w_reg").get<double>();
  c.loss.weights.lft = ls.at("w_lft").get<double>();
  c.loss.quality = parse_quality_mode(ls.at("quality").get<std::string>());
  const auto& d = j.at("decode");
  c.decode.score_mode = parse_score_mode(d.at("score_mode").get<std::string>());
  c.decode.nms = parse_nms_mode(d.at("nms").get<std::string>());
  c.decode.pre_filter = d.at("pre_filter").get<double>();
  c.decode.iou_threshold = d.at("iou_thresh").get<double>();
  c.decode.score_threshold = d.at("score_thresh").get<double>();
  c.decode.sigma = d.at("sigma").get<double>();
  c.decode.merge_window = d.at("merge_window").get<double>();
  c.decode.drop_past_end = d.at("drop_past_end").get<bool>();
  const auto& e = j.at("eval");
  c.eval.f_measure_window = e.at("f_window").get<double>();
  c.eval.continuity_tolerance = e.at("continuity_tolerance").get<double>();
  c.eval.skip_seconds = e.at("skip_seconds").get<double>();
  c.eval.include_triple_variations = e.at("triple_variations").get<bool>();
  const auto& co = j.at("corpus");
  c.train_corpus = corpus_from_json(co.at("train"));
  c.val_corpus = corpus_from_json(co.at("val"));
  c.test_corpus = corpus_from_json(co.at("test"));
  const auto& t = j.at("train");
  c.train.epochs = t.at("epochs").get<int>();
  c.train.lr = t.at("lr").get<double>();
  c.train.weight_decay = t.at("weight_decay").get<double>();
  c.train.batch_size = t.at("batch_size").get<int>();
  c.train.passes_per_epoch = t.at("passes_per_epoch").get<int>();
  c.train.patience = t.at("patience").get<int>();
  c.train.lr_factor = t.at("lr_factor").get<double>();
  c.min_confidence = j.at("analysis").at("min_confidence").get<double>();
  return c;
}

// Every key of patch must exist in base, recursively through objects.
void check_keys(const ojson& base, const nlohmann::json& patch, const std::string& where) {
  if (!patch.is_object()) throw FormatError("config" + where + " must be a JSON object");
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string path = where + "." + it.key();
    if (!base.contains(it.key())) throw FormatError("unknown config key '" + path.substr(1) + "'");
    const auto& b = base.at(it.key());
    if (b.is_object()) check_keys(b, it.value(), path);
  }
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  // splitmix64 over the pair
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + stream + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

toy::CorpusSpec RunConfig::corpus(Split split) const {
  toy::CorpusSpec c = split == Split::Train ? train_corpus : split == Split::Validation ? val_corpus : test_corpus;
  c.seed = derive_seed(seed, static_cast<std::uint64_t>(split));
  return c;
}

toy::TrainConfig RunConfig::train_config() const {
  toy::TrainConfig t = train;
  t.seed = derive_seed(seed, 4);
  t.levels = levels;
  t.loss = loss;
  t.decode = decode;
  t.eval = eval;
  t.jobs = jobs;
  return t;
}

void RunConfig::validate() const {
  levels.validate();
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
  if (!(decode.iou_threshold >= 0.0) || !(decode.score_threshold >= 0.0) || !(decode.sigma > 0.0) ||
      !(decode.pre_filter >= 0.0) || !(decode.merge_window >= 0.0)) {
    throw std::invalid_argument("invalid decode settings");
  }
  if (!(eval.f_measure_window > 0.0) || !(eval.continuity_tolerance > 0.0) || !(eval.skip_seconds >= 0.0)) {
    throw std::invalid_argument("invalid evaluation settings");
  }
  if (!(loss.focal.gamma >= 0.0) || !(loss.focal.alpha >= 0.0 && loss.focal.alpha <= 1.0)) {
    throw std::invalid_argument("invalid focal parameters");
  }
  if (train.epochs < 0 || !(train.lr >= 0.0) || !(train.weight_decay >= 0.0) || train.batch_size < 1 ||
      train.passes_per_epoch < 1 || train.patience < 1 || !(train.lr_factor > 0.0)) {
    throw std::invalid_argument("invalid training settings");
  }
  if (!(min_confidence >= 0.0 && min_confidence < 1.0)) {
    throw std::invalid_argument("min_confidence must be in [0, 1)");
  }
}

std::string config_json(const RunConfig& cfg, int indent) { return to_json(cfg).dump(indent); }

void merge_config_json(RunConfig& cfg, std::string_view text) {
  nlohmann::json patch;
  try {
    patch = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  ojson merged = to_json(cfg);
  check_keys(merged, patch, "");
  merged.merge_patch(ojson::parse(patch.dump()));
  try {
    cfg = from_json(merged);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad config value: ") + e.what());
  }
}

void merge_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    merge_config_json(cfg, ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::optional<std::filesystem::path> env_config_path() {
  const char* v = std::getenv(kConfigEnvVar);
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::filesystem::path(v);
}

std::string config_hash(const RunConfig& cfg) { return fnv1a_hex(config_json(cfg)); }

NmsMode parse_nms_mode(std::string_view s) {
  if (s == "hard" || s == "nms") return NmsMode::Hard;
  if (s == "soft-linear" || s == "soft") return NmsMode::SoftLinear;
  if (s == "soft-gaussian") return NmsMode::SoftGaussian;
  throw FormatError("unknown NMS mode '" + std::string(s) + "'");
}

std::string_view nms_mode_name(NmsMode m) noexcept {
  switch (m) {
    case NmsMode::Hard:
      return "hard";
    case NmsMode::SoftLinear:
      return "soft-linear";
    case NmsMode::SoftGaussian:
      return "soft-gaussian";
  }
  return "soft-linear";
}

QualityMode parse_quality_mode(std::string_view s) {
  if (s == "leftness") return QualityMode::Leftness;
  if (s == "centerness") return QualityMode::Centerness;
  throw FormatError("unknown quality mode '" + std::string(s) + "'");
}

std::string_view quality_mode_name(QualityMode m) noexcept {
  return m == QualityMode::Centerness ? "centerness" : "leftness";
}

}  // namespace beatfcos
