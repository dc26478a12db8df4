#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include <nlohmann/json.hpp>

#include "beatfcos/error.hpp"
#include "beatfcos/kernels.hpp"
#include "beatfcos/parallel.hpp"
#include "beatfcos/toy.hpp"

namespace beatfcos::toy {

namespace {

constexpr std::size_t kOut = kHeadOutputs;

double typical_length(const LevelConfig& cfg, int li) {
  const auto& m = cfg.size_limits;
  const auto i = static_cast<std::size_t>(li);
  if (li == 0) return 0.5 * m[1];
  if (std::isinf(m[i + 1])) return 1.25 * m[i];
  return std::sqrt(m[i] * m[i + 1]);
}

void normalize_row(const ToyHeads& heads, int li, std::span<const double> row, double* out) {
  const std::size_t w = static_cast<std::size_t>(heads.width);
  const double* mean = heads.feature_mean.data() + static_cast<std::size_t>(li) * w;
  const double* scale = heads.feature_scale.data() + static_cast<std::size_t>(li) * w;
  for (std::size_t k = 0; k < w; ++k) out[k] = (row[k] - mean[k]) * scale[k];
}

HeadOutput to_head_output(const double* y) {
  HeadOutput h;
  h.cls_logit = {y[0], y[1]};
  h.reg_raw = {y[2], y[3]};
  h.lft_logit = y[4];
  return h;
}

}  // namespace

ToyHeads init_heads(const LevelConfig& cfg, std::uint64_t seed, double init_std) {
  cfg.validate();
  ToyHeads h;
  h.num_levels = cfg.num_levels;
  h.params.assign(h.level_param_count() * static_cast<std::size_t>(cfg.num_levels), 0.0);
  h.feature_mean.assign(static_cast<std::size_t>(h.width * cfg.num_levels), 0.0);
  h.feature_scale.assign(static_cast<std::size_t>(h.width * cfg.num_levels), 1.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, init_std);
  const double prior = 0.01;
  for (int li = 0; li < cfg.num_levels; ++li) {
    auto p = h.level_params(li);
    const std::size_t nw = kOut * static_cast<std::size_t>(h.width);
    for (std::size_t i = 0; i < nw; ++i) p[i] = normal(rng);
    double* b = p.data() + nw;
    b[0] = b[1] = -std::log((1.0 - prior) / prior);
    b[2] = std::log(0.5 * cfg.sub_box_radius[0]);
    b[3] = std::log(typical_length(cfg, li) / cfg.stride_seconds(li));
    b[4] = 0.0;
  }
  h.adam_m.assign(h.params.size(), 0.0);
  h.adam_v.assign(h.params.size(), 0.0);
  return h;
}

void fit_normalizer(ToyHeads& heads, std::span<const FeaturePyramid> pyramids) {
  const auto w = static_cast<std::size_t>(heads.width);
  for (int li = 0; li < heads.num_levels; ++li) {
    std::vector<double> sum(w, 0.0), sq(w, 0.0);
    double count = 0.0;
    for (const auto& pyr : pyramids) {
      const auto& rows = pyr.levels[static_cast<std::size_t>(li)];
      for (std::size_t i = 0; i < rows.size(); i += w) {
        for (std::size_t k = 0; k < w; ++k) {
          sum[k] += rows[i + k];
          sq[k] += rows[i + k] * rows[i + k];
        }
        count += 1.0;
      }
    }
    for (std::size_t k = 0; k < w; ++k) {
      const std::size_t idx = static_cast<std::size_t>(li) * w + k;
      if (count == 0.0) continue;
      const double mean = sum[k] / count;
      const double var = std::max(0.0, sq[k] / count - mean * mean);
      heads.feature_mean[idx] = mean;
      heads.feature_scale[idx] = var > 1e-12 ? 1.0 / std::sqrt(var) : 1.0;
    }
  }
}

std::vector<std::vector<HeadOutput>> forward(const ToyHeads& heads, const FeaturePyramid& feats) {
  if (static_cast<int>(feats.levels.size()) != heads.num_levels || feats.width != heads.width) {
    throw std::invalid_argument("feature pyramid does not match the heads");
  }
  const auto& k = kernels::active();
  const auto w = static_cast<std::size_t>(heads.width);
  std::vector<std::vector<HeadOutput>> out(feats.levels.size());
  std::vector<double> x(w);
  double y[kOut];
  for (int li = 0; li < heads.num_levels; ++li) {
    const auto p = heads.level_params(li);
    const std::size_t n = feats.anchors(static_cast<std::size_t>(li));
    auto& level = out[static_cast<std::size_t>(li)];
    level.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      normalize_row(heads, li, feats.row(static_cast<std::size_t>(li), i), x.data());
      k.matvec(p.data(), p.data() + kOut * w, x.data(), y, kOut, w);
      level.push_back(to_head_output(y));
    }
  }
  return out;
}

PredictionSet activate_all(const std::vector<std::vector<HeadOutput>>& raw) {
  PredictionSet out(raw.size());
  for (std::size_t li = 0; li < raw.size(); ++li) {
    out[li].reserve(raw[li].size());
    for (const auto& r : raw[li]) out[li].push_back(activate(r));
  }
  return out;
}

PreparedTrack prepare_track(const SynthTrack& track, const LevelConfig& cfg, QualityMode quality) {
  PreparedTrack p;
  p.features = extract_pyramid(track.audio.samples, cfg);
  p.grid = anchor_grid(static_cast<std::int64_t>(track.audio.samples.size()), cfg);
  const auto ivs = intervals_from_beats(track.annotation);
  p.targets = assign_targets(ivs.beats, ivs.downbeats, p.grid, cfg, quality);
  p.annotation = track.annotation;
  return p;
}

std::vector<PreparedTrack> prepare_corpus(std::span<const SynthSpec> specs, const LevelConfig& cfg,
                                          QualityMode quality, int jobs) {
  std::vector<PreparedTrack> out(specs.size());
  parallel_for(specs.size(), jobs, [&](std::size_t i) {
    out[i] = prepare_track(synth_track(specs[i], cfg.sample_rate), cfg, quality);
  });
  return out;
}

LossBreakdown batch_loss(const ToyHeads& heads, std::span<const PreparedTrack* const> batch,
                         const LossConfig& cfg, std::vector<double>* grad) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const auto& k = kernels::active();
  const auto w = static_cast<std::size_t>(heads.width);
  if (grad != nullptr) grad->assign(heads.params.size(), 0.0);
  const double inv_b = 1.0 / static_cast<double>(batch.size());

  std::vector<double> item_cls, item_reg, item_lft;
  std::vector<double> cls, reg, lft;
  std::vector<double> x(w);
  double y[kOut];
  double g[kOut];
  LossBreakdown out;
  for (const PreparedTrack* track : batch) {
    const std::size_t n_anchors = track->targets.num_anchors();
    if (n_anchors == 0) throw std::invalid_argument("batch item without anchors");
    const double scale = inv_b / static_cast<double>(n_anchors);
    cls.clear();
    reg.clear();
    lft.clear();
    for (int li = 0; li < heads.num_levels; ++li) {
      const auto p = heads.level_params(li);
      const auto& targets = track->targets.levels[static_cast<std::size_t>(li)];
      if (targets.size() != track->features.anchors(static_cast<std::size_t>(li))) {
        throw std::invalid_argument("features and targets are misaligned");
      }
      for (std::size_t i = 0; i < targets.size(); ++i) {
        normalize_row(heads, li, track->features.row(static_cast<std::size_t>(li), i), x.data());
        k.matvec(p.data(), p.data() + kOut * w, x.data(), y, kOut, w);
        HeadOutput dh;
        const LossBreakdown a = anchor_loss_grad(targets[i], to_head_output(y), cfg, dh);
        cls.push_back(a.cls);
        reg.push_back(a.reg);
        lft.push_back(a.lft);
        out.num_positive += a.num_positive;
        if (grad != nullptr) {
          g[0] = dh.cls_logit[0] * scale;
          g[1] = dh.cls_logit[1] * scale;
          g[2] = dh.reg_raw[0] * scale;
          g[3] = dh.reg_raw[1] * scale;
          g[4] = dh.lft_logit * scale;
          double* gp = grad->data() + static_cast<std::size_t>(li) * heads.level_param_count();
          k.rank1_update(gp, g, x.data(), kOut, w);
          for (std::size_t o = 0; o < kOut; ++o) gp[kOut * w + o] += g[o];
        }
      }
    }
    const double n = static_cast<double>(n_anchors);
    item_cls.push_back(pairwise_sum(cls) / n);
    item_reg.push_back(pairwise_sum(reg) / n);
    item_lft.push_back(pairwise_sum(lft) / n);
  }
  out.cls = pairwise_sum(item_cls) * inv_b;
  out.reg = pairwise_sum(item_reg) * inv_b;
  out.lft = pairwise_sum(item_lft) * inv_b;
  out.total = out.cls + out.reg + out.lft;
  return out;
}

namespace {

void adam_step(ToyHeads& h, const std::vector<double>& grad, double lr, double weight_decay) {
  constexpr double b1 = 0.9;
  constexpr double b2 = 0.999;
  constexpr double eps = 1e-8;
  ++h.adam_step;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(h.adam_step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(h.adam_step));
  for (std::size_t i = 0; i < h.params.size(); ++i) {
    const double g = grad[i] + weight_decay * h.params[i];
    h.adam_m[i] = b1 * h.adam_m[i] + (1.0 - b1) * g;
    h.adam_v[i] = b2 * h.adam_v[i] + (1.0 - b2) * g * g;
    h.params[i] -= lr * (h.adam_m[i] / c1) / (std::sqrt(h.adam_v[i] / c2) + eps);
  }
}

}  // namespace

TrainResult train_toy(std::span<const PreparedTrack> train, std::span<const PreparedTrack> val,
                      ToyHeads heads, const TrainConfig& cfg) {
  if (train.empty()) throw std::invalid_argument("empty training corpus");
  if (!(cfg.lr >= 0.0) || cfg.batch_size < 1 || cfg.epochs < 0) {
    throw std::invalid_argument("invalid training configuration");
  }
  if (heads.num_levels != cfg.levels.num_levels) {
    throw std::invalid_argument("heads do not match the level configuration");
  }

  TrainResult result;
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> grad;
  std::vector<const PreparedTrack*> batch;
  double lr = cfg.lr;
  double best = -1.0;
  int stale = 0;
  std::optional<ToyHeads> best_heads;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    LossLogRow row;
    row.epoch = epoch;
    row.lr = lr;
    double seen = 0.0;
    for (int pass = 0; pass < std::max(1, cfg.passes_per_epoch); ++pass) {
      std::shuffle(order.begin(), order.end(), rng);
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(cfg.batch_size)) {
        batch.clear();
        const std::size_t stop =
            std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
        for (std::size_t i = start; i < stop; ++i) batch.push_back(&train[order[i]]);
        const LossBreakdown l = batch_loss(heads, batch, cfg.loss, &grad);
        if (!std::isfinite(l.total)) {
          throw TrainingError("loss became non-finite at epoch " + std::to_string(epoch) +
                              " (lr " + std::to_string(lr) + ")");
        }
        const double wgt = static_cast<double>(batch.size());
        row.cls += l.cls * wgt;
        row.reg += l.reg * wgt;
        row.lft += l.lft * wgt;
        row.total += l.total * wgt;
        seen += wgt;
        adam_step(heads, grad, lr, cfg.weight_decay);
      }
    }
    row.cls /= seen;
    row.reg /= seen;
    row.lft /= seen;
    row.total /= seen;

    if (!val.empty()) {
      const auto reports = evaluate_heads(val, heads, cfg.levels, cfg.decode, cfg.eval, cfg.jobs);
      const DatasetSummary summary = summarize(reports);
      if (summary.classes[0].tracks > 0) row.val_beat_f1 = summary.classes[0].f_measure;
      if (summary.classes[1].tracks > 0) row.val_downbeat_f1 = summary.classes[1].f_measure;
      const double joint = summary.joint_f_measure.value_or(summary.classes[0].f_measure);
      // Ties keep the later, longer-trained heads but do not reset patience.
      if (joint >= best) best_heads = heads;
      if (joint > best) {
        best = joint;
        stale = 0;
      } else if (++stale >= cfg.patience) {
        lr *= cfg.lr_factor;
        stale = 0;
      }
    }
    result.log.push_back(row);
  }
  result.heads = best_heads ? std::move(*best_heads) : std::move(heads);
  return result;
}

ClassDetections raw_detections(const PreparedTrack& track, const ToyHeads& heads,
                               const LevelConfig& cfg, const DecodeConfig& decode) {
  const PredictionSet preds = activate_all(forward(heads, track.features));
  return score_and_collect(preds, track.grid, cfg, decode);
}

BeatSequence predict(const PreparedTrack& track, const ToyHeads& heads, const LevelConfig& cfg,
                     const DecodeConfig& decode) {
  const PredictionSet preds = activate_all(forward(heads, track.features));
  return beatfcos::decode(preds, track.grid, cfg, decode);
}

BeatSequence predict(std::span<const float> audio, const ToyHeads& heads, const LevelConfig& cfg,
                     const DecodeConfig& decode) {
  PreparedTrack t;
  t.features = extract_pyramid(audio, cfg);
  t.grid = anchor_grid(static_cast<std::int64_t>(audio.size()), cfg);
  return predict(t, heads, cfg, decode);
}

std::vector<MetricReport> evaluate_heads(std::span<const PreparedTrack> tracks,
                                         const ToyHeads& heads, const LevelConfig& cfg,
                                         const DecodeConfig& decode, const EvalConfig& eval,
                                         int jobs) {
  std::vector<MetricReport> out(tracks.size());
  parallel_for(tracks.size(), jobs, [&](std::size_t i) {
    out[i] = joint_report(predict(tracks[i], heads, cfg, decode), tracks[i].annotation, eval);
  });
  return out;
}

// ---- checkpoints -------------------------------------------------------------

namespace {

nlohmann::ordered_json limits_to_json(const std::vector<double>& limits) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (double v : limits) {
    if (std::isinf(v)) {
      j.push_back("inf");
    } else {
      j.push_back(v);
    }
  }
  return j;
}

}  // namespace

std::string checkpoint_json(const ToyHeads& heads, const LevelConfig& cfg,
                            const Provenance& provenance) {
  nlohmann::ordered_json j;
  j["format"] = std::string(kCheckpointFormat);
  j["version"] = kCheckpointVersion;
  j["schema_version"] = std::string(kSchemaVersion);
  j["provenance"] = {{"tool", "beatfcos"},
                     {"version", std::string(kVersion)},
                     {"command", provenance.command},
                     {"config_hash", provenance.config_hash},
                     {"seed", provenance.seed}};
  if (!provenance.config.empty()) j["provenance"]["config"] = nlohmann::ordered_json::parse(provenance.config);
  j["quality"] = heads.quality == QualityMode::Leftness ? "leftness" : "centerness";
  j["feature_width"] = heads.width;
  j["levels"] = {{"sample_rate", cfg.sample_rate},
                 {"base_level", cfg.base_level},
                 {"num_levels", cfg.num_levels},
                 {"size_limits", limits_to_json(cfg.size_limits)},
                 {"sub_box_radius", cfg.sub_box_radius},
                 {"sub_box_mode", cfg.sub_box_mode == SubBoxMode::Stride ? "stride" : "interval"}};
  j["params"] = heads.params;
  j["feature_mean"] = heads.feature_mean;
  j["feature_scale"] = heads.feature_scale;
  j["adam"] = {{"step", heads.adam_step}, {"m", heads.adam_m}, {"v", heads.adam_v}};
  return j.dump();
}

ToyHeads load_checkpoint_json(std::string_view text, LevelConfig* cfg) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("format").get<std::string>() != kCheckpointFormat) {
      throw FormatError("not a toy-heads checkpoint");
    }
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw FormatError("unsupported checkpoint version " + j.at("version").dump());
    }
    LevelConfig levels;
    const auto& lj = j.at("levels");
    levels.sample_rate = lj.at("sample_rate").get<double>();
    levels.base_level = lj.at("base_level").get<int>();
    levels.num_levels = lj.at("num_levels").get<int>();
    levels.size_limits.clear();
    for (const auto& v : lj.at("size_limits")) {
      levels.size_limits.push_back(v.is_string() ? std::numeric_limits<double>::infinity()
                                                 : v.get<double>());
    }
    levels.sub_box_radius = lj.at("sub_box_radius").get<std::array<double, kNumClasses>>();
    levels.sub_box_mode =
        lj.at("sub_box_mode").get<std::string>() == "stride" ? SubBoxMode::Stride : SubBoxMode::IntervalLength;
    levels.validate();

    ToyHeads h;
    h.width = j.at("feature_width").get<int>();
    h.num_levels = levels.num_levels;
    h.quality = j.at("quality").get<std::string>() == "centerness" ? QualityMode::Centerness
                                                                   : QualityMode::Leftness;
    h.params = j.at("params").get<std::vector<double>>();
    h.feature_mean = j.at("feature_mean").get<std::vector<double>>();
    h.feature_scale = j.at("feature_scale").get<std::vector<double>>();
    h.adam_step = j.at("adam").at("step").get<std::int64_t>();
    h.adam_m = j.at("adam").at("m").get<std::vector<double>>();
    h.adam_v = j.at("adam").at("v").get<std::vector<double>>();
    const std::size_t nf = static_cast<std::size_t>(h.width * h.num_levels);
    if (h.width != kFeatureWidth || h.params.size() != h.level_param_count() * static_cast<std::size_t>(h.num_levels) ||
        h.feature_mean.size() != nf || h.feature_scale.size() != nf ||
        h.adam_m.size() != h.params.size() || h.adam_v.size() != h.params.size()) {
      throw FormatError("checkpoint arrays have the wrong shape");
    }
    if (cfg != nullptr) *cfg = levels;
    return h;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("malformed checkpoint: ") + e.what());
  }
}

}  // namespace beatfcos::toy
