#include "beatfcos/pipeline.hpp"

#include "beatfcos/parallel.hpp"

namespace beatfcos {

ToyData prepare_toy(const RunConfig& cfg, QualityMode quality, bool with_test) {
  ToyData d;
  auto prep = [&](Split s) {
    const auto specs = toy::make_corpus(cfg.corpus(s));
    return toy::prepare_corpus(specs, cfg.levels, quality, cfg.jobs);
  };
  d.train = prep(Split::Train);
  d.val = prep(Split::Validation);
  if (with_test) d.test = prep(Split::Test);
  return d;
}

toy::TrainResult train_heads(const RunConfig& cfg, const ToyData& data, QualityMode quality) {
  toy::ToyHeads heads = toy::init_heads(cfg.levels, derive_seed(cfg.seed, 5));
  heads.quality = quality;
  std::vector<toy::FeaturePyramid> pyramids;
  pyramids.reserve(data.train.size());
  for (const auto& t : data.train) pyramids.push_back(t.features);
  toy::fit_normalizer(heads, pyramids);
  toy::TrainConfig tc = cfg.train_config();
  tc.loss.quality = quality;
  return toy::train_toy(data.train, data.val, heads, tc);
}

std::vector<ClassDetections> validation_detections(const RunConfig& cfg, const ToyData& data,
                                                   const toy::ToyHeads& heads) {
  std::vector<ClassDetections> tracks(data.val.size());
  parallel_for(data.val.size(), cfg.jobs, [&](std::size_t i) {
    tracks[i] = toy::raw_detections(data.val[i], heads, cfg.levels, cfg.decode);
  });
  return tracks;
}

}  // namespace beatfcos
