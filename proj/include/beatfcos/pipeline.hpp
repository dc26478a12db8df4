#pragma once

// The toy experiment end to end, shared by the CLI and the acceptance runner.

#include <vector>

#include "beatfcos/config.hpp"
#include "beatfcos/toy.hpp"

namespace beatfcos {

struct ToyData {
  std::vector<toy::PreparedTrack> train;
  std::vector<toy::PreparedTrack> val;
  std::vector<toy::PreparedTrack> test;
};

// Synthesises and prepares the corpora named by cfg.
ToyData prepare_toy(const RunConfig& cfg, QualityMode quality, bool with_test);

// Seeded init, normaliser fit on the training pyramids, then train_toy.
toy::TrainResult train_heads(const RunConfig& cfg, const ToyData& data, QualityMode quality);

// Pre-suppression detections of the validation tracks, for analyze-iou.
std::vector<ClassDetections> validation_detections(const RunConfig& cfg, const ToyData& data,
                                                   const toy::ToyHeads& heads);

}  // namespace beatfcos
