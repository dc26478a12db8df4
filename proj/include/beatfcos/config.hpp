#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "beatfcos/decoding.hpp"
#include "beatfcos/evaluation.hpp"
#include "beatfcos/losses.hpp"
#include "beatfcos/pyramid.hpp"
#include "beatfcos/toy.hpp"

namespace beatfcos {

// Environment variable naming a config file that is loaded before --config.
inline constexpr const char* kConfigEnvVar = "BEATFCOS_CONFIG";

enum class Split { Train = 1, Validation = 2, Test = 3 };

// Everything a run depends on. Precedence: built-in defaults, then the file
// named by BEATFCOS_CONFIG, then --config, then individual flags.
struct RunConfig {
  std::uint64_t seed = 1;
  int jobs = 1;
  LevelConfig levels;
  LossConfig loss;
  DecodeConfig decode;
  EvalConfig eval;
  // Corpus seeds are derived from seed and the split; the seed field of
  // these specs is ignored.
  toy::CorpusSpec train_corpus{};
  toy::CorpusSpec val_corpus{.num_tracks = 10};
  toy::CorpusSpec test_corpus{.num_tracks = 20};
  toy::TrainConfig train;
  double min_confidence = 0.2;

  toy::CorpusSpec corpus(Split split) const;
  // TrainConfig with levels/loss/decode/eval/jobs/seed filled in.
  toy::TrainConfig train_config() const;
  void validate() const;
};

// Deterministic 64-bit stream seed for (seed, stream).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// Canonical JSON (fixed key order, every field present).
std::string config_json(const RunConfig& cfg, int indent = -1);
// Applies the keys present in text on top of cfg. Unknown keys and bad
// values throw FormatError.
void merge_config_json(RunConfig& cfg, std::string_view text);
void merge_config_file(RunConfig& cfg, const std::filesystem::path& path);
std::optional<std::filesystem::path> env_config_path();
// FNV-1a of the canonical JSON.
std::string config_hash(const RunConfig& cfg);

NmsMode parse_nms_mode(std::string_view s);
std::string_view nms_mode_name(NmsMode m) noexcept;
QualityMode parse_quality_mode(std::string_view s);
std::string_view quality_mode_name(QualityMode m) noexcept;

}  // namespace beatfcos
