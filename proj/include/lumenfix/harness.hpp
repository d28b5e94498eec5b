#pragma once

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "lumenfix/enhance.hpp"
#include "lumenfix/rl.hpp"

namespace lumenfix::harness {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitPartialFailure = 1;
inline constexpr int kExitUsageError = 2;

struct RunConfig {
  EnhanceConfig enhance;
  rl::RLConfig rl;
  rl::SceneSpec scene;
  bool fast = true;
  uint64_t seed = 42;
  int crop_size = 16;
};

struct BenchRecord {
  int target_id = 0;
  std::string method;  // "direct" or "fast"
  double enhance_ms = 0.0;
  double recognize_ms = 0.0;
  double total_ms = 0.0;
};

/// Enhances every input, writing one PPM per input plus metrics.csv with a
/// before and an after row per image. Per-file failures are logged and the
/// remaining inputs still processed.
int cmd_enhance(const std::vector<std::string>& inputs, const RunConfig& cfg,
                const std::string& out_dir, std::ostream& log = std::cerr);

/// Writes n seeded synthetic scenes (PPM + ground-truth JSON) and a
/// manifest.csv into out_dir.
int cmd_synth(int n_scenes, const RunConfig& cfg, const std::string& out_dir,
              std::ostream& log = std::cerr);

/// Trains the fixation policy and the RoI classifier on a synth corpus;
/// writes model.lfnet, policy.lfpol, and training.csv (episode, return,
/// loss) into out_dir.
int cmd_train(const std::string& corpus_dir, const RunConfig& cfg, const std::string& out_dir,
              std::ostream& log = std::cerr);

/// Runs recognition over the images and writes detections.csv. Ground
/// truth JSON next to an image (same stem) feeds the episode_quality
/// diagnostic when present.
int cmd_recognize(const std::vector<std::string>& inputs, const std::string& net_path,
                  const std::string& policy_path, const RunConfig& cfg,
                  const std::string& out_dir, std::ostream& log = std::cerr);

/// Times enhance + recognize per scene under both bilateral paths
/// (warm-up run discarded, median of 5 on the monotonic clock) and writes
/// bench.csv plus a summary row with the fast/direct speedup ratio.
/// Fails (exit 1) unless the ratio exceeds 1.
int cmd_bench(const std::string& corpus_dir, const RunConfig& cfg,
              const std::optional<std::string>& net_path,
              const std::optional<std::string>& policy_path, const std::string& out_dir,
              std::ostream& log = std::cerr);

/// Writes a metrics.csv row per input image.
int cmd_metrics(const std::vector<std::string>& inputs, const std::string& out_dir,
                std::ostream& log = std::cerr);

/// Scene JSON paths under a synth corpus, sorted by name.
std::vector<std::string> corpus_scene_files(const std::string& corpus_dir);

}  // namespace lumenfix::harness
