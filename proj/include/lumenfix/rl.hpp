#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "lumenfix/convnet.hpp"
#include "lumenfix/enhance.hpp"
#include "lumenfix/image.hpp"
#include "lumenfix/rng.hpp"

namespace lumenfix::rl {

/// Axis-aligned box on the integer pixel grid, top-left anchored.
struct BoundingBox {
  int x = 0, y = 0;
  int w = 1, h = 1;

  long area() const { return static_cast<long>(w) * h; }
  bool inside(int image_w, int image_h) const {
    return x >= 0 && y >= 0 && w >= 1 && h >= 1 && x + w <= image_w && y + h <= image_h;
  }
  bool operator==(const BoundingBox&) const = default;
};

struct Instance {
  BoundingBox box;
  int class_id = 0;
};

struct Scene {
  RgbImage image;
  std::vector<Instance> instances;
};

struct RLConfig {
  double alpha_base = -0.05;  // per-fixation penalty, strictly negative
  int max_steps = 32;
  int grid_n = 8;             // fixation lattice
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  double learn_rate = 0.2;
  double discount = 0.95;
  int episodes = 600;
  uint64_t seed = 42;

  void validate() const;
  static RLConfig from_json_text(const std::string& text);
  static RLConfig from_json_file(const std::string& path);
};

enum class Action : int { up = 0, down, left, right, grow, shrink, emit, done };
inline constexpr int kNumActions = 8;

struct FixationState {
  BoundingBox cursor;
  std::vector<BoundingBox> emitted;
  int step = 0;
  double prev_iou_sum = 0.0;
  bool terminated = false;
};

/// |a n b| / |a u b| counted on integer pixels.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Greedy one-to-one matching of emitted boxes against instances: the
/// highest-IoU pair is taken repeatedly; unmatched items contribute 0.
double match_iou_sum(const std::vector<BoundingBox>& emitted, const Scene& scene);

/// Eq.-13-shaped step reward: alpha_base + (cur - prev) / rho.
double fixation_reward(double prev_sum, double cur_sum, const RLConfig& cfg, int rho);

/// Terminal reward (final_sum - rho) / rho, always in [-1, 0].
double completion_reward(double final_sum, int rho);

FixationState initial_state(int image_w, int image_h);

/// Discretized policy state: cursor lattice cell, size tier, saturated
/// emitted count.
int64_t state_key(const FixationState& s, int image_w, int image_h, const RLConfig& cfg);

/// Transition mechanics alone (no rewards); shared by env_step and the
/// reward-free rollouts of recognize.
FixationState apply_action(const FixationState& s, Action a, int image_w, int image_h,
                           const RLConfig& cfg);

struct StepResult {
  FixationState state;
  double reward = 0.0;
  bool done = false;
};

StepResult env_step(const FixationState& s, Action a, const Scene& scene, const RLConfig& cfg);

/// Tabular action values. Unseen states act uniformly at random, so an
/// empty table is the uniform-random policy.
struct Policy {
  std::map<int64_t, std::array<double, kNumActions>> q;

  Action greedy(int64_t key, Rng& rng) const;
  std::array<double, kNumActions>& slot(int64_t key);
  double max_q(int64_t key) const;

  void save(const std::string& path) const;
  static Policy load(const std::string& path);
};

struct TrainResult {
  Policy policy;
  std::vector<double> episode_returns;
};

/// Epsilon-greedy Q-learning over the scenes, epsilon annealed linearly
/// across episodes. Deterministic for a fixed seed.
TrainResult train(const std::vector<Scene>& scenes, const RLConfig& cfg);

struct Rollout {
  std::vector<BoundingBox> emitted;
  int steps = 0;
  double fixation_total = 0.0;  // sum of non-terminal rewards (scene given)
  double completion = 0.0;
  double final_iou_sum = 0.0;
};

/// Greedy episode. Passing a scene also evaluates the rewards along the
/// trajectory; the action sequence itself never depends on the scene.
Rollout greedy_rollout(const Policy& policy, int image_w, int image_h, const RLConfig& cfg,
                       Rng& rng, const Scene* scene = nullptr);

/// Synthetic desk-scale scene generator: dim noisy background with
/// rectangle / disk / triangle targets (class ids 0 / 1 / 2).
struct SceneSpec {
  int width = 96;
  int height = 96;
  int min_targets = 1;
  int max_targets = 3;
  double min_size_frac = 0.20;      // target side / min(width, height)
  double max_size_frac = 0.45;
  double position_spread = 1.0;     // 0 = centered, 1 = anywhere that fits
  double background_level = 0.05;
  double noise_sigma = 0.01;
  double min_intensity = 0.12;
  double max_intensity = 0.25;
};

Scene make_synthetic_scene(const SceneSpec& spec, uint64_t seed);

/// Row-per-image matrix of pooled feature vectors of the enhanced images.
struct TrainingMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;  // row-major

  double at(int r, int c) const { return data[static_cast<size_t>(r) * cols + c]; }
};

TrainingMatrix build_training_matrix(const std::vector<RgbImage>& images, const net::Network& net,
                                     const EnhanceConfig& enhance_cfg, bool fast,
                                     int input_size = 16);

struct Detection {
  BoundingBox box;
  int class_id = 0;
  double score = 0.0;
};

struct RecognitionResult {
  std::vector<Detection> detections;  // sorted by score, descending
  double episode_quality = 0.0;       // diagnostic; 0 without ground truth
};

/// Enhance, roll out the greedy policy, classify each emitted RoI.
RecognitionResult recognize(const RgbImage& image, const Policy& policy, const net::Network& net,
                            const EnhanceConfig& enhance_cfg, const RLConfig& rl_cfg, bool fast,
                            const Scene* ground_truth = nullptr, int crop_size = 16);

/// Classification only, for callers that already hold the enhanced image.
RecognitionResult recognize_enhanced(const RgbImage& enhanced, const Policy& policy,
                                     const net::Network& net, const RLConfig& rl_cfg,
                                     const Scene* ground_truth = nullptr, int crop_size = 16);

/// Nearest-neighbor crop + resize into a C=3 tensor for the classifier.
net::Tensor3 crop_resize(const RgbImage& img, const BoundingBox& box, int out_size);

/// Scene ground truth JSON: {"image": ..., "instances": [{x,y,w,h,class}]}.
void save_scene_truth(const Scene& scene, const std::string& image_name,
                      const std::string& json_path);
Scene load_scene(const std::string& json_path);

}  // namespace lumenfix::rl
