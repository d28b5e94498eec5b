#include "lumenfix/rl.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "serialize.hpp"

namespace lumenfix::rl {

void RLConfig::validate() const {
  if (!(alpha_base < 0.0)) throw std::invalid_argument("RLConfig: alpha_base must be negative");
  if (max_steps < 1) throw std::invalid_argument("RLConfig: max_steps must be >= 1");
  if (grid_n < 1) throw std::invalid_argument("RLConfig: grid_n must be >= 1");
  if (epsilon_start < 0.0 || epsilon_start > 1.0 || epsilon_end < 0.0 || epsilon_end > 1.0)
    throw std::invalid_argument("RLConfig: epsilons must lie in [0, 1]");
  if (!(discount > 0.0) || discount > 1.0)
    throw std::invalid_argument("RLConfig: discount must lie in (0, 1]");
  if (!(learn_rate > 0.0)) throw std::invalid_argument("RLConfig: learn_rate must be > 0");
  if (episodes < 0) throw std::invalid_argument("RLConfig: episodes must be >= 0");
}

RLConfig RLConfig::from_json_text(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  if (!j.is_object()) throw std::invalid_argument("rl config: expected a JSON object");

  RLConfig cfg;
  const std::set<std::string> known = {"alpha_base", "max_steps",     "grid_n",
                                       "epsilon_start", "epsilon_end", "learn_rate",
                                       "discount",   "episodes",      "seed"};
  for (const auto& [key, value] : j.items()) {
    if (!known.count(key)) throw std::invalid_argument("rl config: unknown key \"" + key + "\"");
    if (key == "alpha_base") cfg.alpha_base = value.get<double>();
    else if (key == "max_steps") cfg.max_steps = value.get<int>();
    else if (key == "grid_n") cfg.grid_n = value.get<int>();
    else if (key == "epsilon_start") cfg.epsilon_start = value.get<double>();
    else if (key == "epsilon_end") cfg.epsilon_end = value.get<double>();
    else if (key == "learn_rate") cfg.learn_rate = value.get<double>();
    else if (key == "discount") cfg.discount = value.get<double>();
    else if (key == "episodes") cfg.episodes = value.get<int>();
    else if (key == "seed") cfg.seed = value.get<uint64_t>();
  }
  cfg.validate();
  return cfg;
}

RLConfig RLConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("rl config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_text(text);
}

double iou(const BoundingBox& a, const BoundingBox& b) {
  const int x0 = std::max(a.x, b.x);
  const int y0 = std::max(a.y, b.y);
  const int x1 = std::min(a.x + a.w, b.x + b.w);
  const int y1 = std::min(a.y + a.h, b.y + b.h);
  const long iw = std::max(0, x1 - x0);
  const long ih = std::max(0, y1 - y0);
  const long inter = iw * ih;
  const long uni = a.area() + b.area() - inter;
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

double match_iou_sum(const std::vector<BoundingBox>& emitted, const Scene& scene) {
  std::vector<bool> used_e(emitted.size(), false);
  std::vector<bool> used_i(scene.instances.size(), false);
  double total = 0.0;
  while (true) {
    double best = 0.0;
    size_t be = 0, bi = 0;
    bool found = false;
    for (size_t e = 0; e < emitted.size(); ++e) {
      if (used_e[e]) continue;
      for (size_t i = 0; i < scene.instances.size(); ++i) {
        if (used_i[i]) continue;
        const double v = iou(emitted[e], scene.instances[i].box);
        if (v > best) {
          best = v;
          be = e;
          bi = i;
          found = true;
        }
      }
    }
    if (!found) break;  // remaining pairs all have IoU 0
    used_e[be] = true;
    used_i[bi] = true;
    total += best;
  }
  return total;
}

double fixation_reward(double prev_sum, double cur_sum, const RLConfig& cfg, int rho) {
  if (rho < 1) throw std::invalid_argument("fixation_reward: rho must be >= 1");
  return cfg.alpha_base + (cur_sum - prev_sum) / static_cast<double>(rho);
}

double completion_reward(double final_sum, int rho) {
  if (rho < 1) throw std::invalid_argument("completion_reward: rho must be >= 1");
  if (final_sum < 0.0 || final_sum > static_cast<double>(rho))
    throw std::invalid_argument("completion_reward: final_sum outside [0, rho]");
  return (final_sum - static_cast<double>(rho)) / static_cast<double>(rho);
}

namespace {

constexpr int kMinCursorSide = 8;

BoundingBox clamp_box(BoundingBox b, int image_w, int image_h) {
  b.w = std::clamp(b.w, 1, image_w);
  b.h = std::clamp(b.h, 1, image_h);
  b.x = std::clamp(b.x, 0, image_w - b.w);
  b.y = std::clamp(b.y, 0, image_h - b.h);
  return b;
}

int size_tier(const BoundingBox& cursor, int image_w, int image_h) {
  const double frac =
      static_cast<double>(cursor.area()) / (static_cast<double>(image_w) * image_h);
  if (frac < 1.0 / 16.0) return 0;  // S
  if (frac < 1.0 / 4.0) return 1;   // M
  return 2;                         // L
}

}  // namespace

FixationState initial_state(int image_w, int image_h) {
  if (image_w < 1 || image_h < 1) throw std::invalid_argument("initial_state: empty image");
  const int side = std::max(kMinCursorSide, std::min(image_w, image_h) / 3);
  FixationState s;
  s.cursor = clamp_box({(image_w - side) / 2, (image_h - side) / 2, side, side}, image_w, image_h);
  return s;
}

int64_t state_key(const FixationState& s, int image_w, int image_h, const RLConfig& cfg) {
  const int cx = std::clamp((s.cursor.x + s.cursor.w / 2) * cfg.grid_n / image_w, 0, cfg.grid_n - 1);
  const int cy = std::clamp((s.cursor.y + s.cursor.h / 2) * cfg.grid_n / image_h, 0, cfg.grid_n - 1);
  const int tier = size_tier(s.cursor, image_w, image_h);
  const int emitted = static_cast<int>(std::min<size_t>(s.emitted.size(), 4));
  return ((static_cast<int64_t>(cy) * cfg.grid_n + cx) * 3 + tier) * 5 + emitted;
}

FixationState apply_action(const FixationState& s, Action a, int image_w, int image_h,
                           const RLConfig& cfg) {
  FixationState next = s;
  next.step = s.step + 1;
  BoundingBox c = s.cursor;
  const int step_x = std::max(1, image_w / cfg.grid_n);
  const int step_y = std::max(1, image_h / cfg.grid_n);

  switch (a) {
    case Action::up:
      c.y -= step_y;
      break;
    case Action::down:
      c.y += step_y;
      break;
    case Action::left:
      c.x -= step_x;
      break;
    case Action::right:
      c.x += step_x;
      break;
    case Action::grow: {
      const int cx = c.x + c.w / 2, cy = c.y + c.h / 2;
      c.w = std::min(image_w, static_cast<int>(std::lround(c.w * 1.5)));
      c.h = std::min(image_h, static_cast<int>(std::lround(c.h * 1.5)));
      c.x = cx - c.w / 2;
      c.y = cy - c.h / 2;
      break;
    }
    case Action::shrink: {
      const int cx = c.x + c.w / 2, cy = c.y + c.h / 2;
      c.w = std::max(kMinCursorSide, static_cast<int>(std::lround(c.w / 1.5)));
      c.h = std::max(kMinCursorSide, static_cast<int>(std::lround(c.h / 1.5)));
      c.x = cx - c.w / 2;
      c.y = cy - c.h / 2;
      break;
    }
    case Action::emit:
      next.emitted.push_back(s.cursor);
      break;
    case Action::done:
      next.terminated = true;
      break;
  }
  next.cursor = clamp_box(c, image_w, image_h);
  return next;
}

StepResult env_step(const FixationState& s, Action a, const Scene& scene, const RLConfig& cfg) {
  if (s.terminated) throw std::logic_error("env_step: episode already terminated");
  if (s.step >= cfg.max_steps) throw std::logic_error("env_step: step budget exhausted");
  const int rho = static_cast<int>(scene.instances.size());
  if (rho < 1) throw std::invalid_argument("env_step: scene has no instances");

  StepResult res;
  res.state = apply_action(s, a, scene.image.width, scene.image.height, cfg);

  if (a == Action::done) {
    res.state.prev_iou_sum = s.prev_iou_sum;
    res.reward = completion_reward(s.prev_iou_sum, rho);
    res.done = true;
    return res;
  }

  // Only emits change the matched coverage.
  const double cur_sum =
      a == Action::emit ? match_iou_sum(res.state.emitted, scene) : s.prev_iou_sum;
  res.state.prev_iou_sum = cur_sum;
  res.reward = fixation_reward(s.prev_iou_sum, cur_sum, cfg, rho);

  if (res.state.step >= cfg.max_steps) {
    res.state.terminated = true;
    res.reward += completion_reward(cur_sum, rho);
    res.done = true;
  }
  return res;
}

Action Policy::greedy(int64_t key, Rng& rng) const {
  const auto it = q.find(key);
  if (it == q.end()) return static_cast<Action>(rng.uniform_int(kNumActions));
  const auto& values = it->second;
  int best = 0;
  for (int a = 1; a < kNumActions; ++a)
    if (values[a] > values[best]) best = a;
  return static_cast<Action>(best);
}

std::array<double, kNumActions>& Policy::slot(int64_t key) {
  return q.try_emplace(key).first->second;
}

double Policy::max_q(int64_t key) const {
  const auto it = q.find(key);
  if (it == q.end()) return 0.0;
  return *std::max_element(it->second.begin(), it->second.end());
}

void Policy::save(const std::string& path) const {
  std::string buf = "LFPOL1";
  detail::append_u64(buf, q.size());
  for (const auto& [key, values] : q) {  // std::map iterates key-sorted
    detail::append_i64(buf, key);
    for (const double v : values) detail::append_f64(buf, v);
  }
  detail::spit(path, buf);
}

Policy Policy::load(const std::string& path) {
  detail::Reader rd(detail::slurp(path), path);
  rd.expect_magic("LFPOL1");
  Policy p;
  const uint64_t n = rd.read_u64();
  for (uint64_t i = 0; i < n; ++i) {
    const int64_t key = rd.read_i64();
    std::array<double, kNumActions> values{};
    for (double& v : values) v = rd.read_f64();
    p.q.emplace(key, values);
  }
  return p;
}

TrainResult train(const std::vector<Scene>& scenes, const RLConfig& cfg) {
  cfg.validate();
  if (scenes.empty()) throw std::invalid_argument("train: no scenes");

  TrainResult result;
  Rng rng(cfg.seed);
  for (int episode = 0; episode < cfg.episodes; ++episode) {
    const double frac = cfg.episodes <= 1 ? 0.0 : episode / static_cast<double>(cfg.episodes - 1);
    const double epsilon = cfg.epsilon_start + (cfg.epsilon_end - cfg.epsilon_start) * frac;
    const Scene& scene = scenes[static_cast<size_t>(episode) % scenes.size()];

    FixationState state = initial_state(scene.image.width, scene.image.height);
    double episode_return = 0.0;
    while (true) {
      const int64_t key = state_key(state, scene.image.width, scene.image.height, cfg);
      auto& values = result.policy.slot(key);
      int action;
      if (rng.uniform01() < epsilon) {
        action = rng.uniform_int(kNumActions);
      } else {
        action = 0;
        for (int a = 1; a < kNumActions; ++a)
          if (values[a] > values[action]) action = a;
      }

      const StepResult sr = env_step(state, static_cast<Action>(action), scene, cfg);
      episode_return += sr.reward;

      double target = sr.reward;
      if (!sr.done) {
        const int64_t next_key =
            state_key(sr.state, scene.image.width, scene.image.height, cfg);
        target += cfg.discount * result.policy.max_q(next_key);
      }
      values[action] += cfg.learn_rate * (target - values[action]);

      if (sr.done) break;
      state = sr.state;
    }
    result.episode_returns.push_back(episode_return);
  }
  return result;
}

Rollout greedy_rollout(const Policy& policy, int image_w, int image_h, const RLConfig& cfg,
                       Rng& rng, const Scene* scene) {
  Rollout out;
  FixationState state = initial_state(image_w, image_h);
  const int rho = scene ? static_cast<int>(scene->instances.size()) : 0;

  while (!state.terminated && state.step < cfg.max_steps) {
    const int64_t key = state_key(state, image_w, image_h, cfg);
    const Action a = policy.greedy(key, rng);
    FixationState next = apply_action(state, a, image_w, image_h, cfg);
    ++out.steps;

    if (scene) {
      if (a == Action::done) {
        out.completion = completion_reward(state.prev_iou_sum, rho);
        next.prev_iou_sum = state.prev_iou_sum;
      } else {
        const double cur =
            a == Action::emit ? match_iou_sum(next.emitted, *scene) : state.prev_iou_sum;
        out.fixation_total += fixation_reward(state.prev_iou_sum, cur, cfg, rho);
        next.prev_iou_sum = cur;
        if (next.step >= cfg.max_steps) out.completion = completion_reward(cur, rho);
      }
    }
    state = std::move(next);
  }
  out.emitted = state.emitted;
  out.final_iou_sum = state.prev_iou_sum;
  return out;
}

namespace {

void draw_target(ImagePlane& plane, const BoundingBox& box, int class_id, double intensity) {
  switch (class_id) {
    case 0:  // rectangle
      for (int y = box.y; y < box.y + box.h; ++y)
        for (int x = box.x; x < box.x + box.w; ++x) plane.at(x, y) = intensity;
      break;
    case 1: {  // disk
      const double ccx = box.x + box.w / 2.0;
      const double ccy = box.y + box.h / 2.0;
      const double rx = box.w / 2.0;
      const double ry = box.h / 2.0;
      for (int y = box.y; y < box.y + box.h; ++y) {
        for (int x = box.x; x < box.x + box.w; ++x) {
          const double dx = (x + 0.5 - ccx) / rx;
          const double dy = (y + 0.5 - ccy) / ry;
          if (dx * dx + dy * dy <= 1.0) plane.at(x, y) = intensity;
        }
      }
      break;
    }
    case 2: {  // triangle, apex up
      for (int row = 0; row < box.h; ++row) {
        const double t = box.h == 1 ? 1.0 : row / static_cast<double>(box.h - 1);
        const double half = 0.5 * t * (box.w - 1);
        const double mid = box.x + (box.w - 1) / 2.0;
        const int x0 = static_cast<int>(std::ceil(mid - half));
        const int x1 = static_cast<int>(std::floor(mid + half));
        for (int x = x0; x <= x1; ++x) plane.at(x, box.y + row) = intensity;
      }
      break;
    }
    default:
      throw std::invalid_argument("draw_target: unknown class");
  }
}

}  // namespace

Scene make_synthetic_scene(const SceneSpec& spec, uint64_t seed) {
  if (spec.min_targets < 1) throw std::invalid_argument("make_synthetic_scene: need >= 1 target");
  if (spec.max_targets < spec.min_targets)
    throw std::invalid_argument("make_synthetic_scene: max_targets < min_targets");
  const int min_dim = std::min(spec.width, spec.height);
  const int lo_side = static_cast<int>(std::lround(spec.min_size_frac * min_dim));
  const int hi_side = static_cast<int>(std::lround(spec.max_size_frac * min_dim));
  if (lo_side < 3 || hi_side > min_dim || lo_side > hi_side)
    throw std::invalid_argument("make_synthetic_scene: targets cannot fit (image too small)");

  Rng rng(seed);
  Scene scene;
  scene.image = RgbImage(spec.width, spec.height);
  ImagePlane base(spec.width, spec.height);
  for (double& v : base.pixels)
    v = std::clamp(spec.background_level + spec.noise_sigma * rng.gaussian(), 0.0, 1.0);

  const int n = spec.min_targets + rng.uniform_int(spec.max_targets - spec.min_targets + 1);
  for (int i = 0; i < n; ++i) {
    const int class_id = rng.uniform_int(3);
    const int w = lo_side + rng.uniform_int(hi_side - lo_side + 1);
    const int h = class_id == 0 ? lo_side + rng.uniform_int(hi_side - lo_side + 1) : w;

    // Position: centered plus a spread-scaled uniform offset over the
    // feasible range.
    const int fx = spec.width - w, fy = spec.height - h;
    const double ox = spec.position_spread * rng.uniform(-1.0, 1.0) * (fx / 2.0);
    const double oy = spec.position_spread * rng.uniform(-1.0, 1.0) * (fy / 2.0);
    BoundingBox box{
        std::clamp(static_cast<int>(std::lround(fx / 2.0 + ox)), 0, fx),
        std::clamp(static_cast<int>(std::lround(fy / 2.0 + oy)), 0, fy),
        w, h};

    const double intensity = rng.uniform(spec.min_intensity, spec.max_intensity);
    draw_target(base, box, class_id, intensity);
    scene.instances.push_back({box, class_id});
  }

  scene.image.r = base;
  scene.image.g = base;
  scene.image.b = base;
  return scene;
}

net::Tensor3 crop_resize(const RgbImage& img, const BoundingBox& box, int out_size) {
  if (!box.inside(img.width, img.height))
    throw std::invalid_argument("crop_resize: box outside image");
  net::Tensor3 out(3, out_size, out_size);
  const ImagePlane* channels[3] = {&img.r, &img.g, &img.b};
  for (int oy = 0; oy < out_size; ++oy) {
    const int sy = box.y + std::min(box.h - 1, static_cast<int>((oy + 0.5) * box.h / out_size));
    for (int ox = 0; ox < out_size; ++ox) {
      const int sx = box.x + std::min(box.w - 1, static_cast<int>((ox + 0.5) * box.w / out_size));
      for (int c = 0; c < 3; ++c) out.at(c, oy, ox) = channels[c]->at(sx, sy);
    }
  }
  return out;
}

TrainingMatrix build_training_matrix(const std::vector<RgbImage>& images, const net::Network& net,
                                     const EnhanceConfig& enhance_cfg, bool fast, int input_size) {
  TrainingMatrix m;
  m.rows = static_cast<int>(images.size());
  for (const RgbImage& img : images) {
    const RgbImage enhanced = enhance(img, enhance_cfg, fast);
    const BoundingBox whole{0, 0, enhanced.width, enhanced.height};
    const std::vector<double> feat = net.features(crop_resize(enhanced, whole, input_size));
    if (m.cols == 0) {
      m.cols = static_cast<int>(feat.size());
    } else if (m.cols != static_cast<int>(feat.size())) {
      throw std::invalid_argument("build_training_matrix: feature width mismatch");
    }
    m.data.insert(m.data.end(), feat.begin(), feat.end());
  }
  return m;
}

RecognitionResult recognize_enhanced(const RgbImage& enhanced, const Policy& policy,
                                     const net::Network& net, const RLConfig& rl_cfg,
                                     const Scene* ground_truth, int crop_size) {
  Rng rng(rl_cfg.seed);
  const Rollout roll =
      greedy_rollout(policy, enhanced.width, enhanced.height, rl_cfg, rng, ground_truth);

  RecognitionResult result;
  for (const BoundingBox& box : roll.emitted) {
    const std::vector<double> probs = net.forward(crop_resize(enhanced, box, crop_size));
    int best = 0;
    for (size_t i = 1; i < probs.size(); ++i)
      if (probs[i] > probs[best]) best = static_cast<int>(i);
    result.detections.push_back({box, best, probs[static_cast<size_t>(best)]});
  }
  std::stable_sort(result.detections.begin(), result.detections.end(),
                   [](const Detection& a, const Detection& b) { return a.score > b.score; });

  if (ground_truth && roll.steps > 0) {
    const double delta_mean = roll.final_iou_sum / roll.steps;
    result.episode_quality = (roll.fixation_total + roll.completion) * delta_mean;
  }
  return result;
}

RecognitionResult recognize(const RgbImage& image, const Policy& policy, const net::Network& net,
                            const EnhanceConfig& enhance_cfg, const RLConfig& rl_cfg, bool fast,
                            const Scene* ground_truth, int crop_size) {
  const RgbImage enhanced = enhance(image, enhance_cfg, fast);
  return recognize_enhanced(enhanced, policy, net, rl_cfg, ground_truth, crop_size);
}

void save_scene_truth(const Scene& scene, const std::string& image_name,
                      const std::string& json_path) {
  nlohmann::json j;
  j["image"] = image_name;
  j["instances"] = nlohmann::json::array();
  for (const Instance& inst : scene.instances) {
    j["instances"].push_back({{"x", inst.box.x},
                              {"y", inst.box.y},
                              {"w", inst.box.w},
                              {"h", inst.box.h},
                              {"class", inst.class_id}});
  }
  std::ofstream out(json_path, std::ios::trunc);
  if (!out) throw std::runtime_error(json_path + ": cannot open file for writing");
  out << j.dump(2) << "\n";
}

Scene load_scene(const std::string& json_path) {
  std::ifstream in(json_path);
  if (!in) throw std::runtime_error(json_path + ": cannot open file");
  nlohmann::json j;
  in >> j;

  Scene scene;
  const std::filesystem::path dir = std::filesystem::path(json_path).parent_path();
  const std::string image_name = j.at("image").get<std::string>();
  const LoadedImage loaded = load_image((dir / image_name).string());
  if (std::holds_alternative<RgbImage>(loaded)) {
    scene.image = std::get<RgbImage>(loaded);
  } else {
    const ImagePlane& p = std::get<ImagePlane>(loaded);
    scene.image = RgbImage(p.width, p.height);
    scene.image.r = p;
    scene.image.g = p;
    scene.image.b = p;
  }
  for (const auto& inst : j.at("instances")) {
    BoundingBox box{inst.at("x").get<int>(), inst.at("y").get<int>(), inst.at("w").get<int>(),
                    inst.at("h").get<int>()};
    if (!box.inside(scene.image.width, scene.image.height))
      throw std::runtime_error(json_path + ": instance box outside image");
    scene.instances.push_back({box, inst.at("class").get<int>()});
  }
  return scene;
}

}  // namespace lumenfix::rl
