#include "lumenfix/harness.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <stdexcept>

#include "lumenfix/csv.hpp"
#include "lumenfix/metrics.hpp"

namespace fs = std::filesystem;

namespace lumenfix::harness {

namespace {

RgbImage load_as_rgb(const std::string& path) {
  LoadedImage loaded = load_image(path);
  if (std::holds_alternative<RgbImage>(loaded)) return std::get<RgbImage>(loaded);
  const ImagePlane& p = std::get<ImagePlane>(loaded);
  RgbImage img(p.width, p.height);
  img.r = p;
  img.g = p;
  img.b = p;
  return img;
}

std::vector<std::string> metrics_row(const std::string& path, const MetricsReport& m) {
  return {path, fmt_double(m.entropy_bits), fmt_double(m.mean_value), fmt_double(m.avg_gradient)};
}

const std::vector<std::string> kMetricsHeader = {"path", "entropy_bits", "mean_value",
                                                 "avg_gradient"};

double ms_between(std::chrono::steady_clock::time_point a,
                  std::chrono::steady_clock::time_point b) {
  return std::chrono::duration<double, std::milli>(b - a).count();
}

std::string scene_stem(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scene_%04d", index);
  return buf;
}

}  // namespace

std::vector<std::string> corpus_scene_files(const std::string& corpus_dir) {
  std::vector<std::string> files;
  if (!fs::is_directory(corpus_dir)) return files;
  for (const auto& entry : fs::directory_iterator(corpus_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json" &&
        entry.path().filename() != "manifest.json")
      files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  return files;
}

int cmd_enhance(const std::vector<std::string>& inputs, const RunConfig& cfg,
                const std::string& out_dir, std::ostream& log) {
  fs::create_directories(out_dir);
  std::vector<std::vector<std::string>> rows;
  int failures = 0;

  for (const std::string& input : inputs) {
    try {
      const RgbImage img = load_as_rgb(input);
      const MetricsReport before = compute_metrics(img);
      const RgbImage out = enhance(img, cfg.enhance, cfg.fast);
      const MetricsReport after = compute_metrics(out);

      const std::string out_path =
          (fs::path(out_dir) / (fs::path(input).stem().string() + "_enhanced.ppm")).string();
      save_image(out, out_path);
      rows.push_back(metrics_row(input, before));
      rows.push_back(metrics_row(out_path, after));
      log << "enhanced " << input << " -> " << out_path << "\n";
    } catch (const std::exception& e) {
      ++failures;
      log << "error: " << input << ": " << e.what() << "\n";
    }
  }
  write_csv((fs::path(out_dir) / "metrics.csv").string(), kMetricsHeader, rows);
  return failures ? kExitPartialFailure : kExitOk;
}

int cmd_synth(int n_scenes, const RunConfig& cfg, const std::string& out_dir, std::ostream& log) {
  if (n_scenes < 0) throw std::invalid_argument("cmd_synth: negative scene count");
  fs::create_directories(out_dir);

  Rng seeder(cfg.seed);
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < n_scenes; ++i) {
    const uint64_t scene_seed = seeder.next_u64();
    const rl::Scene scene = rl::make_synthetic_scene(cfg.scene, scene_seed);
    const std::string stem = scene_stem(i);
    const std::string image_name = stem + ".ppm";
    const std::string truth_name = stem + ".json";
    save_image(scene.image, (fs::path(out_dir) / image_name).string());
    rl::save_scene_truth(scene, image_name, (fs::path(out_dir) / truth_name).string());
    rows.push_back({std::to_string(i), image_name, truth_name,
                    std::to_string(scene.instances.size())});
    log << "wrote " << image_name << " (" << scene.instances.size() << " instances)\n";
  }
  write_csv((fs::path(out_dir) / "manifest.csv").string(),
            {"scene_id", "image", "truth", "instances"}, rows);
  return kExitOk;
}

namespace {

struct CropPool {
  std::vector<net::Tensor3> crops;
  std::vector<int> labels;
};

// Classifier training set: ground-truth crops plus the crops the trained
// policy actually emits (matched to an instance at IoU >= 0.5), all taken
// from the enhanced images the classifier will see at recognition time.
CropPool build_crop_pool(const std::vector<rl::Scene>& scenes, const rl::Policy& policy,
                         const RunConfig& cfg) {
  CropPool pool;
  Rng rng(cfg.seed ^ 0x5eedc0ffeeull);
  for (const rl::Scene& scene : scenes) {
    const RgbImage enhanced = enhance(scene.image, cfg.enhance, cfg.fast);
    for (const rl::Instance& inst : scene.instances) {
      pool.crops.push_back(rl::crop_resize(enhanced, inst.box, cfg.crop_size));
      pool.labels.push_back(inst.class_id);
    }
    const rl::Rollout roll = rl::greedy_rollout(policy, enhanced.width, enhanced.height, cfg.rl,
                                                rng, &scene);
    for (const rl::BoundingBox& box : roll.emitted) {
      double best = 0.0;
      int best_class = -1;
      for (const rl::Instance& inst : scene.instances) {
        const double v = rl::iou(box, inst.box);
        if (v > best) {
          best = v;
          best_class = inst.class_id;
        }
      }
      if (best >= 0.5) {
        pool.crops.push_back(rl::crop_resize(enhanced, box, cfg.crop_size));
        pool.labels.push_back(best_class);
      }
    }
  }
  return pool;
}

}  // namespace

int cmd_train(const std::string& corpus_dir, const RunConfig& cfg, const std::string& out_dir,
              std::ostream& log) {
  const std::vector<std::string> files = corpus_scene_files(corpus_dir);
  if (files.empty()) {
    log << "error: no ground truth found under " << corpus_dir << "\n";
    return kExitUsageError;
  }
  std::vector<rl::Scene> scenes;
  scenes.reserve(files.size());
  for (const std::string& f : files) scenes.push_back(rl::load_scene(f));

  fs::create_directories(out_dir);
  log << "training policy on " << scenes.size() << " scenes, " << cfg.rl.episodes
      << " episodes\n";
  const rl::TrainResult tr = rl::train(scenes, cfg.rl);

  const CropPool pool = build_crop_pool(scenes, tr.policy, cfg);
  net::Network net(net::NetSpec::desk_default(3), cfg.seed);
  Rng batch_rng(cfg.seed ^ 0xba7c4b00ull);
  constexpr int kBatch = 16;
  constexpr double kLearnRate = 0.5;

  std::vector<double> losses;
  losses.reserve(static_cast<size_t>(cfg.rl.episodes));
  for (int step = 0; step < cfg.rl.episodes; ++step) {
    std::vector<net::Tensor3> batch;
    std::vector<int> labels;
    for (int b = 0; b < kBatch; ++b) {
      const int pick = batch_rng.uniform_int(static_cast<int>(pool.crops.size()));
      batch.push_back(pool.crops[static_cast<size_t>(pick)]);
      labels.push_back(pool.labels[static_cast<size_t>(pick)]);
    }
    losses.push_back(net.train_step(batch, labels, kLearnRate));
  }

  std::vector<std::vector<std::string>> rows;
  for (int e = 0; e < cfg.rl.episodes; ++e) {
    rows.push_back({std::to_string(e), fmt_double(tr.episode_returns[static_cast<size_t>(e)]),
                    fmt_double(losses[static_cast<size_t>(e)])});
  }
  write_csv((fs::path(out_dir) / "training.csv").string(), {"episode", "return", "loss"}, rows);
  net.save((fs::path(out_dir) / "model.lfnet").string());
  tr.policy.save((fs::path(out_dir) / "policy.lfpol").string());
  log << "wrote model.lfnet, policy.lfpol, training.csv\n";
  return kExitOk;
}

int cmd_recognize(const std::vector<std::string>& inputs, const std::string& net_path,
                  const std::string& policy_path, const RunConfig& cfg,
                  const std::string& out_dir, std::ostream& log) {
  std::optional<net::Network> net;
  rl::Policy policy;
  try {
    net.emplace(net::Network::load(net_path));
    policy = rl::Policy::load(policy_path);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitUsageError;
  }

  fs::create_directories(out_dir);
  std::vector<std::vector<std::string>> rows;
  int failures = 0;
  for (const std::string& input : inputs) {
    try {
      const RgbImage img = load_as_rgb(input);
      const fs::path truth_path = fs::path(input).replace_extension(".json");
      rl::Scene truth;
      const rl::Scene* truth_ptr = nullptr;
      if (fs::exists(truth_path)) {
        truth = rl::load_scene(truth_path.string());
        truth_ptr = &truth;
      }
      const rl::RecognitionResult res = rl::recognize(img, policy, *net, cfg.enhance, cfg.rl,
                                                      cfg.fast, truth_ptr, cfg.crop_size);
      for (const rl::Detection& d : res.detections) {
        rows.push_back({input, std::to_string(d.box.x), std::to_string(d.box.y),
                        std::to_string(d.box.w), std::to_string(d.box.h),
                        std::to_string(d.class_id), fmt_double(d.score),
                        fmt_double(res.episode_quality)});
      }
      log << input << ": " << res.detections.size() << " detections\n";
    } catch (const std::exception& e) {
      ++failures;
      log << "error: " << input << ": " << e.what() << "\n";
    }
  }
  write_csv((fs::path(out_dir) / "detections.csv").string(),
            {"path", "x", "y", "w", "h", "class_id", "score", "episode_quality"}, rows);
  return failures ? kExitPartialFailure : kExitOk;
}

int cmd_bench(const std::string& corpus_dir, const RunConfig& cfg,
              const std::optional<std::string>& net_path,
              const std::optional<std::string>& policy_path, const std::string& out_dir,
              std::ostream& log) {
  const std::vector<std::string> files = corpus_scene_files(corpus_dir);
  if (files.empty()) {
    log << "error: no scenes under " << corpus_dir << "\n";
    return kExitUsageError;
  }

  std::optional<net::Network> net;
  rl::Policy policy;
  try {
    if (net_path) net.emplace(net::Network::load(*net_path));
    else net.emplace(net::NetSpec::desk_default(3), cfg.seed);
    if (policy_path) policy = rl::Policy::load(*policy_path);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitUsageError;
  }

  fs::create_directories(out_dir);
  constexpr int kReps = 5;
  std::vector<std::vector<std::string>> rows;
  double direct_total = 0.0, fast_total = 0.0;

  for (size_t id = 0; id < files.size(); ++id) {
    const rl::Scene scene = rl::load_scene(files[id]);
    for (const bool fast : {false, true}) {
      auto one_run = [&]() {
        const auto t0 = std::chrono::steady_clock::now();
        const RgbImage enhanced = enhance(scene.image, cfg.enhance, fast);
        const auto t1 = std::chrono::steady_clock::now();
        (void)rl::recognize_enhanced(enhanced, policy, *net, cfg.rl, nullptr, cfg.crop_size);
        const auto t2 = std::chrono::steady_clock::now();
        return BenchRecord{static_cast<int>(id), fast ? "fast" : "direct", ms_between(t0, t1),
                           ms_between(t1, t2), ms_between(t0, t2)};
      };

      one_run();  // warm-up, discarded
      std::vector<BenchRecord> runs;
      for (int r = 0; r < kReps; ++r) runs.push_back(one_run());
      // Report the median-total run so the triple stays self-consistent.
      std::sort(runs.begin(), runs.end(),
                [](const BenchRecord& a, const BenchRecord& b) { return a.total_ms < b.total_ms; });
      const BenchRecord& med = runs[kReps / 2];

      rows.push_back({std::to_string(med.target_id), med.method, fmt_double(med.enhance_ms),
                      fmt_double(med.recognize_ms), fmt_double(med.total_ms)});
      (fast ? fast_total : direct_total) += med.total_ms;
      log << "scene " << id << " " << med.method << ": " << med.total_ms << " ms\n";
    }
  }

  const double ratio = fast_total > 0.0 ? direct_total / fast_total : 0.0;
  rows.push_back({"summary", "fast/direct_speedup", "", "", fmt_double(ratio)});
  write_csv((fs::path(out_dir) / "bench.csv").string(),
            {"target_id", "method", "enhance_ms", "recognize_ms", "total_ms"}, rows);
  log << "speedup_ratio=" << ratio << "\n";
  return ratio > 1.0 ? kExitOk : kExitPartialFailure;
}

int cmd_metrics(const std::vector<std::string>& inputs, const std::string& out_dir,
                std::ostream& log) {
  fs::create_directories(out_dir);
  std::vector<std::vector<std::string>> rows;
  int failures = 0;
  for (const std::string& input : inputs) {
    try {
      rows.push_back(metrics_row(input, compute_metrics(load_as_rgb(input))));
    } catch (const std::exception& e) {
      ++failures;
      log << "error: " << input << ": " << e.what() << "\n";
    }
  }
  write_csv((fs::path(out_dir) / "metrics.csv").string(), kMetricsHeader, rows);
  return failures ? kExitPartialFailure : kExitOk;
}

}  // namespace lumenfix::harness
