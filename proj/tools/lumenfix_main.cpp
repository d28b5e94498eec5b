// lumenfix: low-light enhancement + RL fixation recognition toolchain.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lumenfix/harness.hpp"

using lumenfix::harness::kExitUsageError;

namespace {

struct CliOptions {
  lumenfix::harness::RunConfig run;
  std::string config_path;
  std::string out_dir = ".";
  std::optional<uint64_t> seed_flag;
  std::optional<int> episodes_flag;
  bool direct = false;
};

void add_common(CLI::App* cmd, CliOptions& opt, bool with_speed_flags = true) {
  cmd->add_option("--config", opt.config_path, "JSON config file");
  cmd->add_option("--out", opt.out_dir, "Output directory");
  cmd->add_option("--seed", opt.seed_flag, "PRNG seed (wins over config and env)");
  if (with_speed_flags) {
    cmd->add_flag("--direct", opt.direct, "Use the direct bilateral filter");
    cmd->add_flag("!--fast", opt.direct, "Use the grid-accelerated path (default)");
  }
}

// Seed precedence: --seed flag, then LUMENFIX_SEED, then config, then 42.
void resolve_seed(CliOptions& opt) {
  if (const char* env = std::getenv("LUMENFIX_SEED")) {
    opt.run.seed = std::strtoull(env, nullptr, 10);
    opt.run.rl.seed = opt.run.seed;
  }
  if (opt.seed_flag) {
    opt.run.seed = *opt.seed_flag;
    opt.run.rl.seed = *opt.seed_flag;
  }
  if (opt.episodes_flag) opt.run.rl.episodes = *opt.episodes_flag;
  opt.run.fast = !opt.direct;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Low-light image enhancement and unordered-target recognition"};
  app.require_subcommand(1);

  CliOptions opt;
  std::vector<std::string> inputs;
  std::string corpus_dir;
  std::string net_path = "model.lfnet";
  std::string policy_path = "policy.lfpol";
  std::optional<std::string> bench_net, bench_policy;
  int n_scenes = 8;
  int n_targets = 0;

  CLI::App* enhance = app.add_subcommand("enhance", "Enhance images, report quality metrics");
  enhance->add_option("inputs", inputs, "PPM/PGM images");
  add_common(enhance, opt);

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic low-light corpus");
  synth->add_option("--scenes", n_scenes, "Number of scenes");
  synth->add_option("--width", opt.run.scene.width, "Scene width");
  synth->add_option("--height", opt.run.scene.height, "Scene height");
  synth->add_option("--targets", n_targets, "Exact targets per scene (default 1..3)");
  synth->add_option("--spread", opt.run.scene.position_spread,
                    "Target position spread in [0, 1]");
  add_common(synth, opt, false);

  CLI::App* train = app.add_subcommand("train", "Train fixation policy and RoI classifier");
  train->add_option("--corpus", corpus_dir, "Synth corpus directory")->required();
  train->add_option("--episodes", opt.episodes_flag, "Training episodes");
  add_common(train, opt);

  CLI::App* recognize = app.add_subcommand("recognize", "Detect and classify targets");
  recognize->add_option("inputs", inputs, "Images to recognize");
  recognize->add_option("--net", net_path, "Classifier checkpoint");
  recognize->add_option("--policy", policy_path, "Policy checkpoint");
  add_common(recognize, opt);

  CLI::App* bench = app.add_subcommand("bench", "Time direct vs fast paths over a corpus");
  bench->add_option("--corpus", corpus_dir, "Synth corpus directory")->required();
  bench->add_option("--net", bench_net, "Classifier checkpoint (optional)");
  bench->add_option("--policy", bench_policy, "Policy checkpoint (optional)");
  add_common(bench, opt);

  CLI::App* metrics = app.add_subcommand("metrics", "Quality metrics per image");
  metrics->add_option("inputs", inputs, "Images to measure");
  add_common(metrics, opt, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!opt.config_path.empty()) {
      if (train->parsed()) {
        opt.run.rl = lumenfix::rl::RLConfig::from_json_file(opt.config_path);
        opt.run.seed = opt.run.rl.seed;
      } else {
        opt.run.enhance = lumenfix::EnhanceConfig::from_json_file(opt.config_path);
      }
    }
    resolve_seed(opt);
    if (n_targets > 0) {
      opt.run.scene.min_targets = n_targets;
      opt.run.scene.max_targets = n_targets;
    }

    if (enhance->parsed()) return lumenfix::harness::cmd_enhance(inputs, opt.run, opt.out_dir);
    if (synth->parsed()) return lumenfix::harness::cmd_synth(n_scenes, opt.run, opt.out_dir);
    if (train->parsed()) return lumenfix::harness::cmd_train(corpus_dir, opt.run, opt.out_dir);
    if (recognize->parsed())
      return lumenfix::harness::cmd_recognize(inputs, net_path, policy_path, opt.run, opt.out_dir);
    if (bench->parsed())
      return lumenfix::harness::cmd_bench(corpus_dir, opt.run, bench_net, bench_policy,
                                          opt.out_dir);
    if (metrics->parsed()) return lumenfix::harness::cmd_metrics(inputs, opt.out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsageError;
  }
  return kExitUsageError;
}
