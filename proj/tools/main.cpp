#include <cstdint>
#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mixcycle/commands.hpp"
#include "mixcycle/errors.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"point-cloud single-object tracking toolkit"};
  app.set_version_flag("--version", std::string(mixcycle::kToolkitVersion));
  app.require_subcommand(1);

  std::string config_path, dataset, mask, params, frame_a, frame_b;
  std::string lambda_spec = "beta";
  std::string out_dir;
  std::uint64_t seed = 0;
  double rate = 0.1;
  bool oracle = false;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic dataset");
  synth->add_option("--config", config_path, "generator config file")->required();
  synth->add_option("--seed", seed, "rng seed");
  synth->add_option("--out", out_dir, "output directory")->required();

  CLI::App* sample =
      app.add_subcommand("sample-labels", "sample a sparse label mask");
  sample->add_option("--dataset", dataset, "dataset manifest")->required();
  sample->add_option("--rate", rate, "fraction of frames to keep labeled");
  sample->add_option("--seed", seed, "rng seed");
  sample->add_option("--out", out_dir, "output directory")->required();

  CLI::App* train = app.add_subcommand("train", "fit tracker parameters");
  train->add_option("--dataset", dataset, "dataset manifest")->required();
  train->add_option("--mask", mask, "label mask file")->required();
  train->add_option("--config", config_path, "training config file")->required();
  train->add_option("--seed", seed, "rng seed");
  train->add_option("--out", out_dir, "output directory")->required();

  CLI::App* eval_cmd = app.add_subcommand("eval", "run one-pass evaluation");
  eval_cmd->add_option("--dataset", dataset, "dataset manifest")->required();
  eval_cmd->add_option("--params", params, "tracker parameter file");
  eval_cmd->add_flag("--oracle", oracle, "evaluate the label-replay tracker");
  eval_cmd->add_option("--config", config_path, "evaluation config file");
  eval_cmd->add_option("--seed", seed, "rng seed");
  eval_cmd->add_option("--out", out_dir, "output directory")->required();

  CLI::App* mix = app.add_subcommand("mix", "mix two frames' targets");
  mix->add_option("--dataset", dataset, "dataset manifest")->required();
  mix->add_option("--frame-a", frame_a, "anchor frame '<seq>/<track>:<pos>'")
      ->required();
  mix->add_option("--frame-b", frame_b, "donor frame '<seq>/<track>:<pos>'")
      ->required();
  mix->add_option("--lambda", lambda_spec, "mixing ratio in [0,1], or 'beta'");
  mix->add_option("--seed", seed, "rng seed");
  mix->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (synth->parsed()) {
      mixcycle::cmd_synth(config_path, seed, out_dir);
    } else if (sample->parsed()) {
      mixcycle::cmd_sample_labels(dataset, rate, seed, out_dir);
    } else if (train->parsed()) {
      mixcycle::cmd_train(dataset, mask, config_path, seed, out_dir);
    } else if (eval_cmd->parsed()) {
      std::optional<std::filesystem::path> params_path;
      if (!params.empty()) params_path = params;
      std::optional<std::filesystem::path> cfg_path;
      if (!config_path.empty()) cfg_path = config_path;
      mixcycle::cmd_eval(dataset, params_path, oracle, cfg_path, seed, out_dir);
    } else if (mix->parsed()) {
      mixcycle::cmd_mix(dataset, frame_a, frame_b, lambda_spec, seed, out_dir);
    }
  } catch (const mixcycle::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mixcycle::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
