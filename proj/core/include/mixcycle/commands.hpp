#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "mixcycle/config.hpp"
#include "mixcycle/cycles.hpp"

namespace mixcycle {

inline constexpr const char* kToolkitVersion = "0.1.0";

// Typed views of the flat config files.
SynthDatasetConfig parse_synth_config(const KeyValueConfig& cfg);
GridMatchParams parse_tracker_config(const KeyValueConfig& cfg);
CycleConfig parse_cycle_config(const KeyValueConfig& cfg, std::uint64_t seed);
FitConfig parse_fit_config(const KeyValueConfig& cfg);

// Batch commands. Each creates out_dir, writes run_manifest.json before any
// computation, and is a pure function of (inputs, config, seed): rerunning
// with identical arguments reproduces every output byte.
//
// synth: clouds/*.bin + manifest.jsonl
void cmd_synth(const std::filesystem::path& config_path, std::uint64_t seed,
               const std::filesystem::path& out_dir);

// sample-labels: labels.json
void cmd_sample_labels(const std::filesystem::path& dataset_manifest,
                       double rate, std::uint64_t seed,
                       const std::filesystem::path& out_dir);

// train: params.json + train_log.jsonl
void cmd_train(const std::filesystem::path& dataset_manifest,
               const std::filesystem::path& mask_path,
               const std::filesystem::path& config_path, std::uint64_t seed,
               const std::filesystem::path& out_dir);

// eval: ope_frames.csv + ope_summary.csv
void cmd_eval(const std::filesystem::path& dataset_manifest,
              const std::optional<std::filesystem::path>& params_path,
              bool oracle,
              const std::optional<std::filesystem::path>& config_path,
              std::uint64_t seed, const std::filesystem::path& out_dir);

// mix: mixed.bin + mix_report.json. Frame selectors look like
// "<seq>/<track_id>:<frame_pos>"; lambda_spec is a number in [0,1] or "beta".
void cmd_mix(const std::filesystem::path& dataset_manifest,
             const std::string& frame_a, const std::string& frame_b,
             const std::string& lambda_spec, std::uint64_t seed,
             const std::filesystem::path& out_dir);

}  // namespace mixcycle
