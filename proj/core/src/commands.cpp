#include "mixcycle/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "mixcycle/errors.hpp"
#include "mixcycle/eval.hpp"
#include "mixcycle/rng.hpp"

namespace mixcycle {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write: " + file.string());
  out << text;
  if (!out) throw DataError("short write: " + file.string());
}

// Written before any computation; output paths are stored relative to the
// run directory so identical runs into different directories stay
// byte-identical.
void write_run_manifest(const std::filesystem::path& out_dir,
                        const std::string& command, std::uint64_t seed,
                        const std::map<std::string, std::string>& inputs,
                        const std::vector<std::string>& outputs,
                        const KeyValueConfig* config) {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = kToolkitVersion;
  j["seed"] = seed;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["config"] = config ? nlohmann::json(config->entries())
                       : nlohmann::json::object();
  write_text_file(out_dir / "run_manifest.json", j.dump(2) + "\n");
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory: " + dir.string());
}

const std::set<std::string> kSynthKeys{
    "n_tracklets",    "n_frames",         "n_object_points",
    "object_width_m", "object_length_m",  "object_height_m",
    "start_z_m",      "dropout_rate",     "sensor_noise_m",
    "clutter_per_m2", "arena_half_extent_m", "start_spread_m",
    "speed_max_m",    "yaw_rate_max_rad", "size_jitter_frac",
};

const std::set<std::string> kTrackerKeys{
    "sigma_m",       "motion_weight", "temperature",
    "grid_extent_m", "grid_step_m",   "yaw_steps",
};

const std::set<std::string> kCycleKeys{
    "n_steps",      "max_dx_m",        "max_dy_m",        "max_dz_m",
    "max_dtheta_rad", "eta",           "fixed_lambda",    "gamma_self",
    "gamma_con",    "rho_cla",         "rho_prop",        "rho_reg",
    "rho_box",      "positive_dist_m", "negative_dist_m", "search_radius_m",
    "template_cap",
};

const std::set<std::string> kFitKeys{
    "method",           "population",      "elite_frac",
    "iterations",       "batch_size",      "objective",
    "sigma_m_lo",       "sigma_m_hi",      "motion_weight_lo",
    "motion_weight_hi", "temperature_lo",  "temperature_hi",
    "grid_extent_m_lo", "grid_extent_m_hi", "grid_step_m_lo",
    "grid_step_m_hi",
};

const std::set<std::string> kEvalKeys{"search_radius_m", "template_cap"};

std::set<std::string> merge_keys(std::initializer_list<std::set<std::string>> sets) {
  std::set<std::string> out;
  for (const auto& s : sets) out.insert(s.begin(), s.end());
  return out;
}

}  // namespace

SynthDatasetConfig parse_synth_config(const KeyValueConfig& cfg) {
  cfg.require_known_keys(kSynthKeys);
  SynthDatasetConfig c;
  c.n_tracklets = cfg.get_int("n_tracklets", c.n_tracklets);
  c.base.n_frames = cfg.get_int("n_frames", c.base.n_frames);
  c.base.n_object_points = cfg.get_int("n_object_points", c.base.n_object_points);
  c.base.object_width_m = cfg.get_double("object_width_m", c.base.object_width_m);
  c.base.object_length_m = cfg.get_double("object_length_m", c.base.object_length_m);
  c.base.object_height_m = cfg.get_double("object_height_m", c.base.object_height_m);
  c.base.start_z_m = cfg.get_double("start_z_m", c.base.start_z_m);
  c.base.dropout_rate = cfg.get_double("dropout_rate", c.base.dropout_rate);
  c.base.sensor_noise_m = cfg.get_double("sensor_noise_m", c.base.sensor_noise_m);
  c.base.clutter_per_m2 = cfg.get_double("clutter_per_m2", c.base.clutter_per_m2);
  c.base.arena_half_extent_m =
      cfg.get_double("arena_half_extent_m", c.base.arena_half_extent_m);
  c.start_spread_m = cfg.get_double("start_spread_m", c.start_spread_m);
  c.speed_max_m = cfg.get_double("speed_max_m", c.speed_max_m);
  c.yaw_rate_max_rad = cfg.get_double("yaw_rate_max_rad", c.yaw_rate_max_rad);
  c.size_jitter_frac = cfg.get_double("size_jitter_frac", c.size_jitter_frac);
  return c;
}

GridMatchParams parse_tracker_config(const KeyValueConfig& cfg) {
  GridMatchParams p;
  p.sigma_m = cfg.get_double("sigma_m", p.sigma_m);
  p.motion_weight = cfg.get_double("motion_weight", p.motion_weight);
  p.temperature = cfg.get_double("temperature", p.temperature);
  p.grid_extent_m = cfg.get_double("grid_extent_m", p.grid_extent_m);
  p.grid_step_m = cfg.get_double("grid_step_m", p.grid_step_m);
  p.yaw_steps = cfg.get_int("yaw_steps", p.yaw_steps);
  return p;
}

CycleConfig parse_cycle_config(const KeyValueConfig& cfg, std::uint64_t seed) {
  CycleConfig c;
  c.seed = seed;
  c.n_steps = cfg.get_int("n_steps", c.n_steps);
  c.xform_bounds.max_dx_m = cfg.get_double("max_dx_m", c.xform_bounds.max_dx_m);
  c.xform_bounds.max_dy_m = cfg.get_double("max_dy_m", c.xform_bounds.max_dy_m);
  c.xform_bounds.max_dz_m = cfg.get_double("max_dz_m", c.xform_bounds.max_dz_m);
  c.xform_bounds.max_dtheta_rad =
      cfg.get_double("max_dtheta_rad", c.xform_bounds.max_dtheta_rad);
  c.mix.eta = cfg.get_double("eta", c.mix.eta);
  if (cfg.has("fixed_lambda")) {
    c.mix.fixed_lambda = cfg.get_double("fixed_lambda", 1.0);
  }
  c.loss.gamma_self = cfg.get_double("gamma_self", c.loss.gamma_self);
  c.loss.gamma_con = cfg.get_double("gamma_con", c.loss.gamma_con);
  c.loss.rho_cla = cfg.get_double("rho_cla", c.loss.rho_cla);
  c.loss.rho_prop = cfg.get_double("rho_prop", c.loss.rho_prop);
  c.loss.rho_reg = cfg.get_double("rho_reg", c.loss.rho_reg);
  c.loss.rho_box = cfg.get_double("rho_box", c.loss.rho_box);
  c.loss.positive_dist_m = cfg.get_double("positive_dist_m", c.loss.positive_dist_m);
  c.loss.negative_dist_m = cfg.get_double("negative_dist_m", c.loss.negative_dist_m);
  c.search_radius_m = cfg.get_double("search_radius_m", c.search_radius_m);
  c.template_cap = static_cast<std::size_t>(
      cfg.get_int("template_cap", static_cast<int>(c.template_cap)));
  return c;
}

FitConfig parse_fit_config(const KeyValueConfig& cfg) {
  FitConfig f;
  f.method = cfg.get_string("method", f.method);
  f.population = cfg.get_int("population", f.population);
  f.elite_frac = cfg.get_double("elite_frac", f.elite_frac);
  f.iterations = cfg.get_int("iterations", f.iterations);
  f.batch_size = cfg.get_int("batch_size", f.batch_size);
  const std::string obj = cfg.get_string("objective", "combined");
  if (obj == "combined") {
    f.objective = FitObjective::Combined;
  } else if (obj == "supervised") {
    f.objective = FitObjective::SupervisedOnly;
  } else {
    throw ConfigError("objective must be 'combined' or 'supervised', got '" +
                      obj + "'");
  }
  f.bounds.sigma_m.lo = cfg.get_double("sigma_m_lo", f.bounds.sigma_m.lo);
  f.bounds.sigma_m.hi = cfg.get_double("sigma_m_hi", f.bounds.sigma_m.hi);
  f.bounds.motion_weight.lo =
      cfg.get_double("motion_weight_lo", f.bounds.motion_weight.lo);
  f.bounds.motion_weight.hi =
      cfg.get_double("motion_weight_hi", f.bounds.motion_weight.hi);
  f.bounds.temperature.lo = cfg.get_double("temperature_lo", f.bounds.temperature.lo);
  f.bounds.temperature.hi = cfg.get_double("temperature_hi", f.bounds.temperature.hi);
  f.bounds.grid_extent_m.lo =
      cfg.get_double("grid_extent_m_lo", f.bounds.grid_extent_m.lo);
  f.bounds.grid_extent_m.hi =
      cfg.get_double("grid_extent_m_hi", f.bounds.grid_extent_m.hi);
  f.bounds.grid_step_m.lo = cfg.get_double("grid_step_m_lo", f.bounds.grid_step_m.lo);
  f.bounds.grid_step_m.hi = cfg.get_double("grid_step_m_hi", f.bounds.grid_step_m.hi);
  return f;
}

void cmd_synth(const std::filesystem::path& config_path, std::uint64_t seed,
               const std::filesystem::path& out_dir) {
  const KeyValueConfig cfg = KeyValueConfig::parse_file(config_path);
  const SynthDatasetConfig synth_cfg = parse_synth_config(cfg);

  ensure_dir(out_dir);
  write_run_manifest(out_dir, "synth", seed,
                     {{"config", config_path.string()}},
                     {"manifest.jsonl", "clouds/"}, &cfg);
  ensure_dir(out_dir / "clouds");

  const std::vector<Tracklet> tracklets = synth_dataset(synth_cfg, seed);
  std::ostringstream manifest;
  for (std::size_t t = 0; t < tracklets.size(); ++t) {
    const Tracklet& tr = tracklets[t];
    const auto slash = tr.id.find('/');
    const std::string seq = tr.id.substr(0, slash);
    const std::string track = tr.id.substr(slash + 1);
    for (const Frame& f : tr.frames) {
      char name[64];
      std::snprintf(name, sizeof(name), "clouds/t%03zu_f%03d.bin", t,
                    f.frame_index);
      write_cloud_bin(out_dir / name, f.cloud);
      const Box7& b = f.label();
      nlohmann::json line;
      line["seq"] = seq;
      line["frame"] = f.frame_index;
      line["cloud_path"] = name;
      line["box"] = {b.center.x, b.center.y, b.center.z,
                     b.width,    b.length,   b.height,  b.yaw};
      line["track_id"] = track;
      line["category"] = tr.category;
      manifest << line.dump() << "\n";
    }
  }
  write_text_file(out_dir / "manifest.jsonl", manifest.str());
}

void cmd_sample_labels(const std::filesystem::path& dataset_manifest,
                       double rate, std::uint64_t seed,
                       const std::filesystem::path& out_dir) {
  if (!(rate > 0.0 && rate <= 1.0)) {
    throw ConfigError("label sampling rate must lie in (0, 1]");
  }
  ensure_dir(out_dir);
  write_run_manifest(out_dir, "sample-labels", seed,
                     {{"dataset", dataset_manifest.string()},
                      {"rate", fmt_double(rate)}},
                     {"labels.json"}, nullptr);
  const std::vector<Tracklet> tracklets = load_tracklets(dataset_manifest);
  const LabelMask mask = sample_labels(tracklets, rate, seed);
  mask.save(out_dir / "labels.json");
}

void cmd_train(const std::filesystem::path& dataset_manifest,
               const std::filesystem::path& mask_path,
               const std::filesystem::path& config_path, std::uint64_t seed,
               const std::filesystem::path& out_dir) {
  const KeyValueConfig cfg = KeyValueConfig::parse_file(config_path);
  cfg.require_known_keys(merge_keys({kTrackerKeys, kCycleKeys, kFitKeys}));
  const GridMatchParams initial = parse_tracker_config(cfg);
  const CycleConfig cycle_cfg = parse_cycle_config(cfg, seed);
  const FitConfig fit_cfg = parse_fit_config(cfg);

  ensure_dir(out_dir);
  write_run_manifest(out_dir, "train", seed,
                     {{"dataset", dataset_manifest.string()},
                      {"mask", mask_path.string()},
                      {"config", config_path.string()}},
                     {"params.json", "train_log.jsonl"}, &cfg);

  const std::vector<Tracklet> tracklets = load_tracklets(dataset_manifest);
  const LabelMask mask = LabelMask::load(mask_path);
  const FitResult result = fit(initial, tracklets, mask, cycle_cfg, fit_cfg);

  std::ostringstream log;
  for (const FitLogEntry& e : result.log) log << to_json_line(e) << "\n";
  write_text_file(out_dir / "train_log.jsonl", log.str());
  write_tracker_params(out_dir / "params.json", result.params);
}

void cmd_eval(const std::filesystem::path& dataset_manifest,
              const std::optional<std::filesystem::path>& params_path,
              bool oracle,
              const std::optional<std::filesystem::path>& config_path,
              std::uint64_t seed, const std::filesystem::path& out_dir) {
  if (oracle && params_path) {
    throw ConfigError("eval: pass either --oracle or --params, not both");
  }
  KeyValueConfig cfg;
  if (config_path) {
    cfg = KeyValueConfig::parse_file(*config_path);
    cfg.require_known_keys(kEvalKeys);
  }
  OpeConfig ope_cfg;
  ope_cfg.search_radius_m = cfg.get_double("search_radius_m", ope_cfg.search_radius_m);
  ope_cfg.template_cap = static_cast<std::size_t>(
      cfg.get_int("template_cap", static_cast<int>(ope_cfg.template_cap)));
  ope_cfg.seed = seed;

  GridMatchParams params;
  if (params_path) params = read_tracker_params(*params_path);

  ensure_dir(out_dir);
  std::map<std::string, std::string> inputs{{"dataset", dataset_manifest.string()}};
  if (params_path) inputs["params"] = params_path->string();
  if (config_path) inputs["config"] = config_path->string();
  inputs["tracker"] = oracle ? "oracle" : "grid";
  write_run_manifest(out_dir, "eval", seed, inputs,
                     {"ope_frames.csv", "ope_summary.csv"},
                     config_path ? &cfg : nullptr);

  std::vector<Tracklet> tracklets = load_tracklets(dataset_manifest);
  std::sort(tracklets.begin(), tracklets.end(),
            [](const Tracklet& a, const Tracklet& b) { return a.id < b.id; });

  const GridTracker grid(params);

  std::ostringstream frames_csv;
  frames_csv << "tracklet,category,frame,iou,center_dist_m\n";
  struct CatAgg {
    std::vector<double> ious;
    std::vector<double> dists;
  };
  std::map<std::string, CatAgg> by_category;

  for (const Tracklet& tr : tracklets) {
    if (tr.frames.size() < 2) {
      std::cerr << "eval: skipping tracklet " << tr.id
                << " (fewer than 2 frames)\n";
      continue;
    }
    OpeResult res;
    if (oracle) {
      const OracleTracker tracker(tr);
      res = run_ope(tracker, tr, ope_cfg);
    } else {
      res = run_ope(grid, tr, ope_cfg);
    }
    CatAgg& agg = by_category[tr.category];
    for (int i = 0; i < res.frame_count; ++i) {
      frames_csv << tr.id << ',' << tr.category << ','
                 << tr.frames[static_cast<std::size_t>(i) + 1].frame_index << ','
                 << fmt_double(res.ious[static_cast<std::size_t>(i)]) << ','
                 << fmt_double(res.center_dists[static_cast<std::size_t>(i)])
                 << "\n";
      agg.ious.push_back(res.ious[static_cast<std::size_t>(i)]);
      agg.dists.push_back(res.center_dists[static_cast<std::size_t>(i)]);
    }
  }

  std::ostringstream summary_csv;
  summary_csv << "category,frames,success,precision\n";
  double wsum_s = 0.0, wsum_p = 0.0;
  std::size_t total_frames = 0;
  for (const auto& [cat, agg] : by_category) {
    const double s = success_auc(agg.ious);
    const double p = precision_auc(agg.dists);
    summary_csv << cat << ',' << agg.ious.size() << ',' << fmt_double(s) << ','
                << fmt_double(p) << "\n";
    wsum_s += s * static_cast<double>(agg.ious.size());
    wsum_p += p * static_cast<double>(agg.ious.size());
    total_frames += agg.ious.size();
  }
  if (total_frames > 0) {
    summary_csv << "Mean," << total_frames << ','
                << fmt_double(wsum_s / static_cast<double>(total_frames)) << ','
                << fmt_double(wsum_p / static_cast<double>(total_frames)) << "\n";
  }
  write_text_file(out_dir / "ope_frames.csv", frames_csv.str());
  write_text_file(out_dir / "ope_summary.csv", summary_csv.str());
}

namespace {

std::pair<std::string, std::size_t> parse_frame_selector(const std::string& sel) {
  const auto colon = sel.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == sel.size()) {
    throw ConfigError("frame selector must look like '<seq>/<track>:<pos>': " +
                      sel);
  }
  try {
    const int pos = std::stoi(sel.substr(colon + 1));
    if (pos < 0) throw std::invalid_argument("negative");
    return {sel.substr(0, colon), static_cast<std::size_t>(pos)};
  } catch (const std::exception&) {
    throw ConfigError("bad frame position in selector: " + sel);
  }
}

const Tracklet& find_tracklet(const std::vector<Tracklet>& tracklets,
                              const std::string& id) {
  for (const Tracklet& t : tracklets) {
    if (t.id == id) return t;
  }
  throw DataError("tracklet not found in dataset: " + id);
}

}  // namespace

void cmd_mix(const std::filesystem::path& dataset_manifest,
             const std::string& frame_a, const std::string& frame_b,
             const std::string& lambda_spec, std::uint64_t seed,
             const std::filesystem::path& out_dir) {
  const auto [id_a, pos_a] = parse_frame_selector(frame_a);
  const auto [id_b, pos_b] = parse_frame_selector(frame_b);

  ensure_dir(out_dir);
  write_run_manifest(out_dir, "mix", seed,
                     {{"dataset", dataset_manifest.string()},
                      {"frame_a", frame_a},
                      {"frame_b", frame_b},
                      {"lambda", lambda_spec}},
                     {"mixed.bin", "mix_report.json"}, nullptr);

  const std::vector<Tracklet> tracklets = load_tracklets(dataset_manifest);
  const Tracklet& ta = find_tracklet(tracklets, id_a);
  const Tracklet& tb = find_tracklet(tracklets, id_b);
  if (pos_a >= ta.frames.size() || pos_b >= tb.frames.size()) {
    throw DataError("frame position out of range");
  }
  const Frame& fa = ta.frames[pos_a];
  const Frame& fb = tb.frames[pos_b];
  if (!fa.has_label() || !fb.has_label()) {
    throw DataError("mix: both frames must carry boxes");
  }

  Rng rng(derive_seed(seed, {0x313a}));
  double lambda;
  if (lambda_spec == "beta") {
    lambda = sample_lambda(MixConfig{}, rng);
  } else {
    try {
      std::size_t used = 0;
      lambda = std::stod(lambda_spec, &used);
      if (used != lambda_spec.size()) throw std::invalid_argument(lambda_spec);
    } catch (const std::exception&) {
      throw ConfigError("lambda must be a number in [0,1] or 'beta': " +
                        lambda_spec);
    }
    if (!(lambda >= 0.0 && lambda <= 1.0)) {
      throw ConfigError("lambda outside [0, 1]: " + lambda_spec);
    }
  }

  const std::size_t n_obj_a = segment_fg_bg(fa.cloud, fa.label()).first.size();
  const MixedSample mixed =
      sotmixup(fa.cloud, fa.label(), fb.cloud, fb.label(), lambda, rng);
  write_cloud_bin(out_dir / "mixed.bin", mixed.cloud);

  const std::size_t k_a = static_cast<std::size_t>(
      std::llround(mixed.lambda * static_cast<double>(n_obj_a)));
  nlohmann::json rep;
  rep["lambda"] = mixed.lambda;
  rep["n_object_a"] = n_obj_a;
  rep["k_a"] = k_a;
  rep["k_b"] = n_obj_a - k_a;
  rep["total_points"] = mixed.cloud.size();
  rep["fg_points"] =
      std::count(mixed.fg_mask.begin(), mixed.fg_mask.end(), true);
  write_text_file(out_dir / "mix_report.json", rep.dump(2) + "\n");
}

}  // namespace mixcycle
