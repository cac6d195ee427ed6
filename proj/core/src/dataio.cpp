#include "mixcycle/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mixcycle/errors.hpp"
#include "mixcycle/rng.hpp"

namespace mixcycle {

namespace {
LabelAuditHook g_label_audit;
}

void set_label_audit_hook(LabelAuditHook hook) { g_label_audit = std::move(hook); }

const Box7& Frame::label() const {
  if (!gt_) {
    throw std::logic_error("Frame::label: frame has no ground-truth box");
  }
  if (g_label_audit) g_label_audit(tracklet_id_, frame_index);
  return *gt_;
}

bool LabelMask::is_labeled(const std::string& tracklet_id,
                           std::size_t frame_pos) const {
  auto it = flags.find(tracklet_id);
  if (it == flags.end() || frame_pos >= it->second.size()) return false;
  return it->second[frame_pos];
}

std::size_t LabelMask::count_labeled() const {
  std::size_t n = 0;
  for (const auto& [id, v] : flags) {
    n += static_cast<std::size_t>(std::count(v.begin(), v.end(), true));
  }
  return n;
}

std::string LabelMask::to_json() const {
  nlohmann::json j;
  j["sampling_rate"] = sampling_rate;
  j["seed"] = seed;
  nlohmann::json f = nlohmann::json::object();
  for (const auto& [id, v] : flags) f[id] = v;
  j["flags"] = f;
  return j.dump(2) + "\n";
}

LabelMask LabelMask::from_json(const std::string& text) {
  LabelMask m;
  try {
    nlohmann::json j = nlohmann::json::parse(text);
    m.sampling_rate = j.at("sampling_rate").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [id, v] : j.at("flags").items()) {
      m.flags[id] = v.get<std::vector<bool>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("label mask: ") + e.what());
  }
  return m;
}

void LabelMask::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write label mask: " + file.string());
  out << to_json();
}

LabelMask LabelMask::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot read label mask: " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

LabelMask sample_labels(const std::vector<Tracklet>& tracklets, double rate,
                        std::uint64_t seed) {
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw ConfigError("sampling rate must lie in [0, 1]");
  }
  LabelMask mask;
  mask.sampling_rate = rate;
  mask.seed = seed;
  std::vector<std::pair<std::string, std::size_t>> slots;
  for (const Tracklet& t : tracklets) {
    mask.flags[t.id] = std::vector<bool>(t.frames.size(), false);
    for (std::size_t i = 0; i < t.frames.size(); ++i) slots.emplace_back(t.id, i);
  }
  if (slots.empty()) return mask;
  const std::size_t want = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(rate * double(slots.size()))));
  const std::size_t take = std::min(want, slots.size());
  Rng rng(derive_seed(seed, {0x6c61626573ULL}));
  // partial Fisher-Yates: the first `take` entries are a uniform sample
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng.index(slots.size() - i);
    std::swap(slots[i], slots[j]);
    mask.flags[slots[i].first][slots[i].second] = true;
  }
  return mask;
}

PointCloud read_cloud_bin(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("cannot open cloud: " + file.string());
  const std::streamoff bytes = in.tellg();
  if (bytes % (4 * sizeof(float)) != 0) {
    throw DataError("cloud not a multiple of 16 bytes: " + file.string());
  }
  in.seekg(0);
  const std::size_t n = static_cast<std::size_t>(bytes) / (4 * sizeof(float));
  PointCloud pc;
  pc.reserve(n);
  std::vector<float> buf(4 * n);
  if (n > 0 &&
      !in.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float)))) {
    throw DataError("short read on cloud: " + file.string());
  }
  for (std::size_t i = 0; i < n; ++i) {
    pc.push_back({buf[4 * i], buf[4 * i + 1], buf[4 * i + 2]});
  }
  return pc;
}

void write_cloud_bin(const std::filesystem::path& file, const PointCloud& pc) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw DataError("cannot write cloud: " + file.string());
  std::vector<float> buf;
  buf.reserve(pc.size() * 4);
  for (const Vec3& p : pc) {
    buf.push_back(static_cast<float>(p.x));
    buf.push_back(static_cast<float>(p.y));
    buf.push_back(static_cast<float>(p.z));
    buf.push_back(0.0f);
  }
  if (!buf.empty()) {
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size() * sizeof(float)));
  }
  if (!out) throw DataError("short write on cloud: " + file.string());
}

std::vector<Tracklet> load_tracklets(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw DataError("cannot open manifest: " + manifest.string());
  const std::filesystem::path root = manifest.parent_path();

  struct Entry {
    int frame;
    std::string cloud_path;
    Box7 box;
    std::string category;
  };
  // key -> entries, insertion-ordered
  std::vector<std::pair<std::string, std::vector<Entry>>> groups;
  std::map<std::string, std::size_t> index;

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
      const std::string seq = j.at("seq").get<std::string>();
      const std::string track = j.at("track_id").get<std::string>();
      Entry e;
      e.frame = j.at("frame").get<int>();
      e.cloud_path = j.at("cloud_path").get<std::string>();
      e.category = j.at("category").get<std::string>();
      const auto b = j.at("box").get<std::vector<double>>();
      if (b.size() != 7) {
        throw DataError("manifest line " + std::to_string(lineno) +
                        ": box must have 7 values");
      }
      e.box = Box7{{b[0], b[1], b[2]}, b[3], b[4], b[5], normalize_yaw(b[6])};
      const std::string key = seq + "/" + track;
      auto [it, fresh] = index.try_emplace(key, groups.size());
      if (fresh) groups.push_back({key, {}});
      groups[it->second].second.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      throw DataError("manifest line " + std::to_string(lineno) + ": " +
                      ex.what());
    }
  }

  std::vector<Tracklet> out;
  out.reserve(groups.size());
  for (auto& [key, entries] : groups) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.frame < b.frame; });
    Tracklet t;
    t.id = key;
    t.category = entries.front().category;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i > 0 && entries[i].frame == entries[i - 1].frame) {
        throw DataError("duplicate frame " + std::to_string(entries[i].frame) +
                        " in tracklet " + key);
      }
      PointCloud pc = read_cloud_bin(root / entries[i].cloud_path);
      t.frames.emplace_back(std::move(pc), entries[i].frame, entries[i].box, key);
    }
    out.push_back(std::move(t));
  }
  return out;
}

PointCloud template_update(const PointCloud& first_target,
                           const PointCloud& prev_target, std::size_t cap,
                           Rng& rng) {
  PointCloud merged = first_target;
  merged.insert(merged.end(), prev_target.begin(), prev_target.end());
  if (merged.size() <= cap) return merged;
  std::vector<std::size_t> idx(merged.size());
  std::iota(idx.begin(), idx.end(), 0);
  for (std::size_t i = 0; i < cap; ++i) {
    const std::size_t j = i + rng.index(idx.size() - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(cap);
  std::sort(idx.begin(), idx.end());  // keep original point order
  PointCloud out;
  out.reserve(cap);
  for (std::size_t i : idx) out.push_back(merged[i]);
  return out;
}

std::optional<TrainingTriplet> make_training_triplet(
    const Tracklet& tracklet, std::size_t labeled_pos, const XformBounds& bounds,
    Rng& rng, double search_radius_m, std::size_t n_successors) {
  if (labeled_pos >= tracklet.frames.size()) {
    throw std::invalid_argument("make_training_triplet: position out of range");
  }
  if (!tracklet.frames[labeled_pos].has_label()) {
    throw std::invalid_argument("make_training_triplet: frame has no label");
  }
  if (n_successors < 1) {
    throw std::invalid_argument("make_training_triplet: need >= 1 successor");
  }
  if (labeled_pos + n_successors >= tracklet.frames.size()) return std::nullopt;

  const Box7 gt0 = tracklet.frames[labeled_pos].label();
  TrainingTriplet trip;
  trip.tracklet_id = tracklet.id;
  trip.label0 = to_box_frame(gt0, gt0);

  for (std::size_t step = 0; step <= n_successors; ++step) {
    const Frame& f = tracklet.frames[labeled_pos + step];
    Box7 ref = gt0;
    if (step > 0) {
      // offset the crop center the way a previous prediction would be
      ref = apply_xform(gt0, sample_xform(bounds, rng));
    }
    TripletFrame tf;
    tf.ref_world = ref;
    tf.frame_pos = static_cast<int>(labeled_pos + step);
    tf.search = to_box_frame(crop_search_area(f.cloud, ref, search_radius_m), ref);
    trip.frames.push_back(std::move(tf));
  }
  return trip;
}

namespace {

float to_f32(double v) { return static_cast<float>(v); }

Vec3 round_f32(const Vec3& p) {
  return {to_f32(p.x), to_f32(p.y), to_f32(p.z)};
}

}  // namespace

Tracklet synth_tracklet(const SynthConfig& cfg, std::uint64_t seed,
                        const std::string& id) {
  if (cfg.n_frames < 1 || cfg.n_object_points < 1) {
    throw ConfigError("synth: n_frames and n_object_points must be positive");
  }
  if (cfg.dropout_rate < 0.0 || cfg.dropout_rate >= 1.0) {
    throw ConfigError("synth: dropout_rate must lie in [0, 1)");
  }
  Rng rng(derive_seed(seed, {fnv1a64(id)}));

  // Sample the rigid shape once: points on the box surface, pulled slightly
  // inward so float32 rounding cannot push them across the boundary.
  constexpr double kInsetM = 2e-3;
  const double hw = 0.5 * cfg.object_width_m - kInsetM;
  const double hl = 0.5 * cfg.object_length_m - kInsetM;
  const double hh = 0.5 * cfg.object_height_m - kInsetM;
  if (hw <= 0.0 || hl <= 0.0 || hh <= 0.0) {
    throw ConfigError("synth: object extents too small");
  }
  const double ax = cfg.object_width_m * cfg.object_height_m;   // +-x faces
  const double ay = cfg.object_length_m * cfg.object_height_m;  // +-y faces
  const double az = cfg.object_length_m * cfg.object_width_m;   // +-z faces
  const double total = 2.0 * (ax + ay + az);
  PointCloud shape;
  shape.reserve(static_cast<std::size_t>(cfg.n_object_points));
  for (int i = 0; i < cfg.n_object_points; ++i) {
    const double pick = rng.uniform(0.0, total);
    const double u = rng.uniform(-1.0, 1.0);
    const double v = rng.uniform(-1.0, 1.0);
    Vec3 p;
    if (pick < 2.0 * ax) {
      p = {pick < ax ? hl : -hl, u * hw, v * hh};
    } else if (pick < 2.0 * (ax + ay)) {
      p = {u * hl, pick < 2.0 * ax + ay ? hw : -hw, v * hh};
    } else {
      p = {u * hl, v * hw, pick < 2.0 * (ax + ay) + az ? hh : -hh};
    }
    shape.push_back(p);
  }

  Tracklet t;
  t.id = id;
  t.category = "Synth";
  const double area = 4.0 * cfg.arena_half_extent_m * cfg.arena_half_extent_m;
  const double clutter_mean = std::max(0.0, cfg.clutter_per_m2) * area;

  for (int k = 0; k < cfg.n_frames; ++k) {
    Box7 pose;
    pose.center = {cfg.start_x_m + k * cfg.velocity_x_m,
                   cfg.start_y_m + k * cfg.velocity_y_m, cfg.start_z_m};
    pose.width = cfg.object_width_m;
    pose.length = cfg.object_length_m;
    pose.height = cfg.object_height_m;
    pose.yaw = normalize_yaw(cfg.start_yaw_rad + k * cfg.yaw_rate_rad);

    PointCloud cloud;
    for (const Vec3& s : shape) {
      if (cfg.dropout_rate > 0.0 && rng.bernoulli(cfg.dropout_rate)) continue;
      Vec3 p = s;
      if (cfg.sensor_noise_m > 0.0) {
        p.x += rng.gaussian(0.0, cfg.sensor_noise_m);
        p.y += rng.gaussian(0.0, cfg.sensor_noise_m);
        p.z += rng.gaussian(0.0, cfg.sensor_noise_m);
      }
      cloud.push_back(round_f32(from_box_frame(p, pose)));
    }
    if (clutter_mean > 0.0) {
      std::poisson_distribution<int> clutter_count(clutter_mean);
      const int n = clutter_count(rng.engine());
      for (int i = 0; i < n; ++i) {
        Vec3 p{cfg.start_x_m + rng.uniform(-cfg.arena_half_extent_m,
                                           cfg.arena_half_extent_m),
               cfg.start_y_m + rng.uniform(-cfg.arena_half_extent_m,
                                           cfg.arena_half_extent_m),
               rng.uniform(cfg.start_z_m - cfg.object_height_m,
                           cfg.start_z_m + cfg.object_height_m)};
        cloud.push_back(round_f32(p));
      }
    }
    t.frames.emplace_back(std::move(cloud), k, pose, id);
  }
  return t;
}

std::vector<Tracklet> synth_dataset(const SynthDatasetConfig& cfg,
                                    std::uint64_t seed) {
  if (cfg.n_tracklets < 1) {
    throw ConfigError("synth: n_tracklets must be positive");
  }
  if (!(cfg.size_jitter_frac >= 0.0 && cfg.size_jitter_frac < 1.0)) {
    throw ConfigError("synth: size_jitter_frac must lie in [0, 1)");
  }
  std::vector<Tracklet> out;
  out.reserve(static_cast<std::size_t>(cfg.n_tracklets));
  for (int t = 0; t < cfg.n_tracklets; ++t) {
    Rng rng(derive_seed(seed, {0x5e7, static_cast<std::uint64_t>(t)}));
    SynthConfig c = cfg.base;
    c.start_x_m += rng.uniform(-cfg.start_spread_m, cfg.start_spread_m);
    c.start_y_m += rng.uniform(-cfg.start_spread_m, cfg.start_spread_m);
    c.start_yaw_rad = rng.uniform(-3.14159265358979323846, 3.14159265358979323846);
    c.velocity_x_m = rng.uniform(-cfg.speed_max_m, cfg.speed_max_m);
    c.velocity_y_m = rng.uniform(-cfg.speed_max_m, cfg.speed_max_m);
    c.yaw_rate_rad = rng.uniform(-cfg.yaw_rate_max_rad, cfg.yaw_rate_max_rad);
    const double js = 1.0 + rng.uniform(-cfg.size_jitter_frac, cfg.size_jitter_frac);
    c.object_width_m *= js;
    c.object_length_m *= js;
    c.object_height_m *= js;
    out.push_back(synth_tracklet(c, derive_seed(seed, {0xc10d, static_cast<std::uint64_t>(t)}),
                                 "synth/" + std::to_string(t)));
  }
  return out;
}

}  // namespace mixcycle
