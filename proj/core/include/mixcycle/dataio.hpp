#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mixcycle/geometry.hpp"

namespace mixcycle {

class Rng;

// Called whenever a ground-truth box is read through Frame::label().
// Installed by tests to audit that training never touches unlabeled GT.
using LabelAuditHook = std::function<void(const std::string& tracklet_id,
                                          int frame_index)>;
void set_label_audit_hook(LabelAuditHook hook);

class Frame {
 public:
  Frame() = default;
  Frame(PointCloud cloud, int frame_index, std::optional<Box7> gt,
        std::string tracklet_id = {})
      : cloud(std::move(cloud)),
        frame_index(frame_index),
        tracklet_id_(std::move(tracklet_id)),
        gt_(std::move(gt)) {}

  PointCloud cloud;
  int frame_index = 0;

  bool has_label() const { return gt_.has_value(); }
  // Reads the ground-truth box; fires the audit hook.
  const Box7& label() const;

 private:
  std::string tracklet_id_;
  std::optional<Box7> gt_;
};

struct Tracklet {
  std::string id;        // "<seq>/<track_id>"
  std::string category;  // e.g. "Car"
  std::vector<Frame> frames;
};

// Which frames may expose their GT box to training. Flags are indexed by
// frame position within each tracklet.
struct LabelMask {
  double sampling_rate = 1.0;
  std::uint64_t seed = 0;
  std::map<std::string, std::vector<bool>> flags;

  bool is_labeled(const std::string& tracklet_id, std::size_t frame_pos) const;
  std::size_t count_labeled() const;

  std::string to_json() const;
  static LabelMask from_json(const std::string& text);
  void save(const std::filesystem::path& file) const;
  static LabelMask load(const std::filesystem::path& file);
};

// Marks exactly max(1, round(rate * total_frames)) frames across the whole
// dataset, chosen by a seeded global shuffle.
LabelMask sample_labels(const std::vector<Tracklet>& tracklets, double rate,
                        std::uint64_t seed);

// Point cloud files: little-endian float32 records (x, y, z, intensity).
PointCloud read_cloud_bin(const std::filesystem::path& file);
void write_cloud_bin(const std::filesystem::path& file, const PointCloud& pc);

// Dataset manifest: one JSON object per line with keys
// seq, frame, cloud_path (relative to the manifest), box [cx,cy,cz,w,l,h,yaw],
// track_id, category. Frames are grouped into tracklets by (seq, track_id)
// and ordered by frame number.
std::vector<Tracklet> load_tracklets(const std::filesystem::path& manifest);

struct Template {
  PointCloud cloud;    // object-frame points
  Box7 prior_box;      // pose to search around, in the search cloud's frame
};

// Merges the first-frame target with the latest predicted target and
// subsamples (seeded, without replacement) down to `cap` points.
PointCloud template_update(const PointCloud& first_target,
                           const PointCloud& prev_target, std::size_t cap,
                           Rng& rng);

// One canonicalized search region. `ref_world` is the world-frame box the
// crop was centered on; trackers that replay hidden GT need it to map world
// truth into this frame. `frame_pos` is the frame's position within its
// tracklet.
struct TripletFrame {
  PointCloud search;
  Box7 ref_world;
  int frame_pos = -1;
};

struct TrainingTriplet {
  std::vector<TripletFrame> frames;  // anchor frame plus its successors
  Box7 label0;                       // frame-0 GT in its canonical frame
  std::string tracklet_id;
};

inline constexpr double kSearchRadiusM = 2.0;

// Builds the training sample anchored at `labeled_pos`: the anchor frame is
// cropped and canonicalized around its GT box; each successor is cropped
// around a fresh jittered copy of that box so the object is offset from the
// crop center the way it would be around a previous prediction. Returns
// nothing when fewer than `n_successors` successor frames exist.
std::optional<TrainingTriplet> make_training_triplet(
    const Tracklet& tracklet, std::size_t labeled_pos,
    const XformBounds& bounds, Rng& rng, double search_radius_m = kSearchRadiusM,
    std::size_t n_successors = 2);

// Synthetic rigid-object sequences: points sampled once on a box surface,
// moved with constant world velocity and yaw rate, thinned per frame by
// dropout, optionally jittered by sensor noise, plus fresh uniform clutter
// in an arena around the trajectory. Coordinates are rounded to float32 so
// round-trips through cloud files are lossless.
struct SynthConfig {
  int n_frames = 20;
  int n_object_points = 120;
  double object_width_m = 0.9;
  double object_length_m = 1.8;
  double object_height_m = 1.5;
  double start_x_m = 0.0;
  double start_y_m = 0.0;
  double start_z_m = 0.75;
  double start_yaw_rad = 0.0;
  double velocity_x_m = 0.12;   // per frame, world frame
  double velocity_y_m = 0.04;   // per frame, world frame
  double yaw_rate_rad = 0.02;   // per frame
  double dropout_rate = 0.0;    // per-point per-frame drop probability
  double sensor_noise_m = 0.0;  // per-axis gaussian jitter, 0 = exact rigid
  double clutter_per_m2 = 0.0;  // expected clutter density per frame
  double arena_half_extent_m = 8.0;
};

Tracklet synth_tracklet(const SynthConfig& cfg, std::uint64_t seed,
                        const std::string& id = "synth/0");

// A whole benchmark: n_tracklets sequences sharing `base`, each with its own
// start pose, velocity, yaw rate and slightly jittered object size.
struct SynthDatasetConfig {
  int n_tracklets = 10;
  SynthConfig base;
  double start_spread_m = 10.0;       // starts uniform in +-spread (x, y)
  double speed_max_m = 0.15;          // per-axis velocity uniform in +-max
  double yaw_rate_max_rad = 0.03;     // uniform in +-max
  double size_jitter_frac = 0.15;     // extents scaled by uniform [1-j, 1+j]
};

std::vector<Tracklet> synth_dataset(const SynthDatasetConfig& cfg,
                                    std::uint64_t seed);

}  // namespace mixcycle
