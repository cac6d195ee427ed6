#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mixcycle/dataio.hpp"
#include "mixcycle/geometry.hpp"

namespace mixcycle {

struct Proposal {
  Box7 box;
  double score = 0.0;  // strictly inside (0, 1)
};

struct TrackerOutput {
  std::vector<Proposal> proposals;
  std::vector<double> point_fg_scores;  // aligned with the search cloud
  std::size_t selected_index = 0;
  Box7 selected;
  PointCloud predicted_target;  // search points inside `selected`
};

// Bookkeeping a harness attaches to each track call: the position (within
// its tracklet) of the frame the search cloud came from, the world-frame box
// it was canonicalized around, and any rigid transform applied after
// canonicalization. Trackers that match appearance ignore it; the hidden-GT
// oracle replays it so its output goes through the exact operation sequence
// the harness used for labels.
struct TrackContext {
  int frame_pos = -1;
  std::optional<Box7> ref_world;
  std::optional<RigidXform> post_xform;
};

class Tracker {
 public:
  virtual ~Tracker() = default;
  virtual TrackerOutput track(const PointCloud& search, const Template& tmpl,
                              const TrackContext& ctx = {}) const = 0;
};

// Exhaustive pose grid around the template prior, scored by nearest-neighbor
// kernel affinity minus a motion penalty; scores are a softmax over the grid.
struct GridMatchParams {
  double sigma_m = 0.3;        // affinity kernel bandwidth
  double motion_weight = 0.1;  // penalty per metre of offset from the prior
  double temperature = 10.0;   // softmax sharpness over raw scores
  double grid_extent_m = 1.5;  // half-extent of the xy offset grid
  double grid_step_m = 0.15;   // xy offset spacing
  int yaw_steps = 5;           // yaw offsets spanning +-5 degrees
};

// Width of the sigmoid that converts signed distance-to-box-surface into a
// per-point foreground score.
inline constexpr double kFgSigmoidWidthM = 0.1;

TrackerOutput grid_track(const PointCloud& search, const Template& tmpl,
                         const GridMatchParams& params);

class GridTracker : public Tracker {
 public:
  GridTracker() = default;
  explicit GridTracker(const GridMatchParams& params) : params_(params) {}

  const GridMatchParams& params() const { return params_; }

  TrackerOutput track(const PointCloud& search, const Template& tmpl,
                      const TrackContext& ctx = {}) const override;

 private:
  GridMatchParams params_;
};

// Test oracle that answers with the hidden ground truth instead of matching
// appearance: it maps the world GT box of ctx.frame_pos through the same
// canonicalization (and optional post-transform) the harness applied to the
// search cloud, so a harness comparing its output against a pseudo label
// built the same way sees bit-identical boxes.
class OracleTracker : public Tracker {
 public:
  OracleTracker(std::vector<Box7> gt_by_frame_pos, double eps = 1e-4)
      : gt_(std::move(gt_by_frame_pos)), eps_(eps) {}
  explicit OracleTracker(const Tracklet& tracklet, double eps = 1e-4);

  TrackerOutput track(const PointCloud& search, const Template& tmpl,
                      const TrackContext& ctx = {}) const override;

 private:
  std::vector<Box7> gt_;
  double eps_;
};

// Single-shot oracle answer for a known local-frame GT box.
TrackerOutput oracle_track(const PointCloud& search, const Box7& local_gt,
                           double eps = 1e-4);

}  // namespace mixcycle
