#pragma once

#include <cstdint>
#include <vector>

#include "mixcycle/dataio.hpp"
#include "mixcycle/tracking.hpp"

namespace mixcycle {

struct OpeResult {
  std::vector<double> ious;          // one per tracked frame (positions 1..)
  std::vector<double> center_dists;  // metres, same alignment
  double success = 0.0;              // AUC of the IoU threshold curve, [0,100]
  double precision = 0.0;            // AUC of the distance curve, [0,100]
  int frame_count = 0;
};

struct OpeConfig {
  double search_radius_m = kSearchRadiusM;
  std::size_t template_cap = 512;
  std::uint64_t seed = 0;
};

// One-pass evaluation: the first frame's prediction is its GT box; every
// later frame is cropped around the previous prediction, canonicalized, and
// tracked with the running template (first target merged with the latest
// prediction). All frames must carry GT (used for initialization and
// metrics only) and the tracklet needs at least two frames.
OpeResult run_ope(const Tracker& tracker, const Tracklet& tracklet,
                  const OpeConfig& cfg = {});

// Mean over thresholds {0, 0.01, ..., 1} of the fraction of frames with
// iou > t, times 100.
double success_auc(const std::vector<double>& ious);

// Mean over thresholds {0, 0.02, ..., 2} metres of the fraction of frames
// with dist < t, times 100.
double precision_auc(const std::vector<double>& dists);

}  // namespace mixcycle
