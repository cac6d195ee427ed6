#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mixcycle/dataio.hpp"
#include "mixcycle/geometry.hpp"
#include "mixcycle/losses.hpp"
#include "mixcycle/sotmixup.hpp"
#include "mixcycle/tracking.hpp"

namespace mixcycle {

struct CycleConfig {
  int n_steps = 2;           // forward horizon; consistency spans steps 0..n-1
  XformBounds xform_bounds;  // pseudo-label transform ranges
  MixConfig mix;
  LossConfig loss;
  std::uint64_t seed = 0;
  double search_radius_m = kSearchRadiusM;
  std::size_t template_cap = 512;
};

// A canonicalized labeled frame: `search` lives in the frame of `ref_world`
// (so `box` is the GT expressed there). `frame_pos`/`ref_world` feed the
// tracker context; appearance trackers ignore them.
struct LabeledSample {
  PointCloud search;
  Box7 box;
  int frame_pos = -1;
  std::optional<Box7> ref_world;
};

LabeledSample canonical_labeled_sample(const Tracklet& tracklet, std::size_t pos,
                                       double search_radius_m = kSearchRadiusM);

// Track from a frame into a mixed, rigidly moved copy of itself; the moved
// box is the pseudo label. Without a donor (or with an empty object region)
// the mix degenerates to the plain frame with lambda = 1.
LossReport self_cycle(const Tracker& tracker, const LabeledSample& frame0,
                      const std::optional<LabeledSample>& donor,
                      const CycleConfig& cfg, Rng& rng);

// Track forward through the triplet, then backward through freshly moved
// copies of each search area; returns consistency losses for steps 0..n-1
// (step 0 compares against the frame-0 GT, later steps against the forward
// pseudo labels, all with lambda = 1).
std::vector<LossReport> forward_backward_cycle(const Tracker& tracker,
                                               const TrainingTriplet& triplet,
                                               const CycleConfig& cfg, Rng& rng);

struct ParamRange {
  double lo = 0.0;
  double hi = 1.0;
};

struct FitBounds {
  ParamRange sigma_m{0.05, 0.8};
  ParamRange motion_weight{0.01, 0.5};
  ParamRange temperature{1.0, 50.0};
  ParamRange grid_extent_m{0.9, 1.8};
  ParamRange grid_step_m{0.1, 0.3};
};

// What the derivative-free search minimizes: the combined cycle objective on
// labeled anchors plus their unlabeled successors, or the plain supervised
// per-frame loss on labeled frames only (the comparison baseline).
enum class FitObjective { Combined, SupervisedOnly };

struct FitConfig {
  std::string method = "cem";
  int population = 32;
  double elite_frac = 0.25;
  int iterations = 30;
  FitBounds bounds;
  int batch_size = 6;  // anchors per objective evaluation (fixed once)
  FitObjective objective = FitObjective::Combined;
};

struct FitLogEntry {
  int iter = 0;
  double best = 0.0;  // best objective seen so far
  double mean = 0.0;  // mean objective of this iteration's population
  GridMatchParams params;  // best-so-far parameters
};

struct FitResult {
  GridMatchParams params;
  std::vector<FitLogEntry> log;
};

std::string to_json_line(const FitLogEntry& e);

// Cross-entropy-method search over the five continuous GridMatchParams
// fields (yaw_steps stays at its initial value). The objective is the mean
// loss over a mini-batch of anchors drawn once from the labeled mask, with
// all per-anchor randomness re-seeded per evaluation, so the objective is a
// deterministic function of the parameters.
FitResult fit(const GridMatchParams& initial,
              const std::vector<Tracklet>& tracklets, const LabelMask& mask,
              const CycleConfig& cycle_cfg, const FitConfig& fit_cfg);

}  // namespace mixcycle
