#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "mixcycle/geometry.hpp"

namespace mixcycle {

class Rng;

struct MixConfig {
  double eta = 0.5;  // Beta(eta, eta) parameter for the mixing rate
  std::optional<double> fixed_lambda;  // bypass sampling when set
};

// cloud = background of the anchor frame plus a lambda-weighted blend of
// anchor and donor object points; fg_mask marks points inside label_box
// (donor points landing outside it count as background noise).
struct MixedSample {
  PointCloud cloud;
  Box7 label_box;
  double lambda = 1.0;
  std::vector<bool> fg_mask;
};

// (foreground, background) split by box containment.
std::pair<PointCloud, PointCloud> segment_fg_bg(const PointCloud& pc,
                                                const Box7& box);

double sample_lambda(const MixConfig& cfg, Rng& rng);

// Replaces a (1-lambda) fraction of the anchor's object points with donor
// object points re-posed into the anchor box: k_a = round(lambda * N) points
// keep coming from the anchor (sampled without replacement), the remaining
// N - k_a come from the donor (with replacement only when the donor has too
// few). Total point count is preserved. Degenerate cases (no anchor or no
// donor object points) fall back to the anchor frame with lambda = 1.
MixedSample sotmixup(const PointCloud& anchor_cloud, const Box7& anchor_box,
                     const PointCloud& donor_cloud, const Box7& donor_box,
                     double lambda, Rng& rng);

// The lambda = 1 path without a donor: the frame itself, fg by containment.
MixedSample passthrough_mix(const PointCloud& cloud, const Box7& box);

}  // namespace mixcycle
