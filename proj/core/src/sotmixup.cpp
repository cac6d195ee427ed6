#include "mixcycle/sotmixup.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mixcycle/errors.hpp"
#include "mixcycle/rng.hpp"

namespace mixcycle {

std::pair<PointCloud, PointCloud> segment_fg_bg(const PointCloud& pc,
                                                const Box7& box) {
  const std::vector<bool> mask = points_in_box(pc, box);
  return {select_points(pc, mask, true), select_points(pc, mask, false)};
}

double sample_lambda(const MixConfig& cfg, Rng& rng) {
  if (cfg.fixed_lambda) {
    const double l = *cfg.fixed_lambda;
    if (!(l >= 0.0 && l <= 1.0)) {
      throw ConfigError("mix: fixed lambda outside [0, 1]");
    }
    return l;
  }
  if (!(cfg.eta > 0.0)) throw ConfigError("mix: eta must be > 0");
  return sample_beta(rng, cfg.eta, cfg.eta);
}

namespace {

// k distinct draws (partial Fisher-Yates); keeps original relative order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k,
                                                    Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng.index(n - i);
    std::swap(idx[i], idx[j]);
  }
  idx.resize(k);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

MixedSample passthrough_mix(const PointCloud& cloud, const Box7& box) {
  MixedSample out;
  out.cloud = cloud;
  out.label_box = box;
  out.lambda = 1.0;
  out.fg_mask = points_in_box(cloud, box);
  return out;
}

MixedSample sotmixup(const PointCloud& anchor_cloud, const Box7& anchor_box,
                     const PointCloud& donor_cloud, const Box7& donor_box,
                     double lambda, Rng& rng) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("sotmixup: lambda outside [0, 1]");
  }
  auto [fg_a, bg_a] = segment_fg_bg(anchor_cloud, anchor_box);
  if (fg_a.empty()) return passthrough_mix(anchor_cloud, anchor_box);

  const PointCloud donor_fg = segment_fg_bg(donor_cloud, donor_box).first;
  if (donor_fg.empty()) return passthrough_mix(anchor_cloud, anchor_box);

  const std::size_t n_obj = fg_a.size();
  const std::size_t k_a = static_cast<std::size_t>(
      std::llround(lambda * static_cast<double>(n_obj)));
  const std::size_t k_b = n_obj - k_a;

  MixedSample out;
  out.label_box = anchor_box;
  out.lambda = lambda;
  out.cloud = bg_a;
  out.fg_mask.assign(bg_a.size(), false);

  for (std::size_t i : sample_without_replacement(n_obj, k_a, rng)) {
    out.cloud.push_back(fg_a[i]);
    out.fg_mask.push_back(true);
  }

  // donor object points re-posed from the donor box into the anchor box
  if (k_b > 0) {
    const PointCloud donor_local = to_box_frame(donor_fg, donor_box);
    std::vector<std::size_t> picks;
    if (donor_local.size() >= k_b) {
      picks = sample_without_replacement(donor_local.size(), k_b, rng);
    } else {
      picks.reserve(k_b);
      for (std::size_t i = 0; i < k_b; ++i) picks.push_back(rng.index(donor_local.size()));
    }
    for (std::size_t i : picks) {
      const Vec3 q = from_box_frame(donor_local[i], anchor_box);
      out.cloud.push_back(q);
      // a donor point can stick out of the anchor box; then it is noise
      out.fg_mask.push_back(point_in_box(q, anchor_box));
    }
  }
  return out;
}

}  // namespace mixcycle
