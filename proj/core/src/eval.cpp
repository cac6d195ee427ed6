#include "mixcycle/eval.hpp"

#include <stdexcept>

#include "mixcycle/errors.hpp"
#include "mixcycle/rng.hpp"

namespace mixcycle {

double success_auc(const std::vector<double>& ious) {
  if (ious.empty()) throw std::invalid_argument("success_auc: no frames");
  double acc = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double t = i / 100.0;
    std::size_t above = 0;
    for (double iou : ious) {
      if (iou > t) ++above;
    }
    acc += static_cast<double>(above) / static_cast<double>(ious.size());
  }
  return acc * 100.0 / 101.0;
}

double precision_auc(const std::vector<double>& dists) {
  if (dists.empty()) throw std::invalid_argument("precision_auc: no frames");
  double acc = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double t = 0.02 * i;
    std::size_t below = 0;
    for (double d : dists) {
      if (d < t) ++below;
    }
    acc += static_cast<double>(below) / static_cast<double>(dists.size());
  }
  return acc * 100.0 / 101.0;
}

OpeResult run_ope(const Tracker& tracker, const Tracklet& tracklet,
                  const OpeConfig& cfg) {
  if (tracklet.frames.size() < 2) {
    throw std::invalid_argument("run_ope: tracklet needs at least 2 frames");
  }
  for (const Frame& f : tracklet.frames) {
    if (!f.has_label()) {
      throw DataError("run_ope: unlabeled frame in tracklet " + tracklet.id);
    }
  }

  Rng rng(derive_seed(cfg.seed, {fnv1a64(tracklet.id)}));
  const Box7 gt0 = tracklet.frames[0].label();
  const PointCloud first_target = to_box_frame(
      select_points(tracklet.frames[0].cloud,
                    points_in_box(tracklet.frames[0].cloud, gt0)),
      gt0);

  OpeResult res;
  Box7 prev_world = gt0;
  PointCloud prev_target;  // no prediction yet; frame 1 uses the first target
  for (std::size_t k = 1; k < tracklet.frames.size(); ++k) {
    const Frame& f = tracklet.frames[k];
    const PointCloud search = to_box_frame(
        crop_search_area(f.cloud, prev_world, cfg.search_radius_m), prev_world);
    Template tmpl{template_update(first_target, prev_target, cfg.template_cap, rng),
                  to_box_frame(prev_world, prev_world)};
    const TrackContext ctx{static_cast<int>(k), prev_world, std::nullopt};
    const TrackerOutput out = tracker.track(search, tmpl, ctx);

    const Box7 pred_world = from_box_frame(out.selected, prev_world);
    const Box7 gt = f.label();
    res.ious.push_back(box_iou_3d(pred_world, gt));
    res.center_dists.push_back(center_distance(pred_world, gt));

    prev_target = to_box_frame(out.predicted_target, out.selected);
    prev_world = pred_world;
  }
  res.frame_count = static_cast<int>(res.ious.size());
  res.success = success_auc(res.ious);
  res.precision = precision_auc(res.center_dists);
  return res;
}

}  // namespace mixcycle
