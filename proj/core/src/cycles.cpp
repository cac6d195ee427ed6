#include "mixcycle/cycles.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "mixcycle/errors.hpp"
#include "mixcycle/rng.hpp"

namespace mixcycle {

namespace {
// stream tags for deriving independent seeds from one root
constexpr std::uint64_t kTagBatch = 0xb47c8;
constexpr std::uint64_t kTagDonor = 0xd0408;
constexpr std::uint64_t kTagTriplet = 0x7419;
constexpr std::uint64_t kTagEval = 0xe7a1;
constexpr std::uint64_t kTagCem = 0xce3;
}  // namespace

LabeledSample canonical_labeled_sample(const Tracklet& tracklet,
                                       std::size_t pos, double search_radius_m) {
  if (pos >= tracklet.frames.size()) {
    throw std::invalid_argument("canonical_labeled_sample: position out of range");
  }
  const Frame& f = tracklet.frames[pos];
  const Box7 gt = f.label();
  LabeledSample s;
  s.search = to_box_frame(crop_search_area(f.cloud, gt, search_radius_m), gt);
  s.box = to_box_frame(gt, gt);
  s.frame_pos = static_cast<int>(pos);
  s.ref_world = gt;
  return s;
}

LossReport self_cycle(const Tracker& tracker, const LabeledSample& frame0,
                      const std::optional<LabeledSample>& donor,
                      const CycleConfig& cfg, Rng& rng) {
  MixedSample mixed;
  if (donor) {
    const double lambda = sample_lambda(cfg.mix, rng);
    mixed = sotmixup(frame0.search, frame0.box, donor->search, donor->box,
                     lambda, rng);
  } else {
    mixed = passthrough_mix(frame0.search, frame0.box);
  }

  const RigidXform alpha = sample_xform(cfg.xform_bounds, rng);
  auto [moved, pseudo] = apply_xform(mixed.cloud, mixed.label_box, alpha);

  // template comes from the unmixed frame
  PointCloud first_target = to_box_frame(
      select_points(frame0.search, points_in_box(frame0.search, frame0.box)),
      frame0.box);
  Template tmpl{template_update(first_target, {}, cfg.template_cap, rng),
                frame0.box};

  TrackContext ctx{frame0.frame_pos, frame0.ref_world, alpha};
  const TrackerOutput out = tracker.track(moved, tmpl, ctx);
  return sot_loss(out, pseudo, mixed.fg_mask, mixed.lambda, cfg.loss);
}

std::vector<LossReport> forward_backward_cycle(const Tracker& tracker,
                                               const TrainingTriplet& triplet,
                                               const CycleConfig& cfg, Rng& rng) {
  if (triplet.frames.size() < 2) {
    throw std::invalid_argument(
        "forward_backward_cycle: need at least one successor frame");
  }
  const std::size_t n = triplet.frames.size() - 1;
  const Box7& label0 = triplet.label0;
  const TripletFrame& f0 = triplet.frames[0];

  const PointCloud first_target = to_box_frame(
      select_points(f0.search, points_in_box(f0.search, label0)), label0);
  const Box7 prior = label0;

  // forward: frame by frame with the usual template refresh
  std::vector<Box7> fwd(n + 1);
  fwd[0] = label0;
  PointCloud tmpl_cloud = template_update(first_target, {}, cfg.template_cap, rng);
  PointCloud last_pred = first_target;
  for (std::size_t k = 1; k <= n; ++k) {
    const TripletFrame& fk = triplet.frames[k];
    const TrackContext ctx{fk.frame_pos, fk.ref_world, std::nullopt};
    const TrackerOutput out =
        tracker.track(fk.search, Template{tmpl_cloud, prior}, ctx);
    fwd[k] = out.selected;
    last_pred = to_box_frame(out.predicted_target, out.selected);
    tmpl_cloud = template_update(first_target, last_pred, cfg.template_cap, rng);
  }

  // backward: template anchored at the forward final prediction, each step
  // re-tracked in a freshly moved copy of the search area
  const PointCloud anchor = last_pred;
  PointCloud btmpl = template_update(anchor, {}, cfg.template_cap, rng);
  std::vector<LossReport> reports(n);
  for (std::size_t k = n; k-- > 0;) {
    const TripletFrame& fk = triplet.frames[k];
    const RigidXform alpha = sample_xform(cfg.xform_bounds, rng);
    auto [moved, pseudo] = apply_xform(fk.search, fwd[k], alpha);
    const TrackContext ctx{fk.frame_pos, fk.ref_world, alpha};
    const TrackerOutput out =
        tracker.track(moved, Template{btmpl, prior}, ctx);
    reports[k] = sot_loss(out, pseudo, points_in_box(moved, pseudo), 1.0,
                          cfg.loss);
    btmpl = template_update(
        anchor, to_box_frame(out.predicted_target, out.selected),
        cfg.template_cap, rng);
  }
  return reports;
}

std::string to_json_line(const FitLogEntry& e) {
  nlohmann::json j;
  j["iter"] = e.iter;
  j["best"] = e.best;
  j["mean"] = e.mean;
  j["params"] = {{"sigma_m", e.params.sigma_m},
                 {"motion_weight", e.params.motion_weight},
                 {"temperature", e.params.temperature},
                 {"grid_extent_m", e.params.grid_extent_m},
                 {"grid_step_m", e.params.grid_step_m},
                 {"yaw_steps", e.params.yaw_steps}};
  return j.dump();
}

namespace {

struct AnchorCase {
  LabeledSample frame0;
  std::optional<LabeledSample> donor;
  std::optional<TrainingTriplet> triplet;
  std::uint64_t eval_seed = 0;
};

using ParamVec = std::array<double, 5>;

ParamVec to_vec(const GridMatchParams& p) {
  return {p.sigma_m, p.motion_weight, p.temperature, p.grid_extent_m,
          p.grid_step_m};
}

GridMatchParams to_params(const ParamVec& v, int yaw_steps) {
  GridMatchParams p;
  p.sigma_m = v[0];
  p.motion_weight = v[1];
  p.temperature = v[2];
  p.grid_extent_m = v[3];
  p.grid_step_m = std::min(v[4], v[3]);  // keep step <= extent
  p.yaw_steps = yaw_steps;
  return p;
}

void check_fit_config(const FitConfig& cfg) {
  if (cfg.method != "cem") {
    throw ConfigError("fit: unknown method '" + cfg.method + "'");
  }
  if (cfg.iterations < 0) throw ConfigError("fit: iterations must be >= 0");
  if (!(cfg.elite_frac > 0.0 && cfg.elite_frac <= 0.5)) {
    throw ConfigError("fit: elite_frac must lie in (0, 0.5]");
  }
  const int elite = std::max(
      1, static_cast<int>(std::llround(cfg.population * cfg.elite_frac)));
  if (cfg.population < 2 * elite) {
    throw ConfigError("fit: population must be at least twice the elite count");
  }
  if (cfg.batch_size < 1) throw ConfigError("fit: batch_size must be >= 1");
  const std::array<std::pair<ParamRange, const char*>, 5> ranges{{
      {cfg.bounds.sigma_m, "sigma_m"},
      {cfg.bounds.motion_weight, "motion_weight"},
      {cfg.bounds.temperature, "temperature"},
      {cfg.bounds.grid_extent_m, "grid_extent_m"},
      {cfg.bounds.grid_step_m, "grid_step_m"},
  }};
  for (const auto& [r, name] : ranges) {
    if (!(r.lo <= r.hi)) {
      throw ConfigError(std::string("fit: empty bound range for ") + name);
    }
  }
  if (!(cfg.bounds.sigma_m.lo > 0.0) || !(cfg.bounds.temperature.lo > 0.0) ||
      !(cfg.bounds.grid_step_m.lo > 0.0) ||
      !(cfg.bounds.grid_extent_m.lo > 0.0) ||
      !(cfg.bounds.motion_weight.lo >= 0.0)) {
    throw ConfigError("fit: bounds must respect tracker parameter domains");
  }
}

}  // namespace

FitResult fit(const GridMatchParams& initial,
              const std::vector<Tracklet>& tracklets, const LabelMask& mask,
              const CycleConfig& cycle_cfg, const FitConfig& fit_cfg) {
  check_fit_config(fit_cfg);
  if (cycle_cfg.n_steps < 1) throw ConfigError("cycles: n_steps must be >= 1");

  const bool combined = fit_cfg.objective == FitObjective::Combined;
  const std::size_t n_succ = static_cast<std::size_t>(cycle_cfg.n_steps);

  // labeled anchors in stable (tracklet, frame) order
  std::vector<std::pair<std::size_t, std::size_t>> labeled, anchors;
  for (std::size_t t = 0; t < tracklets.size(); ++t) {
    for (std::size_t p = 0; p < tracklets[t].frames.size(); ++p) {
      if (!mask.is_labeled(tracklets[t].id, p)) continue;
      labeled.emplace_back(t, p);
      if (!combined || p + n_succ < tracklets[t].frames.size()) {
        anchors.emplace_back(t, p);
      }
    }
  }
  if (anchors.empty()) {
    throw ConfigError(combined
                          ? "fit: no labeled frame has enough successor frames"
                          : "fit: mask labels no frames");
  }

  // fixed mini-batch of anchors for every objective evaluation
  {
    Rng batch_rng(derive_seed(cycle_cfg.seed, {kTagBatch}));
    const std::size_t take =
        std::min<std::size_t>(anchors.size(), fit_cfg.batch_size);
    for (std::size_t i = 0; i < take; ++i) {
      const std::size_t j = i + batch_rng.index(anchors.size() - i);
      std::swap(anchors[i], anchors[j]);
    }
    anchors.resize(take);
  }

  std::vector<AnchorCase> cases;
  cases.reserve(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const auto [t, p] = anchors[i];
    AnchorCase c;
    c.frame0 = canonical_labeled_sample(tracklets[t], p, cycle_cfg.search_radius_m);
    if (combined) {
      Rng donor_rng(derive_seed(cycle_cfg.seed, {kTagDonor, i}));
      std::size_t pick = donor_rng.index(labeled.size());
      if (labeled.size() > 1 && labeled[pick] == anchors[i]) {
        pick = (pick + 1) % labeled.size();
      }
      const auto [dt, dp] = labeled[pick];
      c.donor = canonical_labeled_sample(tracklets[dt], dp,
                                         cycle_cfg.search_radius_m);
      Rng trip_rng(derive_seed(cycle_cfg.seed, {kTagTriplet, i}));
      c.triplet = make_training_triplet(tracklets[t], p, cycle_cfg.xform_bounds,
                                        trip_rng, cycle_cfg.search_radius_m,
                                        n_succ);
      if (!c.triplet) continue;  // guarded by the anchor filter above
    }
    c.eval_seed = derive_seed(cycle_cfg.seed, {kTagEval, i});
    cases.push_back(std::move(c));
  }
  if (cases.empty()) throw ConfigError("fit: no usable training cases");

  const auto objective = [&](const GridMatchParams& params) {
    const GridTracker tracker(params);
    double sum = 0.0;
    for (const AnchorCase& c : cases) {
      Rng rng(c.eval_seed);
      const LossReport self =
          self_cycle(tracker, c.frame0, c.donor, cycle_cfg, rng);
      if (combined) {
        const std::vector<LossReport> cons =
            forward_backward_cycle(tracker, *c.triplet, cycle_cfg, rng);
        sum += combined_cycle_loss(self, cons.front(), cycle_cfg.loss);
      } else {
        sum += self.total;
      }
    }
    return sum / static_cast<double>(cases.size());
  };

  const ParamVec lo{fit_cfg.bounds.sigma_m.lo, fit_cfg.bounds.motion_weight.lo,
                    fit_cfg.bounds.temperature.lo,
                    fit_cfg.bounds.grid_extent_m.lo,
                    fit_cfg.bounds.grid_step_m.lo};
  const ParamVec hi{fit_cfg.bounds.sigma_m.hi, fit_cfg.bounds.motion_weight.hi,
                    fit_cfg.bounds.temperature.hi,
                    fit_cfg.bounds.grid_extent_m.hi,
                    fit_cfg.bounds.grid_step_m.hi};
  const auto clamp_vec = [&](ParamVec v) {
    for (int d = 0; d < 5; ++d) v[d] = std::clamp(v[d], lo[d], hi[d]);
    return v;
  };

  FitResult res;
  ParamVec mu = clamp_vec(to_vec(initial));
  ParamVec sigma;
  for (int d = 0; d < 5; ++d) sigma[d] = 0.25 * (hi[d] - lo[d]);

  GridMatchParams best_params = initial;
  double best = objective(initial);
  res.log.push_back({0, best, best, best_params});

  const int elite_count = std::max(
      1, static_cast<int>(std::llround(fit_cfg.population * fit_cfg.elite_frac)));

  for (int it = 1; it <= fit_cfg.iterations; ++it) {
    Rng rng(derive_seed(cycle_cfg.seed, {kTagCem, static_cast<std::uint64_t>(it)}));
    std::vector<ParamVec> members(fit_cfg.population);
    std::vector<double> scores(fit_cfg.population);
    double mean = 0.0;
    for (int m = 0; m < fit_cfg.population; ++m) {
      ParamVec v;
      for (int d = 0; d < 5; ++d) v[d] = rng.gaussian(mu[d], sigma[d]);
      members[m] = clamp_vec(v);
      scores[m] = objective(to_params(members[m], initial.yaw_steps));
      mean += scores[m];
      if (scores[m] < best) {
        best = scores[m];
        best_params = to_params(members[m], initial.yaw_steps);
      }
    }
    mean /= fit_cfg.population;

    std::vector<int> order(fit_cfg.population);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a] < scores[b]; });

    for (int d = 0; d < 5; ++d) {
      double m1 = 0.0, m2 = 0.0;
      for (int e = 0; e < elite_count; ++e) {
        const double x = members[order[e]][d];
        m1 += x;
        m2 += x * x;
      }
      m1 /= elite_count;
      m2 = m2 / elite_count - m1 * m1;
      mu[d] = m1;
      sigma[d] = std::max(std::sqrt(std::max(m2, 0.0)), 1e-3 * (hi[d] - lo[d]));
    }
    res.log.push_back({it, best, mean, best_params});
  }

  res.params = best_params;
  return res;
}

}  // namespace mixcycle
