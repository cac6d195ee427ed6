#include "mixcycle/tracking.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "mixcycle/errors.hpp"

namespace mixcycle {

namespace {

constexpr double kYawRangeRad = 5.0 * std::numbers::pi / 180.0;

double coord(const Vec3& p, int axis) {
  return axis == 0 ? p.x : axis == 1 ? p.y : p.z;
}

double dist2(const Vec3& a, const Vec3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return dx * dx + dy * dy + dz * dz;
}

// Exact nearest-neighbor queries over a static cloud.
class KdTree {
 public:
  explicit KdTree(const PointCloud& pts) : pts_(pts) {
    idx_.resize(pts.size());
    std::iota(idx_.begin(), idx_.end(), 0);
    nodes_.reserve(pts.size());
    root_ = build(0, static_cast<int>(pts.size()), 0);
  }

  double nn_dist2(const Vec3& q) const {
    double best = std::numeric_limits<double>::infinity();
    if (root_ >= 0) search(root_, q, best);
    return best;
  }

 private:
  struct Node {
    int point;
    int left = -1;
    int right = -1;
    int axis = 0;
  };

  int build(int lo, int hi, int depth) {
    if (lo >= hi) return -1;
    const int axis = depth % 3;
    const int mid = (lo + hi) / 2;
    std::nth_element(idx_.begin() + lo, idx_.begin() + mid, idx_.begin() + hi,
                     [&](int a, int b) {
                       return coord(pts_[a], axis) < coord(pts_[b], axis);
                     });
    const int node = static_cast<int>(nodes_.size());
    nodes_.push_back({idx_[mid], -1, -1, axis});
    const int left = build(lo, mid, depth + 1);
    const int right = build(mid + 1, hi, depth + 1);
    nodes_[node].left = left;
    nodes_[node].right = right;
    return node;
  }

  void search(int node, const Vec3& q, double& best) const {
    const Node& n = nodes_[node];
    best = std::min(best, dist2(pts_[n.point], q));
    const double d = coord(q, n.axis) - coord(pts_[n.point], n.axis);
    const int near = d < 0.0 ? n.left : n.right;
    const int far = d < 0.0 ? n.right : n.left;
    if (near >= 0) search(near, q, best);
    if (far >= 0 && d * d < best) search(far, q, best);
  }

  const PointCloud& pts_;
  std::vector<int> idx_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

// Signed distance to the box surface: negative inside, positive outside.
double signed_surface_distance(const Vec3& p, const Box7& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double dx = p.x - box.center.x;
  const double dy = p.y - box.center.y;
  const double qx = std::abs(c * dx + s * dy) - 0.5 * box.length;
  const double qy = std::abs(-s * dx + c * dy) - 0.5 * box.width;
  const double qz = std::abs(p.z - box.center.z) - 0.5 * box.height;
  const double ox = std::max(qx, 0.0);
  const double oy = std::max(qy, 0.0);
  const double oz = std::max(qz, 0.0);
  const double outside = std::sqrt(ox * ox + oy * oy + oz * oz);
  const double inside = std::min(std::max({qx, qy, qz}), 0.0);
  return outside + inside;
}

void validate(const GridMatchParams& p) {
  if (!(p.sigma_m > 0.0)) throw ConfigError("grid tracker: sigma must be > 0");
  if (!(p.motion_weight >= 0.0)) {
    throw ConfigError("grid tracker: motion_weight must be >= 0");
  }
  if (!(p.temperature > 0.0)) {
    throw ConfigError("grid tracker: temperature must be > 0");
  }
  if (!(p.grid_step_m > 0.0)) {
    throw ConfigError("grid tracker: grid_step must be > 0");
  }
  if (!(p.grid_extent_m >= p.grid_step_m)) {
    throw ConfigError("grid tracker: grid_step must not exceed grid_extent");
  }
  if (p.yaw_steps < 1) throw ConfigError("grid tracker: yaw_steps must be >= 1");
}

// Yaw offsets over +-kYawRangeRad, enumerated nearest-zero first so that
// score ties between yaw candidates at the same (dx, dy) resolve toward the
// prior heading.
std::vector<double> yaw_offsets(int steps) {
  std::vector<double> out;
  if (steps == 1) {
    out.push_back(0.0);
    return out;
  }
  for (int i = 0; i < steps; ++i) {
    out.push_back(-kYawRangeRad + 2.0 * kYawRangeRad * i / (steps - 1));
  }
  std::stable_sort(out.begin(), out.end(), [](double a, double b) {
    const double aa = std::abs(a);
    const double ab = std::abs(b);
    return aa != ab ? aa < ab : a < b;
  });
  return out;
}

}  // namespace

TrackerOutput grid_track(const PointCloud& search, const Template& tmpl,
                         const GridMatchParams& params) {
  validate(params);
  const Box7& prior = tmpl.prior_box;

  TrackerOutput out;
  if (search.empty()) {
    out.proposals = {{prior, 0.5}};
    out.selected_index = 0;
    out.selected = prior;
    return out;
  }

  const int m = std::max(
      1, static_cast<int>(std::llround(params.grid_extent_m / params.grid_step_m)));
  const std::vector<double> yaws = yaw_offsets(params.yaw_steps);
  const int n_lin = 2 * m + 1;
  const std::size_t n_cand =
      static_cast<std::size_t>(n_lin) * n_lin * yaws.size();

  const KdTree tree(search);
  const double inv_two_sigma2 = 1.0 / (2.0 * params.sigma_m * params.sigma_m);

  // template points pre-rotated by prior.yaw + yaw offset
  std::vector<PointCloud> rotated(yaws.size());
  for (std::size_t j = 0; j < yaws.size(); ++j) {
    const double a = prior.yaw + yaws[j];
    const double c = std::cos(a);
    const double s = std::sin(a);
    rotated[j].reserve(tmpl.cloud.size());
    for (const Vec3& t : tmpl.cloud) {
      rotated[j].push_back({c * t.x - s * t.y, s * t.x + c * t.y, t.z});
    }
  }

  std::vector<double> raw;
  raw.reserve(n_cand);
  out.proposals.reserve(n_cand);
  for (int ix = -m; ix <= m; ++ix) {
    const double ox = ix * params.grid_step_m;
    for (int iy = -m; iy <= m; ++iy) {
      const double oy = iy * params.grid_step_m;
      const double motion =
          params.motion_weight * std::sqrt(ox * ox + oy * oy);
      for (std::size_t j = 0; j < yaws.size(); ++j) {
        Box7 cand = prior;
        cand.center = {prior.center.x + ox, prior.center.y + oy, prior.center.z};
        cand.yaw = normalize_yaw(prior.yaw + yaws[j]);
        double affinity = 0.0;
        if (!rotated[j].empty()) {
          double sum = 0.0;
          for (const Vec3& t : rotated[j]) {
            const Vec3 q{t.x + cand.center.x, t.y + cand.center.y,
                         t.z + cand.center.z};
            sum += std::exp(-tree.nn_dist2(q) * inv_two_sigma2);
          }
          affinity = sum / static_cast<double>(rotated[j].size());
        }
        raw.push_back(affinity - motion);
        out.proposals.push_back({cand, 0.0});
      }
    }
  }

  // softmax at temperature; exponents floored to keep scores strictly > 0
  const double mx = *std::max_element(raw.begin(), raw.end());
  double denom = 0.0;
  for (double& r : raw) {
    r = std::exp(std::max(params.temperature * (r - mx), -700.0));
    denom += r;
  }
  std::size_t best = 0;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.proposals[i].score = raw[i] / denom;
    if (out.proposals[i].score > out.proposals[best].score) best = i;
  }
  out.selected_index = best;
  out.selected = out.proposals[best].box;

  out.point_fg_scores.reserve(search.size());
  for (const Vec3& p : search) {
    const double sd = signed_surface_distance(p, out.selected);
    out.point_fg_scores.push_back(1.0 / (1.0 + std::exp(sd / kFgSigmoidWidthM)));
  }
  out.predicted_target = select_points(search, points_in_box(search, out.selected));
  return out;
}

TrackerOutput GridTracker::track(const PointCloud& search, const Template& tmpl,
                                 const TrackContext&) const {
  return grid_track(search, tmpl, params_);
}

TrackerOutput oracle_track(const PointCloud& search, const Box7& local_gt,
                           double eps) {
  if (!(eps > 0.0 && eps < 0.5)) {
    throw std::invalid_argument("oracle_track: eps outside (0, 0.5)");
  }
  TrackerOutput out;
  out.proposals = {{local_gt, 1.0 - eps}};
  out.selected_index = 0;
  out.selected = local_gt;
  const std::vector<bool> mask = points_in_box(search, local_gt);
  out.point_fg_scores.reserve(search.size());
  for (bool inside : mask) out.point_fg_scores.push_back(inside ? 1.0 - eps : eps);
  out.predicted_target = select_points(search, mask);
  return out;
}

OracleTracker::OracleTracker(const Tracklet& tracklet, double eps) : eps_(eps) {
  gt_.reserve(tracklet.frames.size());
  for (const Frame& f : tracklet.frames) gt_.push_back(f.label());
}

TrackerOutput OracleTracker::track(const PointCloud& search, const Template&,
                                   const TrackContext& ctx) const {
  if (ctx.frame_pos < 0 || !ctx.ref_world) {
    throw std::logic_error(
        "OracleTracker: track context must carry frame_pos and ref_world");
  }
  if (static_cast<std::size_t>(ctx.frame_pos) >= gt_.size()) {
    throw std::out_of_range("OracleTracker: frame_pos beyond known GT");
  }
  Box7 local = to_box_frame(gt_[static_cast<std::size_t>(ctx.frame_pos)],
                            *ctx.ref_world);
  if (ctx.post_xform) local = apply_xform(local, *ctx.post_xform);
  return oracle_track(search, local, eps_);
}

}  // namespace mixcycle
