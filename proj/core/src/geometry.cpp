#include "mixcycle/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "mixcycle/rng.hpp"

namespace mixcycle {

namespace {

constexpr double kPi = std::numbers::pi;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

std::array<Vec2, 4> bev_corners(const Box7& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.length;  // local x
  const double hw = 0.5 * box.width;   // local y
  std::array<Vec2, 4> out{};
  // counter-clockwise, as required by the clipper
  const std::array<Vec2, 4> local{{{hl, hw}, {-hl, hw}, {-hl, -hw}, {hl, -hw}}};
  for (int i = 0; i < 4; ++i) {
    out[i] = {box.center.x + c * local[i].x - s * local[i].y,
              box.center.y + s * local[i].x + c * local[i].y};
  }
  return out;
}

double polygon_area(const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return 0.0;
  double a = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

// Clips `poly` against the half-plane left of edge a->b (counter-clockwise
// subject polygon).
std::vector<Vec2> clip_edge(const std::vector<Vec2>& poly, const Vec2& a,
                            const Vec2& b) {
  std::vector<Vec2> out;
  out.reserve(poly.size() + 1);
  const double ex = b.x - a.x;
  const double ey = b.y - a.y;
  auto side = [&](const Vec2& p) {
    return ex * (p.y - a.y) - ey * (p.x - a.x);
  };
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& cur = poly[i];
    const Vec2& nxt = poly[(i + 1) % n];
    const double sc = side(cur);
    const double sn = side(nxt);
    if (sc >= 0.0) out.push_back(cur);
    if ((sc > 0.0 && sn < 0.0) || (sc < 0.0 && sn > 0.0)) {
      const double t = sc / (sc - sn);
      out.push_back({cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)});
    }
  }
  return out;
}

}  // namespace

double normalize_yaw(double yaw) {
  double y = std::fmod(yaw, 2.0 * kPi);
  if (y <= -kPi) y += 2.0 * kPi;
  if (y > kPi) y -= 2.0 * kPi;
  return y;
}

Vec3 apply_xform(const Vec3& p, const RigidXform& t) {
  const double c = std::cos(t.dtheta);
  const double s = std::sin(t.dtheta);
  return {c * p.x - s * p.y + t.dx, s * p.x + c * p.y + t.dy, p.z + t.dz};
}

PointCloud apply_xform(const PointCloud& pc, const RigidXform& t) {
  PointCloud out;
  out.reserve(pc.size());
  for (const Vec3& p : pc) out.push_back(apply_xform(p, t));
  return out;
}

Box7 apply_xform(const Box7& box, const RigidXform& t) {
  Box7 out = box;
  out.center = apply_xform(box.center, t);
  out.yaw = normalize_yaw(box.yaw + t.dtheta);
  return out;
}

std::pair<PointCloud, Box7> apply_xform(const PointCloud& pc, const Box7& box,
                                        const RigidXform& t) {
  return {apply_xform(pc, t), apply_xform(box, t)};
}

RigidXform inverse_xform(const RigidXform& t) {
  const double c = std::cos(t.dtheta);
  const double s = std::sin(t.dtheta);
  // inverse rotation applied to the negated translation
  return {-(c * t.dx + s * t.dy), -(-s * t.dx + c * t.dy), -t.dz, -t.dtheta};
}

RigidXform world_to_box_xform(const Box7& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  // p_local = R(-yaw) * (p - center)
  return {-(c * box.center.x + s * box.center.y),
          -(-s * box.center.x + c * box.center.y), -box.center.z, -box.yaw};
}

Vec3 to_box_frame(const Vec3& p, const Box7& box) {
  return apply_xform(p, world_to_box_xform(box));
}

Vec3 from_box_frame(const Vec3& p, const Box7& box) {
  const RigidXform pose{box.center.x, box.center.y, box.center.z, box.yaw};
  return apply_xform(p, pose);
}

PointCloud to_box_frame(const PointCloud& pc, const Box7& box) {
  return apply_xform(pc, world_to_box_xform(box));
}

PointCloud from_box_frame(const PointCloud& pc, const Box7& box) {
  const RigidXform pose{box.center.x, box.center.y, box.center.z, box.yaw};
  return apply_xform(pc, pose);
}

Box7 to_box_frame(const Box7& b, const Box7& ref) {
  return apply_xform(b, world_to_box_xform(ref));
}

Box7 from_box_frame(const Box7& b, const Box7& ref) {
  const RigidXform pose{ref.center.x, ref.center.y, ref.center.z, ref.yaw};
  return apply_xform(b, pose);
}

bool point_in_box(const Vec3& p, const Box7& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double dx = p.x - box.center.x;
  const double dy = p.y - box.center.y;
  const double lx = c * dx + s * dy;   // along heading
  const double ly = -s * dx + c * dy;  // across heading
  const double lz = p.z - box.center.z;
  return std::abs(lx) <= 0.5 * box.length + kContainmentEps &&
         std::abs(ly) <= 0.5 * box.width + kContainmentEps &&
         std::abs(lz) <= 0.5 * box.height + kContainmentEps;
}

std::vector<bool> points_in_box(const PointCloud& pc, const Box7& box) {
  std::vector<bool> mask(pc.size());
  for (std::size_t i = 0; i < pc.size(); ++i) mask[i] = point_in_box(pc[i], box);
  return mask;
}

PointCloud select_points(const PointCloud& pc, const std::vector<bool>& mask,
                         bool keep) {
  PointCloud out;
  for (std::size_t i = 0; i < pc.size() && i < mask.size(); ++i) {
    if (mask[i] == keep) out.push_back(pc[i]);
  }
  return out;
}

PointCloud crop_search_area(const PointCloud& pc, const Box7& ref,
                            double radius_m) {
  Box7 enlarged = ref;
  enlarged.width += 2.0 * radius_m;
  enlarged.length += 2.0 * radius_m;
  enlarged.height += 2.0 * radius_m;
  PointCloud out;
  for (const Vec3& p : pc) {
    if (point_in_box(p, enlarged)) out.push_back(p);
  }
  return out;
}

double bev_intersection_area(const Box7& a, const Box7& b) {
  const auto ca = bev_corners(a);
  const auto cb = bev_corners(b);
  std::vector<Vec2> poly(ca.begin(), ca.end());
  for (int i = 0; i < 4 && !poly.empty(); ++i) {
    poly = clip_edge(poly, cb[i], cb[(i + 1) % 4]);
  }
  return std::max(0.0, polygon_area(poly));
}

double box_iou_3d(const Box7& a, const Box7& b) {
  const double inter_area = bev_intersection_area(a, b);
  const double za = std::min(a.center.z + 0.5 * a.height,
                             b.center.z + 0.5 * b.height);
  const double zb = std::max(a.center.z - 0.5 * a.height,
                             b.center.z - 0.5 * b.height);
  const double inter = inter_area * std::max(0.0, za - zb);
  const double va = std::max(0.0, a.width) * std::max(0.0, a.length) *
                    std::max(0.0, a.height);
  const double vb = std::max(0.0, b.width) * std::max(0.0, b.length) *
                    std::max(0.0, b.height);
  const double uni = va + vb - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double center_distance(const Box7& a, const Box7& b) {
  const double dx = a.center.x - b.center.x;
  const double dy = a.center.y - b.center.y;
  const double dz = a.center.z - b.center.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

RigidXform sample_xform(const XformBounds& bounds, Rng& rng) {
  RigidXform t;
  t.dx = rng.uniform(-bounds.max_dx_m, bounds.max_dx_m);
  t.dy = rng.uniform(-bounds.max_dy_m, bounds.max_dy_m);
  t.dz = rng.uniform(-bounds.max_dz_m, bounds.max_dz_m);
  t.dtheta = rng.uniform(-bounds.max_dtheta_rad, bounds.max_dtheta_rad);
  return t;
}

}  // namespace mixcycle
