#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace mixcycle {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  bool operator==(const Vec3&) const = default;
};

using PointCloud = std::vector<Vec3>;

// Upright 7-DoF box: center, extents and heading about +z.
// The heading axis is local x, so `length` is measured along the heading
// direction and `width` across it. `yaw` is kept in (-pi, pi].
struct Box7 {
  Vec3 center;
  double width = 1.0;   // extent along local y
  double length = 1.0;  // extent along local x
  double height = 1.0;  // extent along z
  double yaw = 0.0;
};

// Rigid motion restricted to the up axis: rotate by dtheta about the world
// origin's z axis, then translate by (dx, dy, dz).
struct RigidXform {
  double dx = 0.0;
  double dy = 0.0;
  double dz = 0.0;
  double dtheta = 0.0;
};

// Symmetric uniform sampling ranges for RigidXform components.
struct XformBounds {
  double max_dx_m = 0.3;
  double max_dy_m = 0.3;
  double max_dz_m = 0.1;
  double max_dtheta_rad = 0.0872664625997164788;  // 5 degrees
};

// Inclusive-boundary slack for containment tests; absorbs the rounding of
// rotated coordinates so face/edge points stay inside.
inline constexpr double kContainmentEps = 1e-9;

double normalize_yaw(double yaw);  // wraps into (-pi, pi]

Vec3 apply_xform(const Vec3& p, const RigidXform& t);
PointCloud apply_xform(const PointCloud& pc, const RigidXform& t);
Box7 apply_xform(const Box7& box, const RigidXform& t);
std::pair<PointCloud, Box7> apply_xform(const PointCloud& pc, const Box7& box,
                                        const RigidXform& t);
RigidXform inverse_xform(const RigidXform& t);

// World -> box-local change of coordinates (and back). A box expressed in
// its own frame sits at the origin with yaw 0.
RigidXform world_to_box_xform(const Box7& box);
Vec3 to_box_frame(const Vec3& p, const Box7& box);
Vec3 from_box_frame(const Vec3& p, const Box7& box);
PointCloud to_box_frame(const PointCloud& pc, const Box7& box);
PointCloud from_box_frame(const PointCloud& pc, const Box7& box);
Box7 to_box_frame(const Box7& b, const Box7& ref);
Box7 from_box_frame(const Box7& b, const Box7& ref);

bool point_in_box(const Vec3& p, const Box7& box);
std::vector<bool> points_in_box(const PointCloud& pc, const Box7& box);
PointCloud select_points(const PointCloud& pc, const std::vector<bool>& mask,
                         bool keep = true);

// Points inside `ref` enlarged by `radius_m` on every side (width and length
// grow by 2*radius_m, the z slab by radius_m up and down).
PointCloud crop_search_area(const PointCloud& pc, const Box7& ref,
                            double radius_m);

double bev_intersection_area(const Box7& a, const Box7& b);
double box_iou_3d(const Box7& a, const Box7& b);
double center_distance(const Box7& a, const Box7& b);

class Rng;
RigidXform sample_xform(const XformBounds& bounds, Rng& rng);

}  // namespace mixcycle
