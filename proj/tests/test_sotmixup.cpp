#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <tuple>

#include "mixcycle/errors.hpp"
#include "mixcycle/rng.hpp"
#include "mixcycle/sotmixup.hpp"

using namespace mixcycle;

namespace {

using Key = std::tuple<double, double, double>;
Key key(const Vec3& p) { return {p.x, p.y, p.z}; }

std::multiset<Key> as_multiset(const PointCloud& pc) {
  std::multiset<Key> s;
  for (const Vec3& p : pc) s.insert(key(p));
  return s;
}

// Anchor scene: object points inside the box plus scattered background.
struct Scene {
  PointCloud cloud;
  Box7 box;
  std::size_t n_fg = 0;
};

Scene make_scene(Rng& rng, const Box7& box, int n_fg, int n_bg) {
  Scene s;
  s.box = box;
  s.n_fg = static_cast<std::size_t>(n_fg);
  for (int i = 0; i < n_fg; ++i) {
    const Vec3 local{rng.uniform(-0.45, 0.45) * box.length,
                     rng.uniform(-0.45, 0.45) * box.width,
                     rng.uniform(-0.45, 0.45) * box.height};
    s.cloud.push_back(from_box_frame(local, box));
  }
  int placed = 0;
  while (placed < n_bg) {
    const Vec3 p{box.center.x + rng.uniform(-4, 4),
                 box.center.y + rng.uniform(-4, 4),
                 box.center.z + rng.uniform(-2, 2)};
    if (point_in_box(p, box)) continue;
    s.cloud.push_back(p);
    ++placed;
  }
  return s;
}

}  // namespace

TEST_CASE("segment_fg_bg splits by containment") {
  Rng rng(1);
  const Box7 box{{1, 2, 0.5}, 1.0, 2.0, 1.2, 0.7};
  const Scene s = make_scene(rng, box, 40, 60);
  const auto [fg, bg] = segment_fg_bg(s.cloud, s.box);
  CHECK(fg.size() == 40);
  CHECK(bg.size() == 60);
  for (const Vec3& p : fg) CHECK(point_in_box(p, box));
  for (const Vec3& p : bg) CHECK(!point_in_box(p, box));
}

TEST_CASE("lambda = 1 keeps exactly the anchor frame") {
  Rng rng(2);
  const Box7 box_a{{0, 0, 0}, 1.0, 2.0, 1.5, 0.2};
  const Box7 box_b{{5, 5, 0}, 0.8, 1.6, 1.2, -0.9};
  const Scene a = make_scene(rng, box_a, 50, 80);
  const Scene b = make_scene(rng, box_b, 30, 10);
  const MixedSample m = sotmixup(a.cloud, a.box, b.cloud, b.box, 1.0, rng);
  CHECK(m.lambda == 1.0);
  CHECK(m.cloud.size() == a.cloud.size());
  CHECK(as_multiset(m.cloud) == as_multiset(a.cloud));
  CHECK(m.label_box.center.x == box_a.center.x);
  REQUIRE(m.fg_mask.size() == m.cloud.size());
  std::size_t fg = 0;
  for (std::size_t i = 0; i < m.cloud.size(); ++i) {
    CHECK(m.fg_mask[i] == point_in_box(m.cloud[i], m.label_box));
    fg += m.fg_mask[i];
  }
  CHECK(fg == 50);
}

TEST_CASE("lambda = 0 replaces every object point with donor points") {
  Rng rng(3);
  const Box7 box_a{{0, 0, 0}, 1.0, 2.0, 1.5, 0.2};
  const Box7 box_b{{5, 5, 0}, 1.0, 2.0, 1.5, -0.9};
  const Scene a = make_scene(rng, box_a, 50, 80);
  const Scene b = make_scene(rng, box_b, 200, 10);
  const MixedSample m = sotmixup(a.cloud, a.box, b.cloud, b.box, 0.0, rng);
  CHECK(m.cloud.size() == a.cloud.size());

  const auto anchor_fg = as_multiset(PointCloud(a.cloud.begin(), a.cloud.begin() + 50));
  const auto bg = as_multiset(PointCloud(a.cloud.begin() + 50, a.cloud.end()));
  std::size_t from_anchor_fg = 0, from_bg = 0;
  for (const Vec3& p : m.cloud) {
    from_anchor_fg += anchor_fg.count(key(p));
    from_bg += bg.count(key(p));
  }
  CHECK(from_anchor_fg == 0);  // no anchor object point survives
  CHECK(from_bg == 80);        // background untouched

  // replacement points are donor object points re-posed into the anchor box
  const PointCloud donor_local = to_box_frame(
      segment_fg_bg(b.cloud, b.box).first, b.box);
  const auto donor_in_anchor = as_multiset(from_box_frame(donor_local, box_a));
  std::size_t matched = 0;
  for (const Vec3& p : m.cloud) matched += donor_in_anchor.count(key(p));
  CHECK(matched == 50);
}

TEST_CASE("point counts and the k split are exact for every lambda") {
  Rng rng(4);
  for (int trial = 0; trial < 50; ++trial) {
    const Box7 box_a{{rng.uniform(-2, 2), rng.uniform(-2, 2), 0},
                     rng.uniform(0.6, 1.4), rng.uniform(1.0, 2.5),
                     rng.uniform(0.8, 1.8), rng.uniform(-3, 3)};
    const Box7 box_b{{rng.uniform(3, 6), rng.uniform(3, 6), 0},
                     rng.uniform(0.6, 1.4), rng.uniform(1.0, 2.5),
                     rng.uniform(0.8, 1.8), rng.uniform(-3, 3)};
    const int n_fg = 1 + static_cast<int>(rng.index(120));
    const int n_bg = static_cast<int>(rng.index(100));
    const Scene a = make_scene(rng, box_a, n_fg, n_bg);
    const Scene b = make_scene(rng, box_b, 1 + static_cast<int>(rng.index(90)), 20);
    const double lambda = trial % 10 / 9.0;

    const MixedSample m = sotmixup(a.cloud, a.box, b.cloud, b.box, lambda, rng);
    CHECK(m.cloud.size() == a.cloud.size());  // total preserved

    const auto k_a = static_cast<std::size_t>(std::llround(lambda * n_fg));
    const auto anchor_fg = as_multiset(
        PointCloud(a.cloud.begin(), a.cloud.begin() + n_fg));
    std::size_t kept = 0;
    for (const Vec3& p : m.cloud) kept += anchor_fg.count(key(p)) ? 1 : 0;
    CHECK(kept == k_a);

    // the mask is containment in the anchor box, nothing else
    REQUIRE(m.fg_mask.size() == m.cloud.size());
    for (std::size_t i = 0; i < m.cloud.size(); ++i) {
      CHECK(m.fg_mask[i] == point_in_box(m.cloud[i], m.label_box));
    }
  }
}

TEST_CASE("anchor points are drawn without replacement") {
  Rng rng(5);
  const Box7 box{{0, 0, 0}, 1.0, 2.0, 1.5, 0.0};
  const Scene a = make_scene(rng, box, 100, 0);
  const Scene b = make_scene(rng, Box7{{4, 4, 0}, 1, 2, 1.5, 0}, 100, 0);
  const MixedSample m = sotmixup(a.cloud, a.box, b.cloud, b.box, 0.8, rng);
  std::map<Key, int> counts;
  for (const Vec3& p : m.cloud) ++counts[key(p)];
  const auto anchor = as_multiset(a.cloud);
  for (const auto& [k, n] : counts) {
    if (anchor.count(k)) CHECK(n == 1);
  }
}

TEST_CASE("a short donor is reused with replacement to fill the quota") {
  Rng rng(6);
  const Box7 box_a{{0, 0, 0}, 1.0, 2.0, 1.5, 0.0};
  const Box7 box_b{{4, 4, 0}, 1.0, 2.0, 1.5, 0.3};
  const Scene a = make_scene(rng, box_a, 60, 10);
  const Scene b = make_scene(rng, box_b, 3, 5);  // needs 60 donor points
  const MixedSample m = sotmixup(a.cloud, a.box, b.cloud, b.box, 0.0, rng);
  CHECK(m.cloud.size() == 70);
  std::size_t fg = 0;
  for (bool f : m.fg_mask) fg += f;
  CHECK(fg == 60);
}

TEST_CASE("degenerate inputs pass the anchor through with lambda 1") {
  Rng rng(7);
  const Box7 box_a{{0, 0, 0}, 1.0, 2.0, 1.5, 0.0};
  const Box7 box_b{{4, 4, 0}, 1.0, 2.0, 1.5, 0.0};

  // no anchor object points
  const Scene bg_only = make_scene(rng, box_a, 0, 40);
  const Scene donor = make_scene(rng, box_b, 30, 0);
  MixedSample m = sotmixup(bg_only.cloud, box_a, donor.cloud, box_b, 0.3, rng);
  CHECK(m.lambda == 1.0);
  CHECK(as_multiset(m.cloud) == as_multiset(bg_only.cloud));

  // no donor object points
  const Scene anchor = make_scene(rng, box_a, 30, 40);
  const Scene empty_donor = make_scene(rng, box_b, 0, 10);
  m = sotmixup(anchor.cloud, box_a, empty_donor.cloud, box_b, 0.3, rng);
  CHECK(m.lambda == 1.0);
  CHECK(as_multiset(m.cloud) == as_multiset(anchor.cloud));

  // empty clouds entirely
  m = sotmixup({}, box_a, {}, box_b, 0.5, rng);
  CHECK(m.lambda == 1.0);
  CHECK(m.cloud.empty());
  CHECK(m.fg_mask.empty());
}

TEST_CASE("invalid lambda is rejected") {
  Rng rng(8);
  const Box7 box{{0, 0, 0}, 1, 2, 1, 0};
  CHECK_THROWS_AS(sotmixup({}, box, {}, box, -0.1, rng), std::invalid_argument);
  CHECK_THROWS_AS(sotmixup({}, box, {}, box, 1.1, rng), std::invalid_argument);
  CHECK_THROWS_AS(sotmixup({}, box, {}, box,
                           std::numeric_limits<double>::quiet_NaN(), rng),
                  std::invalid_argument);
}

TEST_CASE("sample_lambda honors a fixed value and validates the config") {
  Rng rng(9);
  MixConfig cfg;
  cfg.fixed_lambda = 0.37;
  CHECK(sample_lambda(cfg, rng) == 0.37);
  cfg.fixed_lambda = 1.5;
  CHECK_THROWS_AS(sample_lambda(cfg, rng), ConfigError);
  cfg.fixed_lambda.reset();
  cfg.eta = 0.0;
  CHECK_THROWS_AS(sample_lambda(cfg, rng), ConfigError);

  cfg.eta = 0.5;
  double sum = 0.0;
  int extremes = 0;
  for (int i = 0; i < 20000; ++i) {
    const double v = sample_lambda(cfg, rng);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    sum += v;
    extremes += (v < 0.1 || v > 0.9);
  }
  CHECK(std::abs(sum / 20000 - 0.5) < 0.02);
  CHECK(extremes > 20000 / 3);  // arcsine shape piles mass at the ends
}

TEST_CASE("mixing is deterministic under one seed") {
  Rng ra(10), rb(10);
  Rng scene_rng(11);
  const Box7 box_a{{0, 0, 0}, 1.0, 2.0, 1.5, 0.1};
  const Box7 box_b{{4, 4, 0}, 1.1, 1.9, 1.4, -0.4};
  const Scene a = make_scene(scene_rng, box_a, 45, 30);
  const Scene b = make_scene(scene_rng, box_b, 35, 15);
  const MixedSample ma = sotmixup(a.cloud, a.box, b.cloud, b.box, 0.42, ra);
  const MixedSample mb = sotmixup(a.cloud, a.box, b.cloud, b.box, 0.42, rb);
  CHECK(ma.cloud == mb.cloud);
  CHECK(ma.fg_mask == mb.fg_mask);
}
