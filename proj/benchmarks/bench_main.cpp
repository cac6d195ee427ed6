#include <benchmark/benchmark.h>

#include "mixcycle/cycles.hpp"
#include "mixcycle/eval.hpp"
#include "mixcycle/rng.hpp"
#include "mixcycle/sotmixup.hpp"
#include "mixcycle/tracking.hpp"

using namespace mixcycle;

namespace {

Box7 bench_box(Rng& rng) {
  return {{rng.uniform(-1, 1), rng.uniform(-1, 1), 0}, 1.0, 2.0, 1.5,
          rng.uniform(-1.5, 1.5)};
}

PointCloud interior_points(const Box7& box, int n, Rng& rng) {
  PointCloud out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    out.push_back(from_box_frame(Vec3{rng.uniform(-0.5, 0.5) * box.length,
                                      rng.uniform(-0.5, 0.5) * box.width,
                                      rng.uniform(-0.5, 0.5) * box.height},
                                 box));
  }
  return out;
}

void BM_BoxIou3d(benchmark::State& state) {
  Rng rng(1);
  std::vector<std::pair<Box7, Box7>> pairs;
  for (int i = 0; i < 256; ++i) pairs.push_back({bench_box(rng), bench_box(rng)});
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& [a, b] = pairs[i++ & 255];
    benchmark::DoNotOptimize(box_iou_3d(a, b));
  }
}
BENCHMARK(BM_BoxIou3d);

void BM_PointsInBox(benchmark::State& state) {
  Rng rng(2);
  const Box7 box = bench_box(rng);
  const PointCloud pc = interior_points({{0, 0, 0}, 4, 4, 4, 0.0},
                                        static_cast<int>(state.range(0)), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(points_in_box(pc, box));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_PointsInBox)->Arg(256)->Arg(2048);

void BM_Sotmixup(benchmark::State& state) {
  Rng rng(3);
  const Box7 box_a{{0, 0, 0}, 1, 2, 1.5, 0.2};
  const Box7 box_b{{5, 5, 0}, 1, 2, 1.5, -0.7};
  PointCloud anchor = interior_points(box_a, 128, rng);
  const PointCloud spread = interior_points({{0, 0, 0}, 8, 8, 4, 0}, 256, rng);
  anchor.insert(anchor.end(), spread.begin(), spread.end());
  const PointCloud donor = interior_points(box_b, 128, rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        sotmixup(anchor, box_a, donor, box_b, 0.5, rng));
  }
}
BENCHMARK(BM_Sotmixup);

void BM_GridTrack(benchmark::State& state) {
  Rng rng(4);
  const Box7 local{{0, 0, 0}, 0.9, 1.8, 1.5, 0.0};
  Template tmpl;
  tmpl.cloud = interior_points(local, static_cast<int>(state.range(0)), rng);
  tmpl.prior_box = local;
  PointCloud search = apply_xform(tmpl.cloud, {0.2, -0.1, 0.0, 0.03});
  const PointCloud clutter = interior_points({{0, 0, 0}, 6, 6, 3, 0}, 64, rng);
  search.insert(search.end(), clutter.begin(), clutter.end());
  const GridMatchParams params;
  for (auto _ : state) {
    benchmark::DoNotOptimize(grid_track(search, tmpl, params));
  }
}
BENCHMARK(BM_GridTrack)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SelfCycle(benchmark::State& state) {
  SynthConfig cfg;
  cfg.n_frames = 4;
  cfg.n_object_points = 100;
  cfg.clutter_per_m2 = 0.3;
  const Tracklet tr = synth_tracklet(cfg, 5);
  const LabeledSample frame0 = canonical_labeled_sample(tr, 0);
  const LabeledSample donor = canonical_labeled_sample(tr, 2);
  const GridTracker tracker;
  const CycleConfig ccfg;
  Rng rng(6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(self_cycle(tracker, frame0, donor, ccfg, rng));
  }
}
BENCHMARK(BM_SelfCycle)->Unit(benchmark::kMillisecond);

void BM_OpeTracklet(benchmark::State& state) {
  SynthConfig cfg;
  cfg.n_frames = 10;
  cfg.n_object_points = 90;
  cfg.sensor_noise_m = 0.05;
  cfg.dropout_rate = 0.25;
  cfg.clutter_per_m2 = 0.4;
  const Tracklet tr = synth_tracklet(cfg, 7);
  const GridTracker tracker;
  for (auto _ : state) {
    benchmark::DoNotOptimize(run_ope(tracker, tr));
  }
}
BENCHMARK(BM_OpeTracklet)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
