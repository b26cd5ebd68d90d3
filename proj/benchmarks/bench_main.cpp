#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "xmf/bspline.hpp"
#include "xmf/geometry.hpp"
#include "xmf/ransac.hpp"
#include "xmf/rng.hpp"
#include "xmf/synthesis.hpp"
#include "xmf/tracks.hpp"

using namespace xmf;

namespace {

std::vector<Correspondence> homography_with_outliers(std::size_t n, double inlier_ratio) {
  Rng rng(1);
  Eigen::Matrix3d h;
  h << 0.95, 0.05, 10, -0.04, 1.02, -6, 1e-4, -5e-5, 1;
  std::vector<Correspondence> c;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d l(rng.uniform(0, 640), rng.uniform(0, 480), 1);
    Eigen::Vector3d r = h * l;
    r /= r.z();
    if (rng.uniform() > inlier_ratio) r = {rng.uniform(0, 640), rng.uniform(0, 480), 1};
    c.push_back({{l.x(), l.y()}, {r.x(), r.y()}, 1.0});
  }
  return c;
}

PosedView plane_view(double shift) {
  PosedView v;
  v.id = "v";
  v.camera.fx = v.camera.fy = 400;
  v.camera.width = 640;
  v.camera.height = 480;
  v.camera.cx = 319.5;
  v.camera.cy = 239.5;
  RigidPose p;
  p.translation = {-shift, 0, 0};
  v.pose = p;
  v.depth = DepthMap(640, 480, 5.0);
  v.image = Image(640, 480, 100.0f);
  return v;
}

}  // namespace

static void BM_RansacHomography(benchmark::State& state) {
  const auto c = homography_with_outliers(static_cast<std::size_t>(state.range(0)), 0.6);
  RansacConfig cfg;
  cfg.seed = 3;
  for (auto _ : state) benchmark::DoNotOptimize(ransac(c, ModelKind::Homography, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_RansacHomography)->Arg(500)->Arg(5000);

static void BM_FilterGrid(benchmark::State& state) {
  const auto l = plane_view(0.0);
  const auto r = plane_view(1.0);
  const int step = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(filter_grid_correspondences(l, r, step));
}
BENCHMARK(BM_FilterGrid)->Arg(8)->Arg(2);

static void BM_AggregateAndBuild(benchmark::State& state) {
  Rng rng(2);
  std::vector<PairMatches> pairs;
  const int frames = static_cast<int>(state.range(0));
  for (int a = 0; a < frames; ++a)
    for (int b = a + 1; b < std::min(frames, a + 6); ++b) {
      PairMatches p{a, b, {}};
      for (int i = 0; i < 1000; ++i) {
        const PixelPoint l{rng.uniform(0, 640), rng.uniform(0, 480)};
        p.matches.push_back({l, {l.x + 1.5 * (b - a), l.y}, rng.uniform()});
      }
      pairs.push_back(std::move(p));
    }
  for (auto _ : state) {
    const auto g = aggregate_matches(pairs, 7, 1);
    benchmark::DoNotOptimize(build_tracks(g.anchors, g.edges));
  }
}
BENCHMARK(BM_AggregateAndBuild)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

static void BM_BsplineFit(benchmark::State& state) {
  std::vector<Correspondence> c;
  for (int y = 0; y < 512; y += 8)
    for (int x = 0; x < 512; x += 8)
      c.push_back({{double(x), double(y)},
                   {x + 5 * std::sin(2 * M_PI * y / 512), y + 5 * std::sin(2 * M_PI * x / 512)},
                   1.0});
  BSplineFitConfig cfg;
  cfg.iterations = static_cast<int>(state.range(0));
  const auto init = PlanarTransform::translation(0, 0);
  for (auto _ : state) benchmark::DoNotOptimize(fit_bspline_sgd(c, init, 512, 512, cfg));
}
BENCHMARK(BM_BsplineFit)->Arg(200)->Unit(benchmark::kMillisecond);

static void BM_WarpPair(benchmark::State& state) {
  Image img(640, 480);
  for (int y = 0; y < 480; ++y)
    for (int x = 0; x < 640; ++x) img.at(x, y) = static_cast<float>((x ^ y) & 255);
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(make_warp_pair(img, HomographySampleRanges::training(), seed++));
}
BENCHMARK(BM_WarpPair)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
