#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "xmf/error.hpp"
#include "xmf/tracks.hpp"

using namespace xmf;

namespace {

EndpointObservation obs(int frame, double x, double y, double conf) {
  EndpointObservation o;
  o.frame = frame;
  o.point = {x, y};
  o.confidence = conf;
  return o;
}

Anchor anchor(int frame, double x, double y) {
  Anchor a;
  a.frame = frame;
  a.point = {x, y};
  a.confidence = 1.0;
  return a;
}

std::vector<Track> parallel_tracks(std::size_t n, int fa, int fb, double motion) {
  std::vector<Track> t(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i].id = static_cast<std::int64_t>(i);
    const double x = 10.0 + (i % 25) * 20.0;
    const double y = 10.0 + (i / 25) * 20.0;
    t[i].observations = {{fa, {x, y}, 0.9, -1}, {fb, {x + motion, y}, 0.8, -1}};
  }
  return t;
}

double sampson(const Eigen::Matrix3d& f, const PixelPoint& l, const PixelPoint& r) {
  const Eigen::Vector3d a(l.x, l.y, 1);
  const Eigen::Vector3d b(r.x, r.y, 1);
  const Eigen::Vector3d fa = f * a;
  const Eigen::Vector3d fb = f.transpose() * b;
  const double e = b.dot(fa);
  return std::abs(e) / std::sqrt(fa.x() * fa.x() + fa.y() * fa.y() + fb.x() * fb.x() + fb.y() * fb.y());
}

Eigen::Matrix3d true_fundamental(const xmf::testing::TwoViewScene& s) {
  const Eigen::Vector3d t = s.left_to_right.translation;
  Eigen::Matrix3d tx;
  tx << 0, -t.z(), t.y(), t.z(), 0, -t.x(), -t.y(), t.x(), 0;
  return s.cameras.right.matrix().inverse().transpose() * tx * s.left_to_right.rotation *
         s.cameras.left.matrix().inverse();
}

}  // namespace

TEST(Schedule, SmallCasesAndCounting) {
  const auto three = plan_pair_schedule(3, 1, 10);
  EXPECT_EQ(three.pairs, (std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}}));
  EXPECT_EQ(plan_pair_schedule(12, 4, 10).retained, (std::vector<int>{0, 4, 8}));
  const auto s = plan_pair_schedule(100, 1, 10);
  std::size_t expected = 0;
  for (int i = 0; i < 100; ++i) expected += std::min(10, 99 - i);
  EXPECT_EQ(s.pairs.size(), expected);
  std::set<std::pair<int, int>> uniq(s.pairs.begin(), s.pairs.end());
  EXPECT_EQ(uniq.size(), s.pairs.size());
  for (auto [i, j] : s.pairs) EXPECT_LT(i, j);
  const auto strided = plan_pair_schedule(40, 4, 2);
  for (auto [i, j] : strided.pairs) {
    EXPECT_EQ(i % 4, 0);
    EXPECT_EQ(j % 4, 0);
    EXPECT_LE(j - i, 8);
  }
}

TEST(Nms, HandExamples) {
  std::vector<EndpointObservation> two = {obs(0, 10, 10, 0.8), obs(0, 12, 10, 0.9)};
  auto r = nms_merge(two, 7);
  ASSERT_EQ(r.anchors.size(), 1u);
  EXPECT_EQ(r.anchors[0].point, PixelPoint(12, 10));
  EXPECT_EQ(r.anchors[0].confidence, 0.9);
  EXPECT_EQ(r.assignment, (std::vector<std::size_t>{0, 0}));

  two[1].point = {14, 10};
  r = nms_merge(two, 7);
  EXPECT_EQ(r.anchors.size(), 2u);
  two[1].point = {13, 13};  // Chebyshev exactly 3
  EXPECT_EQ(nms_merge(two, 7).anchors.size(), 1u);

  std::vector<EndpointObservation> one = {obs(0, 5.5, 6.5, 0.3)};
  r = nms_merge(one, 7);
  ASSERT_EQ(r.anchors.size(), 1u);
  EXPECT_EQ(r.anchors[0].point, PixelPoint(5.5, 6.5));
}

TEST(Nms, SeparationTotalityAndPermutationInvariance) {
  Rng rng(5);
  std::vector<EndpointObservation> o;
  for (int i = 0; i < 2000; ++i) {
    // Coarse confidences to force ties.
    o.push_back(obs(0, rng.uniform(0, 100), rng.uniform(0, 100), std::floor(rng.uniform() * 4) / 4));
  }
  const auto r = nms_merge(o, 7);
  for (std::size_t i = 0; i < r.anchors.size(); ++i)
    for (std::size_t j = i + 1; j < r.anchors.size(); ++j) {
      const double d = std::max(std::abs(r.anchors[i].point.x - r.anchors[j].point.x),
                                std::abs(r.anchors[i].point.y - r.anchors[j].point.y));
      ASSERT_GT(d, 3.0);
    }
  std::vector<int> claimed(o.size(), 0);
  for (std::size_t a = 0; a < r.anchors.size(); ++a)
    for (auto id : r.anchors[a].claimed) {
      ++claimed[id];
      EXPECT_EQ(r.assignment[id], a);
      EXPECT_LE(std::abs(o[id].point.x - r.anchors[a].point.x), 3.0);
      EXPECT_LE(std::abs(o[id].point.y - r.anchors[a].point.y), 3.0);
    }
  for (int c : claimed) EXPECT_EQ(c, 1);

  std::vector<std::size_t> perm(o.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::vector<EndpointObservation> shuffled;
  for (auto i : perm) shuffled.push_back(o[i]);
  const auto r2 = nms_merge(shuffled, 7);
  ASSERT_EQ(r2.anchors.size(), r.anchors.size());
  for (std::size_t a = 0; a < r.anchors.size(); ++a) EXPECT_EQ(r2.anchors[a].point, r.anchors[a].point);
}

TEST(BuildTracks, ChainConflictAndComponents) {
  std::vector<Anchor> anchors = {anchor(0, 0, 0), anchor(1, 0, 0), anchor(2, 0, 0), anchor(0, 50, 50)};
  std::vector<AnchorEdge> edges = {{0, 1, 0.9}, {1, 2, 0.8}};
  auto t = build_tracks(anchors, edges);
  ASSERT_EQ(t.size(), 1u);
  ASSERT_EQ(t[0].observations.size(), 3u);
  EXPECT_EQ(t[0].observations[0].frame, 0);
  EXPECT_EQ(t[0].observations[2].frame, 2);

  edges.push_back({1, 3, 0.5});  // second frame-0 anchor: conflict
  const auto t2 = build_tracks(anchors, edges);
  EXPECT_EQ(t2, t);

  // Components: random edges between frames without conflicts.
  std::vector<Anchor> many;
  for (int f = 0; f < 6; ++f)
    for (int k = 0; k < 5; ++k) many.push_back(anchor(f, k * 10, 0));
  std::vector<AnchorEdge> e;
  for (int k = 0; k < 5; k += 2)
    for (int f = 0; f + 1 < 6; ++f) e.push_back({static_cast<std::size_t>(f * 5 + k), static_cast<std::size_t>((f + 1) * 5 + k), 0.5});
  const auto comp = build_tracks(many, e);
  EXPECT_EQ(comp.size(), 3u);
  for (const auto& tr : comp) {
    EXPECT_EQ(tr.observations.size(), 6u);
    for (std::size_t i = 1; i < tr.observations.size(); ++i)
      EXPECT_LT(tr.observations[i - 1].frame, tr.observations[i].frame);
  }
  EXPECT_TRUE(build_tracks(many, {}).empty());
}

TEST(BuildTracks, EqualConfidenceOrderIndependent) {
  std::vector<Anchor> anchors = {anchor(0, 0, 0), anchor(1, 0, 0), anchor(1, 9, 9), anchor(2, 0, 0)};
  std::vector<AnchorEdge> edges = {{0, 1, 0.5}, {0, 2, 0.5}, {1, 3, 0.5}, {2, 3, 0.5}};
  const auto a = build_tracks(anchors, edges);
  std::reverse(edges.begin(), edges.end());
  EXPECT_EQ(build_tracks(anchors, edges), a);
}

TEST(Aggregate, SyntheticVideoEndToEnd) {
  xmf::testing::VideoConfig cfg;
  cfg.frames = 20;
  const auto video = xmf::testing::synthetic_video(cfg);
  const auto graph = aggregate_matches(video.pairs, 7, 2);
  const auto tracks = build_tracks(graph.anchors, graph.edges);
  ASSERT_FALSE(tracks.empty());
  std::size_t good = 0;
  std::size_t total = 0;
  for (const auto& t : tracks) {
    for (std::size_t i = 1; i < t.observations.size(); ++i) {
      const auto& a = t.observations[0];
      const auto& b = t.observations[i];
      ASSERT_LT(a.frame, b.frame);
      const auto f = video.flow(a.frame, b.frame);
      ++total;
      if (std::hypot(b.point.x - a.point.x - f.x(), b.point.y - a.point.y - f.y()) <= 2.0) ++good;
    }
  }
  EXPECT_GE(static_cast<double>(good) / total, 0.95);
  const auto serial = aggregate_matches(video.pairs, 7, 1);
  EXPECT_EQ(build_tracks(serial.anchors, serial.edges), tracks);
}

TEST(Refine, IdentityAndCentroid) {
  std::vector<PairMatches> pairs(1);
  pairs[0].frame_a = 0;
  pairs[0].frame_b = 1;
  pairs[0].matches = {{{10, 5}, {20, 5}, 0.5}, {{12, 5}, {20, 5}, 0.5}};
  const auto graph = aggregate_matches(pairs, 7, 1);
  const auto tracks = build_tracks(graph.anchors, graph.edges);
  ASSERT_EQ(tracks.size(), 1u);
  RefinerConfig id;
  EXPECT_EQ(refine_tracks(tracks, graph, id), tracks);
  RefinerConfig c;
  c.kind = RefinerKind::LocalCentroid;
  const auto refined = refine_tracks(tracks, graph, c);
  EXPECT_DOUBLE_EQ(refined[0].observations[0].point.x, 11.0);
  EXPECT_DOUBLE_EQ(refined[0].observations[1].point.x, 20.0);
  EXPECT_EQ(refiner_kind_from_string("local-centroid"), RefinerKind::LocalCentroid);
  EXPECT_THROW(refiner_kind_from_string("magic"), Error);
}

TEST(Refine, ExternalContract) {
  xmf::testing::TempDir dir("refiner");
  std::vector<PairMatches> pairs(1);
  pairs[0].frame_a = 0;
  pairs[0].frame_b = 1;
  pairs[0].matches = {{{10, 5}, {20, 5}, 0.5}};
  const auto graph = aggregate_matches(pairs, 7, 1);
  const auto tracks = build_tracks(graph.anchors, graph.edges);
  RefinerConfig ext;
  ext.kind = RefinerKind::External;
  ext.work_dir = dir.path();
  ext.command = "cp";
  const auto same = refine_tracks(tracks, graph, ext);
  ASSERT_EQ(same.size(), 1u);
  EXPECT_EQ(same[0].observations.size(), 2u);

  {
    std::ofstream s(dir / "shift.sh");
    s << "#!/bin/sh\nsed 's/\"frame\":1/\"frame\":2/' \"$1\" > \"$2\"\n";
  }
  ext.command = "sh " + (dir / "shift.sh").string();
  try {
    refine_tracks(tracks, graph, ext);
    FAIL() << "altered frame set accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ExternalRefinerProtocol);
  }
  ext.command = "true";
  EXPECT_THROW(refine_tracks(tracks, graph, ext), Error);
}

TEST(SelectPairs, ThresholdExamples) {
  PairSelectionConfig cfg;
  EXPECT_EQ(cfg.min_gap, 20);
  EXPECT_EQ(cfg.min_covisibility, 300u);
  EXPECT_EQ(cfg.min_motion, 30.0);
  const auto hit = select_training_pairs(parallel_tracks(350, 0, 24, 40.0), cfg);
  ASSERT_EQ(hit.size(), 1u);
  EXPECT_EQ(hit[0].frame_a, 0);
  EXPECT_EQ(hit[0].frame_b, 24);
  EXPECT_EQ(hit[0].covisibility, 350u);
  EXPECT_DOUBLE_EQ(hit[0].mean_motion, 40.0);
  EXPECT_EQ(hit[0].matches.size(), 350u);
  EXPECT_TRUE(select_training_pairs(parallel_tracks(350, 0, 24, 10.0), cfg).empty());
  EXPECT_TRUE(select_training_pairs(parallel_tracks(200, 0, 24, 40.0), cfg).empty());
  EXPECT_TRUE(select_training_pairs(parallel_tracks(350, 0, 19, 40.0), cfg).empty());
  const auto s = PairSelectionConfig::short_gap();
  EXPECT_EQ(s.min_gap, 10);
  EXPECT_EQ(s.min_motion, 0.0);
}

TEST(SelectPairs, EqualsBruteForce) {
  Rng rng(21);
  std::vector<Track> tracks;
  for (int i = 0; i < 400; ++i) {
    Track t;
    t.id = i;
    int f = static_cast<int>(rng.index(10));
    double x = rng.uniform(0, 500);
    double y = rng.uniform(0, 500);
    while (f < 40) {
      t.observations.push_back({f, {x, y}, 1.0, -1});
      f += 1 + static_cast<int>(rng.index(3));
      x += rng.uniform(0, 4);
      y += rng.uniform(-1, 1);
    }
    tracks.push_back(t);
  }
  PairSelectionConfig cfg{8, 120, 15.0};
  const auto got = select_training_pairs(tracks, cfg, 3);
  const auto want = oracle::select_pairs(tracks, 8, 120, 15.0);
  ASSERT_EQ(got.size(), want.size());
  ASSERT_FALSE(want.empty());
  for (std::size_t i = 0; i < got.size(); ++i) {
    EXPECT_EQ(got[i].frame_a, want[i].a);
    EXPECT_EQ(got[i].frame_b, want[i].b);
    EXPECT_EQ(got[i].covisibility, want[i].covis);
    EXPECT_NEAR(got[i].mean_motion, want[i].motion, 1e-9);
  }
}

TEST(SampleMatches, RoundRobin) {
  std::vector<Correspondence> five(5, {{1, 1}, {2, 2}, 0.5});
  EXPECT_EQ(sample_matches(five, 10000).size(), 5u);

  std::vector<Correspondence> m;
  for (int i = 0; i < 10; ++i) m.push_back({{5.0 + i, 5}, {0, 0}, 0.1 * i});
  for (int i = 0; i < 10; ++i) m.push_back({{70.0 + i, 5}, {0, 0}, 0.05 * i});
  const auto two = sample_matches(m, 2, 64);
  ASSERT_EQ(two.size(), 2u);
  std::multiset<double> conf = {two[0].confidence, two[1].confidence};
  EXPECT_EQ(conf, (std::multiset<double>{0.9, 0.45}));

  std::vector<Correspondence> one_bin;
  Rng rng(2);
  for (int i = 0; i < 30; ++i) one_bin.push_back({{rng.uniform(0, 60), rng.uniform(0, 60)}, {0, 0}, rng.uniform()});
  auto sorted = one_bin;
  std::sort(sorted.begin(), sorted.end(), [](auto& a, auto& b) { return a.confidence > b.confidence; });
  const auto top = sample_matches(one_bin, 3, 64);
  ASSERT_EQ(top.size(), 3u);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(top[i].confidence, sorted[i].confidence);
}

TEST(Verify, CleanPlantedAndInsufficient) {
  const auto scene = xmf::testing::two_view_scene(3, 100, 0.0);
  const auto all = geometric_verify(scene.matches, {640, 480}, {640, 480});
  EXPECT_EQ(all.inliers.size(), 100u);

  const Eigen::Matrix3d f = true_fundamental(xmf::testing::two_view_scene(4, 100, 0.0));
  auto mixed = xmf::testing::two_view_scene(4, 100, 0.0).matches;
  Rng rng(9);
  std::set<std::size_t> outliers;
  for (std::size_t i = 0; i < 30; ++i) {
    Correspondence c;
    do {
      c = {{rng.uniform(0, 639), rng.uniform(0, 479)}, {rng.uniform(0, 639), rng.uniform(0, 479)}, 1.0};
    } while (sampson(f, c.left, c.right) < 10.0);
    mixed[i * 3] = c;
    outliers.insert(i * 3);
  }
  const auto v = geometric_verify(mixed, {640, 480}, {640, 480});
  ASSERT_EQ(v.inliers.size(), 70u);
  std::size_t k = 0;
  for (std::size_t i = 0; i < mixed.size(); ++i)
    if (!outliers.count(i)) EXPECT_EQ(v.inliers[k++], mixed[i]);

  std::vector<Correspondence> seven(scene.matches.begin(), scene.matches.begin() + 7);
  try {
    geometric_verify(seven, {640, 480}, {640, 480});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientMatches);
  }
}
