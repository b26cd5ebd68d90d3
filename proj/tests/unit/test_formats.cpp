#include <gtest/gtest.h>

#include <cstring>
#include <fstream>

#include "fixtures.hpp"
#include "xmf/error.hpp"
#include "xmf/formats.hpp"

using namespace xmf;
using xmf::testing::TempDir;

namespace {

std::vector<Correspondence> some_matches() {
  return {{{1.5, 2.25}, {3.0, 4.0}, 0.5}, {{10, 20}, {11.125, 19.75}, 1.0}, {{0.1, 0.2}, {0.3, 0.4}, 0.25}};
}

Provenance prov() {
  Provenance p;
  p.seed = 17;
  p.config_hash = config_hash("x=1");
  return p;
}

}  // namespace

TEST(FormatDouble, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(2.0), "2");
  EXPECT_EQ(format_double(-1.5e-7), "-1.5e-07");
  const double v = 0.1 + 0.2;
  EXPECT_EQ(std::stod(format_double(v)), v);
}

TEST(MatchFile, JsonlRoundTrip) {
  TempDir dir("fmt");
  MatchFileHeader h;
  h.left = "a.png";
  h.right = "b.png";
  h.width0 = 64;
  h.height0 = 48;
  h.width1 = 32;
  h.height1 = 24;
  h.frame0 = 3;
  h.frame1 = 9;
  h.provenance = prov();
  const auto m = some_matches();
  write_match_jsonl(dir / "m.jsonl", h, m);
  const MatchFile f = read_match_file(dir / "m.jsonl");
  ASSERT_TRUE(f.header);
  EXPECT_EQ(f.header->left, "a.png");
  EXPECT_EQ(f.header->width1, 32);
  EXPECT_EQ(f.header->frame0, 3);
  EXPECT_EQ(f.header->frame1, 9);
  EXPECT_EQ(f.header->provenance, prov());
  EXPECT_EQ(f.matches, m);
}

TEST(MatchFile, BinaryLayout) {
  TempDir dir("fmt");
  const auto m = some_matches();
  write_match_binary(dir / "m.xmf", m);
  const std::string bytes = xmf::testing::read_bytes(dir / "m.xmf");
  ASSERT_EQ(bytes.size(), 4u + 4u + m.size() * 5 * 4);
  EXPECT_EQ(bytes.substr(0, 4), "XMF1");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 3);
  float x0;
  std::memcpy(&x0, bytes.data() + 8, 4);
  EXPECT_EQ(x0, 1.5f);
  const MatchFile f = read_match_file(dir / "m.xmf");
  EXPECT_FALSE(f.header);
  ASSERT_EQ(f.matches.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_FLOAT_EQ(f.matches[i].left.x, m[i].left.x);
    EXPECT_FLOAT_EQ(f.matches[i].right.y, m[i].right.y);
    EXPECT_FLOAT_EQ(f.matches[i].confidence, m[i].confidence);
  }
}

TEST(MatchFile, Malformed) {
  TempDir dir("fmt");
  {
    std::ofstream out(dir / "bad.jsonl");
    out << "{not json\n";
  }
  EXPECT_THROW(read_match_file(dir / "bad.jsonl"), Error);
  {
    std::ofstream out(dir / "short.xmf", std::ios::binary);
    out << "XMF1";
    const std::uint32_t n = 5;
    out.write(reinterpret_cast<const char*>(&n), 4);
  }
  EXPECT_THROW(read_match_file(dir / "short.xmf"), Error);
}

TEST(PairManifest, RoundTrip) {
  PairManifestRecord r;
  r.left_path = "l.png";
  r.right_path = "r.png";
  Eigen::Matrix3d h;
  h << 1.1, 0.01, 3, -0.02, 0.95, -4, 1e-4, 2e-5, 1;
  r.homography = h;
  r.mask_path = "m.png";
  r.composition = "T*S*A*P";
  r.right_modality = "thermal";
  r.seed = 123456789012345ULL;
  r.source = "src.png";
  r.provenance = prov();
  const PairManifestRecord back = pair_record_from_jsonl(to_jsonl(r));
  EXPECT_EQ(back.left_path, r.left_path);
  EXPECT_EQ(*back.homography, h);
  EXPECT_EQ(back.mask_path, r.mask_path);
  EXPECT_EQ(back.composition, r.composition);
  EXPECT_EQ(back.right_modality, "thermal");
  EXPECT_EQ(back.seed, r.seed);
  EXPECT_EQ(back.provenance, r.provenance);
  EXPECT_FALSE(back.matches_path);
}

TEST(TrackFile, RoundTripWithProvenance) {
  TempDir dir("fmt");
  std::vector<Track> tracks(2);
  tracks[0].id = 4;
  tracks[0].observations = {{0, {1.5, 2.5}, 0.9, -1}, {2, {3.0, 4.0}, 0.8, -1}};
  tracks[1].id = 11;
  tracks[1].observations = {{1, {7, 8}, 1.0, -1}, {5, {9.25, 10}, 0.5, -1}, {6, {0, 0}, 0.1, -1}};
  write_track_file(dir / "t.jsonl", tracks, prov());
  EXPECT_EQ(read_track_file(dir / "t.jsonl"), tracks);
  std::ifstream in(dir / "t.jsonl");
  std::string first;
  std::getline(in, first);
  EXPECT_NE(first.find("provenance"), std::string::npos);
}

TEST(ModelJson, RoundTripKinds) {
  TempDir dir("fmt");
  ModelOutput h;
  h.kind = "homography";
  Eigen::Matrix3d m;
  m << 1, 2, 3, 4, 5, 6, 7, 8, 1;
  h.matrix = m;
  h.inliers = {0, 3, 4};
  write_model_json(dir / "h.json", h);
  const ModelOutput hb = read_model_json(dir / "h.json");
  EXPECT_EQ(hb.kind, "homography");
  EXPECT_EQ(*hb.matrix, m);
  EXPECT_EQ(hb.inliers, h.inliers);

  ModelOutput b;
  b.kind = "bspline";
  b.bspline = BSplineField::zeros(5, 4, 100, 80);
  b.bspline->control(1, 2) = {0.5, -0.25};
  b.bspline_initial = Eigen::Matrix3d::Identity();
  write_model_json(dir / "b.json", b);
  const ModelOutput bb = read_model_json(dir / "b.json");
  ASSERT_TRUE(bb.bspline);
  EXPECT_EQ(bb.bspline->grid_x, 5);
  EXPECT_EQ(bb.bspline->grid_y, 4);
  EXPECT_EQ(bb.bspline->spacing, b.bspline->spacing);
  EXPECT_EQ(bb.bspline->control(1, 2), Eigen::Vector2d(0.5, -0.25));

  ModelOutput e;
  e.kind = "essential";
  e.matrix = m;
  RelativePoseEstimate p;
  p.rotation = xmf::testing::rotation_about({0, 1, 0}, 5);
  p.translation_direction = Eigen::Vector3d(1, 0, 1).normalized();
  e.pose = p;
  write_model_json(dir / "e.json", e);
  const ModelOutput eb = read_model_json(dir / "e.json");
  ASSERT_TRUE(eb.pose);
  EXPECT_EQ(eb.pose->rotation, p.rotation);
  EXPECT_EQ(eb.pose->translation_direction, p.translation_direction);
}

TEST(EvalManifest, RoundTripAndValidation) {
  TempDir dir("fmt");
  EvalManifestRecord a;
  a.pair_id = "p0";
  a.left = "l.png";
  a.right = "r.png";
  a.gt_kind = GroundTruthKind::Planar;
  a.planar = Eigen::Matrix3d::Identity();
  a.native_size = std::make_pair(1600, 1200);
  EvalManifestRecord b;
  b.pair_id = "p1";
  b.left = "l.png";
  b.right = "r.png";
  b.gt_kind = GroundTruthKind::Landmarks;
  b.landmarks_path = "lm.csv";
  b.size0 = std::make_pair(10, 20);
  EvalManifestRecord c;
  c.pair_id = "p2";
  c.gt_kind = GroundTruthKind::Pose;
  PoseGroundTruth g;
  g.translation = {0, 0, 1};
  g.k0(0, 0) = 500;
  c.pose = g;
  {
    std::ofstream out(dir / "m.jsonl");
    out << to_jsonl(a) << "\n" << to_jsonl(b) << "\n" << to_jsonl(c) << "\n";
  }
  const auto recs = read_eval_manifest(dir / "m.jsonl");
  ASSERT_EQ(recs.size(), 3u);
  EXPECT_EQ(recs[0].native_size, a.native_size);
  EXPECT_EQ(*recs[0].planar, Eigen::Matrix3d::Identity());
  EXPECT_EQ(recs[1].gt_kind, GroundTruthKind::Landmarks);
  EXPECT_EQ(recs[1].landmarks_path, b.landmarks_path);
  EXPECT_EQ(recs[1].size0, b.size0);
  EXPECT_EQ(recs[2].pose->k0(0, 0), 500);
  EXPECT_EQ(recs[2].pose->translation, g.translation);

  {
    std::ofstream out(dir / "bad.jsonl");
    out << R"({"pair_id": "x", "left": "a", "right": "b", "gt_kind": "banana"})" << "\n";
  }
  try {
    read_eval_manifest(dir / "bad.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ManifestInvalid);
  }
}

TEST(LandmarkCsv, HeaderOptional) {
  TempDir dir("fmt");
  const auto m = some_matches();
  write_landmark_csv(dir / "a.csv", m);
  const auto back = read_landmark_csv(dir / "a.csv");
  ASSERT_EQ(back.size(), m.size());
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_EQ(back[i].left, m[i].left);
    EXPECT_EQ(back[i].right, m[i].right);
  }
  {
    std::ofstream out(dir / "b.csv");
    out << "x_src,y_src,x_dst,y_dst\n1,2,3,4\n";
  }
  const auto h = read_landmark_csv(dir / "b.csv");
  ASSERT_EQ(h.size(), 1u);
  EXPECT_EQ(h[0].right, PixelPoint(3, 4));
}
