#include "fixtures.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unistd.h>

#include "xmf/depth_io.hpp"
#include "xmf/formats.hpp"
#include "xmf/image.hpp"

namespace xmf::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("xmf-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::string read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Eigen::Matrix3d rotation_about(const Eigen::Vector3d& axis, double degrees) {
  return Eigen::AngleAxisd(degrees * std::numbers::pi / 180.0, axis.normalized()).toRotationMatrix();
}

Eigen::Matrix3d random_rotation(Rng& rng, double max_degrees) {
  Eigen::Vector3d axis;
  do {
    axis = {rng.normal(), rng.normal(), rng.normal()};
  } while (axis.norm() < 1e-6);
  return rotation_about(axis, rng.uniform(-max_degrees, max_degrees));
}

Eigen::Vector2d random_in_disk(Rng& rng, double radius) {
  const double r = radius * std::sqrt(rng.uniform());
  const double a = rng.uniform(0.0, 2.0 * std::numbers::pi);
  return {r * std::cos(a), r * std::sin(a)};
}

// ---- plane + box -----------------------------------------------------------------

namespace {

constexpr double kPlaneZ = 10.0;
constexpr double kPlaneTopY = -4.0;
const Eigen::Vector3d kBoxMin{-1.5, -1.0, 9.0};
const Eigen::Vector3d kBoxMax{1.5, 2.0, 9.6};

// Ray parameter of the first hit (ray direction has unit camera z), or -1.
double cast(const Eigen::Vector3d& origin, const Eigen::Vector3d& dir, bool* on_box) {
  double best = -1.0;
  *on_box = false;
  if (std::abs(dir.z()) > 1e-12) {
    const double s = (kPlaneZ - origin.z()) / dir.z();
    if (s > 0.0 && (origin + s * dir).y() >= kPlaneTopY) best = s;
  }
  double t0 = -1e300;
  double t1 = 1e300;
  bool miss = false;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(dir[k]) < 1e-15) {
      if (origin[k] < kBoxMin[k] || origin[k] > kBoxMax[k]) miss = true;
      continue;
    }
    double a = (kBoxMin[k] - origin[k]) / dir[k];
    double b = (kBoxMax[k] - origin[k]) / dir[k];
    if (a > b) std::swap(a, b);
    t0 = std::max(t0, a);
    t1 = std::min(t1, b);
  }
  if (!miss && t0 <= t1 && t0 > 0.0 && (best < 0.0 || t0 < best)) {
    best = t0;
    *on_box = true;
  }
  return best;
}

PosedView render_view(const std::string& id, const CameraIntrinsics& cam, const RigidPose& pose) {
  PosedView v;
  v.id = id;
  v.camera = cam;
  v.pose = pose;
  DepthMap depth(cam.width, cam.height, 0.0);
  Image image(cam.width, cam.height, 0.0f);
  const Eigen::Matrix3d rt = pose.rotation.transpose();
  const Eigen::Vector3d center = -rt * pose.translation;
  for (int y = 0; y < cam.height; ++y) {
    for (int x = 0; x < cam.width; ++x) {
      const Eigen::Vector3d dc((x - cam.cx) / cam.fx, (y - cam.cy) / cam.fy, 1.0);
      bool box = false;
      const double s = cast(center, rt * dc, &box);
      if (s <= 0.0) continue;
      depth.set(x, y, s);
      const Eigen::Vector3d w = center + s * (rt * dc);
      const double tex = 128.0 + 50.0 * std::sin(2.0 * w.x()) * std::cos(2.0 * w.y()) + (box ? 40.0 : 0.0);
      image.at(x, y) = static_cast<float>(std::clamp(tex, 0.0, 255.0));
    }
  }
  v.depth = std::move(depth);
  v.image = std::move(image);
  return v;
}

CameraIntrinsics square_camera(int size) {
  CameraIntrinsics c;
  c.fx = c.fy = 200.0 * size / 256.0;
  c.cx = c.cy = (size - 1) / 2.0;
  c.width = c.height = size;
  return c;
}

RigidPose right_pose() {
  RigidPose p;
  p.rotation = rotation_about(Eigen::Vector3d::UnitY(), -3.0);
  const Eigen::Vector3d center(0.8, 0.1, 0.0);
  p.translation = -p.rotation * center;
  return p;
}

}  // namespace

double plane_box_depth(const CameraIntrinsics& cam, const RigidPose& pose, double px, double py) {
  const Eigen::Matrix3d rt = pose.rotation.transpose();
  const Eigen::Vector3d center = -rt * pose.translation;
  const Eigen::Vector3d dc((px - cam.cx) / cam.fx, (py - cam.cy) / cam.fy, 1.0);
  bool box = false;
  const double s = cast(center, rt * dc, &box);
  return s > 0.0 ? s : 0.0;
}

PlaneBoxScene plane_box_scene(int size) {
  const CameraIntrinsics cam = square_camera(size);
  return {render_view("view0", cam, RigidPose{}), render_view("view1", cam, right_pose())};
}

void write_scene(const fs::path& dir, std::span<const PosedView> views) {
  fs::create_directories(dir);
  for (const auto& v : views) {
    write_png(dir / (v.id + ".png"), *v.image);
    write_camera_json(dir / (v.id + ".camera.json"), {v.camera, *v.pose});
    write_pfm(dir / (v.id + ".depth.pfm"), *v.depth);
  }
}

// ---- video --------------------------------------------------------------------

SyntheticVideo synthetic_video(const VideoConfig& cfg) {
  SyntheticVideo video;
  video.config = cfg;
  Rng rng(cfg.seed);
  const double travel_x = cfg.velocity.x() * (cfg.frames - 1);
  const double travel_y = cfg.velocity.y() * (cfg.frames - 1);
  std::vector<Eigen::Vector2d> points;
  // Frame-0 positions, wide enough that points enter as the view moves.
  for (double y = -travel_y - cfg.spacing / 2; y < cfg.height + std::abs(travel_y); y += cfg.spacing)
    for (double x = -travel_x - cfg.spacing / 2; x < cfg.width + std::abs(travel_x); x += cfg.spacing)
      points.emplace_back(x, y);

  auto inside = [&](const Eigen::Vector2d& p) {
    return p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= cfg.width - 1 && p.y() <= cfg.height - 1;
  };
  for (int a = 0; a < cfg.frames; ++a) {
    for (int b = a + 1; b < cfg.frames && b <= a + cfg.lookahead; ++b) {
      PairMatches pm;
      pm.frame_a = a;
      pm.frame_b = b;
      for (const auto& p0 : points) {
        const Eigen::Vector2d pa = p0 + cfg.velocity * a;
        const Eigen::Vector2d pb = p0 + cfg.velocity * b;
        if (!inside(pa) || !inside(pb)) continue;
        const Eigen::Vector2d l = pa + random_in_disk(rng, cfg.jitter);
        const Eigen::Vector2d r = pb + random_in_disk(rng, cfg.jitter);
        const double conf = rng.uniform(0.6, 1.0);
        pm.matches.push_back({PixelPoint::from(l), PixelPoint::from(r), conf});
        if (rng.uniform() < cfg.duplicate_rate) {
          const Eigen::Vector2d dl = l + random_in_disk(rng, cfg.duplicate_offset);
          const Eigen::Vector2d dr = r + random_in_disk(rng, cfg.duplicate_offset);
          pm.matches.push_back({PixelPoint::from(dl), PixelPoint::from(dr), conf * rng.uniform(0.3, 0.6)});
        }
      }
      video.pairs.push_back(std::move(pm));
    }
  }
  return video;
}

void write_video_matches(const fs::path& dir, const SyntheticVideo& video) {
  fs::create_directories(dir);
  for (const auto& p : video.pairs) {
    MatchFileHeader h;
    h.left = "frame" + std::to_string(p.frame_a) + ".png";
    h.right = "frame" + std::to_string(p.frame_b) + ".png";
    h.width0 = h.width1 = video.config.width;
    h.height0 = h.height1 = video.config.height;
    h.frame0 = p.frame_a;
    h.frame1 = p.frame_b;
    char name[64];
    std::snprintf(name, sizeof name, "pair_%03d_%03d.jsonl", p.frame_a, p.frame_b);
    write_match_jsonl(dir / name, h, p.matches);
  }
}

// ---- two-view ------------------------------------------------------------------

TwoViewScene two_view_scene(std::uint64_t seed, std::size_t count, double noise_px, double max_rotation_deg) {
  Rng rng(seed);
  TwoViewScene s;
  CameraIntrinsics cam;
  cam.fx = cam.fy = 500.0;
  cam.cx = 319.5;
  cam.cy = 239.5;
  cam.width = 640;
  cam.height = 480;
  s.cameras = {cam, cam};
  s.left_to_right.rotation = random_rotation(rng, max_rotation_deg);
  Eigen::Vector3d t(rng.normal(), rng.normal(), 0.3 * rng.normal());
  s.left_to_right.translation = t.normalized();
  while (s.matches.size() < count) {
    const double u = rng.uniform(0.0, cam.width - 1.0);
    const double v = rng.uniform(0.0, cam.height - 1.0);
    const double z = rng.uniform(2.0, 10.0);
    const Eigen::Vector3d xl((u - cam.cx) / cam.fx * z, (v - cam.cy) / cam.fy * z, z);
    const Eigen::Vector3d xr = s.left_to_right.rotation * xl + s.left_to_right.translation;
    if (xr.z() < 0.5) continue;
    const double ur = cam.fx * xr.x() / xr.z() + cam.cx;
    const double vr = cam.fy * xr.y() / xr.z() + cam.cy;
    if (ur < 0.0 || vr < 0.0 || ur > cam.width - 1.0 || vr > cam.height - 1.0) continue;
    PixelPoint l{u, v};
    PixelPoint r{ur, vr};
    if (noise_px > 0.0) {
      l = {l.x + noise_px * rng.normal(), l.y + noise_px * rng.normal()};
      r = {r.x + noise_px * rng.normal(), r.y + noise_px * rng.normal()};
    }
    s.matches.push_back({l, r, 1.0});
  }
  return s;
}

// ---- planted homography ------------------------------------------------------------

PlantedHomography planted_homography(std::uint64_t seed, std::size_t count, double inlier_fraction,
                                     double noise_radius, int width, int height) {
  Rng rng(seed);
  PlantedHomography out;
  const double a = rng.uniform(-20.0, 20.0) * std::numbers::pi / 180.0;
  const double s = rng.uniform(0.85, 1.2);
  Eigen::Matrix3d c;
  c << 1, 0, (width - 1) / 2.0, 0, 1, (height - 1) / 2.0, 0, 0, 1;
  Eigen::Matrix3d m;
  m << s * std::cos(a), -s * std::sin(a), rng.uniform(-30.0, 30.0),  //
      s * std::sin(a), s * std::cos(a), rng.uniform(-30.0, 30.0),    //
      rng.uniform(-2e-4, 2e-4), rng.uniform(-2e-4, 2e-4), 1.0;
  out.h = c * m * c.inverse();
  auto apply = [&](const Eigen::Vector2d& p) {
    const Eigen::Vector3d q = out.h * p.homogeneous();
    return Eigen::Vector2d(q.x() / q.z(), q.y() / q.z());
  };
  const auto inliers = static_cast<std::size_t>(std::lround(inlier_fraction * count));
  std::vector<Correspondence> planted;
  std::vector<Correspondence> outliers;
  while (planted.size() < inliers) {
    const Eigen::Vector2d l(rng.uniform(0.0, width - 1.0), rng.uniform(0.0, height - 1.0));
    const Eigen::Vector2d r = apply(l) + random_in_disk(rng, noise_radius);
    planted.push_back({PixelPoint::from(l), PixelPoint::from(r), 1.0});
  }
  while (outliers.size() < count - inliers) {
    const Eigen::Vector2d l(rng.uniform(0.0, width - 1.0), rng.uniform(0.0, height - 1.0));
    const Eigen::Vector2d r(rng.uniform(0.0, width - 1.0), rng.uniform(0.0, height - 1.0));
    if ((apply(l) - r).norm() < 20.0) continue;  // keep outliers unambiguous
    outliers.push_back({PixelPoint::from(l), PixelPoint::from(r), 1.0});
  }
  // Interleave deterministically.
  std::vector<std::size_t> order(count);
  for (std::size_t i = 0; i < count; ++i) order[i] = i;
  for (std::size_t i = count; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  out.matches.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t src = order[k];
    if (src < inliers) {
      out.matches[k] = planted[src];
      out.planted.push_back(k);
    } else {
      out.matches[k] = outliers[src - inliers];
    }
  }
  return out;
}

// ---- displacement field --------------------------------------------------------------

Eigen::Vector2d sinusoid_displacement(double x, double y, double amplitude, double size) {
  const double w = 2.0 * std::numbers::pi / size;
  return {amplitude * std::sin(w * y), amplitude * std::sin(w * x)};
}

std::vector<Correspondence> sinusoid_matches(int size, int step, double amplitude) {
  std::vector<Correspondence> out;
  for (int y = 0; y < size; y += step) {
    for (int x = 0; x < size; x += step) {
      const Eigen::Vector2d d = sinusoid_displacement(x, y, amplitude, size);
      out.push_back({{double(x), double(y)}, {x + d.x(), y + d.y()}, 1.0});
    }
  }
  return out;
}

}  // namespace xmf::testing
