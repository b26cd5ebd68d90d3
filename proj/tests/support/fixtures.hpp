#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xmf/geometry.hpp"
#include "xmf/rng.hpp"
#include "xmf/tracks.hpp"

namespace xmf::testing {

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::string read_bytes(const std::filesystem::path& path);

Eigen::Matrix3d rotation_about(const Eigen::Vector3d& axis, double degrees);
Eigen::Matrix3d random_rotation(Rng& rng, double max_degrees);
Eigen::Vector2d random_in_disk(Rng& rng, double radius);

// ---- plane + box scene --------------------------------------------------------
//
// Ground plane Z = 10 (cut off above Y = -4, where rays see nothing), and a
// box whose front face sits at Z = 9. Two square views, the second shifted
// along x and turned slightly. Depths are ray-cast analytically.

struct PlaneBoxScene {
  PosedView left;
  PosedView right;
};

PlaneBoxScene plane_box_scene(int size = 256);
// Ray-cast z-depth (0 for no hit) at pixel p of a camera.
double plane_box_depth(const CameraIntrinsics& camera, const RigidPose& world_to_camera, double px, double py);

// <id>.png, <id>.camera.json and <id>.depth.pfm per view.
void write_scene(const std::filesystem::path& dir, std::span<const PosedView> views);

// ---- planar-motion video --------------------------------------------------------

struct VideoConfig {
  int frames = 50;
  int width = 640;
  int height = 480;
  double spacing = 16.0;
  Eigen::Vector2d velocity{1.5, 0.5};  // pixels per frame
  int lookahead = 10;
  double jitter = 1.0;
  double duplicate_rate = 0.2;
  double duplicate_offset = 2.0;
  std::uint64_t seed = 1;
};

struct SyntheticVideo {
  VideoConfig config;
  std::vector<PairMatches> pairs;

  // True displacement of every scene point from frame a to frame b.
  Eigen::Vector2d flow(int a, int b) const { return config.velocity * static_cast<double>(b - a); }
};

SyntheticVideo synthetic_video(const VideoConfig& config = {});
// One JSON Lines match file per pair, with frame ids in the header.
void write_video_matches(const std::filesystem::path& dir, const SyntheticVideo& video);

// ---- two-view scene ---------------------------------------------------------------

struct TwoViewScene {
  StereoCameras cameras;
  RigidPose left_to_right;
  std::vector<Correspondence> matches;
};

TwoViewScene two_view_scene(std::uint64_t seed, std::size_t count = 100, double noise_px = 0.0,
                            double max_rotation_deg = 15.0);

// ---- planted homography ---------------------------------------------------------

struct PlantedHomography {
  Eigen::Matrix3d h;
  std::vector<Correspondence> matches;
  std::vector<std::size_t> planted;  // indices of the inliers
};

PlantedHomography planted_homography(std::uint64_t seed, std::size_t count = 200, double inlier_fraction = 0.7,
                                     double noise_radius = 0.5, int width = 640, int height = 480);

// ---- smooth displacement field ---------------------------------------------------

Eigen::Vector2d sinusoid_displacement(double x, double y, double amplitude = 5.0, double size = 512.0);
std::vector<Correspondence> sinusoid_matches(int size = 512, int step = 8, double amplitude = 5.0);

}  // namespace xmf::testing
