#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "xmf/image.hpp"

namespace xmf {

// Pixel coordinates with (0, 0) at the center of the top-left pixel.
struct PixelPoint {
  double x = 0.0;
  double y = 0.0;

  Eigen::Vector2d vec() const { return {x, y}; }
  static PixelPoint from(const Eigen::Vector2d& v) { return {v.x(), v.y()}; }
  friend bool operator==(const PixelPoint&, const PixelPoint&) = default;
};

double distance(const PixelPoint& a, const PixelPoint& b);

struct CameraIntrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  void validate() const;
  Eigen::Matrix3d matrix() const;
  // Ray through the pixel with unit z.
  Eigen::Vector3d unproject(const PixelPoint& p) const;
  PixelPoint project(const Eigen::Vector3d& camera_point) const;
  bool contains(const PixelPoint& p) const;

  friend bool operator==(const CameraIntrinsics&, const CameraIntrinsics&) = default;
};

// World-to-camera rigid transform: X_cam = R * X_world + t.
struct RigidPose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static RigidPose from_matrix(const Eigen::Matrix4d& m);
  Eigen::Matrix4d matrix() const;

  void validate() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return rotation * x + translation; }
  RigidPose inverse() const;
  RigidPose operator*(const RigidPose& rhs) const;
};

// Pose taking left-camera coordinates to right-camera coordinates.
RigidPose relative_pose(const RigidPose& left, const RigidPose& right);

// Depth per pixel; values <= 0 mark invalid pixels.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, double fill = 0.0);
  DepthMap(int width, int height, std::vector<double> values);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return values_.empty(); }

  double at(int x, int y) const { return values_[static_cast<std::size_t>(y) * width_ + x]; }
  void set(int x, int y, double v);
  bool valid(int x, int y) const { return at(x, y) > 0.0; }

  const std::vector<double>& values() const noexcept { return values_; }

  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<double> values_;
};

/// Bilinear depth lookup. Returns nothing when p falls outside
/// [0, W-1] x [0, H-1] or when any neighbor carrying nonzero weight is
/// invalid, so invalid zeros are never blended into the result.
std::optional<double> sample_depth_bilinear(const DepthMap& depth, const PixelPoint& p);

struct Correspondence {
  PixelPoint left;
  PixelPoint right;
  double confidence = 1.0;

  friend bool operator==(const Correspondence&, const Correspondence&) = default;
};

enum class TransformKind { Affine, Homography, Similarity };

std::string to_string(TransformKind kind);
TransformKind transform_kind_from_string(const std::string& name);

// 3x3 planar transform acting on pixel coordinates.
class PlanarTransform {
 public:
  PlanarTransform() = default;
  PlanarTransform(TransformKind kind, const Eigen::Matrix3d& matrix);

  static PlanarTransform identity(TransformKind kind = TransformKind::Homography);
  static PlanarTransform translation(double tx, double ty);

  TransformKind kind() const noexcept { return kind_; }
  const Eigen::Matrix3d& matrix() const noexcept { return matrix_; }

  PixelPoint apply(const PixelPoint& p) const;
  PlanarTransform inverse() const;
  // (a * b)(p) == a(b(p))
  PlanarTransform operator*(const PlanarTransform& rhs) const;

 private:
  TransformKind kind_ = TransformKind::Homography;
  Eigen::Matrix3d matrix_ = Eigen::Matrix3d::Identity();
};

struct RelativePoseEstimate {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_direction = Eigen::Vector3d::UnitX();

  // Normalizes the translation; throws DegenerateTranslation on a zero vector.
  static RelativePoseEstimate from_pose(const RigidPose& pose);
};

struct PosedView {
  std::string id;
  CameraIntrinsics camera;
  std::optional<RigidPose> pose;
  std::optional<DepthMap> depth;
  std::optional<Image> image;
};

enum class ProjectionStatus { Ok, BehindCamera };

struct Projection {
  ProjectionStatus status = ProjectionStatus::Ok;
  PixelPoint pixel;
  double depth = 0.0;  // z of the transported point in the target camera
};

/// Lifts a left pixel to 3D with its depth, moves it into the right camera
/// and projects it. Throws NonPositiveDepth when depth <= 0.
Projection lift_and_project(const PixelPoint& left_pixel, double left_depth, const CameraIntrinsics& left_camera,
                            const CameraIntrinsics& right_camera, const RigidPose& left_to_right);

enum class ConsistencyStatus { Ok, InvalidDepth, OutOfBounds, BehindCamera };

struct ConsistencyCheck {
  ConsistencyStatus status = ConsistencyStatus::Ok;
  double depth_error = 0.0;  // e_d, dimensionless
  double cycle_error = 0.0;  // e_c, pixels
  PixelPoint projected;
};

struct ConsistencyThresholds {
  double max_depth_error = 0.05;
  double max_cycle_error = 3.0;

  bool accepts(const ConsistencyCheck& c) const {
    return c.status == ConsistencyStatus::Ok && c.depth_error < max_depth_error && c.cycle_error < max_cycle_error;
  }
};

struct StereoCameras {
  CameraIntrinsics left;
  CameraIntrinsics right;
};

/// Warped-depth error and cycle reprojection error of one left pixel.
/// Failures (invalid depth, out-of-bounds projection, point behind a
/// camera) are reported through the status field.
ConsistencyCheck correspondence_errors(const PixelPoint& left_pixel, const DepthMap& left_depth,
                                       const DepthMap& right_depth, const StereoCameras& cameras,
                                       const RigidPose& left_to_right);

/// Depth-consistent matches sampled on a grid_step lattice of the left view.
/// Throws GeometryMissing when either view lacks depth or pose.
std::vector<Correspondence> filter_grid_correspondences(const PosedView& left, const PosedView& right, int grid_step,
                                                        const ConsistencyThresholds& thresholds = {});

/// Fraction of valid-depth left pixels that land inside the right view with
/// e_d below the threshold. Not symmetric. Throws NoValidDepth.
double overlap_ratio(const PosedView& left, const PosedView& right, double max_depth_error = 0.05);

struct PoseError {
  double rotation_deg = 0.0;
  double translation_deg = 0.0;
  double combined_deg = 0.0;  // max of the two
};

PoseError relative_pose_error(const RelativePoseEstimate& estimate, const RelativePoseEstimate& ground_truth);

double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);
double vector_angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b);

}  // namespace xmf
