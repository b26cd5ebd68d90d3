#include "xmf/geometry.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "xmf/error.hpp"

namespace xmf {

double distance(const PixelPoint& a, const PixelPoint& b) { return std::hypot(a.x - b.x, a.y - b.y); }

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0 && fy > 0.0)) fail(ErrorCode::InvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) fail(ErrorCode::InvalidArgument, "camera size must be positive");
  if (!(cx > 0.0 && cx < width && cy > 0.0 && cy < height))
    fail(ErrorCode::InvalidArgument, "principal point must lie inside the image");
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Eigen::Vector3d CameraIntrinsics::unproject(const PixelPoint& p) const {
  return {(p.x - cx) / fx, (p.y - cy) / fy, 1.0};
}

PixelPoint CameraIntrinsics::project(const Eigen::Vector3d& q) const {
  return {fx * q.x() / q.z() + cx, fy * q.y() / q.z() + cy};
}

bool CameraIntrinsics::contains(const PixelPoint& p) const {
  return p.x >= 0.0 && p.y >= 0.0 && p.x <= width - 1 && p.y <= height - 1;
}

RigidPose RigidPose::from_matrix(const Eigen::Matrix4d& m) {
  RigidPose pose;
  pose.rotation = m.topLeftCorner<3, 3>();
  pose.translation = m.topRightCorner<3, 1>();
  pose.validate();
  return pose;
}

Eigen::Matrix4d RigidPose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

void RigidPose::validate() const {
  if (!rotation.allFinite() || !translation.allFinite()) fail(ErrorCode::InvalidArgument, "pose is not finite");
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > 1e-9 || std::abs(rotation.determinant() - 1.0) > 1e-9)
    fail(ErrorCode::InvalidArgument, "pose rotation is not a proper rotation");
}

RigidPose RigidPose::inverse() const {
  RigidPose inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

RigidPose RigidPose::operator*(const RigidPose& rhs) const {
  RigidPose out;
  out.rotation = rotation * rhs.rotation;
  out.translation = rotation * rhs.translation + translation;
  return out;
}

RigidPose relative_pose(const RigidPose& left, const RigidPose& right) { return right * left.inverse(); }

DepthMap::DepthMap(int width, int height, double fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) fail(ErrorCode::InvalidArgument, "depth map dimensions must be positive");
  if (!std::isfinite(fill)) fail(ErrorCode::InvalidArgument, "depth values must be finite");
  values_.assign(static_cast<std::size_t>(width) * height, fill);
}

DepthMap::DepthMap(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
  if (width <= 0 || height <= 0) fail(ErrorCode::InvalidArgument, "depth map dimensions must be positive");
  if (values_.size() != static_cast<std::size_t>(width) * height)
    fail(ErrorCode::DimensionMismatch, "depth value count does not match dimensions");
  if (!std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); }))
    fail(ErrorCode::InvalidArgument, "depth values must be finite");
}

void DepthMap::set(int x, int y, double v) {
  if (!std::isfinite(v)) fail(ErrorCode::InvalidArgument, "depth values must be finite");
  values_[static_cast<std::size_t>(y) * width_ + x] = v;
}

std::optional<double> sample_depth_bilinear(const DepthMap& depth, const PixelPoint& p) {
  if (depth.empty() || !std::isfinite(p.x) || !std::isfinite(p.y)) return std::nullopt;
  if (p.x < 0.0 || p.y < 0.0 || p.x > depth.width() - 1 || p.y > depth.height() - 1) return std::nullopt;
  const int x0 = static_cast<int>(std::floor(p.x));
  const int y0 = static_cast<int>(std::floor(p.y));
  const double ax = p.x - x0;
  const double ay = p.y - y0;
  double value = 0.0;
  for (int dy = 0; dy <= 1; ++dy) {
    const double wy = dy ? ay : 1.0 - ay;
    if (wy == 0.0) continue;
    for (int dx = 0; dx <= 1; ++dx) {
      const double wx = dx ? ax : 1.0 - ax;
      if (wx == 0.0) continue;
      const double d = depth.at(x0 + dx, y0 + dy);
      if (d <= 0.0) return std::nullopt;
      value += wx * wy * d;
    }
  }
  return value;
}

std::string to_string(TransformKind kind) {
  switch (kind) {
    case TransformKind::Affine: return "affine";
    case TransformKind::Homography: return "homography";
    case TransformKind::Similarity: return "similarity";
  }
  return "homography";
}

TransformKind transform_kind_from_string(const std::string& name) {
  if (name == "affine") return TransformKind::Affine;
  if (name == "homography") return TransformKind::Homography;
  if (name == "similarity") return TransformKind::Similarity;
  fail(ErrorCode::InvalidArgument, "unknown transform kind '" + name + "'");
}

PlanarTransform::PlanarTransform(TransformKind kind, const Eigen::Matrix3d& matrix) : kind_(kind), matrix_(matrix) {
  if (!matrix_.allFinite()) fail(ErrorCode::DegenerateTransform, "transform is not finite");
  if (kind_ != TransformKind::Homography) {
    if (matrix_(2, 0) != 0.0 || matrix_(2, 1) != 0.0 || matrix_(2, 2) != 1.0)
      fail(ErrorCode::InvalidArgument, "affine transform must have last row [0, 0, 1]");
  }
  if (std::abs(matrix_.determinant()) <= 1e-12) fail(ErrorCode::DegenerateTransform, "transform is not invertible");
}

PlanarTransform PlanarTransform::identity(TransformKind kind) { return {kind, Eigen::Matrix3d::Identity()}; }

PlanarTransform PlanarTransform::translation(double tx, double ty) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return {TransformKind::Affine, m};
}

PixelPoint PlanarTransform::apply(const PixelPoint& p) const {
  const Eigen::Vector3d q = matrix_ * Eigen::Vector3d(p.x, p.y, 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

PlanarTransform PlanarTransform::inverse() const {
  Eigen::Matrix3d inv = matrix_.inverse();
  if (kind_ != TransformKind::Homography) {
    inv.row(2) << 0.0, 0.0, 1.0;
  }
  return {kind_, inv};
}

PlanarTransform PlanarTransform::operator*(const PlanarTransform& rhs) const {
  TransformKind kind = TransformKind::Homography;
  if (kind_ != TransformKind::Homography && rhs.kind_ != TransformKind::Homography) {
    kind = (kind_ == TransformKind::Similarity && rhs.kind_ == TransformKind::Similarity) ? TransformKind::Similarity
                                                                                          : TransformKind::Affine;
  }
  Eigen::Matrix3d m = matrix_ * rhs.matrix_;
  if (kind != TransformKind::Homography) m.row(2) << 0.0, 0.0, 1.0;
  return {kind, m};
}

RelativePoseEstimate RelativePoseEstimate::from_pose(const RigidPose& pose) {
  const double n = pose.translation.norm();
  if (n < 1e-12) fail(ErrorCode::DegenerateTranslation, "translation has zero norm");
  return {pose.rotation, pose.translation / n};
}

Projection lift_and_project(const PixelPoint& left_pixel, double left_depth, const CameraIntrinsics& left_camera,
                            const CameraIntrinsics& right_camera, const RigidPose& left_to_right) {
  if (!(left_depth > 0.0)) fail(ErrorCode::NonPositiveDepth, "left depth must be positive");
  const Eigen::Vector3d left_point = left_camera.unproject(left_pixel) * left_depth;
  const Eigen::Vector3d right_point = left_to_right.apply(left_point);
  Projection out;
  out.depth = right_point.z();
  if (out.depth <= 0.0) {
    out.status = ProjectionStatus::BehindCamera;
    out.pixel = {std::nan(""), std::nan("")};
    return out;
  }
  out.pixel = right_camera.project(right_point);
  return out;
}

ConsistencyCheck correspondence_errors(const PixelPoint& left_pixel, const DepthMap& left_depth,
                                       const DepthMap& right_depth, const StereoCameras& cameras,
                                       const RigidPose& left_to_right) {
  ConsistencyCheck out;
  const auto dl = sample_depth_bilinear(left_depth, left_pixel);
  if (!dl) {
    out.status = ConsistencyStatus::InvalidDepth;
    return out;
  }
  const Projection forward = lift_and_project(left_pixel, *dl, cameras.left, cameras.right, left_to_right);
  if (forward.status == ProjectionStatus::BehindCamera) {
    out.status = ConsistencyStatus::BehindCamera;
    return out;
  }
  out.projected = forward.pixel;
  if (forward.pixel.x < 0.0 || forward.pixel.y < 0.0 || forward.pixel.x > right_depth.width() - 1 ||
      forward.pixel.y > right_depth.height() - 1) {
    out.status = ConsistencyStatus::OutOfBounds;
    return out;
  }
  const auto dr = sample_depth_bilinear(right_depth, forward.pixel);
  if (!dr) {
    out.status = ConsistencyStatus::InvalidDepth;
    return out;
  }
  out.depth_error = std::abs(*dr - forward.depth) / *dr;

  const Projection backward = lift_and_project(forward.pixel, *dr, cameras.right, cameras.left, left_to_right.inverse());
  if (backward.status == ProjectionStatus::BehindCamera) {
    out.status = ConsistencyStatus::BehindCamera;
    return out;
  }
  out.cycle_error = distance(left_pixel, backward.pixel);
  return out;
}

namespace {

struct PairGeometry {
  const DepthMap* left_depth;
  const DepthMap* right_depth;
  StereoCameras cameras;
  RigidPose left_to_right;
};

PairGeometry pair_geometry(const PosedView& left, const PosedView& right) {
  if (!left.depth || !right.depth) fail(ErrorCode::GeometryMissing, "both views need depth maps");
  if (!left.pose || !right.pose) fail(ErrorCode::GeometryMissing, "both views need poses");
  left.camera.validate();
  right.camera.validate();
  if (left.depth->width() != left.camera.width || left.depth->height() != left.camera.height ||
      right.depth->width() != right.camera.width || right.depth->height() != right.camera.height)
    fail(ErrorCode::DimensionMismatch, "depth map size differs from camera size");
  return {&*left.depth, &*right.depth, {left.camera, right.camera}, relative_pose(*left.pose, *right.pose)};
}

}  // namespace

std::vector<Correspondence> filter_grid_correspondences(const PosedView& left, const PosedView& right, int grid_step,
                                                        const ConsistencyThresholds& thresholds) {
  if (grid_step < 1) fail(ErrorCode::InvalidArgument, "grid_step must be >= 1");
  const PairGeometry g = pair_geometry(left, right);
  std::vector<Correspondence> out;
  for (int y = 0; y < g.left_depth->height(); y += grid_step) {
    for (int x = 0; x < g.left_depth->width(); x += grid_step) {
      if (!g.left_depth->valid(x, y)) continue;
      const PixelPoint p{static_cast<double>(x), static_cast<double>(y)};
      const ConsistencyCheck c = correspondence_errors(p, *g.left_depth, *g.right_depth, g.cameras, g.left_to_right);
      if (thresholds.accepts(c)) out.push_back({p, c.projected, 1.0});
    }
  }
  return out;
}

double overlap_ratio(const PosedView& left, const PosedView& right, double max_depth_error) {
  const PairGeometry g = pair_geometry(left, right);
  std::size_t valid = 0;
  std::size_t consistent = 0;
  for (int y = 0; y < g.left_depth->height(); ++y) {
    for (int x = 0; x < g.left_depth->width(); ++x) {
      if (!g.left_depth->valid(x, y)) continue;
      ++valid;
      const PixelPoint p{static_cast<double>(x), static_cast<double>(y)};
      const ConsistencyCheck c = correspondence_errors(p, *g.left_depth, *g.right_depth, g.cameras, g.left_to_right);
      if (c.status == ConsistencyStatus::Ok && c.depth_error < max_depth_error)
        ++consistent;
    }
  }
  if (valid == 0) fail(ErrorCode::NoValidDepth, "left view has no valid depth");
  return static_cast<double>(consistent) / static_cast<double>(valid);
}

double rotation_angle_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  return Eigen::AngleAxisd(a.transpose() * b).angle() * 180.0 / std::numbers::pi;
}

double vector_angle_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na < 1e-12 || nb < 1e-12) fail(ErrorCode::DegenerateTranslation, "translation has zero norm");
  const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

PoseError relative_pose_error(const RelativePoseEstimate& estimate, const RelativePoseEstimate& ground_truth) {
  PoseError e;
  e.translation_deg = vector_angle_deg(estimate.translation_direction, ground_truth.translation_direction);
  e.rotation_deg = rotation_angle_deg(estimate.rotation, ground_truth.rotation);
  e.combined_deg = std::max(e.rotation_deg, e.translation_deg);
  return e;
}

}  // namespace xmf
