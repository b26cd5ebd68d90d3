#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "xmf/geometry.hpp"

namespace xmf {

/// Least-squares 6-parameter affine map minimizing sum |A(x_l) - x_r|^2.
/// Throws DegenerateConfiguration when the left points are collinear.
PlanarTransform solve_affine_lsq(std::span<const Correspondence> corrs);

/// Normalized DLT homography. The returned matrix has unit Frobenius norm
/// and a positive bottom-right entry whenever that entry is not ~0.
PlanarTransform solve_homography_dlt(std::span<const Correspondence> corrs);

/// Normalized 8-point solver. With essential = true, coordinates must already
/// be camera-normalized (K^-1 x) and the result is projected onto singular
/// values (1, 1, 0); otherwise rank 2 is enforced and the matrix is scaled to
/// unit Frobenius norm.
Eigen::Matrix3d solve_epipolar_8pt(std::span<const Correspondence> corrs, bool essential);

// First-order geometric distance of (x_l, x_r) to the epipolar model
// x_r^T F x_l = 0, in the units of the input coordinates.
double sampson_distance(const Eigen::Matrix3d& f, const PixelPoint& left, const PixelPoint& right);

// Maps pixel matches to camera-normalized coordinates.
std::vector<Correspondence> normalize_correspondences(std::span<const Correspondence> corrs,
                                                      const StereoCameras& cameras);

// Linear triangulation with P_l = [I | 0], P_r = [R | t] on normalized points.
// Returns a point in left-camera coordinates, or nothing at infinity.
std::optional<Eigen::Vector3d> triangulate(const PixelPoint& left, const PixelPoint& right, const Eigen::Matrix3d& rotation,
                                           const Eigen::Vector3d& translation);

struct PoseRecovery {
  RelativePoseEstimate pose;
  std::size_t positive_depth = 0;  // cheirality support of the chosen candidate
};

/// Four-way essential decomposition resolved by cheirality. Inputs are
/// camera-normalized matches. Throws CheiralityAmbiguous when the best
/// candidate has positive depth for at most half of the points.
PoseRecovery recover_pose(const Eigen::Matrix3d& essential, std::span<const Correspondence> normalized);

// Pixel-space overload: normalizes with the given cameras first.
PoseRecovery recover_pose(const Eigen::Matrix3d& essential, std::span<const Correspondence> corrs,
                          const StereoCameras& cameras);

}  // namespace xmf
