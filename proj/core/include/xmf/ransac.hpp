#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "xmf/geometry.hpp"

namespace xmf {

enum class ModelKind { Affine, Homography, Fundamental, Essential };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);
std::size_t minimal_sample_size(ModelKind kind);
// 3 px for planar models, 2 px Sampson for fundamental, 3e-3 Sampson in
// normalized coordinates for essential.
double default_inlier_threshold(ModelKind kind);

struct RansacConfig {
  int max_iterations = 1000;
  double confidence = 0.99999;
  double inlier_threshold = 0.0;  // <= 0 selects default_inlier_threshold
  std::uint64_t seed = 0;

  void validate() const;
};

struct FitResult {
  ModelKind kind = ModelKind::Homography;
  std::optional<PlanarTransform> transform;        // affine / homography
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Zero();  // fundamental / essential (or the planar matrix)
  std::optional<RelativePoseEstimate> pose;        // essential
  std::vector<std::size_t> inliers;
  int iterations_run = 0;
  std::size_t score = 0;  // inlier count
  double threshold = 0.0;
};

// Residual used for inlier classification. Planar models use the larger of
// the forward and backward transfer distances; epipolar models use the
// Sampson distance (normalized coordinates for essential).
double planar_residual(const PlanarTransform& t, const PlanarTransform& inverse, const Correspondence& c);

/// Hypothesize-and-verify with uniform seeded minimal samples, adaptive
/// termination and a least-squares refit on the best inlier set. Degenerate
/// minimal samples consume an iteration and are skipped. Plain inlier
/// counting is used for scoring. Essential models need `cameras`.
FitResult ransac(std::span<const Correspondence> corrs, ModelKind kind, const RansacConfig& config,
                 const std::optional<StereoCameras>& cameras = std::nullopt);

// Iterations needed so that an all-inlier sample is drawn with the given
// confidence when the inlier ratio is `inlier_ratio`.
int required_iterations(double inlier_ratio, std::size_t sample_size, double confidence, int max_iterations);

}  // namespace xmf
