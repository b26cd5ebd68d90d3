#include "xmf/ransac.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "xmf/error.hpp"
#include "xmf/rng.hpp"
#include "xmf/solvers.hpp"

namespace xmf {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Affine: return "affine";
    case ModelKind::Homography: return "homography";
    case ModelKind::Fundamental: return "fundamental";
    case ModelKind::Essential: return "essential";
  }
  return "homography";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "affine") return ModelKind::Affine;
  if (name == "homography") return ModelKind::Homography;
  if (name == "fundamental") return ModelKind::Fundamental;
  if (name == "essential") return ModelKind::Essential;
  fail(ErrorCode::InvalidArgument, "unknown model kind '" + name + "'");
}

std::size_t minimal_sample_size(ModelKind kind) {
  switch (kind) {
    case ModelKind::Affine: return 3;
    case ModelKind::Homography: return 4;
    case ModelKind::Fundamental:
    case ModelKind::Essential: return 8;
  }
  return 8;
}

double default_inlier_threshold(ModelKind kind) {
  switch (kind) {
    case ModelKind::Affine:
    case ModelKind::Homography: return 3.0;
    case ModelKind::Fundamental: return 2.0;
    case ModelKind::Essential: return 3e-3;
  }
  return 3.0;
}

void RansacConfig::validate() const {
  if (max_iterations < 1) fail(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  if (!(confidence > 0.0 && confidence < 1.0)) fail(ErrorCode::InvalidArgument, "confidence must be in (0, 1)");
  if (!std::isfinite(inlier_threshold)) fail(ErrorCode::InvalidArgument, "threshold must be finite");
}

double planar_residual(const PlanarTransform& t, const PlanarTransform& inverse, const Correspondence& c) {
  const double forward = distance(t.apply(c.left), c.right);
  const double backward = distance(inverse.apply(c.right), c.left);
  const double r = std::max(forward, backward);
  return std::isfinite(r) ? r : std::numeric_limits<double>::infinity();
}

int required_iterations(double inlier_ratio, std::size_t sample_size, double confidence, int max_iterations) {
  const double all_inlier = std::pow(inlier_ratio, static_cast<double>(sample_size));
  if (all_inlier >= 1.0) return 1;
  if (all_inlier <= 0.0) return max_iterations;
  const double k = std::log(1.0 - confidence) / std::log(1.0 - all_inlier);
  if (!std::isfinite(k) || k >= max_iterations) return max_iterations;
  return std::max(1, static_cast<int>(std::ceil(k)));
}

namespace {

struct Model {
  std::optional<PlanarTransform> transform;
  std::optional<PlanarTransform> inverse;
  Eigen::Matrix3d matrix = Eigen::Matrix3d::Zero();
};

Model solve(ModelKind kind, std::span<const Correspondence> sample) {
  Model m;
  switch (kind) {
    case ModelKind::Affine: m.transform = solve_affine_lsq(sample); break;
    case ModelKind::Homography: m.transform = solve_homography_dlt(sample); break;
    case ModelKind::Fundamental: m.matrix = solve_epipolar_8pt(sample, false); break;
    case ModelKind::Essential: m.matrix = solve_epipolar_8pt(sample, true); break;
  }
  if (m.transform) {
    m.inverse = m.transform->inverse();
    m.matrix = m.transform->matrix();
  }
  return m;
}

double residual(const Model& m, const Correspondence& c) {
  if (m.transform) return planar_residual(*m.transform, *m.inverse, c);
  return sampson_distance(m.matrix, c.left, c.right);
}

std::vector<std::size_t> classify(const Model& m, std::span<const Correspondence> corrs, double threshold) {
  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < corrs.size(); ++i)
    if (residual(m, corrs[i]) <= threshold) inliers.push_back(i);
  return inliers;
}

}  // namespace

FitResult ransac(std::span<const Correspondence> input, ModelKind kind, const RansacConfig& config,
                 const std::optional<StereoCameras>& cameras) {
  config.validate();
  const std::size_t s = minimal_sample_size(kind);
  if (input.size() < s) fail(ErrorCode::InsufficientData, "not enough correspondences for " + to_string(kind));
  const double threshold = config.inlier_threshold > 0.0 ? config.inlier_threshold : default_inlier_threshold(kind);

  std::vector<Correspondence> normalized;
  std::span<const Correspondence> corrs = input;
  if (kind == ModelKind::Essential) {
    if (!cameras) fail(ErrorCode::InvalidArgument, "essential estimation needs camera intrinsics");
    normalized = normalize_correspondences(input, *cameras);
    corrs = normalized;
  }

  Rng rng(config.seed);
  const std::size_t n = corrs.size();
  std::vector<std::size_t> indices(s);
  std::vector<Correspondence> sample(s);

  std::optional<Model> best;
  std::vector<std::size_t> best_inliers;
  int needed = config.max_iterations;
  int iteration = 0;
  while (iteration < config.max_iterations && iteration < needed) {
    ++iteration;
    for (std::size_t k = 0; k < s; ++k) {
      std::size_t idx;
      do {
        idx = static_cast<std::size_t>(rng.index(n));
      } while (std::find(indices.begin(), indices.begin() + static_cast<std::ptrdiff_t>(k), idx) !=
               indices.begin() + static_cast<std::ptrdiff_t>(k));
      indices[k] = idx;
      sample[k] = corrs[idx];
    }
    Model hypothesis;
    try {
      hypothesis = solve(kind, sample);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::DegenerateConfiguration || e.code() == ErrorCode::DegenerateTransform) continue;
      throw;
    }
    auto inliers = classify(hypothesis, corrs, threshold);
    if (inliers.size() > best_inliers.size()) {
      best_inliers = std::move(inliers);
      best = std::move(hypothesis);
      needed = required_iterations(static_cast<double>(best_inliers.size()) / static_cast<double>(n), s,
                                   config.confidence, config.max_iterations);
    }
  }

  if (!best || best_inliers.size() < s) fail(ErrorCode::NoModel, "no hypothesis reached the minimal inlier count");

  // Least-squares refit on the consensus set; kept only if it does not lose support.
  try {
    std::vector<Correspondence> consensus;
    consensus.reserve(best_inliers.size());
    for (const std::size_t i : best_inliers) consensus.push_back(corrs[i]);
    Model refit = solve(kind, consensus);
    auto refit_inliers = classify(refit, corrs, threshold);
    if (refit_inliers.size() >= best_inliers.size()) {
      best = std::move(refit);
      best_inliers = std::move(refit_inliers);
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateConfiguration && e.code() != ErrorCode::DegenerateTransform) throw;
  }

  FitResult result;
  result.kind = kind;
  result.transform = best->transform;
  result.matrix = best->matrix;
  result.inliers = std::move(best_inliers);
  result.iterations_run = iteration;
  result.score = result.inliers.size();
  result.threshold = threshold;

  if (kind == ModelKind::Essential) {
    std::vector<Correspondence> consensus;
    for (const std::size_t i : result.inliers) consensus.push_back(corrs[i]);
    result.pose = recover_pose(result.matrix, consensus).pose;
  }
  return result;
}

}  // namespace xmf
