#include "xmf/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "xmf/error.hpp"
#include "xmf/parallel.hpp"
#include "xmf/rng.hpp"

namespace xmf {

std::string to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::WarpAffine: return "warp_affine";
    case ProtocolKind::WarpHomography: return "warp_homography";
    case ProtocolKind::RtreBspline: return "rtre_bspline";
    case ProtocolKind::PoseEssential: return "pose_essential";
  }
  return "warp_affine";
}

ProtocolKind protocol_from_string(const std::string& name) {
  if (name == "warp_affine") return ProtocolKind::WarpAffine;
  if (name == "warp_homography") return ProtocolKind::WarpHomography;
  if (name == "rtre_bspline") return ProtocolKind::RtreBspline;
  if (name == "pose_essential") return ProtocolKind::PoseEssential;
  fail(ErrorCode::InvalidArgument, "unknown protocol '" + name + "'");
}

ErrorKind error_kind(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::WarpAffine:
    case ProtocolKind::WarpHomography: return ErrorKind::WarpPx;
    case ProtocolKind::RtreBspline: return ErrorKind::Rtre;
    case ProtocolKind::PoseEssential: return ErrorKind::PoseDeg;
  }
  return ErrorKind::WarpPx;
}

namespace {

struct PairInput {
  const EvalManifestRecord* record = nullptr;
  std::vector<Correspondence> landmarks;
};

std::optional<std::filesystem::path> find_prediction(const std::filesystem::path& dir, const std::string& id) {
  for (const char* ext : {".jsonl", ".xmf"}) {
    auto p = dir / (id + ext);
    if (std::filesystem::exists(p)) return p;
  }
  return std::nullopt;
}

double pixel_scale(const EvalManifestRecord& r) {
  if (!r.native_size) return 1.0;
  const int longest = std::max(r.native_size->first, r.native_size->second);
  return longest > kEvalLongestEdge ? static_cast<double>(kEvalLongestEdge) / longest : 1.0;
}

CameraIntrinsics camera_from(const Eigen::Matrix3d& k, const std::optional<std::pair<int, int>>& size) {
  CameraIntrinsics c;
  c.fx = k(0, 0);
  c.fy = k(1, 1);
  c.cx = k(0, 2);
  c.cy = k(1, 2);
  c.width = size ? size->first : static_cast<int>(std::ceil(2.0 * c.cx)) + 1;
  c.height = size ? size->second : static_cast<int>(std::ceil(2.0 * c.cy)) + 1;
  return c;
}

ErrorSample evaluate_pair(const PairInput& in, const std::filesystem::path& predictions_dir, ProtocolKind protocol,
                          const ProtocolConfig& config, std::size_t index) {
  const auto& rec = *in.record;
  const ErrorKind kind = error_kind(protocol);
  const auto path = find_prediction(predictions_dir, rec.pair_id);
  if (!path) return ErrorSample::failure(rec.pair_id, kind, "missing prediction");

  MatchFile mf;
  try {
    mf = read_match_file(*path);
  } catch (const Error& e) {
    return ErrorSample::failure(rec.pair_id, kind, std::string("unreadable prediction: ") + e.what());
  }
  auto size0 = rec.size0;
  auto size1 = rec.size1;
  if (mf.header) {
    if (!size0 && mf.header->width0 > 0) size0 = std::make_pair(mf.header->width0, mf.header->height0);
    if (!size1 && mf.header->width1 > 0) size1 = std::make_pair(mf.header->width1, mf.header->height1);
  }

  RansacConfig rc = config.ransac;
  rc.seed = mix_seed(config.seed, index);

  ErrorSample s;
  s.pair_id = rec.pair_id;
  s.kind = kind;
  s.matches = mf.matches.size();
  try {
    switch (protocol) {
      case ProtocolKind::WarpAffine:
      case ProtocolKind::WarpHomography: {
        if (!size0) return ErrorSample::failure(rec.pair_id, kind, "unknown source image size");
        const auto model = protocol == ProtocolKind::WarpAffine ? ModelKind::Affine : ModelKind::Homography;
        const FitResult fit = ransac(mf.matches, model, rc);
        s.inliers = fit.inliers.size();
        s.error = corner_warp_error(*fit.transform, PlanarTransform(TransformKind::Homography, *rec.planar),
                                    size0->first, size0->second) *
                  pixel_scale(rec);
        break;
      }
      case ProtocolKind::RtreBspline: {
        if (!size0) return ErrorSample::failure(rec.pair_id, kind, "unknown source image size");
        const FitResult fit = ransac(mf.matches, ModelKind::Affine, rc);
        s.inliers = fit.inliers.size();
        std::vector<Correspondence> inl;
        for (const auto i : fit.inliers) inl.push_back(mf.matches[i]);
        const BSplineFit bs = fit_bspline_sgd(inl, *fit.transform, size0->first, size0->second, config.bspline);
        const auto target = size1 ? *size1 : *size0;
        const double diag = std::hypot(static_cast<double>(target.first), static_cast<double>(target.second));
        s.rtre = rtre(in.landmarks, diag,
                      [&](const PixelPoint& p) { return apply_bspline_warp(bs.field, bs.initial, p); });
        s.error = s.rtre->artre;
        break;
      }
      case ProtocolKind::PoseEssential: {
        const StereoCameras cams{camera_from(rec.pose->k0, size0), camera_from(rec.pose->k1, size1)};
        const FitResult fit = ransac(mf.matches, ModelKind::Essential, rc, cams);
        s.inliers = fit.inliers.size();
        RelativePoseEstimate gt;
        gt.rotation = rec.pose->rotation;
        gt.translation_direction = rec.pose->translation.normalized();
        s.error = relative_pose_error(*fit.pose, gt).combined_deg;
        break;
      }
    }
  } catch (const Error& e) {
    return ErrorSample::failure(rec.pair_id, kind, std::string(to_string(e.code())) + ": " + e.what());
  }
  if (!std::isfinite(s.error)) return ErrorSample::failure(rec.pair_id, kind, "non-finite error");
  s.failed = false;
  return s;
}

}  // namespace

MetricReport run_protocol(std::span<const EvalManifestRecord> manifest, const std::filesystem::path& manifest_dir,
                          const std::filesystem::path& predictions_dir, ProtocolKind protocol,
                          std::vector<double> thresholds, const ProtocolConfig& config) {
  if (manifest.empty()) fail(ErrorCode::ManifestInvalid, "empty manifest");
  for (const double t : thresholds)
    if (!(t > 0.0)) fail(ErrorCode::InvalidArgument, "thresholds must be positive");

  std::vector<PairInput> inputs(manifest.size());
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    const auto& r = manifest[i];
    inputs[i].record = &r;
    switch (protocol) {
      case ProtocolKind::WarpAffine:
      case ProtocolKind::WarpHomography:
        if (r.gt_kind != GroundTruthKind::Planar || !r.planar)
          fail(ErrorCode::ManifestInvalid, "pair '" + r.pair_id + "' has no planar ground truth");
        break;
      case ProtocolKind::RtreBspline: {
        if (r.gt_kind != GroundTruthKind::Landmarks || !r.landmarks_path)
          fail(ErrorCode::ManifestInvalid, "pair '" + r.pair_id + "' has no landmark ground truth");
        std::filesystem::path lp = *r.landmarks_path;
        if (lp.is_relative()) lp = manifest_dir / lp;
        inputs[i].landmarks = read_landmark_csv(lp);
        if (inputs[i].landmarks.empty()) fail(ErrorCode::ManifestInvalid, "pair '" + r.pair_id + "' has no landmarks");
        break;
      }
      case ProtocolKind::PoseEssential:
        if (r.gt_kind != GroundTruthKind::Pose || !r.pose)
          fail(ErrorCode::ManifestInvalid, "pair '" + r.pair_id + "' has no pose ground truth");
        break;
    }
  }

  std::vector<ErrorSample> samples(manifest.size());
  parallel_for(manifest.size(), config.workers,
               [&](std::size_t i) { samples[i] = evaluate_pair(inputs[i], predictions_dir, protocol, config, i); });
  return summarize(to_string(protocol), error_kind(protocol), std::move(samples), std::move(thresholds));
}

}  // namespace xmf
