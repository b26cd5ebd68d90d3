#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "xmf/bspline.hpp"
#include "xmf/formats.hpp"
#include "xmf/metrics.hpp"
#include "xmf/ransac.hpp"

namespace xmf {

enum class ProtocolKind { WarpAffine, WarpHomography, RtreBspline, PoseEssential };

std::string to_string(ProtocolKind kind);
ProtocolKind protocol_from_string(const std::string& name);
ErrorKind error_kind(ProtocolKind kind);

// Pixel errors of images whose native longest edge exceeds this are
// rescaled as if the images had been resized to it.
inline constexpr int kEvalLongestEdge = 840;

struct ProtocolConfig {
  RansacConfig ransac;  // inlier_threshold <= 0 picks the model default
  BSplineFitConfig bspline;
  std::uint64_t seed = 0;
  int workers = 1;
};

/// Evaluates every manifest pair. Predictions are match files named
/// `<pair_id>.jsonl` or `<pair_id>.xmf` in `predictions_dir`; a missing or
/// unusable prediction records the pair as Failed. Landmark paths are
/// resolved against `manifest_dir`. Throws ManifestInvalid when a record
/// lacks the ground truth the protocol needs.
MetricReport run_protocol(std::span<const EvalManifestRecord> manifest, const std::filesystem::path& manifest_dir,
                          const std::filesystem::path& predictions_dir, ProtocolKind protocol,
                          std::vector<double> thresholds, const ProtocolConfig& config = {});

}  // namespace xmf
