#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "xmf/bspline.hpp"
#include "xmf/geometry.hpp"
#include "xmf/provenance.hpp"
#include "xmf/ransac.hpp"

namespace xmf {

// ---- Match files -----------------------------------------------------------
//
// JSON Lines: a header record {"type":"pair_header", left, right, width0,
// height0, width1, height1, [frame0, frame1], [provenance]} followed by one
// {x0, y0, x1, y1, conf} record per match. The compact binary variant is
// "XMF1", u32 count, then count * 5 little-endian f32.

struct MatchFileHeader {
  std::string left;
  std::string right;
  int width0 = 0;
  int height0 = 0;
  int width1 = 0;
  int height1 = 0;
  std::optional<int> frame0;
  std::optional<int> frame1;
  std::optional<Provenance> provenance;
};

struct MatchFile {
  std::optional<MatchFileHeader> header;  // absent for binary files
  std::vector<Correspondence> matches;
};

void write_match_jsonl(const std::filesystem::path& path, const MatchFileHeader& header,
                       std::span<const Correspondence> matches);
void write_match_binary(const std::filesystem::path& path, std::span<const Correspondence> matches);
MatchFile read_match_jsonl(const std::filesystem::path& path);
MatchFile read_match_binary(const std::filesystem::path& path);
// ".xmf" selects the binary reader, anything else JSON Lines.
MatchFile read_match_file(const std::filesystem::path& path);

// ---- Pair manifest (synthesis output) ---------------------------------------

struct PairManifestRecord {
  std::string left_path;
  std::string right_path;
  std::optional<Eigen::Matrix3d> homography;  // gt_kind "homography"
  std::optional<std::string> matches_path;    // gt_kind "matches"
  std::optional<std::string> mask_path;
  std::optional<std::string> composition;     // factor order of a sampled homography
  std::string left_modality = "visible";
  std::string right_modality = "visible";
  std::uint64_t seed = 0;
  std::string source;
  std::optional<Provenance> provenance;
};

std::string to_jsonl(const PairManifestRecord& record);
PairManifestRecord pair_record_from_jsonl(const std::string& line);
std::vector<PairManifestRecord> read_pair_manifest(const std::filesystem::path& path);

// ---- Track file -------------------------------------------------------------
//
// Optional leading {"type":"provenance", ...} record, then one
// {track_id, obs: [{frame, x, y, conf}, ...]} record per track.

struct TrackObservation {
  int frame = 0;
  PixelPoint point;
  double confidence = 0.0;
  std::int64_t anchor = -1;  // anchor id when built in-process, -1 when loaded

  friend bool operator==(const TrackObservation&, const TrackObservation&) = default;
};

struct Track {
  std::int64_t id = 0;
  std::vector<TrackObservation> observations;

  friend bool operator==(const Track&, const Track&) = default;
};

void write_track_file(const std::filesystem::path& path, std::span<const Track> tracks,
                      const std::optional<Provenance>& provenance = std::nullopt);
std::vector<Track> read_track_file(const std::filesystem::path& path);

// ---- Model output -------------------------------------------------------------

struct ModelOutput {
  std::string kind;  // affine | homography | fundamental | essential | bspline
  std::optional<Eigen::Matrix3d> matrix;
  std::optional<RelativePoseEstimate> pose;
  std::optional<BSplineField> bspline;
  std::optional<Eigen::Matrix3d> bspline_initial;  // affine under the field
  std::vector<std::size_t> inliers;
  std::optional<Provenance> provenance;
};

void write_model_json(const std::filesystem::path& path, const ModelOutput& model);
ModelOutput read_model_json(const std::filesystem::path& path);

// ---- Evaluation manifest ------------------------------------------------------

enum class GroundTruthKind { Planar, Landmarks, Pose };

struct PoseGroundTruth {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  Eigen::Matrix3d k0 = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d k1 = Eigen::Matrix3d::Identity();
};

struct EvalManifestRecord {
  std::string pair_id;
  std::string left;
  std::string right;
  GroundTruthKind gt_kind = GroundTruthKind::Planar;
  std::optional<Eigen::Matrix3d> planar;
  std::optional<std::string> landmarks_path;
  std::optional<PoseGroundTruth> pose;
  std::optional<std::pair<int, int>> native_size;  // (width, height) of the original images
  std::optional<std::pair<int, int>> size0;        // source image size override
  std::optional<std::pair<int, int>> size1;        // target image size override
};

std::string to_jsonl(const EvalManifestRecord& record);
std::vector<EvalManifestRecord> read_eval_manifest(const std::filesystem::path& path);

// "x_src,y_src,x_dst,y_dst" with an optional header line.
std::vector<Correspondence> read_landmark_csv(const std::filesystem::path& path);
void write_landmark_csv(const std::filesystem::path& path, std::span<const Correspondence> landmarks);

// Shortest round-trip decimal representation, used by every text writer.
std::string format_double(double v);

}  // namespace xmf
