#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xmf/formats.hpp"
#include "xmf/geometry.hpp"
#include "xmf/ransac.hpp"
#include "xmf/synthesis.hpp"

namespace xmf {

struct PairSchedule {
  std::vector<int> retained;                 // raw frame indices kept after striding
  std::vector<std::pair<int, int>> pairs;    // raw frame indices, first < second
};

/// Keeps every `stride`-th frame and pairs each kept frame with its next
/// `lookahead` kept frames.
PairSchedule plan_pair_schedule(int frame_count, int stride = 4, int lookahead = 10);

struct EndpointObservation {
  int frame = 0;
  PixelPoint point;
  double confidence = 0.0;
  std::pair<int, int> source_pair{0, 0};
  Side side = Side::Left;
};

struct Anchor {
  int frame = 0;
  PixelPoint point;
  double confidence = 0.0;            // max over claimed observations
  std::vector<std::size_t> claimed;   // observation ids
};

struct NmsResult {
  std::vector<Anchor> anchors;
  std::vector<std::size_t> assignment;  // observation index -> anchor index
};

inline int merge_radius(int window) { return (window - 1) / 2; }

/// Greedy confidence-ordered merge of one frame's observations. Ties are
/// broken by ascending (y, x) and then by index, so the order is total.
/// Each unclaimed observation founds an anchor and claims every unclaimed
/// observation within Chebyshev distance (window-1)/2. Observation ids in
/// the result are indices into `observations`.
NmsResult nms_merge(std::span<const EndpointObservation> observations, int window = 7);

struct PairMatches {
  int frame_a = 0;
  int frame_b = 0;
  std::vector<Correspondence> matches;
};

struct AnchorEdge {
  std::size_t a = 0;  // global anchor ids, a < b
  std::size_t b = 0;
  double confidence = 0.0;
};

// Every match endpoint, the anchors of every frame, and the match edges
// re-expressed between anchors. Anchors are ordered by frame, then by
// founding order within the frame.
struct AnchorGraph {
  int window = 7;
  std::vector<EndpointObservation> observations;
  std::vector<Anchor> anchors;
  std::vector<std::size_t> observation_anchor;
  std::vector<AnchorEdge> edges;
};

AnchorGraph aggregate_matches(std::span<const PairMatches> pairs, int window = 7, int workers = 1);

/// Union-find over anchors, consuming edges by descending confidence (ties
/// by frame ids, then anchor ids). An edge that would put two anchors of the
/// same frame into one track is rejected. Tracks shorter than 2 are dropped;
/// ids follow the smallest anchor id of each track.
std::vector<Track> build_tracks(std::span<const Anchor> anchors, std::span<const AnchorEdge> edges);

enum class RefinerKind { Identity, LocalCentroid, External };

std::string to_string(RefinerKind kind);
RefinerKind refiner_kind_from_string(const std::string& name);

struct RefinerConfig {
  RefinerKind kind = RefinerKind::Identity;
  // External: invoked as `<command> <input track file> <output track file>`.
  std::string command;
  std::filesystem::path work_dir;
};

/// Identity returns the input; local-centroid moves each anchored point to
/// the confidence-weighted mean of its claimed observations (clamped to the
/// merge radius); external round-trips through the track file format and
/// checks the frame sets are unchanged (ExternalRefinerProtocol otherwise).
std::vector<Track> refine_tracks(std::span<const Track> tracks, const AnchorGraph& graph, const RefinerConfig& config);

struct PairSelectionConfig {
  int min_gap = 20;
  std::size_t min_covisibility = 300;
  double min_motion = 30.0;

  // "more than 10 frames apart, at least 300 co-visible", no motion gate.
  static PairSelectionConfig short_gap();
};

struct TrainingPairRecord {
  int frame_a = 0;
  int frame_b = 0;
  std::vector<Correspondence> matches;
  std::size_t covisibility = 0;
  double mean_motion = 0.0;
};

/// Emits every frame pair with |b - a| >= min_gap, at least min_covisibility
/// shared tracks and mean point motion >= min_motion, ordered by (a, b).
std::vector<TrainingPairRecord> select_training_pairs(std::span<const Track> tracks,
                                                      const PairSelectionConfig& config = {}, int workers = 1);

/// Spatially balanced top-k: the left image is tiled into cell x cell bins,
/// then bins (row-major) are visited round-robin, each giving up its best
/// remaining match.
std::vector<Correspondence> sample_matches(std::span<const Correspondence> matches, std::size_t k = 10000,
                                           double cell = 64.0);

struct VerifiedMatches {
  std::vector<Correspondence> inliers;
  Eigen::Matrix3d fundamental = Eigen::Matrix3d::Zero();
};

/// RANSAC fundamental-matrix check; keeps matches within `threshold` pixels
/// Sampson distance of the best model. Matches outside the image bounds are
/// discarded first. Throws InsufficientMatches or NoModel.
VerifiedMatches geometric_verify(std::span<const Correspondence> matches, std::pair<int, int> left_size,
                                 std::pair<int, int> right_size, double threshold = 2.0,
                                 const RansacConfig& ransac_config = {});

}  // namespace xmf
