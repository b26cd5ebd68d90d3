#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xmf/geometry.hpp"
#include "xmf/image.hpp"

namespace xmf {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  static Interval point(double v) { return {v, v}; }
};

struct HomographySampleRanges {
  Interval rotation_deg{-180.0, 180.0};
  Interval translation_factor{-0.25, 0.25};  // fraction of width / height, per axis
  Interval scale{0.5, 2.0};
  Interval skew{-0.1, 0.1};
  Interval perspective_x{-0.5, 0.5};
  Interval perspective_y{-0.5, 0.5};

  // Training ranges for single-image warping.
  static HomographySampleRanges training();
  // Every factor collapsed to its neutral value.
  static HomographySampleRanges neutral();
  void validate() const;
};

// The raw parameters behind one sampled homography.
struct HomographyDraw {
  double rotation_deg = 0.0;
  double translation_x = 0.0;  // factor of width
  double translation_y = 0.0;  // factor of height
  double scale = 1.0;
  double skew = 0.0;
  double perspective_x = 0.0;
  double perspective_y = 0.0;
};

inline constexpr const char* kHomographyComposition = "center * perspective * skew * scale * rotation * translation * center^-1";

/// H = C * P * Sh * S * R * T * C^-1 with C the translation to the image
/// center ((W-1)/2, (H-1)/2). T shifts by (tx * W, ty * H), Sh is an
/// x-shear by `skew`, and P has third row [px / W, py / H, 1].
PlanarTransform compose_homography(const HomographyDraw& draw, int width, int height);

struct HomographySample {
  PlanarTransform transform;
  HomographyDraw draw;
  int attempts = 1;
};

/// Draws every factor uniformly from its interval, deterministically in the
/// seed. Resamples up to 16 times if |det H| < 1e-9, then throws
/// DegenerateTransform.
HomographySample sample_homography(const HomographySampleRanges& ranges, int width, int height, std::uint64_t seed);

enum class EvalPresetName { Medical, Map, Custom };

std::string to_string(EvalPresetName name);

struct EvalWarpPreset {
  EvalPresetName name = EvalPresetName::Custom;
  Interval rotation_deg;
  Interval translation_factor;
  Interval scale;

  static EvalWarpPreset medical();
  static EvalWarpPreset map();
  void validate() const;
};

struct SimilarityDraw {
  double rotation_deg = 0.0;
  double translation_x = 0.0;
  double translation_y = 0.0;
  double scale = 1.0;
};

// Rotation and isotropic scale about the image center, then translation.
PlanarTransform compose_similarity(const SimilarityDraw& draw, int width, int height);

struct SimilaritySample {
  PlanarTransform transform;
  SimilarityDraw draw;
};

SimilaritySample sample_eval_transform(const EvalWarpPreset& preset, int width, int height, std::uint64_t seed);

struct WarpedImage {
  Image image;
  Mask valid;  // true where the inverse-mapped source point is inside the source
};

/// Inverse-mapped bilinear resampling onto a canvas of the source size.
/// Pixels whose preimage falls outside the source are 0 and mask-false.
WarpedImage warp_image(const Image& source, const PlanarTransform& transform);

enum class Side { Left, Right };

struct SynthesizedPair {
  Image left;
  Image right;
  std::optional<PlanarTransform> transform;  // set for warp pairs
  std::vector<Correspondence> matches;
  Mask valid_mask;        // on the left image
  Mask right_valid_mask;  // on the right image
  std::pair<std::string, std::string> modality_tags{"visible", "visible"};
  std::uint64_t seed = 0;
  std::string source;
  std::optional<HomographyDraw> draw;
};

struct WarpPairOptions {
  int grid_step = 8;
  // When set, supervision is restricted to pixels with depth > 0.
  std::optional<DepthMap> supervision_depth;
};

/// Warps the image by a sampled homography and labels every lattice point
/// whose image lands inside the right view (and, if requested, has positive
/// depth) with x_r = H(x_l).
SynthesizedPair make_warp_pair(const Image& image, const HomographySampleRanges& ranges, std::uint64_t seed,
                               const WarpPairOptions& options = {});

// Same as make_warp_pair with a caller-supplied transform.
SynthesizedPair make_warp_pair_with(const Image& image, const PlanarTransform& transform,
                                    const WarpPairOptions& options = {});

enum class DepthPairStatus { Accepted, NoOverlap };

struct DepthPairOutcome {
  DepthPairStatus status = DepthPairStatus::NoOverlap;
  double overlap = 0.0;
  std::optional<SynthesizedPair> pair;
};

/// Ground-truth pair from posed views with depth, accepted only when the
/// overlap ratio lies inside `overlap_range` (inclusive).
DepthPairOutcome make_depth_pair(const PosedView& left, const PosedView& right, int grid_step,
                                 Interval overlap_range = {0.1, 0.7});

enum class ModalityMode { BuiltinInvert, BuiltinRemap, DepthSubstitute, ExternalFile };

std::string to_string(ModalityMode mode);
ModalityMode modality_mode_from_string(const std::string& name);

struct ModalityGenerator {
  std::string id;
  ModalityMode mode = ModalityMode::BuiltinInvert;
  // Monotone piecewise-linear knots (input, output) for BuiltinRemap.
  std::vector<std::pair<float, float>> remap_knots = default_remap_knots();
  std::optional<DepthMap> depth;     // DepthSubstitute
  std::optional<Image> external;     // ExternalFile (already loaded)

  static std::vector<std::pair<float, float>> default_remap_knots();
};

// Linear depth-to-gray rescale over the valid range; a constant map gives 0.
Image depth_to_gray(const DepthMap& depth);

/// Replaces one side's image with a pixel-aligned substitute. Ground truth
/// is copied untouched; depth substitution additionally clears the side's
/// validity mask where depth <= 0.
SynthesizedPair apply_modality(const SynthesizedPair& pair, const ModalityGenerator& generator, Side side);

}  // namespace xmf
