#include "xmf/synthesis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "xmf/error.hpp"
#include "xmf/rng.hpp"

namespace xmf {

namespace {

double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }

void check_interval(const Interval& i, const char* name) {
  if (!(std::isfinite(i.lo) && std::isfinite(i.hi)) || i.lo > i.hi)
    fail(ErrorCode::InvalidArgument, std::string("invalid interval for ") + name);
}

Eigen::Matrix3d translation_matrix(double tx, double ty) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 2) = tx;
  m(1, 2) = ty;
  return m;
}

Eigen::Matrix3d rotation_matrix(double deg) {
  const double c = std::cos(deg2rad(deg));
  const double s = std::sin(deg2rad(deg));
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 0) = c;
  m(0, 1) = -s;
  m(1, 0) = s;
  m(1, 1) = c;
  return m;
}

void check_size(int width, int height) {
  if (width <= 0 || height <= 0) fail(ErrorCode::InvalidArgument, "image size must be positive");
}

}  // namespace

HomographySampleRanges HomographySampleRanges::training() { return {}; }

HomographySampleRanges HomographySampleRanges::neutral() {
  HomographySampleRanges r;
  r.rotation_deg = Interval::point(0.0);
  r.translation_factor = Interval::point(0.0);
  r.scale = Interval::point(1.0);
  r.skew = Interval::point(0.0);
  r.perspective_x = Interval::point(0.0);
  r.perspective_y = Interval::point(0.0);
  return r;
}

void HomographySampleRanges::validate() const {
  check_interval(rotation_deg, "rotation");
  check_interval(translation_factor, "translation");
  check_interval(scale, "scale");
  check_interval(skew, "skew");
  check_interval(perspective_x, "perspective_x");
  check_interval(perspective_y, "perspective_y");
  if (!(scale.lo > 0.0)) fail(ErrorCode::InvalidArgument, "scale interval must be strictly positive");
}

PlanarTransform compose_homography(const HomographyDraw& d, int width, int height) {
  check_size(width, height);
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  Eigen::Matrix3d p = Eigen::Matrix3d::Identity();
  p(2, 0) = d.perspective_x / width;
  p(2, 1) = d.perspective_y / height;
  Eigen::Matrix3d shear = Eigen::Matrix3d::Identity();
  shear(0, 1) = d.skew;
  Eigen::Matrix3d scale = Eigen::Matrix3d::Identity();
  scale(0, 0) = d.scale;
  scale(1, 1) = d.scale;
  const Eigen::Matrix3d t = translation_matrix(d.translation_x * width, d.translation_y * height);
  Eigen::Matrix3d h = translation_matrix(cx, cy) * p * shear * scale * rotation_matrix(d.rotation_deg) * t *
                      translation_matrix(-cx, -cy);
  if (std::abs(h(2, 2)) > 1e-12) h /= h(2, 2);
  if (std::abs(h.determinant()) < 1e-9) fail(ErrorCode::DegenerateTransform, "sampled homography is singular");
  return {TransformKind::Homography, h};
}

HomographySample sample_homography(const HomographySampleRanges& ranges, int width, int height, std::uint64_t seed) {
  ranges.validate();
  check_size(width, height);
  Rng rng(seed);
  constexpr int kMaxAttempts = 16;
  for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
    HomographyDraw d;
    d.rotation_deg = rng.uniform(ranges.rotation_deg.lo, ranges.rotation_deg.hi);
    d.translation_x = rng.uniform(ranges.translation_factor.lo, ranges.translation_factor.hi);
    d.translation_y = rng.uniform(ranges.translation_factor.lo, ranges.translation_factor.hi);
    d.scale = rng.uniform(ranges.scale.lo, ranges.scale.hi);
    d.skew = rng.uniform(ranges.skew.lo, ranges.skew.hi);
    d.perspective_x = rng.uniform(ranges.perspective_x.lo, ranges.perspective_x.hi);
    d.perspective_y = rng.uniform(ranges.perspective_y.lo, ranges.perspective_y.hi);
    try {
      return {compose_homography(d, width, height), d, attempt};
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateTransform) throw;
    }
  }
  fail(ErrorCode::DegenerateTransform, "no invertible homography after 16 draws");
}

std::string to_string(EvalPresetName name) {
  switch (name) {
    case EvalPresetName::Medical: return "medical";
    case EvalPresetName::Map: return "map";
    case EvalPresetName::Custom: return "custom";
  }
  return "custom";
}

EvalWarpPreset EvalWarpPreset::medical() { return {EvalPresetName::Medical, {-50.0, 50.0}, {-0.2, 0.2}, {0.75, 1.33}}; }

EvalWarpPreset EvalWarpPreset::map() { return {EvalPresetName::Map, {-10.0, 10.0}, {-0.1, 0.1}, {0.8, 1.25}}; }

void EvalWarpPreset::validate() const {
  check_interval(rotation_deg, "rotation");
  check_interval(translation_factor, "translation");
  check_interval(scale, "scale");
  if (!(scale.lo > 0.0)) fail(ErrorCode::InvalidArgument, "scale interval must be strictly positive");
}

PlanarTransform compose_similarity(const SimilarityDraw& d, int width, int height) {
  check_size(width, height);
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  Eigen::Matrix3d s = Eigen::Matrix3d::Identity();
  s(0, 0) = d.scale;
  s(1, 1) = d.scale;
  Eigen::Matrix3d m = translation_matrix(cx, cy) * translation_matrix(d.translation_x * width, d.translation_y * height) *
                      s * rotation_matrix(d.rotation_deg) * translation_matrix(-cx, -cy);
  m.row(2) << 0.0, 0.0, 1.0;
  return {TransformKind::Similarity, m};
}

SimilaritySample sample_eval_transform(const EvalWarpPreset& preset, int width, int height, std::uint64_t seed) {
  preset.validate();
  Rng rng(seed);
  SimilarityDraw d;
  d.rotation_deg = rng.uniform(preset.rotation_deg.lo, preset.rotation_deg.hi);
  d.translation_x = rng.uniform(preset.translation_factor.lo, preset.translation_factor.hi);
  d.translation_y = rng.uniform(preset.translation_factor.lo, preset.translation_factor.hi);
  d.scale = rng.uniform(preset.scale.lo, preset.scale.hi);
  return {compose_similarity(d, width, height), d};
}

WarpedImage warp_image(const Image& source, const PlanarTransform& transform) {
  if (source.empty()) fail(ErrorCode::InvalidArgument, "cannot warp an empty image");
  const PlanarTransform inverse = transform.inverse();
  WarpedImage out{Image(source.width(), source.height(), 0.0f), Mask(source.width(), source.height(), false)};
  const double xmax = source.width() - 1;
  const double ymax = source.height() - 1;
  for (int y = 0; y < source.height(); ++y) {
    for (int x = 0; x < source.width(); ++x) {
      const PixelPoint q = inverse.apply({static_cast<double>(x), static_cast<double>(y)});
      if (!(q.x >= 0.0 && q.y >= 0.0 && q.x <= xmax && q.y <= ymax)) continue;
      out.image.at(x, y) = source.sample(q.x, q.y);
      out.valid.set(x, y, true);
    }
  }
  return out;
}

namespace {

Mask depth_validity(const DepthMap& depth) {
  Mask m(depth.width(), depth.height(), false);
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) m.set(x, y, depth.valid(x, y));
  return m;
}

}  // namespace

SynthesizedPair make_warp_pair_with(const Image& image, const PlanarTransform& transform,
                                    const WarpPairOptions& options) {
  if (image.empty()) fail(ErrorCode::InvalidArgument, "source image is empty");
  if (options.grid_step < 1) fail(ErrorCode::InvalidArgument, "grid_step must be >= 1");
  if (options.supervision_depth && (options.supervision_depth->width() != image.width() ||
                                    options.supervision_depth->height() != image.height()))
    fail(ErrorCode::DimensionMismatch, "supervision depth does not match the image");

  SynthesizedPair pair;
  pair.left = image;
  WarpedImage warped = warp_image(image, transform);
  pair.right = std::move(warped.image);
  pair.right_valid_mask = std::move(warped.valid);
  pair.transform = transform;

  const double xmax = image.width() - 1;
  const double ymax = image.height() - 1;
  pair.valid_mask = Mask(image.width(), image.height(), false);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      if (options.supervision_depth && !options.supervision_depth->valid(x, y)) continue;
      const PixelPoint q = transform.apply({static_cast<double>(x), static_cast<double>(y)});
      if (q.x >= 0.0 && q.y >= 0.0 && q.x <= xmax && q.y <= ymax) pair.valid_mask.set(x, y, true);
    }
  }
  for (int y = 0; y < image.height(); y += options.grid_step) {
    for (int x = 0; x < image.width(); x += options.grid_step) {
      if (!pair.valid_mask.at(x, y)) continue;
      const PixelPoint p{static_cast<double>(x), static_cast<double>(y)};
      pair.matches.push_back({p, transform.apply(p), 1.0});
    }
  }
  return pair;
}

SynthesizedPair make_warp_pair(const Image& image, const HomographySampleRanges& ranges, std::uint64_t seed,
                               const WarpPairOptions& options) {
  if (image.empty()) fail(ErrorCode::InvalidArgument, "source image is empty");
  const HomographySample sample = sample_homography(ranges, image.width(), image.height(), seed);
  SynthesizedPair pair = make_warp_pair_with(image, sample.transform, options);
  pair.seed = seed;
  pair.draw = sample.draw;
  return pair;
}

DepthPairOutcome make_depth_pair(const PosedView& left, const PosedView& right, int grid_step,
                                 Interval overlap_range) {
  check_interval(overlap_range, "overlap");
  DepthPairOutcome outcome;
  outcome.overlap = overlap_ratio(left, right);
  if (!overlap_range.contains(outcome.overlap)) return outcome;
  if (!left.image || !right.image) fail(ErrorCode::InvalidArgument, "depth pairs need both images");

  SynthesizedPair pair;
  pair.left = *left.image;
  pair.right = *right.image;
  pair.matches = filter_grid_correspondences(left, right, grid_step);
  pair.valid_mask = depth_validity(*left.depth);
  pair.right_valid_mask = depth_validity(*right.depth);
  pair.source = left.id + "|" + right.id;
  outcome.status = DepthPairStatus::Accepted;
  outcome.pair = std::move(pair);
  return outcome;
}

std::string to_string(ModalityMode mode) {
  switch (mode) {
    case ModalityMode::BuiltinInvert: return "builtin-invert";
    case ModalityMode::BuiltinRemap: return "builtin-remap";
    case ModalityMode::DepthSubstitute: return "depth-substitute";
    case ModalityMode::ExternalFile: return "external-file";
  }
  return "builtin-invert";
}

ModalityMode modality_mode_from_string(const std::string& name) {
  if (name == "builtin-invert" || name == "invert") return ModalityMode::BuiltinInvert;
  if (name == "builtin-remap" || name == "remap") return ModalityMode::BuiltinRemap;
  if (name == "depth-substitute" || name == "depth") return ModalityMode::DepthSubstitute;
  if (name == "external-file" || name == "external") return ModalityMode::ExternalFile;
  fail(ErrorCode::InvalidArgument, "unknown modality mode '" + name + "'");
}

std::vector<std::pair<float, float>> ModalityGenerator::default_remap_knots() {
  return {{0.0f, 0.0f}, {48.0f, 120.0f}, {128.0f, 176.0f}, {200.0f, 220.0f}, {255.0f, 255.0f}};
}

Image depth_to_gray(const DepthMap& depth) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const double v : depth.values()) {
    if (v <= 0.0) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  Image gray(depth.width(), depth.height(), 0.0f);
  if (!(hi > lo)) return gray;
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x)
      if (depth.valid(x, y))
        gray.at(x, y) = static_cast<float>(Image::kMaxValue * (depth.at(x, y) - lo) / (hi - lo));
  return gray;
}

namespace {

float remap_value(float v, const std::vector<std::pair<float, float>>& knots) {
  if (v <= knots.front().first) return knots.front().second;
  for (std::size_t k = 1; k < knots.size(); ++k) {
    if (v <= knots[k].first) {
      const auto [x0, y0] = knots[k - 1];
      const auto [x1, y1] = knots[k];
      return y0 + (y1 - y0) * (v - x0) / (x1 - x0);
    }
  }
  return knots.back().second;
}

void check_knots(const std::vector<std::pair<float, float>>& knots) {
  if (knots.size() < 2) fail(ErrorCode::InvalidArgument, "remap needs at least two knots");
  for (std::size_t k = 1; k < knots.size(); ++k)
    if (!(knots[k].first > knots[k - 1].first) || knots[k].second < knots[k - 1].second)
      fail(ErrorCode::InvalidArgument, "remap knots must be strictly increasing and monotone");
}

}  // namespace

SynthesizedPair apply_modality(const SynthesizedPair& pair, const ModalityGenerator& generator, Side side) {
  SynthesizedPair out = pair;
  Image& target = side == Side::Left ? out.left : out.right;
  Mask& mask = side == Side::Left ? out.valid_mask : out.right_valid_mask;
  switch (generator.mode) {
    case ModalityMode::BuiltinInvert:
      for (float& v : target.pixels()) v = Image::kMaxValue - v;
      break;
    case ModalityMode::BuiltinRemap:
      check_knots(generator.remap_knots);
      for (float& v : target.pixels()) v = remap_value(v, generator.remap_knots);
      break;
    case ModalityMode::DepthSubstitute: {
      if (!generator.depth) fail(ErrorCode::MissingAuxiliary, "depth substitution needs an aligned depth map");
      const DepthMap& depth = *generator.depth;
      if (depth.width() != target.width() || depth.height() != target.height())
        fail(ErrorCode::DimensionMismatch, "depth map does not match the image");
      target = depth_to_gray(depth);
      if (mask.empty()) mask = Mask(target.width(), target.height(), true);
      for (int y = 0; y < depth.height(); ++y)
        for (int x = 0; x < depth.width(); ++x)
          if (!depth.valid(x, y)) mask.set(x, y, false);
      break;
    }
    case ModalityMode::ExternalFile:
      if (!generator.external) fail(ErrorCode::MissingAuxiliary, "external modality image is missing");
      if (generator.external->width() != target.width() || generator.external->height() != target.height())
        fail(ErrorCode::DimensionMismatch, "external modality image does not match the image");
      target = *generator.external;
      break;
  }
  (side == Side::Left ? out.modality_tags.first : out.modality_tags.second) = generator.id;
  return out;
}

}  // namespace xmf
