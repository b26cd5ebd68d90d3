#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xmf/geometry.hpp"
#include "xmf/provenance.hpp"

namespace xmf {

enum class ErrorKind { WarpPx, Rtre, PoseDeg };

std::string to_string(ErrorKind kind);

// Grid spacing of the success curve: 1 px, 0.001 rTRE, 0.5 degrees.
double curve_resolution(ErrorKind kind);

inline constexpr double kFailedError = std::numeric_limits<double>::infinity();
inline constexpr double kFailedRtre = 1.0;

struct RtreResult {
  double artre = 0.0;
  double mrtre = 0.0;
};

struct ErrorSample {
  std::string pair_id;
  ErrorKind kind = ErrorKind::WarpPx;
  double error = kFailedError;  // +inf when failed
  bool failed = true;
  std::string reason;  // failure reason, empty on success
  std::optional<RtreResult> rtre;
  std::size_t matches = 0;
  std::size_t inliers = 0;

  static ErrorSample failure(std::string pair_id, ErrorKind kind, std::string reason);
};

/// Mean distance between the two transforms' images of the four corners
/// (0,0), (W-1,0), (0,H-1), (W-1,H-1). Throws DegenerateTransform when a
/// corner maps to infinity.
double corner_warp_error(const PlanarTransform& estimate, const PlanarTransform& ground_truth, int width, int height);

double median(std::vector<double> values);

/// Per-landmark error normalized by `diagonal`; mean and median.
RtreResult rtre(std::span<const Correspondence> landmarks, double diagonal,
                const std::function<PixelPoint(const PixelPoint&)>& warp);

struct RtreAggregates {
  double average_artre = 0.0;
  double median_artre = 0.0;
  double average_mrtre = 0.0;
  double median_mrtre = 0.0;
};

// Missing entries are failed pairs and count as kFailedRtre.
RtreAggregates aggregate_rtre(std::span<const std::optional<RtreResult>> pairs);

// Fraction of errors strictly below the threshold; +inf is a failure.
double success_rate(std::span<const double> errors, double threshold);
// (1 / (n t)) * sum max(0, t - e_i).
double auc(std::span<const double> errors, double threshold);

struct MetricReport {
  std::string protocol;
  ErrorKind kind = ErrorKind::WarpPx;
  std::vector<ErrorSample> samples;
  std::vector<double> thresholds;
  std::vector<double> success_rates;  // per threshold
  std::vector<double> aucs;           // per threshold
  std::optional<RtreAggregates> rtre;
  std::vector<std::pair<double, double>> curve;  // (threshold, SR)
  std::size_t failed = 0;
  std::vector<std::pair<std::string, std::string>> config;
  std::optional<Provenance> provenance;
};

/// Builds the aggregates and the success curve from per-pair samples. The
/// curve runs from 0 to the largest threshold at curve_resolution(kind);
/// configured thresholds off that grid are inserted too.
MetricReport summarize(std::string protocol, ErrorKind kind, std::vector<ErrorSample> samples,
                       std::vector<double> thresholds);

}  // namespace xmf
