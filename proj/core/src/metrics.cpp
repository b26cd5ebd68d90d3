#include "xmf/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "xmf/error.hpp"

namespace xmf {

std::string to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::WarpPx: return "warp_px";
    case ErrorKind::Rtre: return "rtre";
    case ErrorKind::PoseDeg: return "pose_deg";
  }
  return "warp_px";
}

double curve_resolution(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::WarpPx: return 1.0;
    case ErrorKind::Rtre: return 0.001;
    case ErrorKind::PoseDeg: return 0.5;
  }
  return 1.0;
}

ErrorSample ErrorSample::failure(std::string pair_id, ErrorKind kind, std::string reason) {
  ErrorSample s;
  s.pair_id = std::move(pair_id);
  s.kind = kind;
  s.reason = std::move(reason);
  return s;
}

double corner_warp_error(const PlanarTransform& estimate, const PlanarTransform& ground_truth, int width, int height) {
  if (width < 1 || height < 1) fail(ErrorCode::InvalidArgument, "image size must be positive");
  const double w = width - 1.0;
  const double h = height - 1.0;
  const PixelPoint corners[4] = {{0.0, 0.0}, {w, 0.0}, {0.0, h}, {w, h}};
  double sum = 0.0;
  for (const auto& c : corners) {
    const PixelPoint a = estimate.apply(c);
    const PixelPoint b = ground_truth.apply(c);
    if (!std::isfinite(a.x) || !std::isfinite(a.y) || !std::isfinite(b.x) || !std::isfinite(b.y))
      fail(ErrorCode::DegenerateTransform, "a corner maps to infinity");
    sum += distance(a, b);
  }
  return sum / 4.0;
}

double median(std::vector<double> values) {
  if (values.empty()) fail(ErrorCode::EmptySet, "median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

static double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

RtreResult rtre(std::span<const Correspondence> landmarks, double diagonal,
                const std::function<PixelPoint(const PixelPoint&)>& warp) {
  if (landmarks.empty()) fail(ErrorCode::EmptySet, "no landmarks");
  if (!(diagonal > 0.0)) fail(ErrorCode::InvalidArgument, "diagonal must be positive");
  std::vector<double> e;
  e.reserve(landmarks.size());
  for (const auto& l : landmarks) e.push_back(distance(warp(l.left), l.right) / diagonal);
  return {mean(e), median(e)};
}

RtreAggregates aggregate_rtre(std::span<const std::optional<RtreResult>> pairs) {
  if (pairs.empty()) fail(ErrorCode::EmptySet, "no pairs to aggregate");
  std::vector<double> a;
  std::vector<double> m;
  for (const auto& p : pairs) {
    a.push_back(p ? p->artre : kFailedRtre);
    m.push_back(p ? p->mrtre : kFailedRtre);
  }
  return {mean(a), median(a), mean(m), median(m)};
}

static void check_rate_args(std::span<const double> errors, double threshold) {
  if (errors.empty()) fail(ErrorCode::EmptySet, "no error samples");
  if (!(threshold > 0.0)) fail(ErrorCode::InvalidArgument, "threshold must be positive");
}

double success_rate(std::span<const double> errors, double threshold) {
  check_rate_args(errors, threshold);
  const auto ok = std::count_if(errors.begin(), errors.end(), [&](double e) { return e < threshold; });
  return static_cast<double>(ok) / static_cast<double>(errors.size());
}

double auc(std::span<const double> errors, double threshold) {
  check_rate_args(errors, threshold);
  double sum = 0.0;
  for (const double e : errors) sum += std::max(0.0, threshold - e);
  return sum / (static_cast<double>(errors.size()) * threshold);
}

MetricReport summarize(std::string protocol, ErrorKind kind, std::vector<ErrorSample> samples,
                       std::vector<double> thresholds) {
  if (samples.empty()) fail(ErrorCode::ManifestInvalid, "no pairs to report");
  if (thresholds.empty()) fail(ErrorCode::InvalidArgument, "no thresholds");
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  MetricReport r;
  r.protocol = std::move(protocol);
  r.kind = kind;
  r.samples = std::move(samples);
  r.thresholds = thresholds;

  std::vector<double> errors;
  for (const auto& s : r.samples) {
    errors.push_back(s.failed ? kFailedError : s.error);
    if (s.failed) ++r.failed;
  }
  for (const double t : thresholds) {
    r.success_rates.push_back(success_rate(errors, t));
    r.aucs.push_back(auc(errors, t));
  }
  if (kind == ErrorKind::Rtre) {
    std::vector<std::optional<RtreResult>> per_pair;
    for (const auto& s : r.samples) per_pair.push_back(s.failed ? std::nullopt : s.rtre);
    r.rtre = aggregate_rtre(per_pair);
  }

  // k / per_unit rounds exactly to literals such as 0.005, unlike k * 0.001.
  const double per_unit = std::round(1.0 / curve_resolution(kind));
  std::vector<double> grid;
  const auto steps = static_cast<long>(std::ceil(thresholds.back() * per_unit - 1e-9));
  for (long k = 0; k <= steps; ++k) grid.push_back(static_cast<double>(k) / per_unit);
  for (const double t : thresholds) {
    const bool on_grid = std::any_of(grid.begin(), grid.end(), [&](double g) { return g == t; });
    if (!on_grid) grid.push_back(t);
  }
  std::sort(grid.begin(), grid.end());
  for (const double t : grid) {
    const auto ok = std::count_if(errors.begin(), errors.end(), [&](double e) { return e < t; });
    r.curve.emplace_back(t, static_cast<double>(ok) / static_cast<double>(errors.size()));
  }
  return r;
}

}  // namespace xmf
