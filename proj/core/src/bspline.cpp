#include "xmf/bspline.hpp"

#include <algorithm>
#include <cmath>

#include "xmf/error.hpp"

namespace xmf {

BSplineField BSplineField::zeros(int grid_x, int grid_y, int width, int height) {
  if (grid_x < 4 || grid_y < 4) fail(ErrorCode::InvalidArgument, "B-spline grid must be at least 4x4");
  if (width < 2 || height < 2) fail(ErrorCode::InvalidArgument, "B-spline domain must be at least 2x2 pixels");
  BSplineField f;
  f.grid_x = grid_x;
  f.grid_y = grid_y;
  f.spacing = {(width - 1.0) / (grid_x - 3), (height - 1.0) / (grid_y - 3)};
  f.origin = -f.spacing;
  f.displacements.assign(static_cast<std::size_t>(grid_x) * grid_y, Eigen::Vector2d::Zero());
  return f;
}

void BSplineField::validate() const {
  if (grid_x < 4 || grid_y < 4) fail(ErrorCode::InvalidArgument, "B-spline grid must be at least 4x4");
  if (!(spacing.x() > 0.0 && spacing.y() > 0.0)) fail(ErrorCode::InvalidArgument, "B-spline spacing must be positive");
  if (displacements.size() != static_cast<std::size_t>(grid_x) * grid_y)
    fail(ErrorCode::DimensionMismatch, "B-spline displacement count does not match grid");
  for (const auto& d : displacements)
    if (!d.allFinite()) fail(ErrorCode::InvalidArgument, "B-spline displacements must be finite");
}

std::array<double, 4> cubic_bspline_basis(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  const double s = 1.0 - t;
  return {s * s * s / 6.0, (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0, (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0, t3 / 6.0};
}

BSplineSupport bspline_support(const BSplineField& field, const PixelPoint& p) {
  const double u = (p.x - field.origin.x()) / field.spacing.x();
  const double v = (p.y - field.origin.y()) / field.spacing.y();
  const int i = std::clamp(static_cast<int>(std::floor(u)), 1, field.grid_x - 3);
  const int j = std::clamp(static_cast<int>(std::floor(v)), 1, field.grid_y - 3);
  BSplineSupport s;
  s.first_x = i - 1;
  s.first_y = j - 1;
  s.wx = cubic_bspline_basis(u - i);
  s.wy = cubic_bspline_basis(v - j);
  return s;
}

PixelPoint evaluate_bspline(const BSplineField& field, const PixelPoint& p) {
  const BSplineSupport s = bspline_support(field, p);
  Eigen::Vector2d d = Eigen::Vector2d::Zero();
  for (int b = 0; b < 4; ++b)
    for (int a = 0; a < 4; ++a) d += s.wx[a] * s.wy[b] * field.control(s.first_x + a, s.first_y + b);
  return {p.x + d.x(), p.y + d.y()};
}

void BSplineFitConfig::validate() const {
  if (grid_x < 4 || grid_y < 4) fail(ErrorCode::InvalidArgument, "B-spline grid must be at least 4x4");
  if (!(learning_rate > 0.0)) fail(ErrorCode::InvalidArgument, "learning rate must be positive");
  if (iterations < 0) fail(ErrorCode::InvalidArgument, "iterations must be >= 0");
  if (divergence_patience < 1) fail(ErrorCode::InvalidArgument, "divergence patience must be >= 1");
}

PixelPoint apply_bspline_warp(const BSplineField& field, const PlanarTransform& initial, const PixelPoint& p) {
  return evaluate_bspline(field, initial.apply(p));
}

namespace {

// Cached support of one correspondence: flat control indices and weights.
struct Term {
  std::array<std::size_t, 16> index;
  std::array<double, 16> weight;
  Eigen::Vector2d base;    // affine-mapped left point
  Eigen::Vector2d target;  // right point
};

std::vector<Term> build_terms(const BSplineField& field, const PlanarTransform& initial,
                              std::span<const Correspondence> corrs) {
  std::vector<Term> terms;
  terms.reserve(corrs.size());
  for (const auto& c : corrs) {
    const PixelPoint q = initial.apply(c.left);
    const BSplineSupport s = bspline_support(field, q);
    Term t;
    for (int b = 0; b < 4; ++b) {
      for (int a = 0; a < 4; ++a) {
        const int k = b * 4 + a;
        t.index[k] = static_cast<std::size_t>(s.first_y + b) * field.grid_x + (s.first_x + a);
        t.weight[k] = s.wx[a] * s.wy[b];
      }
    }
    t.base = q.vec();
    t.target = c.right.vec();
    terms.push_back(t);
  }
  return terms;
}

Eigen::Vector2d term_residual(const Term& t, const std::vector<Eigen::Vector2d>& d) {
  Eigen::Vector2d r = t.base - t.target;
  for (int k = 0; k < 16; ++k) r += t.weight[k] * d[t.index[k]];
  return r;
}

double loss_of(const std::vector<Term>& terms, const std::vector<Eigen::Vector2d>& d) {
  double sum = 0.0;
  for (const auto& t : terms) sum += term_residual(t, d).squaredNorm();
  return sum / static_cast<double>(terms.size());
}

double mean_distance_of(const std::vector<Term>& terms, const std::vector<Eigen::Vector2d>& d) {
  double sum = 0.0;
  for (const auto& t : terms) sum += term_residual(t, d).norm();
  return sum / static_cast<double>(terms.size());
}

void gradient_of(const std::vector<Term>& terms, const std::vector<Eigen::Vector2d>& d,
                 std::vector<Eigen::Vector2d>& grad) {
  std::fill(grad.begin(), grad.end(), Eigen::Vector2d::Zero());
  const double scale = 2.0 / static_cast<double>(terms.size());
  for (const auto& t : terms) {
    const Eigen::Vector2d r = term_residual(t, d) * scale;
    for (int k = 0; k < 16; ++k) grad[t.index[k]] += t.weight[k] * r;
  }
}

}  // namespace

double bspline_loss(const BSplineField& field, const PlanarTransform& initial, std::span<const Correspondence> corrs) {
  if (corrs.empty()) fail(ErrorCode::InsufficientData, "B-spline loss needs correspondences");
  return loss_of(build_terms(field, initial, corrs), field.displacements);
}

std::vector<double> bspline_gradient(const BSplineField& field, const PlanarTransform& initial,
                                     std::span<const Correspondence> corrs) {
  if (corrs.empty()) fail(ErrorCode::InsufficientData, "B-spline gradient needs correspondences");
  const auto terms = build_terms(field, initial, corrs);
  std::vector<Eigen::Vector2d> grad(field.displacements.size());
  gradient_of(terms, field.displacements, grad);
  std::vector<double> flat;
  flat.reserve(grad.size() * 2);
  for (const auto& g : grad) {
    flat.push_back(g.x());
    flat.push_back(g.y());
  }
  return flat;
}

BSplineFit fit_bspline_sgd(std::span<const Correspondence> corrs, const PlanarTransform& initial, int width,
                           int height, const BSplineFitConfig& config) {
  config.validate();
  if (corrs.empty()) fail(ErrorCode::InsufficientData, "B-spline fitting needs at least one correspondence");
  if (initial.kind() == TransformKind::Homography)
    fail(ErrorCode::InvalidArgument, "B-spline initialization must be affine");

  BSplineFit fit;
  fit.initial = initial;
  fit.field = BSplineField::zeros(config.grid_x, config.grid_y, width, height);
  auto& d = fit.field.displacements;
  const auto terms = build_terms(fit.field, initial, corrs);

  // Row sums of |J^T J| (times 2/n): a diagonal bound on the curvature.
  std::vector<double> precondition(d.size(), 0.0);
  const double scale = 2.0 / static_cast<double>(terms.size());
  for (const auto& t : terms) {
    double total = 0.0;
    for (int k = 0; k < 16; ++k) total += std::abs(t.weight[k]);
    for (int k = 0; k < 16; ++k) precondition[t.index[k]] += scale * std::abs(t.weight[k]) * total;
  }

  std::vector<Eigen::Vector2d> grad(d.size());
  double loss = loss_of(terms, d);
  fit.loss_history.reserve(static_cast<std::size_t>(config.iterations) + 1);
  fit.loss_history.push_back(loss);
  fit.initial_mean_distance = mean_distance_of(terms, d);
  int growing = 0;
  for (int step = 0; step < config.iterations; ++step) {
    gradient_of(terms, d, grad);
    for (std::size_t k = 0; k < d.size(); ++k)
      if (precondition[k] > 0.0) d[k] -= config.learning_rate * grad[k] / precondition[k];
    const double next = loss_of(terms, d);
    fit.loss_history.push_back(next);
    growing = next > loss ? growing + 1 : 0;
    loss = next;
    if (!std::isfinite(loss) || growing >= config.divergence_patience)
      fail(ErrorCode::Diverged, "B-spline loss kept growing; learning rate too large");
  }
  fit.final_mean_distance = mean_distance_of(terms, d);
  return fit;
}

}  // namespace xmf
