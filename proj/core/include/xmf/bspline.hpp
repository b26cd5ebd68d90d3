#pragma once

#include <Eigen/Core>
#include <array>
#include <span>
#include <vector>

#include "xmf/geometry.hpp"

namespace xmf {

// Uniform cubic B-spline displacement field. Control (i, j) sits at
// origin + (i, j) * spacing; the domain [0, W-1] x [0, H-1] is covered by
// the interior controls 1 .. g-2, so spacing = (W-1) / (g-3).
struct BSplineField {
  int grid_x = 0;
  int grid_y = 0;
  Eigen::Vector2d spacing = Eigen::Vector2d::Ones();
  Eigen::Vector2d origin = Eigen::Vector2d::Zero();
  std::vector<Eigen::Vector2d> displacements;  // grid_y rows of grid_x controls

  static BSplineField zeros(int grid_x, int grid_y, int width, int height);

  void validate() const;
  Eigen::Vector2d& control(int i, int j) { return displacements[static_cast<std::size_t>(j) * grid_x + i]; }
  const Eigen::Vector2d& control(int i, int j) const { return displacements[static_cast<std::size_t>(j) * grid_x + i]; }
};

// Cubic B-spline basis values at local parameter t for the four controls
// i-1 .. i+2 of the active interval.
std::array<double, 4> cubic_bspline_basis(double t);

struct BSplineSupport {
  int first_x = 0;  // index of the first of four contributing controls
  int first_y = 0;
  std::array<double, 4> wx{};
  std::array<double, 4> wy{};
};

// Outside the domain the interval index is clamped to the boundary cell and
// the cubic pieces are extrapolated, so the weights still sum to 1.
BSplineSupport bspline_support(const BSplineField& field, const PixelPoint& p);

PixelPoint evaluate_bspline(const BSplineField& field, const PixelPoint& p);

struct BSplineFitConfig {
  int grid_x = 8;
  int grid_y = 8;
  double learning_rate = 0.1;
  int iterations = 2000;
  int divergence_patience = 50;  // consecutive growing steps before giving up

  void validate() const;
};

struct BSplineFit {
  BSplineField field;
  PlanarTransform initial;
  // Mean squared residual |warp(x_l) - x_r|^2 before each step and after the last.
  std::vector<double> loss_history;
  double initial_mean_distance = 0.0;
  double final_mean_distance = 0.0;
};

// warp(x) = bspline(affine(x)).
PixelPoint apply_bspline_warp(const BSplineField& field, const PlanarTransform& initial, const PixelPoint& p);

// Mean squared residual and its gradient with respect to the control
// displacements (two entries per control, x then y).
double bspline_loss(const BSplineField& field, const PlanarTransform& initial, std::span<const Correspondence> corrs);
std::vector<double> bspline_gradient(const BSplineField& field, const PlanarTransform& initial,
                                     std::span<const Correspondence> corrs);

/// Full-batch gradient descent on the control displacements, starting from a
/// zero field on top of the affine initialization. Each control's step is
/// scaled by the inverse of its row sum in the (absolute) Gauss-Newton
/// matrix, so learning_rate is dimensionless and stable below 2. Throws
/// Diverged when the loss grows for divergence_patience consecutive steps.
BSplineFit fit_bspline_sgd(std::span<const Correspondence> corrs, const PlanarTransform& initial, int width,
                           int height, const BSplineFitConfig& config = {});

}  // namespace xmf
