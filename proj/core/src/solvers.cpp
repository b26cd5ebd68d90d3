#include "xmf/solvers.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <array>
#include <cmath>
#include <limits>

#include "xmf/error.hpp"

namespace xmf {

namespace {

constexpr double kConditioning = 1e-9;

// Hartley normalization: centroid to the origin, mean distance sqrt(2).
Eigen::Matrix3d normalizing_transform(std::span<const Correspondence> corrs, bool left) {
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& c : corrs) mean += (left ? c.left : c.right).vec();
  mean /= static_cast<double>(corrs.size());
  double spread = 0.0;
  for (const auto& c : corrs) spread += ((left ? c.left : c.right).vec() - mean).norm();
  spread /= static_cast<double>(corrs.size());
  const double s = spread > 0.0 ? std::sqrt(2.0) / spread : 1.0;
  Eigen::Matrix3d t;
  t << s, 0.0, -s * mean.x(), 0.0, s, -s * mean.y(), 0.0, 0.0, 1.0;
  return t;
}

Eigen::Vector2d apply_h(const Eigen::Matrix3d& t, const PixelPoint& p) {
  const Eigen::Vector3d q = t * Eigen::Vector3d(p.x, p.y, 1.0);
  return q.head<2>() / q.z();
}

// Null vector of the design matrix plus a flag for a second near-null
// direction (the solution is not unique).
struct NullSpace {
  Eigen::Matrix<double, 9, 1> vector;
  bool degenerate;
};

NullSpace null_space_9(const Eigen::MatrixXd& a) {
  Eigen::MatrixXd padded = a;
  if (a.rows() < 9) {
    padded = Eigen::MatrixXd::Zero(9, 9);
    padded.topRows(a.rows()) = a;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(padded, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  NullSpace out;
  out.vector = svd.matrixV().col(8);
  out.degenerate = !(s(0) > 0.0) || s(7) / s(0) < kConditioning;
  return out;
}

bool collinear(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d u = b - a;
  const Eigen::Vector2d v = c - a;
  const double scale = std::max({u.squaredNorm(), v.squaredNorm(), 1e-300});
  return std::abs(u.x() * v.y() - u.y() * v.x()) / scale < kConditioning;
}

}  // namespace

PlanarTransform solve_affine_lsq(std::span<const Correspondence> corrs) {
  if (corrs.size() < 3) fail(ErrorCode::InsufficientData, "affine needs at least 3 correspondences");
  const Eigen::Matrix3d tl = normalizing_transform(corrs, true);
  const auto n = static_cast<Eigen::Index>(corrs.size());
  Eigen::MatrixXd m(n, 3);
  Eigen::MatrixXd rhs(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d p = apply_h(tl, corrs[i].left);
    m.row(i) << p.x(), p.y(), 1.0;
    rhs.row(i) << corrs[i].right.x, corrs[i].right.y;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(2) / s(0) < kConditioning)
    fail(ErrorCode::DegenerateConfiguration, "left points are collinear");
  const Eigen::MatrixXd sol = svd.solve(rhs);  // 3 x 2
  Eigen::Matrix3d a = Eigen::Matrix3d::Identity();
  a.topRows<2>() = sol.transpose();
  a = (a * tl).eval();
  a.row(2) << 0.0, 0.0, 1.0;
  if (std::abs(a.determinant()) <= 1e-12) fail(ErrorCode::DegenerateConfiguration, "affine solution is singular");
  return {TransformKind::Affine, a};
}

PlanarTransform solve_homography_dlt(std::span<const Correspondence> corrs) {
  if (corrs.size() < 4) fail(ErrorCode::InsufficientData, "homography needs at least 4 correspondences");
  const Eigen::Matrix3d tl = normalizing_transform(corrs, true);
  const Eigen::Matrix3d tr = normalizing_transform(corrs, false);
  const auto n = static_cast<Eigen::Index>(corrs.size());
  std::vector<Eigen::Vector2d> pl(corrs.size()), pr(corrs.size());
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    pl[i] = apply_h(tl, corrs[i].left);
    pr[i] = apply_h(tr, corrs[i].right);
  }
  if (corrs.size() == 4) {
    for (int a = 0; a < 4; ++a)
      for (int b = a + 1; b < 4; ++b)
        for (int c = b + 1; c < 4; ++c)
          if (collinear(pl[a], pl[b], pl[c]) || collinear(pr[a], pr[b], pr[c]))
            fail(ErrorCode::DegenerateConfiguration, "three of four points are collinear");
  }
  Eigen::MatrixXd a(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = pl[i].x(), y = pl[i].y(), u = pr[i].x(), v = pr[i].y();
    a.row(2 * i) << -x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u;
    a.row(2 * i + 1) << 0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v;
  }
  const NullSpace ns = null_space_9(a);
  if (ns.degenerate) fail(ErrorCode::DegenerateConfiguration, "homography is not uniquely determined");
  Eigen::Matrix3d hn;
  hn << ns.vector(0), ns.vector(1), ns.vector(2), ns.vector(3), ns.vector(4), ns.vector(5), ns.vector(6), ns.vector(7),
      ns.vector(8);
  Eigen::Matrix3d h = tr.inverse() * hn * tl;
  h /= h.norm();
  if (std::abs(h(2, 2)) > 1e-12 && h(2, 2) < 0.0) h = -h;
  if (std::abs(h.determinant()) <= 1e-12) fail(ErrorCode::DegenerateConfiguration, "homography is singular");
  return {TransformKind::Homography, h};
}

Eigen::Matrix3d solve_epipolar_8pt(std::span<const Correspondence> corrs, bool essential) {
  if (corrs.size() < 8) fail(ErrorCode::InsufficientData, "8-point solver needs at least 8 correspondences");
  const Eigen::Matrix3d tl = normalizing_transform(corrs, true);
  const Eigen::Matrix3d tr = normalizing_transform(corrs, false);
  const auto n = static_cast<Eigen::Index>(corrs.size());
  Eigen::MatrixXd a(n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d p = apply_h(tl, corrs[i].left);
    const Eigen::Vector2d q = apply_h(tr, corrs[i].right);
    a.row(i) << q.x() * p.x(), q.x() * p.y(), q.x(), q.y() * p.x(), q.y() * p.y(), q.y(), p.x(), p.y(), 1.0;
  }
  const NullSpace ns = null_space_9(a);
  if (ns.degenerate) fail(ErrorCode::DegenerateConfiguration, "epipolar design matrix is rank deficient");
  Eigen::Matrix3d fn;
  fn << ns.vector(0), ns.vector(1), ns.vector(2), ns.vector(3), ns.vector(4), ns.vector(5), ns.vector(6), ns.vector(7),
      ns.vector(8);

  Eigen::JacobiSVD<Eigen::Matrix3d> rank2(fn, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d s = rank2.singularValues();
  s(2) = 0.0;
  fn = rank2.matrixU() * s.asDiagonal() * rank2.matrixV().transpose();

  Eigen::Matrix3d f = tr.transpose() * fn * tl;
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d sv = svd.singularValues();
  if (essential) {
    sv << 1.0, 1.0, 0.0;
  } else {
    sv(2) = 0.0;
    sv /= sv.norm();
  }
  return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose();
}

double sampson_distance(const Eigen::Matrix3d& f, const PixelPoint& left, const PixelPoint& right) {
  const Eigen::Vector3d x1(left.x, left.y, 1.0);
  const Eigen::Vector3d x2(right.x, right.y, 1.0);
  const Eigen::Vector3d fx1 = f * x1;
  const Eigen::Vector3d ftx2 = f.transpose() * x2;
  const double e = x2.dot(fx1);
  const double denom = fx1.x() * fx1.x() + fx1.y() * fx1.y() + ftx2.x() * ftx2.x() + ftx2.y() * ftx2.y();
  if (denom <= 0.0) return e == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::abs(e) / std::sqrt(denom);
}

std::vector<Correspondence> normalize_correspondences(std::span<const Correspondence> corrs,
                                                      const StereoCameras& cameras) {
  std::vector<Correspondence> out;
  out.reserve(corrs.size());
  for (const auto& c : corrs) {
    const Eigen::Vector3d l = cameras.left.unproject(c.left);
    const Eigen::Vector3d r = cameras.right.unproject(c.right);
    out.push_back({{l.x(), l.y()}, {r.x(), r.y()}, c.confidence});
  }
  return out;
}

std::optional<Eigen::Vector3d> triangulate(const PixelPoint& left, const PixelPoint& right, const Eigen::Matrix3d& rotation,
                                           const Eigen::Vector3d& translation) {
  Eigen::Matrix<double, 3, 4> p1 = Eigen::Matrix<double, 3, 4>::Zero();
  p1.leftCols<3>().setIdentity();
  Eigen::Matrix<double, 3, 4> p2;
  p2.leftCols<3>() = rotation;
  p2.col(3) = translation;
  Eigen::Matrix4d a;
  a.row(0) = left.x * p1.row(2) - p1.row(0);
  a.row(1) = left.y * p1.row(2) - p1.row(1);
  a.row(2) = right.x * p2.row(2) - p2.row(0);
  a.row(3) = right.y * p2.row(2) - p2.row(1);
  Eigen::JacobiSVD<Eigen::Matrix4d> svd(a, Eigen::ComputeFullV);
  const Eigen::Vector4d x = svd.matrixV().col(3);
  if (std::abs(x(3)) < 1e-12 * x.head<3>().norm()) return std::nullopt;
  return Eigen::Vector3d(x.head<3>() / x(3));
}

PoseRecovery recover_pose(const Eigen::Matrix3d& essential, std::span<const Correspondence> normalized) {
  if (normalized.empty()) fail(ErrorCode::InsufficientData, "pose recovery needs correspondences");
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(essential, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  if (u.determinant() < 0.0) u = -u;
  if (v.determinant() < 0.0) v = -v;
  Eigen::Matrix3d w;
  w << 0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0;
  const Eigen::Vector3d t = u.col(2).normalized();
  const std::array<Eigen::Matrix3d, 2> rotations{u * w * v.transpose(), u * w.transpose() * v.transpose()};

  PoseRecovery best;
  bool have = false;
  for (const auto& r : rotations) {
    for (const double sign : {1.0, -1.0}) {
      const Eigen::Vector3d tc = sign * t;
      std::size_t positive = 0;
      for (const auto& c : normalized) {
        const auto x = triangulate(c.left, c.right, r, tc);
        if (!x) continue;
        if (x->z() > 0.0 && (r * *x + tc).z() > 0.0) ++positive;
      }
      if (!have || positive > best.positive_depth) {
        best.pose.rotation = r;
        best.pose.translation_direction = tc;
        best.positive_depth = positive;
        have = true;
      }
    }
  }
  if (2 * best.positive_depth <= normalized.size())
    fail(ErrorCode::CheiralityAmbiguous, "no decomposition places more than half the points in front of both cameras");
  return best;
}

PoseRecovery recover_pose(const Eigen::Matrix3d& essential, std::span<const Correspondence> corrs,
                          const StereoCameras& cameras) {
  const auto normalized = normalize_correspondences(corrs, cameras);
  return recover_pose(essential, normalized);
}

}  // namespace xmf
