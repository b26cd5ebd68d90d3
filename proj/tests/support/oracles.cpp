#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>

namespace xmf::oracle {

std::optional<double> bilinear(const DepthMap& d, double x, double y) {
  if (x < 0 || y < 0 || x > d.width() - 1 || y > d.height() - 1) return std::nullopt;
  const int x0 = static_cast<int>(x);
  const int y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, d.width() - 1);
  const int y1 = std::min(y0 + 1, d.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy), w01 = (1 - fx) * fy, w11 = fx * fy;
  const double v00 = d.at(x0, y0), v10 = d.at(x1, y0), v01 = d.at(x0, y1), v11 = d.at(x1, y1);
  if ((w00 > 0 && v00 <= 0) || (w10 > 0 && v10 <= 0) || (w01 > 0 && v01 <= 0) || (w11 > 0 && v11 <= 0))
    return std::nullopt;
  double s = 0;
  if (w00 > 0) s += w00 * v00;
  if (w10 > 0) s += w10 * v10;
  if (w01 > 0) s += w01 * v01;
  if (w11 > 0) s += w11 * v11;
  return s;
}

GateResult depth_gate(const PosedView& left, const PosedView& right, int x, int y, double max_ed, double max_ec) {
  GateResult g;
  const auto& kl = left.camera;
  const auto& kr = right.camera;
  const double dl = left.depth->at(x, y);
  if (dl <= 0) return g;
  // Relative pose from the two world-to-camera poses.
  const Eigen::Matrix3d r = right.pose->rotation * left.pose->rotation.transpose();
  const Eigen::Vector3d t = right.pose->translation - r * left.pose->translation;

  const Eigen::Vector3d pl((x - kl.cx) / kl.fx * dl, (y - kl.cy) / kl.fy * dl, dl);
  const Eigen::Vector3d pr = r * pl + t;
  if (pr.z() <= 0) return g;
  const double u = kr.fx * pr.x() / pr.z() + kr.cx;
  const double v = kr.fy * pr.y() / pr.z() + kr.cy;
  const auto dr = bilinear(*right.depth, u, v);
  if (!dr) return g;
  g.depth_error = std::abs(*dr - pr.z()) / *dr;

  const Eigen::Vector3d qr((u - kr.cx) / kr.fx * *dr, (v - kr.cy) / kr.fy * *dr, *dr);
  const Eigen::Vector3d ql = r.transpose() * (qr - t);
  if (ql.z() <= 0) return g;
  const double bu = kl.fx * ql.x() / ql.z() + kl.cx;
  const double bv = kl.fy * ql.y() / ql.z() + kl.cy;
  g.cycle_error = std::hypot(bu - x, bv - y);
  g.rx = u;
  g.ry = v;
  g.kept = g.depth_error < max_ed && g.cycle_error < max_ec;
  return g;
}

std::vector<Correspondence> grid_matches(const PosedView& left, const PosedView& right, int step) {
  std::vector<Correspondence> out;
  for (int y = 0; y < left.camera.height; y += step)
    for (int x = 0; x < left.camera.width; x += step) {
      const GateResult g = depth_gate(left, right, x, y);
      if (g.kept) out.push_back({{double(x), double(y)}, {g.rx, g.ry}, 1.0});
    }
  return out;
}

std::vector<SelectedPair> select_pairs(std::span<const Track> tracks, int min_gap, std::size_t min_covis,
                                       double min_motion) {
  std::set<int> frames;
  for (const auto& t : tracks)
    for (const auto& o : t.observations) frames.insert(o.frame);
  std::vector<SelectedPair> out;
  for (int a : frames) {
    for (int b : frames) {
      if (b <= a || b - a < min_gap) continue;
      std::size_t covis = 0;
      double motion = 0;
      for (const auto& t : tracks) {
        const TrackObservation* oa = nullptr;
        const TrackObservation* ob = nullptr;
        for (const auto& o : t.observations) {
          if (o.frame == a) oa = &o;
          if (o.frame == b) ob = &o;
        }
        if (oa && ob) {
          ++covis;
          motion += std::hypot(oa->point.x - ob->point.x, oa->point.y - ob->point.y);
        }
      }
      if (covis == 0 || covis < min_covis) continue;
      motion /= static_cast<double>(covis);
      if (motion < min_motion) continue;
      out.push_back({a, b, covis, motion});
    }
  }
  return out;
}

double trapezoid_auc(std::span<const double> errors, double t, double step) {
  // SR at a jump takes the mean of its one-sided limits, the usual value
  // for integrating a step function.
  auto sr = [&](double x) {
    double below = 0;
    double at_or_below = 0;
    for (double e : errors) {
      below += e < x ? 1 : 0;
      at_or_below += e <= x ? 1 : 0;
    }
    return 0.5 * (below + at_or_below) / static_cast<double>(errors.size());
  };
  // k / per_unit hits decimal grid values exactly, unlike k * step.
  const double per_unit = std::round(1.0 / step);
  const auto n = static_cast<long>(std::llround(t * per_unit));
  double area = 0;
  double prev = sr(0.0);
  for (long k = 1; k <= n; ++k) {
    const double x = k == n ? t : k / per_unit;
    const double cur = sr(x);
    area += 0.5 * (prev + cur) * step;
    prev = cur;
  }
  return area / t;
}

double angle_between_deg(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double c = std::clamp(a.normalized().dot(b.normalized()), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

double rotation_error_deg(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const double c = std::clamp(((a.transpose() * b).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

std::vector<AnchorRow> greedy_anchors(std::span<const PairMatches> pairs, int window) {
  struct Obs {
    int frame;
    double x, y, conf;
    std::size_t order;
  };
  std::vector<const PairMatches*> sorted;
  for (const auto& p : pairs) sorted.push_back(&p);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) {
    return std::make_pair(a->frame_a, a->frame_b) < std::make_pair(b->frame_a, b->frame_b);
  });
  std::map<int, std::vector<Obs>> frames;
  std::size_t order = 0;
  for (const auto* p : sorted)
    for (const auto& m : p->matches) {
      frames[p->frame_a].push_back({p->frame_a, m.left.x, m.left.y, m.confidence, order++});
      frames[p->frame_b].push_back({p->frame_b, m.right.x, m.right.y, m.confidence, order++});
    }
  const double r = (window - 1) / 2;
  std::vector<AnchorRow> rows;
  for (auto& [frame, obs] : frames) {
    std::sort(obs.begin(), obs.end(), [](const Obs& a, const Obs& b) {
      if (a.conf != b.conf) return a.conf > b.conf;
      if (a.y != b.y) return a.y < b.y;
      if (a.x != b.x) return a.x < b.x;
      return a.order < b.order;
    });
    std::vector<bool> taken(obs.size(), false);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (taken[i]) continue;
      AnchorRow row{frame, obs[i].x, obs[i].y, obs[i].conf, 0};
      for (std::size_t j = 0; j < obs.size(); ++j) {
        if (taken[j]) continue;
        if (std::abs(obs[j].x - obs[i].x) <= r && std::abs(obs[j].y - obs[i].y) <= r) {
          taken[j] = true;
          ++row.claimed;
        }
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace xmf::oracle
