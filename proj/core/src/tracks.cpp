#include "xmf/tracks.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <numeric>
#include <unordered_map>

#include "xmf/error.hpp"
#include "xmf/parallel.hpp"

namespace xmf {

PairSchedule plan_pair_schedule(int frame_count, int stride, int lookahead) {
  if (frame_count < 2) fail(ErrorCode::InvalidArgument, "need at least two frames");
  if (stride < 1 || lookahead < 1) fail(ErrorCode::InvalidArgument, "stride and lookahead must be >= 1");
  PairSchedule s;
  for (int f = 0; f < frame_count; f += stride) s.retained.push_back(f);
  const auto n = s.retained.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n && j <= i + static_cast<std::size_t>(lookahead); ++j)
      s.pairs.emplace_back(s.retained[i], s.retained[j]);
  return s;
}

NmsResult nms_merge(std::span<const EndpointObservation> obs, int window) {
  if (window < 1 || window % 2 == 0) fail(ErrorCode::InvalidArgument, "window must be odd and >= 1");
  const int radius = merge_radius(window);
  const double cell = std::max(radius, 1);

  std::vector<std::size_t> order(obs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto& oa = obs[a];
    const auto& ob = obs[b];
    if (oa.confidence != ob.confidence) return oa.confidence > ob.confidence;
    if (oa.point.y != ob.point.y) return oa.point.y < ob.point.y;
    if (oa.point.x != ob.point.x) return oa.point.x < ob.point.x;
    return a < b;
  });

  auto key = [](std::int64_t cx, std::int64_t cy) { return (cx << 32) ^ (cy & 0xffffffff); };
  auto cell_of = [&](double v) { return static_cast<std::int64_t>(std::floor(v / cell)); };
  std::unordered_map<std::int64_t, std::vector<std::size_t>> buckets;
  for (std::size_t i = 0; i < obs.size(); ++i) buckets[key(cell_of(obs[i].point.x), cell_of(obs[i].point.y))].push_back(i);

  constexpr std::size_t kUnassigned = static_cast<std::size_t>(-1);
  NmsResult result;
  result.assignment.assign(obs.size(), kUnassigned);
  for (const std::size_t founder : order) {
    if (result.assignment[founder] != kUnassigned) continue;
    const auto& f = obs[founder];
    const std::size_t anchor_index = result.anchors.size();
    Anchor anchor{f.frame, f.point, f.confidence, {}};
    const std::int64_t cx = cell_of(f.point.x);
    const std::int64_t cy = cell_of(f.point.y);
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        const auto it = buckets.find(key(cx + dx, cy + dy));
        if (it == buckets.end()) continue;
        for (const std::size_t i : it->second) {
          if (result.assignment[i] != kUnassigned) continue;
          const double cheb = std::max(std::abs(obs[i].point.x - f.point.x), std::abs(obs[i].point.y - f.point.y));
          if (cheb <= radius) {
            result.assignment[i] = anchor_index;
            anchor.claimed.push_back(i);
          }
        }
      }
    }
    std::sort(anchor.claimed.begin(), anchor.claimed.end());
    result.anchors.push_back(std::move(anchor));
  }
  return result;
}

AnchorGraph aggregate_matches(std::span<const PairMatches> pairs, int window, int workers) {
  AnchorGraph g;
  g.window = window;
  std::vector<std::pair<std::size_t, std::size_t>> edge_obs;
  std::vector<double> edge_conf;
  for (const auto& p : pairs) {
    if (p.frame_a == p.frame_b) fail(ErrorCode::InvalidArgument, "a pair must connect two different frames");
    for (const auto& m : p.matches) {
      const std::size_t l = g.observations.size();
      g.observations.push_back({p.frame_a, m.left, m.confidence, {p.frame_a, p.frame_b}, Side::Left});
      g.observations.push_back({p.frame_b, m.right, m.confidence, {p.frame_a, p.frame_b}, Side::Right});
      edge_obs.emplace_back(l, l + 1);
      edge_conf.push_back(m.confidence);
    }
  }

  std::map<int, std::vector<std::size_t>> by_frame;
  for (std::size_t i = 0; i < g.observations.size(); ++i) by_frame[g.observations[i].frame].push_back(i);
  std::vector<int> frames;
  std::vector<const std::vector<std::size_t>*> members;
  for (const auto& [frame, ids] : by_frame) {
    frames.push_back(frame);
    members.push_back(&ids);
  }

  std::vector<NmsResult> per_frame(frames.size());
  parallel_for(frames.size(), workers, [&](std::size_t f) {
    std::vector<EndpointObservation> local;
    local.reserve(members[f]->size());
    for (const std::size_t id : *members[f]) local.push_back(g.observations[id]);
    per_frame[f] = nms_merge(local, window);
  });

  g.observation_anchor.assign(g.observations.size(), 0);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::size_t base = g.anchors.size();
    const auto& ids = *members[f];
    for (auto& a : per_frame[f].anchors) {
      for (auto& c : a.claimed) c = ids[c];
      g.anchors.push_back(std::move(a));
    }
    for (std::size_t k = 0; k < ids.size(); ++k) g.observation_anchor[ids[k]] = base + per_frame[f].assignment[k];
  }

  std::map<std::pair<std::size_t, std::size_t>, double> best;
  for (std::size_t e = 0; e < edge_obs.size(); ++e) {
    std::size_t a = g.observation_anchor[edge_obs[e].first];
    std::size_t b = g.observation_anchor[edge_obs[e].second];
    if (a > b) std::swap(a, b);
    auto [it, inserted] = best.emplace(std::make_pair(a, b), edge_conf[e]);
    if (!inserted) it->second = std::max(it->second, edge_conf[e]);
  }
  g.edges.reserve(best.size());
  for (const auto& [ab, conf] : best) g.edges.push_back({ab.first, ab.second, conf});
  return g;
}

namespace {

class TrackUnion {
 public:
  explicit TrackUnion(std::span<const Anchor> anchors) : parent_(anchors.size()), frames_(anchors.size()) {
    std::iota(parent_.begin(), parent_.end(), 0);
    for (std::size_t i = 0; i < anchors.size(); ++i) frames_[i].emplace(anchors[i].frame, i);
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Returns false when the two components share a frame.
  bool unite(std::size_t a, std::size_t b) {
    std::size_t ra = find(a);
    std::size_t rb = find(b);
    if (ra == rb) return true;
    if (frames_[ra].size() < frames_[rb].size()) std::swap(ra, rb);
    for (const auto& [frame, anchor] : frames_[rb])
      if (frames_[ra].count(frame)) return false;
    frames_[ra].insert(frames_[rb].begin(), frames_[rb].end());
    frames_[rb].clear();
    parent_[rb] = ra;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::map<int, std::size_t>> frames_;
};

}  // namespace

std::vector<Track> build_tracks(std::span<const Anchor> anchors, std::span<const AnchorEdge> edges) {
  for (const auto& e : edges)
    if (e.a >= anchors.size() || e.b >= anchors.size()) fail(ErrorCode::InvalidArgument, "edge references a missing anchor");

  std::vector<std::size_t> order(edges.size());
  std::iota(order.begin(), order.end(), 0);
  auto frame_key = [&](const AnchorEdge& e) {
    const int fa = anchors[e.a].frame;
    const int fb = anchors[e.b].frame;
    return std::make_tuple(std::min(fa, fb), std::max(fa, fb), std::min(e.a, e.b), std::max(e.a, e.b));
  };
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
    if (edges[i].confidence != edges[j].confidence) return edges[i].confidence > edges[j].confidence;
    return frame_key(edges[i]) < frame_key(edges[j]);
  });

  TrackUnion uf(anchors);
  for (const std::size_t i : order) {
    const auto& e = edges[i];
    if (anchors[e.a].frame == anchors[e.b].frame) continue;
    uf.unite(e.a, e.b);
  }

  std::map<std::size_t, std::vector<std::size_t>> components;  // keyed by smallest member, via first visit
  std::vector<std::size_t> root_to_first(anchors.size(), static_cast<std::size_t>(-1));
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    const std::size_t r = uf.find(i);
    if (root_to_first[r] == static_cast<std::size_t>(-1)) root_to_first[r] = i;
    components[root_to_first[r]].push_back(i);
  }

  std::vector<Track> tracks;
  for (auto& [first, members] : components) {
    if (members.size() < 2) continue;
    Track t;
    t.id = static_cast<std::int64_t>(first);
    std::sort(members.begin(), members.end(),
              [&](std::size_t a, std::size_t b) { return anchors[a].frame < anchors[b].frame; });
    for (const std::size_t m : members)
      t.observations.push_back({anchors[m].frame, anchors[m].point, anchors[m].confidence, static_cast<std::int64_t>(m)});
    tracks.push_back(std::move(t));
  }
  return tracks;
}

std::string to_string(RefinerKind kind) {
  switch (kind) {
    case RefinerKind::Identity: return "identity";
    case RefinerKind::LocalCentroid: return "local-centroid";
    case RefinerKind::External: return "external";
  }
  return "identity";
}

RefinerKind refiner_kind_from_string(const std::string& name) {
  if (name == "identity") return RefinerKind::Identity;
  if (name == "local-centroid") return RefinerKind::LocalCentroid;
  if (name == "external") return RefinerKind::External;
  fail(ErrorCode::InvalidArgument, "unknown refiner '" + name + "'");
}

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

std::vector<Track> run_external_refiner(std::span<const Track> tracks, const RefinerConfig& config) {
  if (config.command.empty()) fail(ErrorCode::ExternalRefinerProtocol, "no refiner command given");
  const std::filesystem::path dir = config.work_dir.empty() ? std::filesystem::temp_directory_path() : config.work_dir;
  std::filesystem::create_directories(dir);
  const auto in = dir / "refiner_input.jsonl";
  const auto out = dir / "refiner_output.jsonl";
  std::filesystem::remove(out);
  write_track_file(in, tracks);
  const std::string cmd = config.command + " " + shell_quote(in.string()) + " " + shell_quote(out.string());
  const int status = std::system(cmd.c_str());
  if (status != 0) fail(ErrorCode::ExternalRefinerProtocol, "refiner command exited with status " + std::to_string(status));
  if (!std::filesystem::exists(out)) fail(ErrorCode::ExternalRefinerProtocol, "refiner produced no output file");
  std::vector<Track> refined;
  try {
    refined = read_track_file(out);
  } catch (const Error& e) {
    fail(ErrorCode::ExternalRefinerProtocol, std::string("unreadable refiner output: ") + e.what());
  }
  if (refined.size() != tracks.size()) fail(ErrorCode::ExternalRefinerProtocol, "refiner changed the track count");
  for (std::size_t i = 0; i < tracks.size(); ++i) {
    const auto& a = tracks[i];
    auto& b = refined[i];
    if (a.id != b.id || a.observations.size() != b.observations.size())
      fail(ErrorCode::ExternalRefinerProtocol, "refiner changed track " + std::to_string(a.id));
    for (std::size_t k = 0; k < a.observations.size(); ++k) {
      if (a.observations[k].frame != b.observations[k].frame)
        fail(ErrorCode::ExternalRefinerProtocol, "refiner changed the frame set of track " + std::to_string(a.id));
      if (!std::isfinite(b.observations[k].point.x) || !std::isfinite(b.observations[k].point.y))
        fail(ErrorCode::ExternalRefinerProtocol, "refiner returned a non-finite point");
      b.observations[k].anchor = a.observations[k].anchor;
    }
  }
  return refined;
}

}  // namespace

std::vector<Track> refine_tracks(std::span<const Track> tracks, const AnchorGraph& graph, const RefinerConfig& config) {
  switch (config.kind) {
    case RefinerKind::Identity: return {tracks.begin(), tracks.end()};
    case RefinerKind::External: return run_external_refiner(tracks, config);
    case RefinerKind::LocalCentroid: break;
  }
  const double radius = merge_radius(graph.window);
  std::vector<Track> out(tracks.begin(), tracks.end());
  for (auto& t : out) {
    for (auto& o : t.observations) {
      if (o.anchor < 0 || static_cast<std::size_t>(o.anchor) >= graph.anchors.size()) continue;
      const Anchor& a = graph.anchors[static_cast<std::size_t>(o.anchor)];
      double wsum = 0.0;
      Eigen::Vector2d acc = Eigen::Vector2d::Zero();
      for (const std::size_t id : a.claimed) {
        const auto& ob = graph.observations[id];
        wsum += ob.confidence;
        acc += ob.confidence * ob.point.vec();
      }
      if (!(wsum > 0.0)) {
        acc.setZero();
        for (const std::size_t id : a.claimed) acc += graph.observations[id].point.vec();
        wsum = static_cast<double>(a.claimed.size());
      }
      if (wsum <= 0.0) continue;
      const Eigen::Vector2d mean = acc / wsum;
      o.point = {std::clamp(mean.x(), a.point.x - radius, a.point.x + radius),
                 std::clamp(mean.y(), a.point.y - radius, a.point.y + radius)};
    }
  }
  return out;
}

PairSelectionConfig PairSelectionConfig::short_gap() { return {10, 300, 0.0}; }

std::vector<TrainingPairRecord> select_training_pairs(std::span<const Track> tracks, const PairSelectionConfig& config,
                                                      int workers) {
  if (config.min_gap < 1) fail(ErrorCode::InvalidArgument, "min_gap must be >= 1");
  std::vector<int> frames;
  for (const auto& t : tracks) {
    for (std::size_t k = 0; k < t.observations.size(); ++k) {
      if (k > 0 && t.observations[k].frame <= t.observations[k - 1].frame)
        fail(ErrorCode::InvalidArgument, "track frames must be strictly increasing");
      frames.push_back(t.observations[k].frame);
    }
  }
  std::sort(frames.begin(), frames.end());
  frames.erase(std::unique(frames.begin(), frames.end()), frames.end());

  std::vector<std::pair<int, int>> candidates;
  for (std::size_t i = 0; i < frames.size(); ++i)
    for (std::size_t j = i + 1; j < frames.size(); ++j)
      if (frames[j] - frames[i] >= config.min_gap) candidates.emplace_back(frames[i], frames[j]);

  auto find_obs = [](const Track& t, int frame) -> const TrackObservation* {
    const auto it = std::lower_bound(t.observations.begin(), t.observations.end(), frame,
                                     [](const TrackObservation& o, int f) { return o.frame < f; });
    return (it != t.observations.end() && it->frame == frame) ? &*it : nullptr;
  };

  std::vector<std::optional<TrainingPairRecord>> results(candidates.size());
  parallel_for(candidates.size(), workers, [&](std::size_t c) {
    const auto [a, b] = candidates[c];
    TrainingPairRecord rec;
    rec.frame_a = a;
    rec.frame_b = b;
    double motion = 0.0;
    for (const auto& t : tracks) {
      const TrackObservation* oa = find_obs(t, a);
      if (!oa) continue;
      const TrackObservation* ob = find_obs(t, b);
      if (!ob) continue;
      rec.matches.push_back({oa->point, ob->point, std::min(oa->confidence, ob->confidence)});
      motion += distance(oa->point, ob->point);
    }
    rec.covisibility = rec.matches.size();
    if (rec.covisibility == 0 || rec.covisibility < config.min_covisibility) return;
    rec.mean_motion = motion / static_cast<double>(rec.covisibility);
    if (rec.mean_motion < config.min_motion) return;
    results[c] = std::move(rec);
  });

  std::vector<TrainingPairRecord> out;
  for (auto& r : results)
    if (r) out.push_back(std::move(*r));
  return out;
}

std::vector<Correspondence> sample_matches(std::span<const Correspondence> matches, std::size_t k, double cell) {
  if (k < 1) fail(ErrorCode::InvalidArgument, "k must be >= 1");
  if (!(cell > 0.0)) fail(ErrorCode::InvalidArgument, "cell size must be positive");
  std::map<std::pair<std::int64_t, std::int64_t>, std::vector<std::size_t>> bins;  // (row, col)
  for (std::size_t i = 0; i < matches.size(); ++i) {
    const auto row = static_cast<std::int64_t>(std::floor(matches[i].left.y / cell));
    const auto col = static_cast<std::int64_t>(std::floor(matches[i].left.x / cell));
    bins[{row, col}].push_back(i);
  }
  std::vector<std::vector<std::size_t>> queues;
  for (auto& [key, ids] : bins) {
    std::sort(ids.begin(), ids.end(), [&](std::size_t a, std::size_t b) {
      const auto& ma = matches[a];
      const auto& mb = matches[b];
      if (ma.confidence != mb.confidence) return ma.confidence > mb.confidence;
      if (ma.left.y != mb.left.y) return ma.left.y < mb.left.y;
      if (ma.left.x != mb.left.x) return ma.left.x < mb.left.x;
      return a < b;
    });
    queues.push_back(std::move(ids));
  }
  std::vector<Correspondence> out;
  out.reserve(std::min(k, matches.size()));
  for (std::size_t round = 0; out.size() < k; ++round) {
    bool any = false;
    for (const auto& q : queues) {
      if (round >= q.size()) continue;
      any = true;
      out.push_back(matches[q[round]]);
      if (out.size() == k) break;
    }
    if (!any) break;
  }
  return out;
}

VerifiedMatches geometric_verify(std::span<const Correspondence> matches, std::pair<int, int> left_size,
                                 std::pair<int, int> right_size, double threshold, const RansacConfig& ransac_config) {
  auto inside = [](const PixelPoint& p, std::pair<int, int> s) {
    return p.x >= 0.0 && p.y >= 0.0 && p.x <= s.first - 1 && p.y <= s.second - 1;
  };
  std::vector<Correspondence> kept;
  kept.reserve(matches.size());
  for (const auto& m : matches)
    if (inside(m.left, left_size) && inside(m.right, right_size)) kept.push_back(m);
  if (kept.size() < 8) fail(ErrorCode::InsufficientMatches, "geometric verification needs at least 8 matches");

  RansacConfig cfg = ransac_config;
  cfg.inlier_threshold = threshold;
  FitResult fit;
  try {
    fit = ransac(kept, ModelKind::Fundamental, cfg);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::NoModel) fail(ErrorCode::NoModel, "no fundamental matrix with 8 inliers");
    throw;
  }
  if (fit.inliers.size() < 8) fail(ErrorCode::NoModel, "no fundamental matrix with 8 inliers");
  VerifiedMatches out;
  out.fundamental = fit.matrix;
  for (const std::size_t i : fit.inliers) out.inliers.push_back(kept[i]);
  return out;
}

}  // namespace xmf
