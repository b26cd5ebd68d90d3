#include "xmf/formats.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "xmf/error.hpp"

namespace xmf {

using detail::json;

namespace detail {

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    lines.push_back(line);
  }
  return lines;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

}  // namespace detail

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace {

json parse_line(const std::string& line, const std::filesystem::path& path) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    fail(ErrorCode::ManifestInvalid, path.string() + ": " + e.what());
  }
}

template <typename Fn>
auto guarded(const std::filesystem::path& path, Fn&& fn) {
  try {
    return fn();
  } catch (const json::exception& e) {
    fail(ErrorCode::ManifestInvalid, path.string() + ": " + e.what());
  }
}

}  // namespace

// ---- Match files ----------------------------------------------------------

void write_match_jsonl(const std::filesystem::path& path, const MatchFileHeader& header,
                       std::span<const Correspondence> matches) {
  json h{{"type", "pair_header"}, {"left", header.left},       {"right", header.right},
         {"width0", header.width0}, {"height0", header.height0}, {"width1", header.width1},
         {"height1", header.height1}};
  if (header.frame0) h["frame0"] = *header.frame0;
  if (header.frame1) h["frame1"] = *header.frame1;
  if (header.provenance) h["provenance"] = detail::provenance_to_json(*header.provenance);
  std::string text = h.dump() + "\n";
  for (const auto& m : matches) {
    text += json{{"x0", m.left.x}, {"y0", m.left.y}, {"x1", m.right.x}, {"y1", m.right.y}, {"conf", m.confidence}}
                .dump();
    text += '\n';
  }
  detail::write_text(path, text);
}

MatchFile read_match_jsonl(const std::filesystem::path& path) {
  MatchFile file;
  for (const auto& line : detail::read_lines(path)) {
    const json j = parse_line(line, path);
    guarded(path, [&] {
      if (j.contains("type")) {
        if (j.at("type") != "pair_header") return 0;
        MatchFileHeader h;
        h.left = j.value("left", "");
        h.right = j.value("right", "");
        h.width0 = j.value("width0", 0);
        h.height0 = j.value("height0", 0);
        h.width1 = j.value("width1", 0);
        h.height1 = j.value("height1", 0);
        if (j.contains("frame0")) h.frame0 = j.at("frame0").get<int>();
        if (j.contains("frame1")) h.frame1 = j.at("frame1").get<int>();
        if (j.contains("provenance")) h.provenance = detail::provenance_from_json(j.at("provenance"));
        file.header = h;
        return 0;
      }
      Correspondence c;
      c.left = {j.at("x0").get<double>(), j.at("y0").get<double>()};
      c.right = {j.at("x1").get<double>(), j.at("y1").get<double>()};
      c.confidence = j.value("conf", 1.0);
      if (!(c.confidence >= 0.0 && c.confidence <= 1.0))
        fail(ErrorCode::ManifestInvalid, path.string() + ": confidence outside [0, 1]");
      file.matches.push_back(c);
      return 0;
    });
  }
  return file;
}

void write_match_binary(const std::filesystem::path& path, std::span<const Correspondence> matches) {
  static_assert(std::endian::native == std::endian::little, "binary match writer assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out.write("XMF1", 4);
  const auto count = static_cast<std::uint32_t>(matches.size());
  out.write(reinterpret_cast<const char*>(&count), 4);
  for (const auto& m : matches) {
    const float rec[5] = {static_cast<float>(m.left.x), static_cast<float>(m.left.y), static_cast<float>(m.right.x),
                          static_cast<float>(m.right.y), static_cast<float>(m.confidence)};
    out.write(reinterpret_cast<const char*>(rec), sizeof rec);
  }
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

MatchFile read_match_binary(const std::filesystem::path& path) {
  static_assert(std::endian::native == std::endian::little, "binary match reader assumes a little-endian host");
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  char magic[4];
  std::uint32_t count = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&count), 4);
  if (!in || std::memcmp(magic, "XMF1", 4) != 0) fail(ErrorCode::ManifestInvalid, path.string() + ": bad magic");
  MatchFile file;
  file.matches.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    float rec[5];
    in.read(reinterpret_cast<char*>(rec), sizeof rec);
    if (!in) fail(ErrorCode::ManifestInvalid, path.string() + ": truncated");
    file.matches.push_back({{rec[0], rec[1]}, {rec[2], rec[3]}, rec[4]});
  }
  return file;
}

MatchFile read_match_file(const std::filesystem::path& path) {
  if (path.extension() == ".xmf") return read_match_binary(path);
  return read_match_jsonl(path);
}

// ---- Pair manifest --------------------------------------------------------

std::string to_jsonl(const PairManifestRecord& r) {
  json j{{"left_path", r.left_path},
         {"right_path", r.right_path},
         {"modalities", json::array({r.left_modality, r.right_modality})},
         {"seed", r.seed},
         {"source", r.source}};
  if (r.homography) {
    j["gt_kind"] = "homography";
    j["gt"] = detail::matrix_to_json(*r.homography);
  } else if (r.matches_path) {
    j["gt_kind"] = "matches";
    j["gt"] = *r.matches_path;
  } else {
    fail(ErrorCode::InvalidArgument, "pair record needs a homography or a matches path");
  }
  if (r.mask_path) j["mask_path"] = *r.mask_path;
  if (r.composition) j["composition"] = *r.composition;
  if (r.provenance) j["provenance"] = detail::provenance_to_json(*r.provenance);
  return j.dump();
}

PairManifestRecord pair_record_from_jsonl(const std::string& line) {
  const json j = parse_line(line, "pair manifest");
  return guarded("pair manifest", [&] {
    PairManifestRecord r;
    r.left_path = j.at("left_path").get<std::string>();
    r.right_path = j.at("right_path").get<std::string>();
    const auto kind = j.at("gt_kind").get<std::string>();
    if (kind == "homography") {
      r.homography = detail::matrix_from_json(j.at("gt"));
    } else if (kind == "matches") {
      r.matches_path = j.at("gt").get<std::string>();
    } else {
      fail(ErrorCode::ManifestInvalid, "unknown gt_kind '" + kind + "'");
    }
    if (j.contains("mask_path")) r.mask_path = j.at("mask_path").get<std::string>();
    if (j.contains("composition")) r.composition = j.at("composition").get<std::string>();
    const auto mods = j.value("modalities", std::vector<std::string>{"visible", "visible"});
    if (mods.size() != 2) fail(ErrorCode::ManifestInvalid, "modalities must have two entries");
    r.left_modality = mods[0];
    r.right_modality = mods[1];
    r.seed = j.value("seed", std::uint64_t{0});
    r.source = j.value("source", "");
    if (j.contains("provenance")) r.provenance = detail::provenance_from_json(j.at("provenance"));
    return r;
  });
}

std::vector<PairManifestRecord> read_pair_manifest(const std::filesystem::path& path) {
  std::vector<PairManifestRecord> out;
  for (const auto& line : detail::read_lines(path)) out.push_back(pair_record_from_jsonl(line));
  return out;
}

// ---- Tracks -----------------------------------------------------------------

void write_track_file(const std::filesystem::path& path, std::span<const Track> tracks,
                      const std::optional<Provenance>& provenance) {
  std::string text;
  if (provenance) {
    json p = detail::provenance_to_json(*provenance);
    p["type"] = "provenance";
    text += p.dump() + "\n";
  }
  for (const auto& t : tracks) {
    json obs = json::array();
    for (const auto& o : t.observations)
      obs.push_back(json{{"frame", o.frame}, {"x", o.point.x}, {"y", o.point.y}, {"conf", o.confidence}});
    text += json{{"track_id", t.id}, {"obs", obs}}.dump();
    text += '\n';
  }
  detail::write_text(path, text);
}

std::vector<Track> read_track_file(const std::filesystem::path& path) {
  std::vector<Track> tracks;
  for (const auto& line : detail::read_lines(path)) {
    const json j = parse_line(line, path);
    if (j.contains("type")) continue;
    guarded(path, [&] {
      Track t;
      t.id = j.at("track_id").get<std::int64_t>();
      for (const auto& o : j.at("obs")) {
        TrackObservation ob;
        ob.frame = o.at("frame").get<int>();
        ob.point = {o.at("x").get<double>(), o.at("y").get<double>()};
        ob.confidence = o.value("conf", 1.0);
        t.observations.push_back(ob);
      }
      tracks.push_back(std::move(t));
      return 0;
    });
  }
  return tracks;
}

// ---- Model output -----------------------------------------------------------

void write_model_json(const std::filesystem::path& path, const ModelOutput& m) {
  json j{{"kind", m.kind}, {"inliers", m.inliers}};
  if (m.matrix) j["matrix"] = detail::matrix_to_json(*m.matrix);
  if (m.pose)
    j["pose"] = json{{"R", detail::matrix_to_json(m.pose->rotation)},
                     {"t", {m.pose->translation_direction.x(), m.pose->translation_direction.y(),
                            m.pose->translation_direction.z()}}};
  if (m.bspline) {
    const BSplineField& f = *m.bspline;
    json disp = json::array();
    for (const auto& d : f.displacements) disp.push_back({d.x(), d.y()});
    j["bspline"] = json{{"gx", f.grid_x},
                        {"gy", f.grid_y},
                        {"spacing", {f.spacing.x(), f.spacing.y()}},
                        {"origin", {f.origin.x(), f.origin.y()}},
                        {"displacements", disp}};
    if (m.bspline_initial) j["bspline"]["initial"] = detail::matrix_to_json(*m.bspline_initial);
  }
  if (m.provenance) j["provenance"] = detail::provenance_to_json(*m.provenance);
  detail::write_text(path, j.dump(2) + "\n");
}

ModelOutput read_model_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  return guarded(path, [&] {
    const json j = json::parse(in);
    ModelOutput m;
    m.kind = j.at("kind").get<std::string>();
    m.inliers = j.value("inliers", std::vector<std::size_t>{});
    if (j.contains("matrix")) m.matrix = detail::matrix_from_json(j.at("matrix"));
    if (j.contains("pose")) {
      RelativePoseEstimate p;
      p.rotation = detail::matrix_from_json(j.at("pose").at("R"));
      const auto t = j.at("pose").at("t").get<std::vector<double>>();
      if (t.size() != 3) fail(ErrorCode::ManifestInvalid, "pose t needs 3 entries");
      p.translation_direction = {t[0], t[1], t[2]};
      m.pose = p;
    }
    if (j.contains("bspline")) {
      const json& b = j.at("bspline");
      BSplineField f;
      f.grid_x = b.at("gx").get<int>();
      f.grid_y = b.at("gy").get<int>();
      const auto sp = b.at("spacing").get<std::vector<double>>();
      const auto org = b.at("origin").get<std::vector<double>>();
      f.spacing = {sp.at(0), sp.at(1)};
      f.origin = {org.at(0), org.at(1)};
      for (const auto& d : b.at("displacements")) f.displacements.emplace_back(d.at(0).get<double>(), d.at(1).get<double>());
      f.validate();
      m.bspline = f;
      if (b.contains("initial")) m.bspline_initial = detail::matrix_from_json(b.at("initial"));
    }
    if (j.contains("provenance")) m.provenance = detail::provenance_from_json(j.at("provenance"));
    return m;
  });
}

// ---- Evaluation manifest ------------------------------------------------------

namespace {

const char* gt_kind_name(GroundTruthKind k) {
  switch (k) {
    case GroundTruthKind::Planar: return "planar";
    case GroundTruthKind::Landmarks: return "landmarks";
    case GroundTruthKind::Pose: return "pose";
  }
  return "planar";
}

json size_json(const std::pair<int, int>& s) { return json::array({s.first, s.second}); }

std::pair<int, int> size_from(const json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.size() != 2 || v[0] <= 0 || v[1] <= 0) fail(ErrorCode::ManifestInvalid, "size must be [width, height]");
  return {v[0], v[1]};
}

}  // namespace

std::string to_jsonl(const EvalManifestRecord& r) {
  json j{{"pair_id", r.pair_id}, {"left", r.left}, {"right", r.right}, {"gt_kind", gt_kind_name(r.gt_kind)}};
  switch (r.gt_kind) {
    case GroundTruthKind::Planar:
      if (!r.planar) fail(ErrorCode::InvalidArgument, "planar record needs a matrix");
      j["gt"] = detail::matrix_to_json(*r.planar);
      break;
    case GroundTruthKind::Landmarks:
      if (!r.landmarks_path) fail(ErrorCode::InvalidArgument, "landmark record needs a file");
      j["gt"] = *r.landmarks_path;
      break;
    case GroundTruthKind::Pose:
      if (!r.pose) fail(ErrorCode::InvalidArgument, "pose record needs a pose");
      j["gt"] = json{{"R", detail::matrix_to_json(r.pose->rotation)},
                     {"t", {r.pose->translation.x(), r.pose->translation.y(), r.pose->translation.z()}},
                     {"K0", detail::matrix_to_json(r.pose->k0)},
                     {"K1", detail::matrix_to_json(r.pose->k1)}};
      break;
  }
  if (r.native_size) j["native_size"] = size_json(*r.native_size);
  if (r.size0) j["size0"] = size_json(*r.size0);
  if (r.size1) j["size1"] = size_json(*r.size1);
  return j.dump();
}

std::vector<EvalManifestRecord> read_eval_manifest(const std::filesystem::path& path) {
  std::vector<EvalManifestRecord> out;
  for (const auto& line : detail::read_lines(path)) {
    const json j = parse_line(line, path);
    out.push_back(guarded(path, [&] {
      EvalManifestRecord r;
      r.pair_id = j.at("pair_id").get<std::string>();
      r.left = j.value("left", "");
      r.right = j.value("right", "");
      const auto kind = j.at("gt_kind").get<std::string>();
      if (kind == "planar") {
        r.gt_kind = GroundTruthKind::Planar;
        r.planar = detail::matrix_from_json(j.at("gt"));
      } else if (kind == "landmarks") {
        r.gt_kind = GroundTruthKind::Landmarks;
        r.landmarks_path = j.at("gt").get<std::string>();
      } else if (kind == "pose") {
        r.gt_kind = GroundTruthKind::Pose;
        const json& g = j.at("gt");
        PoseGroundTruth p;
        p.rotation = detail::matrix_from_json(g.at("R"));
        const auto t = g.at("t").get<std::vector<double>>();
        if (t.size() != 3) fail(ErrorCode::ManifestInvalid, "pose t needs 3 entries");
        p.translation = {t[0], t[1], t[2]};
        p.k0 = detail::matrix_from_json(g.at("K0"));
        p.k1 = detail::matrix_from_json(g.at("K1"));
        r.pose = p;
      } else {
        fail(ErrorCode::ManifestInvalid, "unknown gt_kind '" + kind + "'");
      }
      if (j.contains("native_size")) r.native_size = size_from(j.at("native_size"));
      if (j.contains("size0")) r.size0 = size_from(j.at("size0"));
      if (j.contains("size1")) r.size1 = size_from(j.at("size1"));
      return r;
    }));
  }
  if (out.empty()) fail(ErrorCode::ManifestInvalid, path.string() + ": manifest has no pairs");
  return out;
}

std::vector<Correspondence> read_landmark_csv(const std::filesystem::path& path) {
  std::vector<Correspondence> out;
  for (const auto& line : detail::read_lines(path)) {
    if (line.find_first_of("0123456789") == std::string::npos || std::isalpha(static_cast<unsigned char>(line[0])))
      continue;  // header
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        fail(ErrorCode::ManifestInvalid, path.string() + ": bad landmark value '" + cell + "'");
      }
    }
    if (v.size() != 4) fail(ErrorCode::ManifestInvalid, path.string() + ": landmark rows need 4 values");
    out.push_back({{v[0], v[1]}, {v[2], v[3]}, 1.0});
  }
  return out;
}

void write_landmark_csv(const std::filesystem::path& path, std::span<const Correspondence> landmarks) {
  std::string text = "x_src,y_src,x_dst,y_dst\n";
  for (const auto& l : landmarks)
    text += format_double(l.left.x) + "," + format_double(l.left.y) + "," + format_double(l.right.x) + "," +
            format_double(l.right.y) + "\n";
  detail::write_text(path, text);
}

}  // namespace xmf
