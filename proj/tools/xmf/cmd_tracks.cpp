#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <nlohmann/json.hpp>
#include <optional>
#include <regex>

#include "common.hpp"
#include "xmf/formats.hpp"
#include "xmf/parallel.hpp"
#include "xmf/rng.hpp"
#include "xmf/tracks.hpp"

namespace xmf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json provenance_line(const Provenance& p) {
  return {{"type", "provenance"}, {"tool_version", p.tool_version}, {"seed", p.seed}, {"config_hash", p.config_hash}};
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

void check_window(int window) {
  if (window < 1 || window % 2 == 0) fail(ErrorCode::InvalidArgument, "--window must be odd and >= 1");
}

// ---- schedule ----------------------------------------------------------------

struct ScheduleArgs {
  int frames = 0;
  int stride = 4;
  int lookahead = 10;
  std::string out;
};

int run_schedule(const CLI::App& root, const Globals& g, const ScheduleArgs& a) {
  const PairSchedule s = plan_pair_schedule(a.frames, a.stride, a.lookahead);
  std::vector<std::string> lines{provenance_line(make_provenance(root, g)).dump()};
  for (const auto& [i, j] : s.pairs) lines.push_back(json{{"frame_a", i}, {"frame_b", j}}.dump());
  write_lines(a.out, lines);
  std::cout << "frames retained: " << s.retained.size() << ", pairs: " << s.pairs.size() << '\n';
  return kOk;
}

// ---- build -------------------------------------------------------------------

struct BuildArgs {
  std::string matches_dir;
  std::string out;
  std::string anchors_out;
  int window = 7;
  std::string refiner = "identity";
  std::string refiner_cmd;
};

PairMatches load_pair(const fs::path& path) {
  MatchFile mf = read_match_file(path);
  PairMatches p;
  if (mf.header && mf.header->frame0 && mf.header->frame1) {
    p.frame_a = *mf.header->frame0;
    p.frame_b = *mf.header->frame1;
  } else {
    static const std::regex pattern(R"((\d+)_(\d+))");
    std::smatch m;
    const std::string stem = path.stem().string();
    if (!std::regex_search(stem, m, pattern))
      fail(ErrorCode::ManifestInvalid, path.filename().string() + " names no frames (header frame0/frame1 or <a>_<b>)");
    p.frame_a = std::stoi(m[1].str());
    p.frame_b = std::stoi(m[2].str());
  }
  p.matches = std::move(mf.matches);
  return p;
}

int run_build(const CLI::App& root, const Globals& g, const BuildArgs& a) {
  const Log log(g.verbose);
  check_window(a.window);
  RefinerConfig rc;
  rc.kind = refiner_kind_from_string(a.refiner);
  rc.command = a.refiner_cmd;
  if (rc.kind == RefinerKind::External && rc.command.empty())
    fail(ErrorCode::InvalidArgument, "--refiner external needs --refiner-cmd");
  require_dir(a.matches_dir);

  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(a.matches_dir)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".jsonl" || ext == ".xmf")) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorCode::IoFailure, "no match files in " + a.matches_dir);

  std::vector<PairMatches> pairs(files.size());
  parallel_for(files.size(), g.workers, [&](std::size_t i) { pairs[i] = load_pair(files[i]); });

  const AnchorGraph graph = aggregate_matches(pairs, a.window, g.workers);
  auto tracks = build_tracks(graph.anchors, graph.edges);
  if (rc.kind == RefinerKind::External) {
    const char* cache = std::getenv("XMF_CACHE_DIR");
    rc.work_dir = cache && *cache ? fs::path(cache) / "refiner" : fs::temp_directory_path() / "xmf-refiner";
  }
  tracks = refine_tracks(tracks, graph, rc);
  const Provenance prov = make_provenance(root, g);
  write_track_file(a.out, tracks, prov);

  if (!a.anchors_out.empty()) {
    std::vector<std::string> lines{provenance_line(prov).dump()};
    for (std::size_t i = 0; i < graph.anchors.size(); ++i) {
      const Anchor& an = graph.anchors[i];
      lines.push_back(json{{"anchor", i},
                           {"frame", an.frame},
                           {"x", an.point.x},
                           {"y", an.point.y},
                           {"conf", an.confidence},
                           {"claimed", an.claimed.size()}}
                          .dump());
    }
    write_lines(a.anchors_out, lines);
  }
  log.info("observations: ", graph.observations.size(), ", edges: ", graph.edges.size());
  std::cout << "pairs: " << pairs.size() << ", anchors: " << graph.anchors.size() << ", tracks: " << tracks.size()
            << '\n';
  return kOk;
}

// ---- select-pairs ------------------------------------------------------------

struct SelectArgs {
  std::string tracks;
  std::string out;
  std::string preset = "supplementary";
  int min_gap = 20;
  std::size_t min_covis = 300;
  double min_motion = 30.0;
  std::size_t sample = 0;
  double cell = 64.0;
  bool verify = false;
  int width = 0;
  int height = 0;
  double verify_threshold = 2.0;
};

int run_select(const CLI::App& root, const CLI::App& sub, const Globals& g, const SelectArgs& a) {
  const Log log(g.verbose);
  require_file(a.tracks);
  if (a.verify && (a.width < 1 || a.height < 1)) fail(ErrorCode::InvalidArgument, "--verify needs --width and --height");
  PairSelectionConfig cfg = a.preset == "methods" ? PairSelectionConfig::short_gap() : PairSelectionConfig{};
  if (sub.count("--min-gap")) cfg.min_gap = a.min_gap;
  if (sub.count("--min-covis")) cfg.min_covisibility = a.min_covis;
  if (sub.count("--min-motion")) cfg.min_motion = a.min_motion;
  ensure_dir(a.out);

  const auto tracks = read_track_file(a.tracks);
  const auto selected = select_training_pairs(tracks, cfg, g.workers);
  const Provenance prov = make_provenance(root, g);

  std::vector<std::optional<std::string>> lines(selected.size());
  std::atomic<std::size_t> failed{0};
  parallel_for(selected.size(), g.workers, [&](std::size_t i) {
    const TrainingPairRecord& rec = selected[i];
    std::vector<Correspondence> matches = rec.matches;
    try {
      if (a.sample > 0) matches = sample_matches(matches, a.sample, a.cell);
      if (a.verify) {
        RansacConfig rc;
        rc.seed = mix_seed(g.seed, i);
        matches = geometric_verify(matches, {a.width, a.height}, {a.width, a.height}, a.verify_threshold, rc).inliers;
      }
    } catch (const Error& e) {
      ++failed;
      log.warn("pair ", rec.frame_a, "-", rec.frame_b, ": ", e.what());
      return;
    }
    const std::string name = "pair_" + std::to_string(rec.frame_a) + "_" + std::to_string(rec.frame_b) + ".jsonl";
    MatchFileHeader h;
    h.left = std::to_string(rec.frame_a);
    h.right = std::to_string(rec.frame_b);
    h.width0 = h.width1 = a.width;
    h.height0 = h.height1 = a.height;
    h.frame0 = rec.frame_a;
    h.frame1 = rec.frame_b;
    h.provenance = prov;
    write_match_jsonl(fs::path(a.out) / name, h, matches);
    lines[i] = json{{"frame_a", rec.frame_a},
                    {"frame_b", rec.frame_b},
                    {"covisibility", rec.covisibility},
                    {"mean_motion", rec.mean_motion},
                    {"matches", matches.size()},
                    {"matches_path", name}}
                   .dump();
  });

  json head = provenance_line(prov);
  head["min_gap"] = cfg.min_gap;
  head["min_covisibility"] = cfg.min_covisibility;
  head["min_motion"] = cfg.min_motion;
  std::vector<std::string> out{head.dump()};
  for (auto& l : lines)
    if (l) out.push_back(std::move(*l));
  write_lines(fs::path(a.out) / "pairs.jsonl", out);
  std::cout << "tracks: " << tracks.size() << ", pairs: " << out.size() - 1 << " selected, " << failed
            << " failed verification\n";
  return kOk;
}

}  // namespace

void add_tracks(CLI::App& app, const Globals& globals, int& exit_code) {
  CLI::App* tracks = app.add_subcommand("tracks", "Pseudo ground truth from video matches");
  tracks->require_subcommand(1);

  auto sa = std::make_shared<ScheduleArgs>();
  CLI::App* sched = tracks->add_subcommand("schedule", "Frame pairs to match");
  sched->add_option("--frames", sa->frames, "Number of video frames")->required();
  sched->add_option("--stride", sa->stride, "Keep every n-th frame");
  sched->add_option("--lookahead", sa->lookahead, "Pair each kept frame with the next n kept frames");
  sched->add_option("--out", sa->out, "Output JSON Lines file")->required();
  sched->callback([&app, &globals, &exit_code, sa] { exit_code = run_schedule(app, globals, *sa); });

  auto ba = std::make_shared<BuildArgs>();
  CLI::App* build = tracks->add_subcommand("build", "Merge pairwise matches into tracks");
  build->add_option("--matches-dir", ba->matches_dir, "Directory of pairwise match files")->required();
  build->add_option("--out", ba->out, "Output track file")->required();
  build->add_option("--anchors-out", ba->anchors_out, "Also write the merged anchors");
  build->add_option("--window", ba->window, "NMS window (odd)");
  build->add_option("--refiner", ba->refiner, "identity | local-centroid | external");
  build->add_option("--refiner-cmd", ba->refiner_cmd, "External refiner: <cmd> <in.jsonl> <out.jsonl>");
  build->callback([&app, &globals, &exit_code, ba] { exit_code = run_build(app, globals, *ba); });

  auto pa = std::make_shared<SelectArgs>();
  CLI::App* select = tracks->add_subcommand("select-pairs", "Pick distant, well-covered frame pairs");
  select->add_option("--tracks", pa->tracks, "Track file")->required();
  select->add_option("--out", pa->out, "Output directory")->required();
  select->add_option("--preset", pa->preset, "supplementary (gap 20, motion 30) | methods (gap 10)")
      ->check(CLI::IsMember({"supplementary", "methods"}));
  select->add_option("--min-gap", pa->min_gap, "Minimum frame distance");
  select->add_option("--min-covis", pa->min_covis, "Minimum co-visible tracks");
  select->add_option("--min-motion", pa->min_motion, "Minimum mean motion in pixels");
  select->add_option("--sample", pa->sample, "Keep at most n spatially balanced matches per pair (0: all)");
  select->add_option("--cell", pa->cell, "Sampling bin size in pixels");
  select->add_flag("--verify", pa->verify, "Fundamental-matrix RANSAC check");
  select->add_option("--verify-threshold", pa->verify_threshold, "Sampson threshold in pixels");
  select->add_option("--width", pa->width, "Frame width");
  select->add_option("--height", pa->height, "Frame height");
  select->callback([&app, &globals, &exit_code, pa, select] { exit_code = run_select(app, *select, globals, *pa); });
}

}  // namespace xmf::cli
