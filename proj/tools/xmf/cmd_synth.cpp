#include <algorithm>
#include <atomic>
#include <fstream>
#include <memory>
#include <optional>

#include "common.hpp"
#include "xmf/depth_io.hpp"
#include "xmf/formats.hpp"
#include "xmf/parallel.hpp"
#include "xmf/rng.hpp"
#include "xmf/synthesis.hpp"

namespace xmf::cli {

namespace fs = std::filesystem;

namespace {

std::vector<fs::path> list_files(const fs::path& dir, const std::string& suffix) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    const std::string name = e.path().filename().string();
    if (e.is_regular_file() && name.size() > suffix.size() && name.ends_with(suffix)) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<fs::path> find_depth(const fs::path& dir, const std::string& stem) {
  for (const char* suffix : {".depth.pfm", ".depth.png", ".pfm"}) {
    const auto p = dir / (stem + suffix);
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

void write_manifest(const fs::path& path, const std::vector<std::optional<PairManifestRecord>>& records) {
  std::string text;
  for (const auto& r : records)
    if (r) text += to_jsonl(*r) + "\n";
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::IoFailure, "write failed: " + path.string());
}

void write_matches(const fs::path& path, const MatchFileHeader& header, std::span<const Correspondence> matches) {
  if (path.extension() == ".xmf")
    write_match_binary(path, matches);
  else
    write_match_jsonl(path, header, matches);
}

// ---- warp-pairs ---------------------------------------------------------------

struct WarpPairsArgs {
  std::string input;
  std::string out;
  std::string preset = "train";
  int count = 1;
  int grid_step = 8;
  std::string sky_mask_dir;
};

int run_warp_pairs(const CLI::App& root, const Globals& g, const WarpPairsArgs& a) {
  const Log log(g.verbose);
  require_dir(a.input);
  if (!a.sky_mask_dir.empty()) require_dir(a.sky_mask_dir);
  ensure_dir(a.out);
  const auto images = list_files(a.input, ".png");
  if (images.empty()) fail(ErrorCode::IoFailure, "no PNG images in " + a.input);
  const Provenance prov = make_provenance(root, g);

  const std::size_t total = images.size() * static_cast<std::size_t>(a.count);
  std::vector<std::optional<PairManifestRecord>> records(total);
  std::atomic<std::size_t> failed{0};
  parallel_for(total, g.workers, [&](std::size_t i) {
    const fs::path& src = images[i / a.count];
    const std::string stem = src.stem().string() + "_" + std::to_string(i % a.count);
    const std::uint64_t seed = mix_seed(g.seed, i);
    try {
      const Image image = read_png(src);
      WarpPairOptions opts;
      opts.grid_step = a.grid_step;
      if (!a.sky_mask_dir.empty()) {
        const auto depth = find_depth(a.sky_mask_dir, src.stem().string());
        if (!depth) fail(ErrorCode::MissingAuxiliary, "no depth map for " + src.filename().string());
        opts.supervision_depth = read_depth(*depth);
      }
      SynthesizedPair pair;
      if (a.preset == "train" || a.preset == "neutral") {
        const auto ranges = a.preset == "train" ? HomographySampleRanges::training() : HomographySampleRanges::neutral();
        pair = make_warp_pair(image, ranges, seed, opts);
      } else {
        const auto preset = a.preset == "medical" ? EvalWarpPreset::medical() : EvalWarpPreset::map();
        pair = make_warp_pair_with(image, sample_eval_transform(preset, image.width(), image.height(), seed).transform, opts);
      }
      const fs::path right = fs::path(a.out) / (stem + "_right.png");
      const fs::path mask = fs::path(a.out) / (stem + "_mask.png");
      write_png(right, pair.right);
      write_mask_png(mask, pair.valid_mask);
      PairManifestRecord r;
      r.left_path = relative_to(src, a.out);
      r.right_path = relative_to(right, a.out);
      r.homography = pair.transform->matrix();
      if (pair.draw) r.composition = kHomographyComposition;
      r.mask_path = relative_to(mask, a.out);
      r.seed = seed;
      r.source = src.filename().string();
      r.provenance = prov;
      records[i] = std::move(r);
      log.info("pair ", stem, ": ", pair.matches.size(), " supervised points");
    } catch (const Error& e) {
      ++failed;
      log.warn(stem, ": ", e.what());
    }
  });
  write_manifest(fs::path(a.out) / "manifest.jsonl", records);
  std::cout << "pairs: " << total - failed << " written, " << failed << " failed\n";
  return kOk;
}

// ---- depth-pairs --------------------------------------------------------------

struct DepthPairsArgs {
  std::string scene;
  std::string out;
  int grid_step = 8;
  double overlap_min = 0.1;
  double overlap_max = 0.7;
  int max_gap = 0;
  std::string format = "jsonl";
};

int run_depth_pairs(const CLI::App& root, const Globals& g, const DepthPairsArgs& a) {
  const Log log(g.verbose);
  require_dir(a.scene);
  if (!(a.overlap_min >= 0.0 && a.overlap_min <= a.overlap_max && a.overlap_max <= 1.0))
    fail(ErrorCode::InvalidArgument, "overlap interval must satisfy 0 <= min <= max <= 1");
  ensure_dir(a.out);
  const auto cameras = list_files(a.scene, ".camera.json");
  if (cameras.size() < 2) fail(ErrorCode::IoFailure, "scene needs at least two *.camera.json views");
  const Provenance prov = make_provenance(root, g);

  std::vector<std::string> ids;
  for (const auto& c : cameras) {
    const std::string name = c.filename().string();
    ids.push_back(name.substr(0, name.size() - std::string(".camera.json").size()));
  }
  std::vector<PosedView> views(ids.size());
  parallel_for(ids.size(), g.workers, [&](std::size_t i) {
    const fs::path dir(a.scene);
    const CameraFile cam = read_camera_json(dir / (ids[i] + ".camera.json"));
    const auto depth = find_depth(dir, ids[i]);
    if (!depth) fail(ErrorCode::IoFailure, "no depth map for view " + ids[i]);
    views[i].id = ids[i];
    views[i].camera = cam.intrinsics;
    views[i].pose = cam.pose;
    views[i].depth = read_depth(*depth);
    views[i].image = read_png(dir / (ids[i] + ".png"));
  });

  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < views.size(); ++i)
    for (std::size_t j = i + 1; j < views.size(); ++j)
      if (a.max_gap <= 0 || j - i <= static_cast<std::size_t>(a.max_gap)) candidates.emplace_back(i, j);

  const std::string ext = a.format == "xmf" ? ".xmf" : ".jsonl";
  std::vector<std::optional<PairManifestRecord>> records(candidates.size());
  std::atomic<std::size_t> rejected{0};
  std::atomic<std::size_t> failed{0};
  parallel_for(candidates.size(), g.workers, [&](std::size_t k) {
    const auto [i, j] = candidates[k];
    const std::string name = ids[i] + "__" + ids[j];
    try {
      const DepthPairOutcome o = make_depth_pair(views[i], views[j], a.grid_step, {a.overlap_min, a.overlap_max});
      log.info(name, ": overlap ", o.overlap);
      if (o.status != DepthPairStatus::Accepted) {
        ++rejected;
        return;
      }
      const fs::path dir(a.scene);
      const fs::path matches = fs::path(a.out) / (name + ext);
      const fs::path mask = fs::path(a.out) / (name + "_mask.png");
      MatchFileHeader h;
      h.left = ids[i] + ".png";
      h.right = ids[j] + ".png";
      h.width0 = views[i].camera.width;
      h.height0 = views[i].camera.height;
      h.width1 = views[j].camera.width;
      h.height1 = views[j].camera.height;
      h.provenance = prov;
      write_matches(matches, h, o.pair->matches);
      write_mask_png(mask, o.pair->valid_mask);
      PairManifestRecord r;
      r.left_path = relative_to(dir / h.left, a.out);
      r.right_path = relative_to(dir / h.right, a.out);
      r.matches_path = relative_to(matches, a.out);
      r.mask_path = relative_to(mask, a.out);
      r.seed = mix_seed(g.seed, k);
      r.source = name;
      r.provenance = prov;
      records[k] = std::move(r);
    } catch (const Error& e) {
      ++failed;
      log.warn(name, ": ", e.what());
    }
  });
  write_manifest(fs::path(a.out) / "manifest.jsonl", records);
  std::cout << "pairs: " << candidates.size() - rejected - failed << " accepted, " << rejected
            << " outside overlap interval, " << failed << " failed\n";
  return kOk;
}

// ---- modality -----------------------------------------------------------------

struct ModalityArgs {
  std::string manifest;
  std::string out;
  std::string mode;
  std::string side = "right";
  std::string aux_dir;
  std::string id;
};

int run_modality(const CLI::App& root, const Globals& g, const ModalityArgs& a) {
  const Log log(g.verbose);
  require_file(a.manifest);
  const ModalityMode mode = modality_mode_from_string(a.mode);
  if (a.side != "left" && a.side != "right") fail(ErrorCode::InvalidArgument, "--side must be left or right");
  const Side side = a.side == "left" ? Side::Left : Side::Right;
  const bool needs_aux = mode == ModalityMode::DepthSubstitute || mode == ModalityMode::ExternalFile;
  if (needs_aux && a.aux_dir.empty()) fail(ErrorCode::InvalidArgument, "--aux-dir is required for this mode");
  if (needs_aux) require_dir(a.aux_dir);
  ensure_dir(a.out);
  const fs::path base = fs::path(a.manifest).parent_path();
  const auto input = read_pair_manifest(a.manifest);
  const Provenance prov = make_provenance(root, g);
  const std::string tag = a.id.empty() ? to_string(mode) : a.id;

  std::vector<std::optional<PairManifestRecord>> records(input.size());
  std::atomic<std::size_t> failed{0};
  parallel_for(input.size(), g.workers, [&](std::size_t i) {
    const PairManifestRecord& in = input[i];
    try {
      SynthesizedPair pair;
      const fs::path left = resolve(base, in.left_path);
      const fs::path right = resolve(base, in.right_path);
      pair.left = read_png(left);
      pair.right = read_png(right);
      if (in.mask_path) pair.valid_mask = read_mask_png(resolve(base, *in.mask_path));
      const fs::path& target = side == Side::Left ? left : right;

      ModalityGenerator gen;
      gen.id = tag;
      gen.mode = mode;
      if (mode == ModalityMode::DepthSubstitute) {
        if (const auto d = find_depth(a.aux_dir, target.stem().string())) gen.depth = read_depth(*d);
      } else if (mode == ModalityMode::ExternalFile) {
        const fs::path ext = fs::path(a.aux_dir) / target.filename();
        if (fs::is_regular_file(ext)) gen.external = read_png(ext);
      }
      const SynthesizedPair outp = apply_modality(pair, gen, side);

      PairManifestRecord r = in;
      r.left_path = relative_to(left, a.out);
      r.right_path = relative_to(right, a.out);
      if (in.matches_path) r.matches_path = relative_to(resolve(base, *in.matches_path), a.out);
      if (in.mask_path) r.mask_path = relative_to(resolve(base, *in.mask_path), a.out);
      const std::string stem = std::to_string(i) + "_" + target.stem().string() + "_" + tag;
      const fs::path written = fs::path(a.out) / (stem + ".png");
      write_png(written, side == Side::Left ? outp.left : outp.right);
      (side == Side::Left ? r.left_path : r.right_path) = relative_to(written, a.out);
      (side == Side::Left ? r.left_modality : r.right_modality) = tag;
      if (side == Side::Left && mode == ModalityMode::DepthSubstitute) {
        const fs::path mask = fs::path(a.out) / (stem + "_mask.png");
        write_mask_png(mask, outp.valid_mask);
        r.mask_path = relative_to(mask, a.out);
      }
      r.provenance = prov;
      records[i] = std::move(r);
    } catch (const Error& e) {
      ++failed;
      log.warn("record ", i, ": ", e.what());
    }
  });
  write_manifest(fs::path(a.out) / "manifest.jsonl", records);
  std::cout << "pairs: " << input.size() - failed << " written, " << failed << " failed\n";
  return kOk;
}

}  // namespace

void add_synth(CLI::App& app, const Globals& globals, int& exit_code) {
  CLI::App* synth = app.add_subcommand("synth", "Generate supervised training pairs");
  synth->require_subcommand(1);

  auto wp = std::make_shared<WarpPairsArgs>();
  CLI::App* warp = synth->add_subcommand("warp-pairs", "Single-image homography pairs");
  warp->add_option("--input", wp->input, "Directory of PNG images")->required();
  warp->add_option("--out", wp->out, "Output directory")->required();
  warp->add_option("--preset", wp->preset, "Sampling ranges")
      ->check(CLI::IsMember({"train", "neutral", "medical", "map"}));
  warp->add_option("--count", wp->count, "Pairs per image")->check(CLI::PositiveNumber);
  warp->add_option("--grid-step", wp->grid_step, "Supervision lattice step in pixels")->check(CLI::PositiveNumber);
  warp->add_option("--sky-mask-dir", wp->sky_mask_dir, "Depth maps restricting supervision to depth > 0");
  warp->callback([&app, &globals, &exit_code, wp] { exit_code = run_warp_pairs(app, globals, *wp); });

  auto dp = std::make_shared<DepthPairsArgs>();
  CLI::App* depth = synth->add_subcommand("depth-pairs", "Pairs from posed views with depth");
  depth->add_option("--scene", dp->scene, "Directory of <id>.png, <id>.camera.json, <id>.depth.{pfm,png}")->required();
  depth->add_option("--out", dp->out, "Output directory")->required();
  depth->add_option("--grid-step", dp->grid_step, "Grid step in pixels")->check(CLI::PositiveNumber);
  depth->add_option("--overlap-min", dp->overlap_min, "Lower overlap bound");
  depth->add_option("--overlap-max", dp->overlap_max, "Upper overlap bound");
  depth->add_option("--max-gap", dp->max_gap, "Only pair views at most this far apart (0: all)");
  depth->add_option("--format", dp->format, "Match file format")->check(CLI::IsMember({"jsonl", "xmf"}));
  depth->callback([&app, &globals, &exit_code, dp] { exit_code = run_depth_pairs(app, globals, *dp); });

  auto mp = std::make_shared<ModalityArgs>();
  CLI::App* mod = synth->add_subcommand("modality", "Substitute one side of existing pairs");
  mod->add_option("--manifest", mp->manifest, "Input pair manifest")->required();
  mod->add_option("--out", mp->out, "Output directory")->required();
  mod->add_option("--mode", mp->mode, "invert | remap | depth | external")->required();
  mod->add_option("--side", mp->side, "left | right");
  mod->add_option("--aux-dir", mp->aux_dir, "Aligned depth maps or external images");
  mod->add_option("--id", mp->id, "Modality tag written to the manifest");
  mod->callback([&app, &globals, &exit_code, mp] { exit_code = run_modality(app, globals, *mp); });
}

}  // namespace xmf::cli
