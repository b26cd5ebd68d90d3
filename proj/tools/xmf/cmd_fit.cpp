#include <memory>

#include "common.hpp"
#include "xmf/bspline.hpp"
#include "xmf/depth_io.hpp"
#include "xmf/formats.hpp"
#include "xmf/ransac.hpp"

namespace xmf::cli {

namespace {

struct FitArgs {
  std::string matches;
  std::string model = "homography";
  std::string out;
  std::string camera0;
  std::string camera1;
  double threshold = 0.0;
  int iterations = 1000;
  double confidence = 0.99999;
  int grid_x = 8;
  int grid_y = 8;
  double lr = 0.1;
  int bspline_iters = 2000;
  int width = 0;
  int height = 0;
};

int run_fit(const CLI::App& root, const Globals& g, const FitArgs& a) {
  const Log log(g.verbose);
  require_file(a.matches);
  const bool bspline = a.model == "bspline";
  const ModelKind kind = bspline ? ModelKind::Affine : model_kind_from_string(a.model);
  RansacConfig rc;
  rc.max_iterations = a.iterations;
  rc.confidence = a.confidence;
  rc.inlier_threshold = a.threshold;
  rc.seed = g.seed;
  rc.validate();

  std::optional<StereoCameras> cams;
  if (kind == ModelKind::Essential) {
    if (a.camera0.empty() || a.camera1.empty()) fail(ErrorCode::InvalidArgument, "essential needs --camera0 and --camera1");
    cams = StereoCameras{read_camera_json(a.camera0).intrinsics, read_camera_json(a.camera1).intrinsics};
  }
  const MatchFile mf = read_match_file(a.matches);
  const FitResult fit = ransac(mf.matches, kind, rc, cams);

  ModelOutput m;
  m.kind = a.model;
  m.inliers = fit.inliers;
  m.provenance = make_provenance(root, g);
  if (fit.transform) m.matrix = fit.transform->matrix();
  if (kind == ModelKind::Fundamental || kind == ModelKind::Essential) m.matrix = fit.matrix;
  if (fit.pose) m.pose = fit.pose;
  if (bspline) {
    int w = a.width;
    int h = a.height;
    if (w < 1 && mf.header) w = mf.header->width0;
    if (h < 1 && mf.header) h = mf.header->height0;
    if (w < 1 || h < 1) fail(ErrorCode::InvalidArgument, "bspline needs --width/--height or a match file header");
    std::vector<Correspondence> inl;
    for (const auto i : fit.inliers) inl.push_back(mf.matches[i]);
    BSplineFitConfig bc;
    bc.grid_x = a.grid_x;
    bc.grid_y = a.grid_y;
    bc.learning_rate = a.lr;
    bc.iterations = a.bspline_iters;
    const BSplineFit bf = fit_bspline_sgd(inl, *fit.transform, w, h, bc);
    m.bspline = bf.field;
    m.bspline_initial = fit.transform->matrix();
    m.matrix.reset();
    log.info("bspline mean residual ", bf.initial_mean_distance, " -> ", bf.final_mean_distance);
  }
  write_model_json(a.out, m);
  std::cout << "model: " << a.model << ", inliers: " << fit.inliers.size() << "/" << mf.matches.size()
            << ", iterations: " << fit.iterations_run << '\n';
  return kOk;
}

}  // namespace

void add_fit(CLI::App& app, const Globals& globals, int& exit_code) {
  auto fa = std::make_shared<FitArgs>();
  CLI::App* fit = app.add_subcommand("fit", "Robustly fit a model to a match file");
  fit->add_option("--matches", fa->matches, "Match file (.jsonl or .xmf)")->required();
  fit->add_option("--model", fa->model, "affine | homography | fundamental | essential | bspline")
      ->check(CLI::IsMember({"affine", "homography", "fundamental", "essential", "bspline"}));
  fit->add_option("--out", fa->out, "Output model JSON")->required();
  fit->add_option("--camera0", fa->camera0, "Left camera JSON (essential)");
  fit->add_option("--camera1", fa->camera1, "Right camera JSON (essential)");
  fit->add_option("--threshold", fa->threshold, "Inlier threshold (0: model default)");
  fit->add_option("--iterations", fa->iterations, "RANSAC iteration cap");
  fit->add_option("--confidence", fa->confidence, "RANSAC confidence");
  fit->add_option("--grid-x", fa->grid_x, "B-spline controls along x");
  fit->add_option("--grid-y", fa->grid_y, "B-spline controls along y");
  fit->add_option("--lr", fa->lr, "B-spline learning rate");
  fit->add_option("--bspline-iters", fa->bspline_iters, "B-spline descent steps");
  fit->add_option("--width", fa->width, "Source image width (bspline)");
  fit->add_option("--height", fa->height, "Source image height (bspline)");
  fit->callback([&app, &globals, &exit_code, fa] { exit_code = run_fit(app, globals, *fa); });
}

}  // namespace xmf::cli
