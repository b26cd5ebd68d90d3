#include <memory>

#include "common.hpp"
#include "xmf/formats.hpp"
#include "xmf/protocol.hpp"
#include "xmf/report.hpp"

namespace xmf::cli {

namespace fs = std::filesystem;

namespace {

struct EvalArgs {
  std::string manifest;
  std::string predictions;
  std::string protocol;
  std::vector<double> thresholds;
  std::string out;
  int iterations = 1000;
  double confidence = 0.99999;
  double inlier_threshold = 0.0;
};

struct ReportArgs {
  std::string input;
  std::string out;
};

void print_summary(const MetricReport& r) {
  std::cout << "protocol: " << r.protocol << ", pairs: " << r.samples.size() << ", failed: " << r.failed << '\n';
  for (std::size_t i = 0; i < r.thresholds.size(); ++i) {
    const std::string t = format_double(r.thresholds[i]);
    std::cout << "SR@" << t << ": " << format_double(r.success_rates[i]) << "  AUC@" << t << ": "
              << format_double(r.aucs[i]) << '\n';
  }
  if (r.rtre) {
    std::cout << "average ArTRE: " << format_double(r.rtre->average_artre)
              << "  median ArTRE: " << format_double(r.rtre->median_artre)
              << "  average MrTRE: " << format_double(r.rtre->average_mrtre)
              << "  median MrTRE: " << format_double(r.rtre->median_mrtre) << '\n';
  }
}

int run_eval(const CLI::App& root, const Globals& g, const EvalArgs& a) {
  const ProtocolKind protocol = protocol_from_string(a.protocol);
  std::vector<double> thresholds = a.thresholds;
  if (thresholds.empty()) {
    thresholds = protocol == ProtocolKind::RtreBspline ? std::vector<double>{0.01, 0.02, 0.05}
                                                       : std::vector<double>{5.0, 10.0, 20.0};
  }
  require_file(a.manifest);
  require_dir(a.predictions);
  ensure_dir(a.out);

  ProtocolConfig pc;
  pc.ransac.max_iterations = a.iterations;
  pc.ransac.confidence = a.confidence;
  pc.ransac.inlier_threshold = a.inlier_threshold;
  pc.ransac.validate();
  pc.seed = g.seed;
  pc.workers = g.workers;

  const auto manifest = read_eval_manifest(a.manifest);
  MetricReport report =
      run_protocol(manifest, fs::path(a.manifest).parent_path(), a.predictions, protocol, thresholds, pc);
  report.config = {{"protocol", a.protocol},
                   {"ransac_iterations", std::to_string(a.iterations)},
                   {"ransac_confidence", format_double(a.confidence)},
                   {"inlier_threshold", format_double(a.inlier_threshold)},
                   {"longest_edge", std::to_string(kEvalLongestEdge)}};
  report.provenance = make_provenance(root, g);
  emit_report(report, fs::path(a.out) / "report.json", fs::path(a.out) / "curve.csv");
  print_summary(report);
  return report.failed == report.samples.size() ? kAllFailed : kOk;
}

int run_report(const Globals&, const ReportArgs& a) {
  require_file(a.input);
  const MetricReport r = read_report_json(a.input);
  if (!a.out.empty()) {
    ensure_dir(a.out);
    emit_report(r, fs::path(a.out) / "report.json", fs::path(a.out) / "curve.csv");
  }
  print_summary(r);
  return kOk;
}

}  // namespace

void add_eval(CLI::App& app, const Globals& globals, int& exit_code) {
  auto ea = std::make_shared<EvalArgs>();
  CLI::App* eval = app.add_subcommand("eval", "Run an evaluation protocol over predicted matches");
  eval->add_option("--manifest", ea->manifest, "Evaluation manifest (JSON Lines)")->required();
  eval->add_option("--predictions", ea->predictions, "Directory of <pair_id>.jsonl|.xmf match files")->required();
  eval->add_option("--protocol", ea->protocol, "warp_affine | warp_homography | rtre_bspline | pose_essential")
      ->required();
  eval->add_option("--thresholds", ea->thresholds, "Comma-separated thresholds")->delimiter(',');
  eval->add_option("--out", ea->out, "Output directory for report.json and curve.csv")->required();
  eval->add_option("--iterations", ea->iterations, "RANSAC iteration cap");
  eval->add_option("--confidence", ea->confidence, "RANSAC confidence");
  eval->add_option("--inlier-threshold", ea->inlier_threshold, "RANSAC threshold (0: model default)");
  eval->callback([&app, &globals, &exit_code, ea] { exit_code = run_eval(app, globals, *ea); });

  auto ra = std::make_shared<ReportArgs>();
  CLI::App* report = app.add_subcommand("report", "Summarize or re-emit a report");
  report->add_option("--input", ra->input, "report.json")->required();
  report->add_option("--out", ra->out, "Re-emit report.json and curve.csv here");
  report->callback([&globals, &exit_code, ra] { exit_code = run_report(globals, *ra); });
}

}  // namespace xmf::cli
