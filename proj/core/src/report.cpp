#include "xmf/report.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"
#include "xmf/error.hpp"
#include "xmf/formats.hpp"

namespace xmf {

using detail::json;

namespace {

json rates(const std::vector<double>& thresholds, const std::vector<double>& values) {
  json out = json::array();
  for (std::size_t i = 0; i < thresholds.size(); ++i) out.push_back({{"threshold", thresholds[i]}, {"value", values[i]}});
  return out;
}

ErrorKind error_kind_from_string(const std::string& s) {
  if (s == "warp_px") return ErrorKind::WarpPx;
  if (s == "rtre") return ErrorKind::Rtre;
  if (s == "pose_deg") return ErrorKind::PoseDeg;
  fail(ErrorCode::ManifestInvalid, "unknown error kind '" + s + "'");
}

}  // namespace

std::string report_json(const MetricReport& r) {
  json j;
  j["schema"] = kReportSchema;
  j["protocol"] = r.protocol;
  j["error_kind"] = to_string(r.kind);
  j["pair_count"] = r.samples.size();
  j["failed_count"] = r.failed;
  j["thresholds"] = r.thresholds;
  j["success_rate"] = rates(r.thresholds, r.success_rates);
  j["auc"] = rates(r.thresholds, r.aucs);
  if (r.rtre) {
    j["rtre"] = {{"average_artre", r.rtre->average_artre},
                 {"median_artre", r.rtre->median_artre},
                 {"average_mrtre", r.rtre->average_mrtre},
                 {"median_mrtre", r.rtre->median_mrtre}};
  }
  json pairs = json::array();
  for (const auto& s : r.samples) {
    json p{{"pair_id", s.pair_id}, {"failed", s.failed}, {"matches", s.matches}, {"inliers", s.inliers}};
    p["error"] = s.failed ? json(nullptr) : json(s.error);
    if (s.failed) p["reason"] = s.reason;
    if (s.rtre) p["rtre"] = {{"artre", s.rtre->artre}, {"mrtre", s.rtre->mrtre}};
    pairs.push_back(std::move(p));
  }
  j["pairs"] = std::move(pairs);
  json config = json::object();
  for (const auto& [k, v] : r.config) config[k] = v;
  j["config"] = std::move(config);
  if (r.provenance) j["provenance"] = detail::provenance_to_json(*r.provenance);
  return j.dump(2) + "\n";
}

std::string report_curve_csv(const MetricReport& r) {
  std::string out = "threshold,success_rate\n";
  for (const auto& [t, sr] : r.curve) out += format_double(t) + "," + format_double(sr) + "\n";
  return out;
}

void emit_report(const MetricReport& report, const std::filesystem::path& json_path,
                 const std::filesystem::path& csv_path) {
  detail::write_text(json_path, report_json(report));
  detail::write_text(csv_path, report_curve_csv(report));
}

MetricReport read_report_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
    if (j.at("schema").get<std::string>() != kReportSchema) fail(ErrorCode::ManifestInvalid, "unsupported report schema");
    const ErrorKind kind = error_kind_from_string(j.at("error_kind").get<std::string>());
    std::vector<ErrorSample> samples;
    for (const auto& p : j.at("pairs")) {
      ErrorSample s;
      s.pair_id = p.at("pair_id").get<std::string>();
      s.kind = kind;
      s.failed = p.at("failed").get<bool>();
      s.matches = p.at("matches").get<std::size_t>();
      s.inliers = p.at("inliers").get<std::size_t>();
      if (!s.failed) s.error = p.at("error").get<double>();
      if (p.contains("reason")) s.reason = p["reason"].get<std::string>();
      if (p.contains("rtre")) s.rtre = RtreResult{p["rtre"].at("artre").get<double>(), p["rtre"].at("mrtre").get<double>()};
      samples.push_back(std::move(s));
    }
    MetricReport r = summarize(j.at("protocol").get<std::string>(), kind, std::move(samples),
                               j.at("thresholds").get<std::vector<double>>());
    for (const auto& [k, v] : j.at("config").items()) r.config.emplace_back(k, v.get<std::string>());
    if (j.contains("provenance")) r.provenance = detail::provenance_from_json(j["provenance"]);
    return r;
  } catch (const json::exception& e) {
    fail(ErrorCode::ManifestInvalid, std::string("malformed report: ") + e.what());
  }
}

}  // namespace xmf
