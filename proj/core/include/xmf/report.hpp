#pragma once

#include <filesystem>
#include <string>

#include "xmf/metrics.hpp"

namespace xmf {

inline constexpr const char* kReportSchema = "xmr-1";

std::string report_json(const MetricReport& report);
// "threshold,success_rate" header and one row per curve sample.
std::string report_curve_csv(const MetricReport& report);

// Writes both files; throws IoFailure.
void emit_report(const MetricReport& report, const std::filesystem::path& json_path,
                 const std::filesystem::path& csv_path);

// Parses a report written by report_json (the curve is rebuilt).
MetricReport read_report_json(const std::filesystem::path& path);

}  // namespace xmf
