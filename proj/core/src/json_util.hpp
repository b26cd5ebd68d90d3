#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "xmf/error.hpp"
#include "xmf/provenance.hpp"

namespace xmf::detail {

using nlohmann::json;

inline json matrix_to_json(const Eigen::Matrix3d& m) {
  json arr = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) arr.push_back(m(r, c));
  return arr;
}

inline Eigen::Matrix3d matrix_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 9) fail(ErrorCode::ManifestInvalid, "expected 9 matrix entries");
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = v[r * 3 + c];
  return m;
}

inline json provenance_to_json(const Provenance& p) {
  return json{{"tool_version", p.tool_version}, {"seed", p.seed}, {"config_hash", p.config_hash}};
}

inline Provenance provenance_from_json(const json& j) {
  Provenance p;
  p.tool_version = j.at("tool_version").get<std::string>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.config_hash = j.at("config_hash").get<std::string>();
  return p;
}

// Reads non-empty lines of a text file.
std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace xmf::detail
