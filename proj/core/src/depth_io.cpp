#include "xmf/depth_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "xmf/error.hpp"

namespace xmf {

using nlohmann::json;

namespace {

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorCode::IoFailure, path.string() + ": " + e.what());
  }
}

}  // namespace

CameraFile read_camera_json(const std::filesystem::path& path) {
  const json j = load_json(path);
  CameraFile cam;
  try {
    cam.intrinsics.fx = j.at("fx").get<double>();
    cam.intrinsics.fy = j.at("fy").get<double>();
    cam.intrinsics.cx = j.at("cx").get<double>();
    cam.intrinsics.cy = j.at("cy").get<double>();
    cam.intrinsics.width = j.at("width").get<int>();
    cam.intrinsics.height = j.at("height").get<int>();
    const auto pose = j.at("pose").get<std::vector<double>>();
    if (pose.size() != 16) fail(ErrorCode::IoFailure, path.string() + ": pose needs 16 numbers");
    Eigen::Matrix4d m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = pose[r * 4 + c];
    cam.pose = RigidPose::from_matrix(m);
  } catch (const json::exception& e) {
    fail(ErrorCode::IoFailure, path.string() + ": " + e.what());
  }
  cam.intrinsics.validate();
  return cam;
}

void write_camera_json(const std::filesystem::path& path, const CameraFile& camera) {
  json j;
  j["fx"] = camera.intrinsics.fx;
  j["fy"] = camera.intrinsics.fy;
  j["cx"] = camera.intrinsics.cx;
  j["cy"] = camera.intrinsics.cy;
  j["width"] = camera.intrinsics.width;
  j["height"] = camera.intrinsics.height;
  const Eigen::Matrix4d m = camera.pose.matrix();
  std::vector<double> pose;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) pose.push_back(m(r, c));
  j["pose"] = pose;
  std::ofstream out(path);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

DepthMap read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  std::string magic;
  int width = 0;
  int height = 0;
  double scale = 0.0;
  in >> magic >> width >> height >> scale;
  if (magic != "Pf") fail(ErrorCode::IoFailure, path.string() + ": only single-channel 'Pf' is supported");
  if (!in || width <= 0 || height <= 0 || scale == 0.0) fail(ErrorCode::IoFailure, path.string() + ": bad PFM header");
  in.get();  // single whitespace byte before the raster
  const bool little = scale < 0.0;
  const std::size_t count = static_cast<std::size_t>(width) * height;
  std::vector<std::uint32_t> raw(count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(count * 4));
  if (in.gcount() != static_cast<std::streamsize>(count * 4)) fail(ErrorCode::IoFailure, path.string() + ": truncated");
  const bool swap = little != (std::endian::native == std::endian::little);
  std::vector<double> values(count);
  for (int row = 0; row < height; ++row) {
    const int y = height - 1 - row;
    for (int x = 0; x < width; ++x) {
      std::uint32_t bits = raw[static_cast<std::size_t>(row) * width + x];
      if (swap) bits = __builtin_bswap32(bits);
      float v;
      std::memcpy(&v, &bits, 4);
      // Non-finite samples (common as "no data" markers) become invalid.
      values[static_cast<std::size_t>(y) * width + x] = std::isfinite(v) ? v : 0.0;
    }
  }
  return DepthMap(width, height, std::move(values));
}

void write_pfm(const std::filesystem::path& path, const DepthMap& depth) {
  static_assert(std::endian::native == std::endian::little, "PFM writer assumes a little-endian host");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot write " + path.string());
  out << "Pf\n" << depth.width() << ' ' << depth.height() << "\n-1.0\n";
  std::vector<float> row(depth.width());
  for (int y = depth.height() - 1; y >= 0; --y) {
    for (int x = 0; x < depth.width(); ++x) row[x] = static_cast<float>(depth.at(x, y));
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size() * 4));
  }
  if (!out) fail(ErrorCode::IoFailure, "write failed for " + path.string());
}

std::filesystem::path depth_sidecar_path(const std::filesystem::path& png_path) {
  std::filesystem::path p = png_path;
  p.replace_extension(".json");
  return p;
}

DepthMap read_depth_png(const std::filesystem::path& path) {
  const Gray16 raw = read_png16(path);
  const json sidecar = load_json(depth_sidecar_path(path));
  double scale = 0.0;
  try {
    scale = sidecar.at("scale").get<double>();
  } catch (const json::exception& e) {
    fail(ErrorCode::IoFailure, depth_sidecar_path(path).string() + ": " + e.what());
  }
  if (!(scale > 0.0)) fail(ErrorCode::IoFailure, "depth sidecar scale must be positive");
  std::vector<double> values(raw.values.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = raw.values[i] * scale;
  return DepthMap(raw.width, raw.height, std::move(values));
}

void write_depth_png(const std::filesystem::path& path, const DepthMap& depth, double scale) {
  if (!(scale > 0.0)) fail(ErrorCode::InvalidArgument, "depth scale must be positive");
  Gray16 raw{depth.width(), depth.height(), {}};
  raw.values.resize(depth.values().size());
  for (std::size_t i = 0; i < raw.values.size(); ++i) {
    const double units = std::round(std::max(0.0, depth.values()[i]) / scale);
    raw.values[i] = static_cast<std::uint16_t>(std::min(units, 65535.0));
  }
  write_png16(path, raw);
  std::ofstream side(depth_sidecar_path(path));
  if (!side) fail(ErrorCode::IoFailure, "cannot write depth sidecar");
  side << json{{"scale", scale}}.dump() << '\n';
}

DepthMap read_depth(const std::filesystem::path& path) {
  const std::string ext = path.extension().string();
  if (ext == ".pfm") return read_pfm(path);
  if (ext == ".png") return read_depth_png(path);
  fail(ErrorCode::IoFailure, "unsupported depth format: " + path.string());
}

}  // namespace xmf
