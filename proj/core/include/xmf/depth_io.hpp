#pragma once

#include <filesystem>

#include "xmf/geometry.hpp"

namespace xmf {

struct CameraFile {
  CameraIntrinsics intrinsics;
  RigidPose pose;  // world-to-camera
};

// {fx, fy, cx, cy, width, height, pose: [16 numbers, row-major]}
CameraFile read_camera_json(const std::filesystem::path& path);
void write_camera_json(const std::filesystem::path& path, const CameraFile& camera);

// Single-channel PFM ("Pf"). Rows are stored bottom-to-top; the sign of the
// scale line selects endianness (negative = little-endian).
DepthMap read_pfm(const std::filesystem::path& path);
void write_pfm(const std::filesystem::path& path, const DepthMap& depth);

/// 16-bit grayscale PNG plus a JSON sidecar {"scale": meters_per_unit}. The
/// sidecar sits next to the PNG with the extension replaced by ".json".
DepthMap read_depth_png(const std::filesystem::path& path);
void write_depth_png(const std::filesystem::path& path, const DepthMap& depth, double scale);
std::filesystem::path depth_sidecar_path(const std::filesystem::path& png_path);

// Dispatches on extension: .pfm or .png.
DepthMap read_depth(const std::filesystem::path& path);

}  // namespace xmf
