#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

namespace xmf {

// Single-channel intensity image, row-major, nominal range [0, 255].
class Image {
 public:
  static constexpr float kMaxValue = 255.0f;

  Image() = default;
  Image(int width, int height, float fill = 0.0f);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return pixels_.empty(); }

  float& at(int x, int y) { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }
  float at(int x, int y) const { return pixels_[static_cast<std::size_t>(y) * width_ + x]; }

  // Bilinear sample; caller guarantees (x, y) in [0, W-1] x [0, H-1].
  float sample(double x, double y) const;

  const std::vector<float>& pixels() const noexcept { return pixels_; }
  std::vector<float>& pixels() noexcept { return pixels_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<float> pixels_;
};

// Per-pixel validity flags, row-major.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, bool fill);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  bool empty() const noexcept { return flags_.empty(); }

  bool at(int x, int y) const { return flags_[static_cast<std::size_t>(y) * width_ + x] != 0; }
  void set(int x, int y, bool v) { flags_[static_cast<std::size_t>(y) * width_ + x] = v ? 1 : 0; }
  std::size_t count() const;

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> flags_;
};

/// Reads an 8-bit or 16-bit PNG; color inputs are converted to luma and
/// 16-bit samples are scaled down to [0, 255].
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& image);

Mask read_mask_png(const std::filesystem::path& path);
void write_mask_png(const std::filesystem::path& path, const Mask& mask);

// Raw 16-bit grayscale access, used by the depth reader.
struct Gray16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> values;
};
Gray16 read_png16(const std::filesystem::path& path);
void write_png16(const std::filesystem::path& path, const Gray16& image);

}  // namespace xmf
