#include "xmf/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "xmf/error.hpp"

namespace xmf {

Image::Image(int width, int height, float fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) fail(ErrorCode::InvalidArgument, "image dimensions must be positive");
  pixels_.assign(static_cast<std::size_t>(width) * height, fill);
}

float Image::sample(double x, double y) const {
  const int x0 = std::clamp(static_cast<int>(std::floor(x)), 0, width_ - 1);
  const int y0 = std::clamp(static_cast<int>(std::floor(y)), 0, height_ - 1);
  const int x1 = std::min(x0 + 1, width_ - 1);
  const int y1 = std::min(y0 + 1, height_ - 1);
  const double ax = x - x0;
  const double ay = y - y0;
  const double top = (1.0 - ax) * at(x0, y0) + ax * at(x1, y0);
  const double bottom = (1.0 - ax) * at(x0, y1) + ax * at(x1, y1);
  return static_cast<float>((1.0 - ay) * top + ay * bottom);
}

Mask::Mask(int width, int height, bool fill) : width_(width), height_(height) {
  if (width <= 0 || height <= 0) fail(ErrorCode::InvalidArgument, "mask dimensions must be positive");
  flags_.assign(static_cast<std::size_t>(width) * height, fill ? 1 : 0);
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(flags_.begin(), flags_.end(), std::uint8_t{1}));
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) fail(ErrorCode::IoFailure, "cannot open " + path.string());
  return f;
}

[[noreturn]] void png_error_fn(png_structp, png_const_charp msg) {
  throw Error(ErrorCode::IoFailure, std::string("png: ") + msg);
}
void png_warning_fn(png_structp, png_const_charp) {}

// Decodes into gray samples at the file's bit depth (8 or 16).
struct DecodedGray {
  int width = 0;
  int height = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> values;
};

DecodedGray decode_gray(const std::filesystem::path& path) {
  FilePtr file = open_file(path, "rb");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  if (!png) fail(ErrorCode::IoFailure, "png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};

  png_init_io(png, file.get());
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE)
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  if (depth == 16) png_set_swap(png);  // host little-endian rows
  png_read_update_info(png, info);
  depth = png_get_bit_depth(png, info);

  DecodedGray out;
  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.bit_depth = depth;
  const std::size_t rowbytes = png_get_rowbytes(png, info);
  std::vector<unsigned char> buffer(rowbytes * out.height);
  std::vector<png_bytep> rows(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = buffer.data() + y * rowbytes;
  png_read_image(png, rows.data());

  out.values.resize(static_cast<std::size_t>(out.width) * out.height);
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      std::uint16_t v;
      if (depth == 16) {
        const unsigned char* p = rows[y] + 2 * x;
        v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
      } else {
        v = rows[y][x];
      }
      out.values[static_cast<std::size_t>(y) * out.width + x] = v;
    }
  }
  return out;
}

void encode_gray(const std::filesystem::path& path, int width, int height, int bit_depth,
                 const std::vector<std::uint16_t>& values) {
  FilePtr file = open_file(path, "wb");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_fn, png_warning_fn);
  if (!png) fail(ErrorCode::IoFailure, "png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};

  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const int bytes = bit_depth / 8;
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * bytes);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const std::uint16_t v = values[static_cast<std::size_t>(y) * width + x];
      if (bytes == 2) {
        row[2 * x] = static_cast<unsigned char>(v >> 8);  // PNG is big-endian
        row[2 * x + 1] = static_cast<unsigned char>(v & 0xff);
      } else {
        row[x] = static_cast<unsigned char>(v);
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
}

}  // namespace

Image read_png(const std::filesystem::path& path) {
  const DecodedGray g = decode_gray(path);
  Image img(g.width, g.height);
  const float scale = g.bit_depth == 16 ? 255.0f / 65535.0f : 1.0f;
  for (std::size_t i = 0; i < g.values.size(); ++i) img.pixels()[i] = g.values[i] * scale;
  return img;
}

void write_png(const std::filesystem::path& path, const Image& image) {
  std::vector<std::uint16_t> values(image.pixels().size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const float v = std::clamp(image.pixels()[i], 0.0f, Image::kMaxValue);
    values[i] = static_cast<std::uint16_t>(std::lround(v));
  }
  encode_gray(path, image.width(), image.height(), 8, values);
}

Mask read_mask_png(const std::filesystem::path& path) {
  const DecodedGray g = decode_gray(path);
  Mask m(g.width, g.height, false);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) m.set(x, y, g.values[static_cast<std::size_t>(y) * g.width + x] != 0);
  return m;
}

void write_mask_png(const std::filesystem::path& path, const Mask& mask) {
  std::vector<std::uint16_t> values(static_cast<std::size_t>(mask.width()) * mask.height());
  for (int y = 0; y < mask.height(); ++y)
    for (int x = 0; x < mask.width(); ++x) values[static_cast<std::size_t>(y) * mask.width() + x] = mask.at(x, y) ? 255 : 0;
  encode_gray(path, mask.width(), mask.height(), 8, values);
}

Gray16 read_png16(const std::filesystem::path& path) {
  DecodedGray g = decode_gray(path);
  if (g.bit_depth != 16) fail(ErrorCode::IoFailure, path.string() + " is not a 16-bit PNG");
  return Gray16{g.width, g.height, std::move(g.values)};
}

void write_png16(const std::filesystem::path& path, const Gray16& image) {
  encode_gray(path, image.width, image.height, 16, image.values);
}

}  // namespace xmf
