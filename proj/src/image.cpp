#include "uiwf/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "uiwf/error.hpp"

namespace uiwf {

ImageBuffer::ImageBuffer(int w, int h, std::uint8_t fill) : width(w), height(h) {
  if (w < 0 || h < 0) throw InvalidArgument("negative image dimensions");
  data.assign(static_cast<std::size_t>(w) * h * kChannels, fill);
}

void ImageBuffer::set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
  auto* p = pixel(x, y);
  p[0] = r;
  p[1] = g;
  p[2] = b;
}

void ImageBuffer::fill_rect(int x, int y, int w, int h, std::uint8_t r, std::uint8_t g,
                            std::uint8_t b) {
  const int x0 = std::max(0, x), y0 = std::max(0, y);
  const int x1 = std::min(width, x + w), y1 = std::min(height, y + h);
  for (int yy = y0; yy < y1; ++yy)
    for (int xx = x0; xx < x1; ++xx) set(xx, yy, r, g, b);
}

GrayImage to_gray(const ImageBuffer& image) {
  GrayImage out(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const auto* p = image.pixel(x, y);
      out.at(x, y) = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
    }
  }
  return out;
}

ImageBuffer resize_bilinear(const ImageBuffer& image, int width, int height) {
  if (image.empty()) throw InvalidArgument("resize of an empty image");
  if (width <= 0 || height <= 0) throw InvalidArgument("resize target must be positive");
  if (width == image.width && height == image.height) return image;

  ImageBuffer out(width, height);
  const double sx = static_cast<double>(image.width) / width;
  const double sy = static_cast<double>(image.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < ImageBuffer::kChannels; ++c) {
        const double top = (1.0 - wx) * image.pixel(x0, y0)[c] + wx * image.pixel(x1, y0)[c];
        const double bot = (1.0 - wx) * image.pixel(x0, y1)[c] + wx * image.pixel(x1, y1)[c];
        const double v = (1.0 - wy) * top + wy * bot;
        out.pixel(x, y)[c] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

ImageBuffer flip_horizontal(const ImageBuffer& image) {
  ImageBuffer out(image.width, image.height);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x)
      std::copy_n(image.pixel(image.width - 1 - x, y), ImageBuffer::kChannels, out.pixel(x, y));
  return out;
}

ImageBuffer crop(const ImageBuffer& image, const Rect& rect) {
  if (!rect.inside(image.width, image.height)) throw InvalidArgument("crop outside image");
  ImageBuffer out(rect.width, rect.height);
  for (int y = 0; y < rect.height; ++y)
    std::copy_n(image.pixel(rect.x, rect.y + y),
                static_cast<std::size_t>(rect.width) * ImageBuffer::kChannels, out.pixel(0, y));
  return out;
}

void paste(ImageBuffer& base, const ImageBuffer& patch, int x, int y) {
  if (!Rect{x, y, patch.width, patch.height}.inside(base.width, base.height))
    throw InvalidArgument("paste outside image bounds");
  for (int yy = 0; yy < patch.height; ++yy)
    std::copy_n(patch.pixel(0, yy),
                static_cast<std::size_t>(patch.width) * ImageBuffer::kChannels,
                base.pixel(x, y + yy));
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

ImageBuffer read_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw IoError("cannot open image " + path.string());
  unsigned char sig[8] = {};
  if (std::fread(sig, 1, sizeof sig, file.get()) != sizeof sig || png_sig_cmp(sig, 0, 8) != 0)
    throw IoError("not a PNG file (only lossless PNG is accepted): " + path.string());

  std::string error;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn, png_warning_fn);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  ImageBuffer out;
  std::vector<png_bytep> rows;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("corrupt PNG " + path.string() + ": " + error);
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const auto bit_depth = png_get_bit_depth(png, info);
  const auto color = png_get_color_type(png, info);
  if (bit_depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out = ImageBuffer(static_cast<int>(png_get_image_width(png, info)),
                    static_cast<int>(png_get_image_height(png, info)));
  if (png_get_rowbytes(png, info) != static_cast<png_size_t>(out.width) * 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("unsupported PNG layout in " + path.string());
  }
  rows.resize(out.height);
  for (int y = 0; y < out.height; ++y) rows[y] = out.pixel(0, y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

void write_png(const ImageBuffer& image, const std::filesystem::path& path) {
  if (image.empty()) throw InvalidArgument("cannot write an empty image");
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw IoError("cannot write image " + path.string());

  std::string error;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &error, png_error_fn, png_warning_fn);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(image.height);

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode " + path.string() + ": " + error);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height; ++y)
    rows[y] = const_cast<png_bytep>(image.pixel(0, y));
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace uiwf
