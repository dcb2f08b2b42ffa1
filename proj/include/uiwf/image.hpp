#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace uiwf {

// 8-bit RGB, row-major, interleaved channels.
struct ImageBuffer {
  static constexpr int kChannels = 3;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  ImageBuffer() = default;
  ImageBuffer(int w, int h, std::uint8_t fill = 0);

  bool empty() const noexcept { return width == 0 || height == 0; }
  std::size_t index(int x, int y) const noexcept {
    return (static_cast<std::size_t>(y) * width + x) * kChannels;
  }
  std::uint8_t* pixel(int x, int y) noexcept { return data.data() + index(x, y); }
  const std::uint8_t* pixel(int x, int y) const noexcept { return data.data() + index(x, y); }
  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept;
  void fill_rect(int x, int y, int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b);

  friend bool operator==(const ImageBuffer&, const ImageBuffer&) = default;
};

// Single-channel real-valued image on the 0..255 scale.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) noexcept { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const noexcept { return data[static_cast<std::size_t>(y) * width + x]; }
};

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;

  long long area() const noexcept { return static_cast<long long>(width) * height; }
  bool inside(int image_width, int image_height) const noexcept {
    return x >= 0 && y >= 0 && width >= 0 && height >= 0 && x + width <= image_width &&
           y + height <= image_height;
  }
  friend bool operator==(const Rect&, const Rect&) = default;
};

// Luma 0.299/0.587/0.114.
GrayImage to_gray(const ImageBuffer& image);

// Half-pixel-centre bilinear resampling, edge-clamped, rounded to nearest.
ImageBuffer resize_bilinear(const ImageBuffer& image, int width, int height);
ImageBuffer flip_horizontal(const ImageBuffer& image);
ImageBuffer crop(const ImageBuffer& image, const Rect& rect);
// Opaque copy of `patch` with its top-left corner at (x, y). Must fit.
void paste(ImageBuffer& base, const ImageBuffer& patch, int x, int y);

// PNG is the only accepted on-disk format; anything else is rejected with
// IoError because lossy codecs destroy few-pixel selection highlights.
ImageBuffer read_png(const std::filesystem::path& path);
void write_png(const ImageBuffer& image, const std::filesystem::path& path);

}  // namespace uiwf
