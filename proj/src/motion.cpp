#include "uiwf/motion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "uiwf/error.hpp"

namespace uiwf {

void MotionConfig::validate() const {
  if (blur_width < 1 || blur_height < 1 || dilate_width < 1 || dilate_height < 1)
    throw InvalidArgument("kernel dimensions must be >= 1");
  if (blur_width % 2 == 0 || blur_height % 2 == 0)
    throw InvalidArgument("Gaussian kernel dimensions must be odd");
  if (!(binarize_threshold >= 0.0 && binarize_threshold <= 255.0))
    throw InvalidArgument("binarize threshold must lie in [0, 255]");
  if (!(contour_area_threshold >= 0.0))
    throw InvalidArgument("contour area threshold must be >= 0");
}

double gaussian_sigma(int size) { return 0.3 * ((size - 1) * 0.5 - 1.0) + 0.8; }

std::vector<double> gaussian_kernel(int size) {
  if (size < 1 || size % 2 == 0) throw InvalidArgument("Gaussian kernel size must be odd");
  const double sigma = gaussian_sigma(size);
  const int half = size / 2;
  std::vector<double> taps(size);
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    const double d = i - half;
    taps[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
    sum += taps[i];
  }
  for (auto& t : taps) t /= sum;
  return taps;
}

GrayImage gaussian_blur(const GrayImage& image, int kernel_width, int kernel_height) {
  const auto kx = gaussian_kernel(kernel_width);
  const auto ky = gaussian_kernel(kernel_height);
  const int hx = kernel_width / 2, hy = kernel_height / 2;
  const int w = image.width, h = image.height;

  GrayImage tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kernel_width; ++i)
        acc += kx[i] * image.at(std::clamp(x + i - hx, 0, w - 1), y);
      tmp.at(x, y) = acc;
    }
  }
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int i = 0; i < kernel_height; ++i)
        acc += ky[i] * tmp.at(x, std::clamp(y + i - hy, 0, h - 1));
      out.at(x, y) = acc;
    }
  }
  return out;
}

GrayImage dilate(const GrayImage& image, int kernel_width, int kernel_height) {
  if (kernel_width < 1 || kernel_height < 1) throw InvalidArgument("dilation kernel must be >= 1");
  const int ax = kernel_width / 2, ay = kernel_height / 2;
  const int w = image.width, h = image.height;
  GrayImage tmp(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double m = image.at(std::clamp(x - ax, 0, w - 1), y);
      for (int i = 1; i < kernel_width; ++i)
        m = std::max(m, image.at(std::clamp(x - ax + i, 0, w - 1), y));
      tmp.at(x, y) = m;
    }
  }
  GrayImage out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double m = tmp.at(x, std::clamp(y - ay, 0, h - 1));
      for (int i = 1; i < kernel_height; ++i)
        m = std::max(m, tmp.at(x, std::clamp(y - ay + i, 0, h - 1)));
      out.at(x, y) = m;
    }
  }
  return out;
}

GrayImage abs_diff(const ImageBuffer& a, const ImageBuffer& b, int kernel_width,
                   int kernel_height) {
  if (a.width != b.width || a.height != b.height)
    throw DimensionMismatch("abs_diff: frames differ in size (" + std::to_string(a.width) + "x" +
                            std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                            std::to_string(b.height) + ")");
  const auto ga = gaussian_blur(to_gray(a), kernel_width, kernel_height);
  const auto gb = gaussian_blur(to_gray(b), kernel_width, kernel_height);
  GrayImage out(a.width, a.height);
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = std::abs(ga.data[i] - gb.data[i]);
  return out;
}

namespace {

// Neighbour offsets (row, col) in clockwise order starting east; with rows
// growing downward this is clockwise on screen.
constexpr std::array<int, 8> kDr{0, 1, 1, 1, 0, -1, -1, -1};
constexpr std::array<int, 8> kDc{1, 1, 0, -1, -1, -1, 0, 1};

int direction_of(int dr, int dc) {
  for (int d = 0; d < 8; ++d)
    if (kDr[d] == dr && kDc[d] == dc) return d;
  return -1;
}

}  // namespace

std::vector<Contour> trace_outer_borders(const std::vector<std::uint8_t>& binary, int width,
                                         int height) {
  if (binary.size() != static_cast<std::size_t>(width) * height)
    throw DimensionMismatch("binary image size does not match its dimensions");

  // Working grid with a one-pixel zero frame.
  const int W = width + 2, H = height + 2;
  std::vector<int> f(static_cast<std::size_t>(W) * H, 0);
  auto at = [&](int r, int c) -> int& { return f[static_cast<std::size_t>(r) * W + c]; };
  for (int r = 0; r < height; ++r)
    for (int c = 0; c < width; ++c) at(r + 1, c + 1) = binary[static_cast<std::size_t>(r) * width + c] ? 1 : 0;

  std::vector<Contour> outer;
  int nbd = 1;
  for (int i = 1; i < H - 1; ++i) {
    for (int j = 1; j < W - 1; ++j) {
      const int fij = at(i, j);
      if (fij == 0) continue;

      bool is_outer = false;
      int i2 = 0, j2 = 0;
      if (fij == 1 && at(i, j - 1) == 0) {
        is_outer = true;
        i2 = i;
        j2 = j - 1;
      } else if (fij >= 1 && at(i, j + 1) == 0) {
        i2 = i;
        j2 = j + 1;
      } else {
        continue;
      }
      ++nbd;

      Contour border;
      // (3.1) clockwise search around (i, j) starting at (i2, j2).
      const int start = direction_of(i2 - i, j2 - j);
      int i1 = -1, j1 = -1;
      for (int k = 0; k < 8; ++k) {
        const int d = (start + k) % 8;
        if (at(i + kDr[d], j + kDc[d]) != 0) {
          i1 = i + kDr[d];
          j1 = j + kDc[d];
          break;
        }
      }
      if (i1 < 0) {
        at(i, j) = -nbd;  // isolated pixel
        border.push_back({j - 1, i - 1});
      } else {
        i2 = i1;
        j2 = j1;
        int i3 = i, j3 = j;
        while (true) {
          border.push_back({j3 - 1, i3 - 1});
          // (3.3) counter-clockwise search around (i3, j3), starting after (i2, j2).
          const int from = direction_of(i2 - i3, j2 - j3);
          bool east_examined_zero = false;
          int i4 = -1, j4 = -1;
          for (int k = 1; k <= 8; ++k) {
            const int d = ((from - k) % 8 + 8) % 8;
            const int rr = i3 + kDr[d], cc = j3 + kDc[d];
            if (at(rr, cc) != 0) {
              i4 = rr;
              j4 = cc;
              break;
            }
            if (d == 0) east_examined_zero = true;
          }
          // (3.4) mark the border pixel.
          if (east_examined_zero)
            at(i3, j3) = -nbd;
          else if (at(i3, j3) == 1)
            at(i3, j3) = nbd;
          // (3.5) stop once back at the start with the same successor.
          if (i4 == i && j4 == j && i3 == i1 && j3 == j1) break;
          i2 = i3;
          j2 = j3;
          i3 = i4;
          j3 = j4;
        }
      }
      if (is_outer) outer.push_back(std::move(border));
    }
  }
  return outer;
}

std::vector<Contour> find_contours(const GrayImage& diff, int dilate_width, int dilate_height,
                                   double threshold) {
  const auto dilated = dilate(diff, dilate_width, dilate_height);
  std::vector<std::uint8_t> binary(dilated.data.size());
  for (std::size_t i = 0; i < binary.size(); ++i) binary[i] = dilated.data[i] > threshold ? 1 : 0;
  return trace_outer_borders(binary, diff.width, diff.height);
}

Rect bounding_box(const Contour& contour) {
  if (contour.empty()) return {};
  int x0 = contour.front().x, x1 = x0, y0 = contour.front().y, y1 = y0;
  for (const auto& p : contour) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
  }
  return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

std::vector<long long> calc_areas(const std::vector<Contour>& contours) {
  std::vector<long long> areas;
  areas.reserve(contours.size());
  for (const auto& c : contours) areas.push_back(bounding_box(c).area());
  return areas;
}

std::vector<Transition> motion_det(std::size_t count, const FrameLoader& frame,
                                   const MotionConfig& config) {
  config.validate();
  if (count == 0) throw InvalidArgument("motion_det: empty frame list");

  std::vector<Transition> saved;
  std::size_t b_index = 0;
  ImageBuffer b = frame(0);
  for (std::size_t i = 1; i < count; ++i) {
    ImageBuffer a = frame(i);
    const auto diff = abs_diff(a, b, config.blur_width, config.blur_height);
    const auto contours =
        find_contours(diff, config.dilate_width, config.dilate_height, config.binarize_threshold);
    long long largest = 0;
    for (const auto area : calc_areas(contours)) largest = std::max(largest, area);
    if (static_cast<double>(largest) > config.contour_area_threshold) {
      saved.push_back({b_index, i, largest});
      b = std::move(a);
      b_index = i;
    }
  }
  return saved;
}

std::vector<Transition> motion_det(std::span<const ImageBuffer> frames,
                                   const MotionConfig& config) {
  return motion_det(
      frames.size(), [&](std::size_t i) { return frames[i]; }, config);
}

std::vector<std::size_t> kept_frames(const std::vector<Transition>& transitions) {
  std::vector<std::size_t> out;
  for (const auto& t : transitions) {
    out.push_back(t.prev);
    out.push_back(t.next);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace uiwf
