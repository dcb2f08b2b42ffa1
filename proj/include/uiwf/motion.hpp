#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "uiwf/image.hpp"

namespace uiwf {

// Parameters of the frame-pair motion detector used to drop near-duplicate
// screen-recording frames.
struct MotionConfig {
  int blur_width = 5;    // Gaussian kernel, odd
  int blur_height = 5;   // Gaussian kernel, odd
  int dilate_width = 5;  // all-ones structuring element
  int dilate_height = 5;
  double binarize_threshold = 40.0;      // pixel > threshold is foreground, 0..255
  double contour_area_threshold = 500.0;  // pixels^2, chosen per video

  void validate() const;
};

// Normalized 1-D Gaussian taps for an odd size k with
// sigma = 0.3 * ((k - 1) / 2 - 1) + 0.8.
std::vector<double> gaussian_kernel(int size);
double gaussian_sigma(int size);

// Separable Gaussian smoothing with replicate-edge padding.
GrayImage gaussian_blur(const GrayImage& image, int kernel_width, int kernel_height);

// Max filter over a width x height window (anchor at the window centre),
// replicate-edge padding.
GrayImage dilate(const GrayImage& image, int kernel_width, int kernel_height);

// Grayscale, blur both frames, then per-pixel |a - b|.
GrayImage abs_diff(const ImageBuffer& a, const ImageBuffer& b, int kernel_width,
                   int kernel_height);

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

using Contour = std::vector<Point>;

// Suzuki-Abe border following on a binary image (nonzero = foreground).
// Returns the outer border of every 8-connected foreground component in
// raster order of their starting pixels.
std::vector<Contour> trace_outer_borders(const std::vector<std::uint8_t>& binary, int width,
                                         int height);

// Dilate, binarize (value > threshold), then trace outer borders.
std::vector<Contour> find_contours(const GrayImage& diff, int dilate_width, int dilate_height,
                                   double threshold);

Rect bounding_box(const Contour& contour);
// Axis-aligned bounding rectangle area of each contour.
std::vector<long long> calc_areas(const std::vector<Contour>& contours);

struct Transition {
  std::size_t prev = 0;
  std::size_t next = 0;
  long long max_area = 0;  // largest region area that triggered the save

  friend bool operator==(const Transition&, const Transition&) = default;
};

using FrameLoader = std::function<ImageBuffer(std::size_t)>;

// Runs the b/a state machine over `count` frames in order. A transition is
// saved when some region area exceeds the contour threshold; the newer frame
// then becomes the reference, otherwise the reference is kept.
std::vector<Transition> motion_det(std::size_t count, const FrameLoader& frame,
                                   const MotionConfig& config);
std::vector<Transition> motion_det(std::span<const ImageBuffer> frames,
                                   const MotionConfig& config);

// Frame indices touched by any saved transition, ascending, without repeats.
std::vector<std::size_t> kept_frames(const std::vector<Transition>& transitions);

}  // namespace uiwf
