#include <fstream>

#include "doctest.h"
#include "temp_dir.hpp"
#include "uiwf/error.hpp"
#include "uiwf/image.hpp"
#include "uiwf/rng.hpp"

using namespace uiwf;

namespace {

ImageBuffer random_image(int w, int h, Rng& rng) {
  ImageBuffer img(w, h);
  for (auto& b : img.data) b = static_cast<std::uint8_t>(uniform_index(rng, 256));
  return img;
}

}  // namespace

TEST_CASE("png round trip is lossless") {
  testing_support::TempDir dir("image");
  Rng rng(1);
  const auto img = random_image(17, 9, rng);
  write_png(img, dir.path() / "nested" / "a.png");
  CHECK(read_png(dir.path() / "nested" / "a.png") == img);
}

TEST_CASE("non-png input is rejected") {
  testing_support::TempDir dir("image_reject");
  std::ofstream(dir.path() / "fake.png") << "\xFF\xD8\xFF\xE0 not a png";
  CHECK_THROWS_AS(read_png(dir.path() / "fake.png"), IoError);
  CHECK_THROWS_AS(read_png(dir.path() / "missing.png"), IoError);
}

TEST_CASE("flip is an involution and crop/paste invert each other") {
  Rng rng(2);
  const auto img = random_image(13, 7, rng);
  CHECK(flip_horizontal(flip_horizontal(img)) == img);
  CHECK(flip_horizontal(img).pixel(0, 3)[1] == img.pixel(12, 3)[1]);

  const Rect r{3, 2, 5, 4};
  const auto patch = crop(img, r);
  ImageBuffer canvas(13, 7, 0);
  paste(canvas, patch, 3, 2);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 5; ++x) CHECK(canvas.pixel(3 + x, 2 + y)[0] == img.pixel(3 + x, 2 + y)[0]);
  CHECK_THROWS(paste(canvas, patch, 10, 0));
}

TEST_CASE("resize keeps constants and identity size") {
  Rng rng(3);
  const auto img = random_image(10, 6, rng);
  CHECK(resize_bilinear(img, 10, 6) == img);
  ImageBuffer flat(31, 17, 123);
  const auto small = resize_bilinear(flat, 7, 5);
  for (const auto b : small.data) CHECK(b == 123);
}

TEST_CASE("gray conversion uses luma weights") {
  ImageBuffer img(1, 1);
  img.set(0, 0, 100, 50, 200);
  CHECK(to_gray(img).at(0, 0) == doctest::Approx(0.299 * 100 + 0.587 * 50 + 0.114 * 200));
}
