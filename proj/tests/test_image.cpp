#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <random>

#include "delib/image.hpp"

using namespace delib;

namespace {

// Mean position of pixels matching a color exactly.
std::pair<double, double> centroid_of(const RasterImage& img, Rgb color) {
  double sx = 0, sy = 0;
  long n = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      if (img.at(x, y) == color) {
        sx += x;
        sy += y;
        ++n;
      }
  REQUIRE(n > 0);
  return {sx / n, sy / n};
}

}  // namespace

TEST_CASE("png file round trip") {
  RasterImage img = RasterImage::filled(33, 21, {12, 200, 77});
  img.set(5, 7, {1, 2, 3});
  std::string path = "rt_test.png";
  write_png(img, path);
  RasterImage back = read_png(path);
  CHECK(back == img);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_png("does_not_exist.png"), ImageError);
}

TEST_CASE("click marker centers on the scaled coordinate") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> coord(150, 849);
  for (int i = 0; i < 20; ++i) {
    int w = 200 + 10 * i, h = 300 + 7 * i;
    Coordinate c{coord(rng), coord(rng)};
    RasterImage base = RasterImage::filled(w, h, {255, 255, 255});
    AnnotatedImage out = render_action_marker(base, ClickAction{c});
    CHECK(out.visualized);
    PixelPoint expect = scale_coordinate(c, w, h);
    auto [cx, cy] = centroid_of(out.image, {255, 0, 0});
    CHECK(std::abs(cx - expect.x) <= 1.0);
    CHECK(std::abs(cy - expect.y) <= 1.0);
  }
}

TEST_CASE("marker colors per action") {
  RasterImage base = RasterImage::filled(200, 200, {255, 255, 255});
  auto lp = render_action_marker(base, LongPressAction{{500, 500}, 1.0});
  CHECK(lp.visualized);
  centroid_of(lp.image, {0, 0, 255});  // asserts blue pixels exist

  auto sw = render_action_marker(base, SwipeAction{{200, 500}, {800, 500}});
  CHECK(sw.visualized);
  centroid_of(sw.image, {0, 0, 255});
  auto [gx, gy] = centroid_of(sw.image, {0, 255, 0});
  PixelPoint end = scale_coordinate({800, 500}, 200, 200);
  CHECK(std::abs(gx - end.x) <= 1.0);
  CHECK(std::abs(gy - end.y) <= 1.0);

  MarkerStyle alt;
  alt.green_at_swipe_start = true;
  auto sw2 = render_action_marker(base, SwipeAction{{200, 500}, {800, 500}}, alt);
  auto [gx2, gy2] = centroid_of(sw2.image, {0, 255, 0});
  PixelPoint start = scale_coordinate({200, 500}, 200, 200);
  CHECK(std::abs(gx2 - start.x) <= 1.0);
  CHECK(std::abs(gy2 - start.y) <= 1.0);
}

TEST_CASE("non-visual actions return the image unchanged") {
  RasterImage base = RasterImage::filled(50, 50, {9, 9, 9});
  for (Action a : {Action{TypeAction{"x"}}, Action{WaitAction{1.0}},
                   Action{OpenAction{"App"}}, Action{ClearTextAction{}}}) {
    AnnotatedImage out = render_action_marker(base, a);
    CHECK_FALSE(out.visualized);
    CHECK(out.image == base);
  }
}

TEST_CASE("marker touches only the footprint") {
  RasterImage base = RasterImage::filled(300, 300, {200, 200, 200});
  MarkerStyle style;
  style.circle_radius = 10;
  style.stroke = 3;
  Coordinate c{500, 500};
  AnnotatedImage out = render_action_marker(base, ClickAction{c}, style);
  PixelPoint p = scale_coordinate(c, 300, 300);
  int reach = style.circle_radius + style.stroke;
  for (int y = 0; y < 300; ++y)
    for (int x = 0; x < 300; ++x)
      if (out.image.at(x, y) != base.at(x, y)) {
        CHECK(std::abs(x - p.x) <= reach);
        CHECK(std::abs(y - p.y) <= reach);
      }
}

TEST_CASE("diff_regions finds planted rectangles") {
  RasterImage before = RasterImage::filled(120, 90, {50, 50, 50});
  RasterImage after = before;
  for (int y = 20; y < 40; ++y)
    for (int x = 10; x < 35; ++x) after.set(x, y, {90, 50, 50});
  for (int y = 60; y < 80; ++y)
    for (int x = 70; x < 100; ++x) after.set(x, y, {50, 50, 120});

  auto regions = diff_regions(before, after, 12, 64);
  REQUIRE(regions.size() == 2);
  CHECK(regions[0] == DiffRegion{10, 20, 35, 40});
  CHECK(regions[1] == DiffRegion{70, 60, 100, 80});

  CHECK(diff_regions(before, before).empty());
  CHECK_FALSE(diff_flag(diff_regions(before, before)));
}

TEST_CASE("diff thresholds and min_area") {
  RasterImage before = RasterImage::filled(60, 60, {100, 100, 100});
  RasterImage after = before;
  // change below the channel threshold
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 10; ++x) after.set(x, y, {108, 100, 100});
  CHECK(diff_regions(before, after, 12, 1).empty());
  // change above threshold but under min_area
  for (int y = 30; y < 33; ++y)
    for (int x = 30; x < 33; ++x) after.set(x, y, {255, 100, 100});
  CHECK(diff_regions(before, after, 12, 64).empty());
  CHECK(diff_regions(before, after, 12, 9).size() == 1);
}

TEST_CASE("diff rejects mismatched dimensions") {
  RasterImage a = RasterImage::filled(10, 10, {0, 0, 0});
  RasterImage b = RasterImage::filled(11, 10, {0, 0, 0});
  CHECK_THROWS_AS(diff_regions(a, b), ImageError);
}

TEST_CASE("draw_boxes outlines regions in the box color") {
  RasterImage img = RasterImage::filled(80, 80, {0, 0, 0});
  auto boxed = draw_boxes(img, {{10, 10, 40, 30}});
  CHECK(boxed.at(10, 10) == Rgb{255, 0, 0});
  CHECK(boxed.at(39, 29) == Rgb{255, 0, 0});
  CHECK(boxed.at(25, 20) == Rgb{0, 0, 0});  // interior untouched
  CHECK_THROWS_AS(draw_boxes(img, {{-1, 0, 5, 5}}), ImageError);
  CHECK_THROWS_AS(draw_boxes(img, {{20, 20, 10, 30}}), ImageError);
}
