#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "delib/action.hpp"

namespace delib {

enum class ImageErr { DimensionMismatch, OutOfBounds, IoFailure };

class ImageError : public std::runtime_error {
 public:
  ImageError(ImageErr kind, const std::string& what)
      : std::runtime_error(what), kind(kind) {}
  ImageErr kind;
};

struct Rgb {
  uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Uncompressed row-major RGB raster; PNG only at the file boundary.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // 3 * width * height bytes, RGB

  static RasterImage filled(int w, int h, Rgb color);
  Rgb at(int x, int y) const {
    size_t i = 3 * (static_cast<size_t>(y) * width + x);
    return Rgb{pixels[i], pixels[i + 1], pixels[i + 2]};
  }
  void set(int x, int y, Rgb c) {
    size_t i = 3 * (static_cast<size_t>(y) * width + x);
    pixels[i] = c.r;
    pixels[i + 1] = c.g;
    pixels[i + 2] = c.b;
  }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width && y >= 0 && y < height;
  }
  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

RasterImage read_png(const std::string& path);
void write_png(const RasterImage& image, const std::string& path);
std::vector<uint8_t> encode_png(const RasterImage& image);

// Marker colors follow the visualization protocol: red circle for click,
// blue circle for long_press, blue trajectory line for swipe with a green
// circle at one terminus, red boxes for changed regions.
struct MarkerStyle {
  Rgb click_color{255, 0, 0};
  Rgb long_press_color{0, 0, 255};
  Rgb swipe_path_color{0, 0, 255};
  Rgb swipe_endpoint_color{0, 255, 0};
  Rgb reflection_box_color{255, 0, 0};
  int circle_radius = 0;  // 0 selects 3% of min(width, height)
  int stroke = 3;
  // The protocol text places the green circle at the swipe endpoint in one
  // place and at the start in another; configurable, endpoint by default.
  bool green_at_swipe_start = false;
};

struct AnnotatedImage {
  RasterImage image;
  bool visualized = false;  // false: action type has no visual marker
};

// Copies the screenshot and draws the marker for coordinate-based actions;
// other actions return the unchanged image flagged not visualized.
AnnotatedImage render_action_marker(const RasterImage& image, const Action& action,
                                    const MarkerStyle& style = {});

struct DiffRegion {
  int left = 0, top = 0, right = 0, bottom = 0;  // half-open box in pixels
  friend bool operator==(const DiffRegion&, const DiffRegion&) = default;
};

// Per-pixel max-channel threshold, 4-connected components, bounding boxes of
// components with at least min_area changed pixels, sorted by (top, left).
std::vector<DiffRegion> diff_regions(const RasterImage& before,
                                     const RasterImage& after, int threshold = 12,
                                     int min_area = 64);

RasterImage draw_boxes(const RasterImage& image, const std::vector<DiffRegion>& regions,
                       const MarkerStyle& style = {});

inline bool diff_flag(const std::vector<DiffRegion>& regions) {
  return !regions.empty();
}

}  // namespace delib
