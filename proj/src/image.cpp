#include "delib/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>

#include <png.h>

namespace delib {

RasterImage RasterImage::filled(int w, int h, Rgb color) {
  RasterImage img;
  img.width = w;
  img.height = h;
  img.pixels.resize(static_cast<size_t>(w) * h * 3);
  for (size_t i = 0; i < img.pixels.size(); i += 3) {
    img.pixels[i] = color.r;
    img.pixels[i + 1] = color.g;
    img.pixels[i + 2] = color.b;
  }
  return img;
}

RasterImage read_png(const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  RasterImage img;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw ImageError(ImageErr::IoFailure, "cannot read PNG: " + path);
  }
  png.format = PNG_FORMAT_RGB;
  img.width = static_cast<int>(png.width);
  img.height = static_cast<int>(png.height);
  img.pixels.resize(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    throw ImageError(ImageErr::IoFailure, "failed decoding " + path);
  }
  return img;
}

void write_png(const RasterImage& image, const std::string& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.pixels.data(), 0,
                               nullptr)) {
    throw ImageError(ImageErr::IoFailure, "failed writing " + path);
  }
}

std::vector<uint8_t> encode_png(const RasterImage& image) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr);
  std::vector<uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0,
                                 nullptr)) {
    throw ImageError(ImageErr::IoFailure, "failed encoding PNG");
  }
  out.resize(size);
  return out;
}

namespace {

int effective_radius(const MarkerStyle& style, const RasterImage& img) {
  if (style.circle_radius > 0) return style.circle_radius;
  int r = static_cast<int>(std::lround(0.03 * std::min(img.width, img.height)));
  return std::max(r, 2);
}

void draw_circle(RasterImage& img, PixelPoint center, int radius, int stroke, Rgb color) {
  double half = stroke / 2.0;
  int lo_x = std::max(0, center.x - radius - stroke);
  int hi_x = std::min(img.width - 1, center.x + radius + stroke);
  int lo_y = std::max(0, center.y - radius - stroke);
  int hi_y = std::min(img.height - 1, center.y + radius + stroke);
  for (int y = lo_y; y <= hi_y; ++y) {
    for (int x = lo_x; x <= hi_x; ++x) {
      double d = std::hypot(x - center.x, y - center.y);
      if (std::abs(d - radius) <= half) img.set(x, y, color);
    }
  }
}

void draw_segment(RasterImage& img, PixelPoint a, PixelPoint b, int stroke, Rgb color) {
  double half = stroke / 2.0;
  int lo_x = std::max(0, std::min(a.x, b.x) - stroke);
  int hi_x = std::min(img.width - 1, std::max(a.x, b.x) + stroke);
  int lo_y = std::max(0, std::min(a.y, b.y) - stroke);
  int hi_y = std::min(img.height - 1, std::max(a.y, b.y) + stroke);
  double dx = b.x - a.x, dy = b.y - a.y;
  double len2 = dx * dx + dy * dy;
  for (int y = lo_y; y <= hi_y; ++y) {
    for (int x = lo_x; x <= hi_x; ++x) {
      double t = len2 == 0 ? 0.0
                           : std::clamp(((x - a.x) * dx + (y - a.y) * dy) / len2, 0.0, 1.0);
      double d = std::hypot(x - (a.x + t * dx), y - (a.y + t * dy));
      if (d <= half) img.set(x, y, color);
    }
  }
}

}  // namespace

AnnotatedImage render_action_marker(const RasterImage& image, const Action& action,
                                    const MarkerStyle& style) {
  AnnotatedImage out{image, false};
  int radius = effective_radius(style, image);
  if (const auto* click = std::get_if<ClickAction>(&action)) {
    PixelPoint p = scale_coordinate(click->at, image.width, image.height);
    draw_circle(out.image, p, radius, style.stroke, style.click_color);
    out.visualized = true;
  } else if (const auto* lp = std::get_if<LongPressAction>(&action)) {
    PixelPoint p = scale_coordinate(lp->at, image.width, image.height);
    draw_circle(out.image, p, radius, style.stroke, style.long_press_color);
    out.visualized = true;
  } else if (const auto* swipe = std::get_if<SwipeAction>(&action)) {
    PixelPoint a = scale_coordinate(swipe->from, image.width, image.height);
    PixelPoint b = scale_coordinate(swipe->to, image.width, image.height);
    draw_segment(out.image, a, b, style.stroke, style.swipe_path_color);
    PixelPoint terminus = style.green_at_swipe_start ? a : b;
    draw_circle(out.image, terminus, radius, style.stroke, style.swipe_endpoint_color);
    out.visualized = true;
  }
  return out;
}

std::vector<DiffRegion> diff_regions(const RasterImage& before, const RasterImage& after,
                                     int threshold, int min_area) {
  if (before.width != after.width || before.height != after.height) {
    throw ImageError(ImageErr::DimensionMismatch, "diff inputs differ in size");
  }
  const int w = before.width, h = before.height;
  std::vector<uint8_t> changed(static_cast<size_t>(w) * h, 0);
  for (size_t i = 0; i < changed.size(); ++i) {
    int d = 0;
    for (int c = 0; c < 3; ++c) {
      d = std::max(d, std::abs(static_cast<int>(before.pixels[3 * i + c]) -
                               static_cast<int>(after.pixels[3 * i + c])));
    }
    changed[i] = d > threshold ? 1 : 0;
  }

  std::vector<DiffRegion> regions;
  std::vector<uint8_t> seen(changed.size(), 0);
  std::deque<std::pair<int, int>> queue;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      size_t idx = static_cast<size_t>(y) * w + x;
      if (!changed[idx] || seen[idx]) continue;
      // flood-fill one 4-connected component
      int left = x, right = x, top = y, bottom = y, area = 0;
      seen[idx] = 1;
      queue.emplace_back(x, y);
      while (!queue.empty()) {
        auto [cx, cy] = queue.front();
        queue.pop_front();
        ++area;
        left = std::min(left, cx);
        right = std::max(right, cx);
        top = std::min(top, cy);
        bottom = std::max(bottom, cy);
        constexpr int dx[] = {1, -1, 0, 0};
        constexpr int dy[] = {0, 0, 1, -1};
        for (int k = 0; k < 4; ++k) {
          int nx = cx + dx[k], ny = cy + dy[k];
          if (nx < 0 || nx >= w || ny < 0 || ny >= h) continue;
          size_t nidx = static_cast<size_t>(ny) * w + nx;
          if (changed[nidx] && !seen[nidx]) {
            seen[nidx] = 1;
            queue.emplace_back(nx, ny);
          }
        }
      }
      if (area >= min_area) {
        regions.push_back(DiffRegion{left, top, right + 1, bottom + 1});
      }
    }
  }
  std::sort(regions.begin(), regions.end(), [](const DiffRegion& a, const DiffRegion& b) {
    return std::tie(a.top, a.left) < std::tie(b.top, b.left);
  });
  return regions;
}

RasterImage draw_boxes(const RasterImage& image, const std::vector<DiffRegion>& regions,
                       const MarkerStyle& style) {
  for (const auto& r : regions) {
    if (r.left < 0 || r.top < 0 || r.right > image.width || r.bottom > image.height ||
        r.left >= r.right || r.top >= r.bottom) {
      throw ImageError(ImageErr::OutOfBounds, "region outside image bounds");
    }
  }
  RasterImage out = image;
  for (const auto& r : regions) {
    for (int s = 0; s < style.stroke; ++s) {
      // stroke grows inward so boxes at the image edge stay in bounds
      int l = std::min(r.left + s, r.right - 1);
      int rr = std::max(r.right - 1 - s, r.left);
      int t = std::min(r.top + s, r.bottom - 1);
      int b = std::max(r.bottom - 1 - s, r.top);
      for (int x = l; x <= rr; ++x) {
        out.set(x, t, style.reflection_box_color);
        out.set(x, b, style.reflection_box_color);
      }
      for (int y = t; y <= b; ++y) {
        out.set(l, y, style.reflection_box_color);
        out.set(rr, y, style.reflection_box_color);
      }
    }
  }
  return out;
}

}  // namespace delib
