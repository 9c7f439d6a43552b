#include "owl/crop.hpp"

#include <algorithm>
#include <cmath>

#include "owl/error.hpp"

namespace owl {

BoundingBox bounding_box(const LabeledPolygon& polygon) {
  if (polygon.points.empty()) throw ParameterError("bounding_box: polygon has no points");
  BoundingBox b{polygon.points[0].x, polygon.points[0].y, polygon.points[0].x, polygon.points[0].y};
  for (const auto& p : polygon.points) {
    b.x0 = std::min(b.x0, p.x);
    b.y0 = std::min(b.y0, p.y);
    b.x1 = std::max(b.x1, p.x);
    b.y1 = std::max(b.y1, p.y);
  }
  return b;
}

Tensor min_area_crop(const Tensor& image, const LabeledPolygon& polygon) {
  if (image.rank() != 3) throw DimensionError("min_area_crop expects an H x W x C image");
  const BoundingBox b = bounding_box(polygon);
  const int h = static_cast<int>(image.dim(0)), w = static_cast<int>(image.dim(1));
  if (b.x0 < 0 || b.y0 < 0 || b.x1 >= w || b.y1 >= h) {
    throw ParameterError("min_area_crop: polygon '" + polygon.label + "' lies outside the image");
  }
  if (b.width() < 2 || b.height() < 2) {
    throw CropTooSmall("min_area_crop: '" + polygon.label + "' box " + std::to_string(b.width()) + "x" +
                       std::to_string(b.height()) + " is degenerate");
  }
  const std::size_t c = image.dim(2);
  Tensor crop(Shape{static_cast<std::size_t>(b.height()), static_cast<std::size_t>(b.width()), c});
  for (int y = 0; y < b.height(); ++y) {
    const float* src = &image.at(static_cast<std::size_t>(b.y0 + y), static_cast<std::size_t>(b.x0), 0);
    std::copy(src, src + static_cast<std::size_t>(b.width()) * c, &crop.at(static_cast<std::size_t>(y), 0, 0));
  }
  return crop;
}

Tensor resize(const Tensor& crop, std::size_t out_h, std::size_t out_w, ResizeMethod method) {
  if (crop.rank() != 3) throw DimensionError("resize expects an H x W x C tensor");
  const std::size_t h = crop.dim(0), w = crop.dim(1), c = crop.dim(2);
  if (h < 2 || w < 2) throw ParameterError("resize: source must be at least 2x2");
  if (out_h < 2 || out_w < 2) throw ParameterError("resize: target must be at least 2x2");
  Tensor out(Shape{out_h, out_w, c});
  const double sy = static_cast<double>(h - 1) / static_cast<double>(out_h - 1);
  const double sx = static_cast<double>(w - 1) / static_cast<double>(out_w - 1);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = static_cast<double>(y) * sy;
    const std::size_t y0 = std::min(static_cast<std::size_t>(fy), h - 1);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = static_cast<double>(x) * sx;
      const std::size_t x0 = std::min(static_cast<std::size_t>(fx), w - 1);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - static_cast<double>(x0);
      for (std::size_t k = 0; k < c; ++k) {
        double v;
        if (method == ResizeMethod::nearest) {
          v = crop.at(ty < 0.5 ? y0 : y1, tx < 0.5 ? x0 : x1, k);
        } else {
          const double top = crop.at(y0, x0, k) + (crop.at(y0, x1, k) - crop.at(y0, x0, k)) * tx;
          const double bot = crop.at(y1, x0, k) + (crop.at(y1, x1, k) - crop.at(y1, x0, k)) * tx;
          v = top + (bot - top) * ty;
        }
        out.at(y, x, k) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

Tensor resize_64(const Tensor& crop, ResizeMethod method) { return resize(crop, kCropSize, kCropSize, method); }

}  // namespace owl
