#pragma once

#include "owl/annotation.hpp"
#include "owl/tensor.hpp"

namespace owl {

// Inclusive pixel rectangle.
struct BoundingBox {
  int x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int width() const { return x1 - x0 + 1; }
  int height() const { return y1 - y0 + 1; }
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

BoundingBox bounding_box(const LabeledPolygon& polygon);

// Smallest axis-aligned crop that contains every polygon point. Throws
// CropTooSmall when the box is under 2 px on either side, or when it falls
// outside the image.
class CropTooSmall : public ParameterError {
 public:
  using ParameterError::ParameterError;
};
Tensor min_area_crop(const Tensor& image, const LabeledPolygon& polygon);

enum class ResizeMethod { bilinear, nearest };

inline constexpr std::size_t kCropSize = 64;

// Corner-aligned resampling: output pixel (y, x) samples the source at
// (y * (h - 1) / (H - 1), x * (w - 1) / (W - 1)).
Tensor resize(const Tensor& crop, std::size_t out_h, std::size_t out_w, ResizeMethod method = ResizeMethod::bilinear);

Tensor resize_64(const Tensor& crop, ResizeMethod method = ResizeMethod::bilinear);

}  // namespace owl
