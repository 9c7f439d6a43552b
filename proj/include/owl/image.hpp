#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "owl/tensor.hpp"

namespace owl {

// 8-bit interleaved RGB raster.
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;  // height * width * 3

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), pixels(w * h * 3, fill) {}

  std::uint8_t* at(std::size_t x, std::size_t y) { return &pixels[(y * width + x) * 3]; }
  const std::uint8_t* at(std::size_t x, std::size_t y) const { return &pixels[(y * width + x) * 3]; }
};

// Binary PPM (P6, maxval 255).
std::vector<std::uint8_t> encode_ppm(const RgbImage& image);
RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes);

std::vector<std::uint8_t> encode_png(const RgbImage& image);
RgbImage decode_png(const std::vector<std::uint8_t>& bytes);

// Dispatches on the extension (.ppm / .png).
RgbImage read_image(const std::string& path);
void write_image(const RgbImage& image, const std::string& path);

// H x W x 3 tensor with channel / 255.
Tensor to_tensor(const RgbImage& image);

// Inverse of to_tensor; values are clamped to [0, 1] and rounded.
RgbImage from_tensor(const Tensor& tensor);

}  // namespace owl
