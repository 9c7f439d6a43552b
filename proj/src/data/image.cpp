#include "owl/image.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <string_view>

#include "owl/binary_io.hpp"
#include "owl/error.hpp"

namespace owl {

std::vector<std::uint8_t> encode_ppm(const RgbImage& image) {
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), image.pixels.begin(), image.pixels.end());
  return out;
}

RgbImage decode_ppm(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> std::size_t {
    skip_space();
    std::size_t v = 0;
    const std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) v = v * 10 + (bytes[pos++] - '0');
    if (pos == start) throw FormatError("ppm: expected a number at byte " + std::to_string(start));
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') throw FormatError("ppm: missing P6 magic");
  pos = 2;
  RgbImage img;
  img.width = number();
  img.height = number();
  const std::size_t maxval = number();
  if (maxval != 255) throw FormatError("ppm: only maxval 255 is supported");
  if (img.width == 0 || img.height == 0) throw FormatError("ppm: zero image dimension");
  ++pos;  // single whitespace byte before the raster
  const std::size_t n = img.width * img.height * 3;
  if (bytes.size() < pos + n) throw FormatError("ppm: truncated raster");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                    bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
  return img;
}

std::vector<std::uint8_t> encode_png(const RgbImage& image) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("png encode: ") + png.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0, nullptr)) {
    throw FormatError(std::string("png encode: ") + png.message);
  }
  out.resize(size);
  return out;
}

RgbImage decode_png(const std::vector<std::uint8_t>& bytes) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&png, bytes.data(), bytes.size())) {
    throw FormatError(std::string("png decode: ") + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  RgbImage img(png.width, png.height);
  if (!png_image_finish_read(&png, nullptr, img.pixels.data(), 0, nullptr)) {
    png_image_free(&png);
    throw FormatError(std::string("png decode: ") + png.message);
  }
  return img;
}

namespace {

bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

}  // namespace

RgbImage read_image(const std::string& path) {
  const auto bytes = read_file_bytes(path);
  try {
    if (ends_with(path, ".png")) return decode_png(bytes);
    return decode_ppm(bytes);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

void write_image(const RgbImage& image, const std::string& path) {
  write_file_bytes(path, ends_with(path, ".png") ? encode_png(image) : encode_ppm(image));
}

Tensor to_tensor(const RgbImage& image) {
  Tensor t(Shape{image.height, image.width, 3});
  for (std::size_t i = 0; i < image.pixels.size(); ++i) t[i] = static_cast<float>(image.pixels[i]) / 255.0f;
  return t;
}

RgbImage from_tensor(const Tensor& tensor) {
  if (tensor.rank() != 3 || tensor.dim(2) != 3) throw DimensionError("from_tensor expects H x W x 3");
  RgbImage img(tensor.dim(1), tensor.dim(0));
  for (std::size_t i = 0; i < tensor.size(); ++i) {
    const float v = std::clamp(tensor[i], 0.0f, 1.0f);
    img.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  return img;
}

}  // namespace owl
