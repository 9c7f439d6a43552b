#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "owl/annotation.hpp"
#include "owl/image.hpp"

namespace owl {

// Procedural stand-in for a street-scene dataset. Each class gets its own
// shape family and colour family; instances jitter in size, hue, brightness
// and position over a textured background.
struct SynthConfig {
  std::vector<std::string> classes{"car", "person"};
  std::size_t per_class = 50;
  std::size_t cities = 20;
  std::size_t images_per_city = 10;
  std::size_t image_width = 320;
  std::size_t image_height = 192;
  int min_object = 18;
  int max_object = 44;
  std::uint64_t seed = 1;

  void validate() const;  // throws ParameterError
};

// The six street classes, in the order they are introduced to the committee.
const std::vector<std::string>& street_classes();

enum class ShapeFamily { wide_box, tall_ellipse, triangle, tall_box, house, blob };

struct ClassStyle {
  ShapeFamily shape;
  double hue_degrees;
};

ClassStyle class_style(std::size_t class_index);

struct SynthImage {
  std::string city;
  std::string image_id;
  RgbImage image;
  Annotation annotation;
};

// In-memory generation; synth_generate writes the same scenes to disk.
std::vector<SynthImage> synth_scenes(const SynthConfig& config);

// Writes <out>/<city>/<image>.ppm and <out>/<city>/<image>_polygons.json.
// Returns the number of images written.
std::size_t synth_generate(const SynthConfig& config, const std::string& out_dir);

}  // namespace owl
