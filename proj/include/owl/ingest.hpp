#pragma once

#include <functional>
#include <string>
#include <vector>

#include "owl/crop.hpp"
#include "owl/crop_store.hpp"
#include "owl/image.hpp"
#include "owl/synth.hpp"

namespace owl {

inline constexpr int kMinCropSide = 10;

struct IngestOptions {
  // When non-empty, only these labels are kept and their order fixes the
  // label ids. Otherwise labels are registered in first-appearance order.
  std::vector<std::string> classes;
  int min_side = kMinCropSide;
  ResizeMethod resize = ResizeMethod::bilinear;
  // Receives non-fatal findings; defaults to standard error.
  std::function<void(const std::string&)> warn;
};

struct IngestStats {
  std::size_t images = 0;
  std::size_t polygons = 0;
  std::size_t too_small = 0;
  std::size_t filtered_label = 0;
  std::size_t warnings = 0;
};

// Walks <root>/<city>/<image>.{ppm,png} with sibling <image>_polygons.json,
// cities and images in lexicographic order. Images are decoded in parallel;
// the store is assembled in traversal order so the result does not depend on
// the thread count.
CropStore ingest_directory(const std::string& root, const IngestOptions& options = {}, IngestStats* stats = nullptr);

// Same as ingesting the scenes after synth_generate wrote them, without the
// round trip through the file system.
CropStore ingest_scenes(const std::vector<SynthImage>& scenes, const IngestOptions& options = {},
                        IngestStats* stats = nullptr);

// Crops from one decoded image, in polygon order; `kept` receives the
// polygon index of every emitted crop.
std::vector<Tensor> crops_from_image(const RgbImage& image, const Annotation& annotation, const IngestOptions& options,
                                     std::vector<std::size_t>& kept, IngestStats* stats = nullptr);

}  // namespace owl
