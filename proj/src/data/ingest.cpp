#include "owl/ingest.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <set>

#include "owl/binary_io.hpp"
#include "owl/error.hpp"
#include "owl/image.hpp"

namespace owl {

namespace fs = std::filesystem;

namespace {

struct ImageJob {
  std::string city;
  std::string image_id;
  fs::path image_path;
  fs::path annotation_path;
};

struct ImageResult {
  std::vector<Tensor> crops;
  std::vector<std::size_t> polygon_index;
  std::vector<std::string> labels;
  IngestStats stats;
  std::vector<std::string> warnings;
  std::string error;
};

constexpr std::string_view kAnnotationSuffix = "_polygons.json";

std::vector<ImageJob> discover(const std::string& root) {
  if (!fs::is_directory(root)) throw IoError("ingest: not a directory: " + root);
  std::vector<fs::path> cities;
  for (const auto& e : fs::directory_iterator(root))
    if (e.is_directory()) cities.push_back(e.path());
  std::sort(cities.begin(), cities.end());

  std::vector<ImageJob> jobs;
  for (const auto& city : cities) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(city))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const std::string ext = f.extension().string();
      if (ext != ".ppm" && ext != ".png") continue;
      const std::string stem = f.stem().string();
      fs::path ann = f.parent_path() / (stem + std::string(kAnnotationSuffix));
      if (!fs::exists(ann)) continue;
      // Prefer the .ppm when both encodings exist.
      if (ext == ".png" && fs::exists(f.parent_path() / (stem + ".ppm"))) continue;
      jobs.push_back({city.filename().string(), stem, f, ann});
    }
  }
  return jobs;
}

}  // namespace

std::vector<Tensor> crops_from_image(const RgbImage& image, const Annotation& annotation, const IngestOptions& options,
                                     std::vector<std::size_t>& kept, IngestStats* stats) {
  kept.clear();
  std::vector<Tensor> out;
  const Tensor pixels = to_tensor(image);
  const std::set<std::string> allowed(options.classes.begin(), options.classes.end());
  for (std::size_t i = 0; i < annotation.polygons.size(); ++i) {
    const auto& poly = annotation.polygons[i];
    if (stats) ++stats->polygons;
    if (!allowed.empty() && !allowed.count(poly.label)) {
      if (stats) ++stats->filtered_label;
      continue;
    }
    const BoundingBox box = bounding_box(poly);
    if (box.width() < options.min_side || box.height() < options.min_side) {
      if (stats) ++stats->too_small;
      continue;
    }
    out.push_back(resize_64(min_area_crop(pixels, poly), options.resize));
    kept.push_back(i);
  }
  return out;
}

namespace {

CropStore assemble(const std::vector<ImageJob>& jobs, std::vector<ImageResult>& results, const IngestOptions& options,
                   IngestStats* stats) {
  const auto warn = options.warn ? options.warn : [](const std::string& m) { std::cerr << "warning: " << m << "\n"; };
  CropStore store;
  store.labels = LabelSet(options.classes);
  IngestStats total;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    ImageResult& r = results[j];
    if (!r.error.empty()) throw IoError("ingest: " + r.error);
    for (const auto& w : r.warnings) warn(w);
    total.images += 1;
    total.polygons += r.stats.polygons;
    total.too_small += r.stats.too_small;
    total.filtered_label += r.stats.filtered_label;
    total.warnings += r.warnings.size();
    for (std::size_t k = 0; k < r.crops.size(); ++k) {
      const std::size_t id = store.labels.add(r.labels[k]);
      if (id > UINT16_MAX) throw ParameterError("ingest: more than 65536 labels");
      store.samples.push_back(Sample::from_tensor(
          r.crops[k], static_cast<std::uint16_t>(id),
          {jobs[j].city, jobs[j].image_id, static_cast<std::uint32_t>(r.polygon_index[k])}));
    }
  }
  if (stats) *stats = total;
  return store;
}

}  // namespace

CropStore ingest_scenes(const std::vector<SynthImage>& scenes, const IngestOptions& options, IngestStats* stats) {
  std::vector<ImageJob> jobs(scenes.size());
  std::vector<ImageResult> results(scenes.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(scenes.size()); ++j) {
    const SynthImage& sc = scenes[static_cast<std::size_t>(j)];
    ImageResult& r = results[static_cast<std::size_t>(j)];
    jobs[static_cast<std::size_t>(j)] = {sc.city, sc.image_id, {}, {}};
    for (const auto& w : sc.annotation.warnings) r.warnings.push_back(sc.image_id + ": " + w);
    try {
      r.crops = crops_from_image(sc.image, sc.annotation, options, r.polygon_index, &r.stats);
      for (std::size_t k : r.polygon_index) r.labels.push_back(sc.annotation.polygons[k].label);
    } catch (const std::exception& e) {
      r.error = sc.image_id + ": " + e.what();
    }
  }
  return assemble(jobs, results, options, stats);
}

CropStore ingest_directory(const std::string& root, const IngestOptions& options, IngestStats* stats) {
  const auto jobs = discover(root);
  std::vector<ImageResult> results(jobs.size());

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t j = 0; j < static_cast<std::ptrdiff_t>(jobs.size()); ++j) {
    const ImageJob& job = jobs[static_cast<std::size_t>(j)];
    ImageResult& r = results[static_cast<std::size_t>(j)];
    try {
      const RgbImage image = read_image(job.image_path.string());
      const auto bytes = read_file_bytes(job.annotation_path.string());
      Annotation ann = parse_annotation(std::string(bytes.begin(), bytes.end()));
      if (ann.width != static_cast<int>(image.width) || ann.height != static_cast<int>(image.height)) {
        throw ParseError(job.annotation_path.string(), "annotation size " + std::to_string(ann.width) + "x" +
                                                          std::to_string(ann.height) + " does not match the image");
      }
      for (auto& w : ann.warnings) r.warnings.push_back(job.annotation_path.string() + ": " + w);
      r.crops = crops_from_image(image, ann, options, r.polygon_index, &r.stats);
      for (std::size_t k : r.polygon_index) r.labels.push_back(ann.polygons[k].label);
    } catch (const ParseError& e) {
      r.error = e.location().rfind(job.annotation_path.string(), 0) == 0
                    ? e.what()
                    : job.annotation_path.string() + ": " + e.what();
    } catch (const std::exception& e) {
      r.error = job.image_path.string() + ": " + e.what();
    }
  }

  return assemble(jobs, results, options, stats);
}

}  // namespace owl
