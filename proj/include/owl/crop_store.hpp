#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "owl/label_set.hpp"
#include "owl/tensor.hpp"

namespace owl {

inline constexpr std::size_t kSampleBytes = 64 * 64 * 3;

struct Provenance {
  std::string city;
  std::string image_id;
  std::uint32_t polygon_index = 0;

  // Unique per crop within a dataset: "city/image#index".
  std::string key() const { return city + "/" + image_id + "#" + std::to_string(polygon_index); }
  friend bool operator==(const Provenance&, const Provenance&) = default;
};

// One 64x64 RGB crop. Pixels are kept as the stored u8 values so that every
// tensor view of a sample is exactly reproducible from the store file.
struct Sample {
  std::vector<std::uint8_t> bytes;  // kSampleBytes, row-major RGB
  std::uint16_t label_id = 0;
  Provenance provenance;

  // 64 x 64 x 3 tensor, channel / 255.
  Tensor pixels() const;
  static Sample from_tensor(const Tensor& pixels, std::uint16_t label_id, Provenance provenance);

  friend bool operator==(const Sample&, const Sample&) = default;
};

// Ordered samples together with the label set their ids index into.
struct CropStore {
  LabelSet labels;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  const std::string& label_name(const Sample& s) const { return labels.name(s.label_id); }

  // Subset with the same label set, preserving order.
  CropStore filter(const std::function<bool(const Sample&)>& keep) const;
  CropStore with_cities(const std::vector<std::string>& cities) const;
  CropStore with_labels(const std::vector<std::string>& names) const;

  std::vector<std::string> cities() const;  // sorted, unique
  std::vector<std::size_t> class_counts() const;
  std::set<std::string> provenance_keys() const;

  // Throws ParameterError when a label id is out of range or a crop has the
  // wrong byte count.
  void validate() const;

  friend bool operator==(const CropStore& a, const CropStore& b) {
    return a.labels == b.labels && a.samples == b.samples;
  }
};

// Store file layout (little-endian):
//   "OWC1"  u16 version
//   u32 label count, per label: u16 byte length + UTF-8 name
//   u32 sample count, per sample:
//     u16 label id, u16-prefixed city, u16-prefixed image id, u32 polygon index,
//     64*64*3 u8 pixels (row-major RGB)
inline constexpr std::uint16_t kCropStoreVersion = 1;

std::vector<std::uint8_t> serialize_store(const CropStore& store);
CropStore deserialize_store(const std::vector<std::uint8_t>& bytes);
void save_store(const CropStore& store, const std::string& path);
CropStore load_store(const std::string& path);

// FNV-1a over the serialized store, as 16 hex digits.
std::string store_fingerprint(const CropStore& store);

}  // namespace owl
