#include "owl/crop_store.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "owl/binary_io.hpp"
#include "owl/error.hpp"

namespace owl {

Tensor Sample::pixels() const {
  Tensor t(Shape{64, 64, 3});
  for (std::size_t i = 0; i < kSampleBytes; ++i) t[i] = static_cast<float>(bytes[i]) / 255.0f;
  return t;
}

Sample Sample::from_tensor(const Tensor& pixels, std::uint16_t label_id, Provenance provenance) {
  if (pixels.shape() != Shape{64, 64, 3}) {
    throw DimensionError("sample pixels must be 64x64x3, got " + shape_string(pixels.shape()));
  }
  Sample s;
  s.bytes.resize(kSampleBytes);
  for (std::size_t i = 0; i < kSampleBytes; ++i) {
    s.bytes[i] = static_cast<std::uint8_t>(std::lround(std::clamp(pixels[i], 0.0f, 1.0f) * 255.0f));
  }
  s.label_id = label_id;
  s.provenance = std::move(provenance);
  return s;
}

CropStore CropStore::filter(const std::function<bool(const Sample&)>& keep) const {
  CropStore out;
  out.labels = labels;
  for (const auto& s : samples)
    if (keep(s)) out.samples.push_back(s);
  return out;
}

CropStore CropStore::with_cities(const std::vector<std::string>& cities) const {
  const std::set<std::string> wanted(cities.begin(), cities.end());
  return filter([&](const Sample& s) { return wanted.count(s.provenance.city) > 0; });
}

CropStore CropStore::with_labels(const std::vector<std::string>& names) const {
  std::set<std::uint16_t> ids;
  for (const auto& n : names) ids.insert(static_cast<std::uint16_t>(labels.index(n)));
  return filter([&](const Sample& s) { return ids.count(s.label_id) > 0; });
}

std::vector<std::string> CropStore::cities() const {
  std::set<std::string> c;
  for (const auto& s : samples) c.insert(s.provenance.city);
  return {c.begin(), c.end()};
}

std::vector<std::size_t> CropStore::class_counts() const {
  std::vector<std::size_t> counts(labels.size(), 0);
  for (const auto& s : samples) ++counts.at(s.label_id);
  return counts;
}

std::set<std::string> CropStore::provenance_keys() const {
  std::set<std::string> keys;
  for (const auto& s : samples) keys.insert(s.provenance.key());
  return keys;
}

void CropStore::validate() const {
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].label_id >= labels.size()) {
      throw ParameterError("sample " + std::to_string(i) + " label id out of range");
    }
    if (samples[i].bytes.size() != kSampleBytes) {
      throw ParameterError("sample " + std::to_string(i) + " has " + std::to_string(samples[i].bytes.size()) +
                           " pixel bytes");
    }
  }
}

std::vector<std::uint8_t> serialize_store(const CropStore& store) {
  store.validate();
  ByteWriter w;
  w.magic("OWC1");
  w.u16(kCropStoreVersion);
  w.u32(static_cast<std::uint32_t>(store.labels.size()));
  for (const auto& n : store.labels.names()) w.str16(n);
  w.u32(static_cast<std::uint32_t>(store.samples.size()));
  for (const auto& s : store.samples) {
    w.u16(s.label_id);
    w.str16(s.provenance.city);
    w.str16(s.provenance.image_id);
    w.u32(s.provenance.polygon_index);
    w.raw(s.bytes.data(), s.bytes.size());
  }
  return w.take();
}

CropStore deserialize_store(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "crop store");
  r.expect_magic("OWC1");
  const auto version = r.u16();
  if (version != kCropStoreVersion) throw FormatError("crop store: unsupported version " + std::to_string(version));
  CropStore store;
  const auto nlabels = r.u32();
  for (std::uint32_t i = 0; i < nlabels; ++i) {
    try {
      store.labels.append_new(r.str16());
    } catch (const ParameterError& e) {
      throw FormatError(std::string("crop store: bad label table: ") + e.what());
    }
  }
  const auto count = r.u32();
  if (static_cast<std::size_t>(count) > r.remaining() / (kSampleBytes + 10)) {
    throw FormatError("crop store: sample count exceeds file size");
  }
  store.samples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Sample s;
    s.label_id = r.u16();
    if (s.label_id >= store.labels.size()) {
      throw FormatError("crop store: sample " + std::to_string(i) + " label id out of range");
    }
    s.provenance.city = r.str16();
    s.provenance.image_id = r.str16();
    s.provenance.polygon_index = r.u32();
    const std::uint8_t* px = r.raw(kSampleBytes);
    s.bytes.assign(px, px + kSampleBytes);
    store.samples.push_back(std::move(s));
  }
  r.expect_end();
  return store;
}

void save_store(const CropStore& store, const std::string& path) { write_file_bytes(path, serialize_store(store)); }

CropStore load_store(const std::string& path) { return deserialize_store(read_file_bytes(path)); }

std::string store_fingerprint(const CropStore& store) {
  const auto bytes = serialize_store(store);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes.data(), bytes.size())));
  return buf;
}

}  // namespace owl
