#include "owl/network_io.hpp"

#include <fstream>
#include <iterator>

#include "owl/binary_io.hpp"
#include "owl/error.hpp"

namespace owl {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

std::uint64_t fnv1a64(const std::uint8_t* data, std::size_t size, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= data[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::uint8_t> serialize_network(const Network& network) {
  ByteWriter w;
  w.magic("OWNN");
  w.u16(kNetworkFormatVersion);
  w.u8(network.architecture_tag());
  const auto& in = network.input_shape();
  w.u32(static_cast<std::uint32_t>(in.size()));
  for (auto d : in) w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(network.layers().size()));
  for (const auto& layer : network.layers()) {
    const auto& s = layer.spec();
    w.u8(static_cast<std::uint8_t>(s.kind));
    w.u8(static_cast<std::uint8_t>(s.activation));
    w.u32(static_cast<std::uint32_t>(s.kernel));
    w.u32(static_cast<std::uint32_t>(s.filters));
    w.u32(static_cast<std::uint32_t>(s.stride));
    w.u32(static_cast<std::uint32_t>(s.window));
    w.u32(static_cast<std::uint32_t>(s.units));
    w.f64(s.rate);
    w.u32(static_cast<std::uint32_t>(layer.params().size()));
    for (const auto& p : layer.params()) {
      w.u32(static_cast<std::uint32_t>(p.rank()));
      for (auto d : p.shape()) w.u32(static_cast<std::uint32_t>(d));
      for (float v : p.storage()) w.f32(v);
    }
  }
  return w.take();
}

Network deserialize_network(const std::vector<std::uint8_t>& bytes) {
  ByteReader r(bytes, "network file");
  r.expect_magic("OWNN");
  const auto version = r.u16();
  if (version != kNetworkFormatVersion) {
    throw FormatError("network file: unsupported version " + std::to_string(version));
  }
  const std::uint8_t arch = r.u8();
  const auto rank = r.u32();
  if (rank == 0 || rank > 8) throw FormatError("network file: implausible input rank");
  Shape input(rank);
  for (auto& d : input) d = r.u32();
  const auto count = r.u32();
  if (count == 0 || count > 1024) throw FormatError("network file: implausible layer count");

  std::vector<LayerSpec> specs(count);
  std::vector<std::vector<Tensor>> params(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    LayerSpec& s = specs[i];
    const auto kind = r.u8();
    if (kind < 1 || kind > 6) throw FormatError("network file: layer " + std::to_string(i) + " has unknown kind");
    s.kind = static_cast<LayerKind>(kind);
    const auto act = r.u8();
    if (act > 1) throw FormatError("network file: layer " + std::to_string(i) + " has unknown activation");
    s.activation = static_cast<HeadActivation>(act);
    s.kernel = r.u32();
    s.filters = r.u32();
    s.stride = r.u32();
    s.window = r.u32();
    s.units = r.u32();
    s.rate = r.f64();
    const auto np = r.u32();
    if (np > 2) throw FormatError("network file: layer " + std::to_string(i) + " has too many tensors");
    for (std::uint32_t p = 0; p < np; ++p) {
      const auto prank = r.u32();
      if (prank == 0 || prank > 8) throw FormatError("network file: implausible tensor rank");
      Shape shape(prank);
      for (auto& d : shape) d = r.u32();
      const std::size_t n = shape_size(shape);
      if (n * 4 > r.remaining()) throw FormatError("network file: truncated tensor data");
      std::vector<float> data(n);
      for (auto& v : data) v = r.f32();
      params[i].emplace_back(std::move(shape), std::move(data));
    }
  }
  r.expect_end();

  Network net = [&] {
    try {
      return Network(input, specs, arch);
    } catch (const Error& e) {
      throw FormatError(std::string("network file: inconsistent layer list: ") + e.what());
    }
  }();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto& dst = net.mutable_params(i);
    if (dst.size() != params[i].size()) throw FormatError("network file: layer " + std::to_string(i) + " tensor count");
    for (std::size_t p = 0; p < dst.size(); ++p) {
      if (dst[p].shape() != params[i][p].shape()) {
        throw FormatError("network file: layer " + std::to_string(i) + " tensor shape " +
                          shape_string(params[i][p].shape()) + " expected " + shape_string(dst[p].shape()));
      }
      dst[p] = std::move(params[i][p]);
    }
  }
  return net;
}

void save_network(const Network& network, const std::string& path) {
  write_file_bytes(path, serialize_network(network));
}

Network load_network(const std::string& path) { return deserialize_network(read_file_bytes(path)); }

}  // namespace owl
