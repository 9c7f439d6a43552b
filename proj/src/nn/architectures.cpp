#include "owl/architectures.hpp"

#include "owl/error.hpp"

namespace owl {

std::string to_string(ArchitectureId id) {
  switch (id) {
    case ArchitectureId::A: return "A";
    case ArchitectureId::B: return "B";
    case ArchitectureId::C: return "C";
  }
  return "?";
}

ArchitectureId parse_architecture(const std::string& text) {
  if (text == "A" || text == "a") return ArchitectureId::A;
  if (text == "B" || text == "b") return ArchitectureId::B;
  if (text == "C" || text == "c") return ArchitectureId::C;
  throw ParameterError("unknown architecture '" + text + "' (expected A, B or C)");
}

std::optional<ArchitectureId> architecture_from_tag(std::uint8_t tag) {
  if (tag >= 1 && tag <= 3) return static_cast<ArchitectureId>(tag);
  return std::nullopt;
}

std::vector<std::size_t> default_filters(ArchitectureId id) {
  if (id == ArchitectureId::C) return {32, 64, 64};
  return {32, 64};
}

NetworkBlueprint make_blueprint(ArchitectureId id, std::size_t num_classes, const ArchitectureConfig& config) {
  if (num_classes < 1) throw ParameterError("number of classes must be >= 1");
  const std::vector<std::size_t> filters = config.filters.empty() ? default_filters(id) : config.filters;
  const std::size_t convs = id == ArchitectureId::C ? 3 : 2;
  if (filters.size() != convs) {
    throw ParameterError("architecture " + to_string(id) + " takes " + std::to_string(convs) + " filter counts");
  }
  const std::size_t k = config.kernel;
  std::vector<LayerSpec> l;
  auto conv = [&](std::size_t f) {
    l.push_back(LayerSpec::conv2d(f, k));
    l.push_back(LayerSpec::relu());
  };
  conv(filters[0]);
  conv(filters[1]);
  switch (id) {
    case ArchitectureId::A:
      l.push_back(LayerSpec::maxpool(4));
      break;
    case ArchitectureId::B:
      l.push_back(LayerSpec::maxpool(2));
      l.push_back(LayerSpec::dropout(kDropoutRate));
      break;
    case ArchitectureId::C:
      l.push_back(LayerSpec::maxpool(2));
      conv(filters[2]);
      l.push_back(LayerSpec::maxpool(4));
      l.push_back(LayerSpec::dropout(kDropoutRate));
      break;
  }
  l.push_back(LayerSpec::dense(config.dense_units));
  l.push_back(LayerSpec::relu());
  l.push_back(LayerSpec::sigmoid_output(num_classes, config.head));
  return NetworkBlueprint{id, config.input_shape, std::move(l), num_classes};
}

std::vector<LayerKind> structural_kinds(const std::vector<LayerSpec>& layers) {
  std::vector<LayerKind> kinds;
  for (const auto& s : layers)
    if (s.kind != LayerKind::relu) kinds.push_back(s.kind);
  return kinds;
}

Network build_cnn(ArchitectureId id, std::size_t num_classes, std::uint64_t seed, const ArchitectureConfig& config) {
  const auto bp = make_blueprint(id, num_classes, config);
  Network net(bp.input_shape, bp.layers, static_cast<std::uint8_t>(id));
  net.initialize(seed);
  return net;
}

Network expand_output(const Network& network, std::size_t new_k, std::uint64_t seed, NewUnitInit init) {
  if (new_k <= network.output_width()) {
    throw ParameterError("expand_output: new width " + std::to_string(new_k) + " must exceed current " +
                         std::to_string(network.output_width()));
  }
  Network grown = network;
  Rng rng(seed);
  grown.grow_output(new_k, init == NewUnitInit::zero ? nullptr : &rng, kNewUnitInitRange);
  return grown;
}

}  // namespace owl
