#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "owl/network.hpp"

namespace owl {

// The three committee-member structures:
//   A: conv, conv, maxpool(4), dense, output
//   B: conv, conv, maxpool(2), dropout(0.2), dense, output
//   C: conv, conv, maxpool(2), conv, maxpool(4), dropout(0.2), dense, output
// Every conv and the hidden dense layer are followed by a ReLU.
enum class ArchitectureId : std::uint8_t { A = 1, B = 2, C = 3 };

std::string to_string(ArchitectureId id);
ArchitectureId parse_architecture(const std::string& text);  // "A" | "B" | "C"
std::optional<ArchitectureId> architecture_from_tag(std::uint8_t tag);

// Width/size knobs the structures leave open. Empty filters means the default
// for the architecture: {32, 64} for A and B, {32, 64, 64} for C.
struct ArchitectureConfig {
  std::vector<std::size_t> filters;
  std::size_t kernel = 3;
  std::size_t dense_units = 250;
  Shape input_shape{64, 64, 3};
  HeadActivation head = HeadActivation::sigmoid;
};

inline constexpr double kDropoutRate = 0.2;
inline constexpr double kNewUnitInitRange = 0.05;

std::vector<std::size_t> default_filters(ArchitectureId id);

struct NetworkBlueprint {
  ArchitectureId architecture;
  Shape input_shape;
  std::vector<LayerSpec> layers;
  std::size_t output_width = 0;
};

NetworkBlueprint make_blueprint(ArchitectureId id, std::size_t num_classes, const ArchitectureConfig& config = {});

// Structure of a blueprint with the ReLUs removed, e.g. {conv2d, conv2d, maxpool, dense, sigmoid_output}.
std::vector<LayerKind> structural_kinds(const std::vector<LayerSpec>& layers);

Network build_cnn(ArchitectureId id, std::size_t num_classes, std::uint64_t seed,
                  const ArchitectureConfig& config = {});

enum class NewUnitInit { small_uniform, zero };

// Copy of `network` whose output head has new_k units. Existing head rows and
// all earlier layers are untouched; new rows are uniform(-0.05, 0.05) from the
// seed, or zero.
Network expand_output(const Network& network, std::size_t new_k, std::uint64_t seed,
                      NewUnitInit init = NewUnitInit::small_uniform);

}  // namespace owl
