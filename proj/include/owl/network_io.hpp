#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "owl/network.hpp"

namespace owl {

// Network file layout (all integers little-endian):
//
//   "OWNN"  u16 version  u8 architecture tag
//   u32 input rank, u32 dims[rank]
//   u32 layer count
//   per layer:
//     u8 kind  u8 head activation
//     u32 kernel  u32 filters  u32 stride  u32 window  u32 units  f64 dropout rate
//     u32 parameter tensor count
//     per tensor: u32 rank, u32 dims[rank], f32 values[product(dims)]
inline constexpr std::uint16_t kNetworkFormatVersion = 1;

std::vector<std::uint8_t> serialize_network(const Network& network);
Network deserialize_network(const std::vector<std::uint8_t>& bytes);

void save_network(const Network& network, const std::string& path);
Network load_network(const std::string& path);

}  // namespace owl
