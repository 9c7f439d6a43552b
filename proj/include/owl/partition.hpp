#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "owl/crop_store.hpp"

namespace owl {

struct CityPartition {
  std::vector<std::string> train_cities;
  std::vector<std::string> test_cities;
};

// Seeded shuffle of `cities`, then the first n_train go to training and the
// next n_test to testing.
CityPartition partition_cities(const std::vector<std::string>& cities, std::size_t n_train, std::size_t n_test,
                               std::uint64_t seed);

inline constexpr double kDefaultStackFraction = 0.2;

struct MemberSplits {
  std::vector<CropStore> members;
  CropStore stacking;
};

// Index-level split: round(stack_fraction * n) indices are withheld, the rest
// are dealt into n_parts groups whose sizes differ by at most one. Indices in
// each group keep their original order.
struct IndexSplit {
  std::vector<std::vector<std::size_t>> parts;
  std::vector<std::size_t> withheld;
};
IndexSplit split_indices(std::size_t n, std::size_t n_parts, double stack_fraction, std::uint64_t seed);

// Committee split of a training store. Requires n_members >= 2 and
// |store| >= 2 * n_members.
MemberSplits split_members(const CropStore& store, std::size_t n_members, double stack_fraction,
                           std::uint64_t seed);

}  // namespace owl
