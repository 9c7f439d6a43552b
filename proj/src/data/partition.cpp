#include "owl/partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "owl/error.hpp"
#include "owl/rng.hpp"

namespace owl {

CityPartition partition_cities(const std::vector<std::string>& cities, std::size_t n_train, std::size_t n_test,
                               std::uint64_t seed) {
  if (n_train + n_test > cities.size()) {
    throw ParameterError("partition_cities: need " + std::to_string(n_train + n_test) + " cities, have " +
                         std::to_string(cities.size()));
  }
  std::vector<std::string> order = cities;
  std::sort(order.begin(), order.end());
  if (std::adjacent_find(order.begin(), order.end()) != order.end()) {
    throw ParameterError("partition_cities: duplicate city names");
  }
  Rng rng(seed);
  rng.shuffle(std::span<std::string>(order));
  CityPartition p;
  p.train_cities.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  p.test_cities.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                       order.begin() + static_cast<std::ptrdiff_t>(n_train + n_test));
  return p;
}

IndexSplit split_indices(std::size_t n, std::size_t n_parts, double stack_fraction, std::uint64_t seed) {
  if (n_parts < 1) throw ParameterError("split_indices: need at least one part");
  if (!(stack_fraction >= 0.0 && stack_fraction < 1.0)) {
    throw ParameterError("stack fraction must lie in [0, 1)");
  }
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(idx));

  const auto withheld = static_cast<std::size_t>(std::llround(stack_fraction * static_cast<double>(n)));
  IndexSplit out;
  out.withheld.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(withheld));
  std::sort(out.withheld.begin(), out.withheld.end());
  const std::size_t rest = n - withheld;
  out.parts.resize(n_parts);
  std::size_t pos = withheld;
  for (std::size_t p = 0; p < n_parts; ++p) {
    const std::size_t len = rest / n_parts + (p < rest % n_parts ? 1 : 0);
    out.parts[p].assign(idx.begin() + static_cast<std::ptrdiff_t>(pos),
                        idx.begin() + static_cast<std::ptrdiff_t>(pos + len));
    std::sort(out.parts[p].begin(), out.parts[p].end());
    pos += len;
  }
  return out;
}

MemberSplits split_members(const CropStore& store, std::size_t n_members, double stack_fraction,
                           std::uint64_t seed) {
  if (n_members < 2) throw ParameterError("split_members: a committee needs at least 2 members");
  if (store.size() < 2 * n_members) {
    throw ParameterError("split_members: store of " + std::to_string(store.size()) + " samples is too small for " +
                         std::to_string(n_members) + " members");
  }
  const IndexSplit split = split_indices(store.size(), n_members, stack_fraction, seed);
  MemberSplits out;
  auto gather = [&](const std::vector<std::size_t>& idx) {
    CropStore s;
    s.labels = store.labels;
    s.samples.reserve(idx.size());
    for (auto i : idx) s.samples.push_back(store.samples[i]);
    return s;
  };
  for (const auto& part : split.parts) out.members.push_back(gather(part));
  out.stacking = gather(split.withheld);
  return out;
}

}  // namespace owl
