#pragma once

// Central finite-difference checks in 64-bit, shared by the unit tests and
// the acceptance suite.

#include <cstdint>
#include <string>

#include "owl/architectures.hpp"
#include "owl/layer.hpp"

namespace gradcheck {

inline constexpr double kStep = 1e-5;
inline constexpr double kTolerance = 1e-4;

struct Report {
  std::size_t cases = 0;
  std::size_t values = 0;  // gradient entries compared
  double max_error = 0.0;
  std::string worst;

  void merge(const Report& other);
  bool ok() const { return values > 0 && max_error < kTolerance; }
};

// |a - n| / max(|a|, |n|, 1e-6).
double relative_error(double analytic, double numeric);

// `cases` random instances of one layer kind (random shapes, inputs and
// parameters). The scalar objective is a fixed random projection of the
// layer output, so both the input gradient and every parameter gradient are
// compared.
Report check_layer(owl::LayerKind kind, std::size_t cases, std::uint64_t seed);

// Mean BCE against random one-hot targets, gradient taken w.r.t. the logits.
Report check_bce(std::size_t cases, std::uint64_t seed);

// Every parameter of a small full network of the given architecture. Train
// mode with a fixed dropout mask per evaluation.
Report check_architecture(owl::ArchitectureId id, std::uint64_t seed);

// The 4x4-input A network with 1x1 kernels.
Report check_tiny_a(std::uint64_t seed);

}  // namespace gradcheck
