#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "owl/layer.hpp"
#include "owl/rng.hpp"
#include "owl/tensor.hpp"

namespace owl {

// Parameter gradients, one tensor per layer parameter, congruent with the
// owning network.
template <typename T>
struct BasicGradients {
  std::vector<std::vector<BasicTensor<T>>> layers;

  void zero();
  void scale(T factor);
  void add(const BasicGradients& other);
  double squared_norm() const;
  // Index of the first layer holding a non-finite value, or -1.
  int first_non_finite_layer() const;
};

template <typename T>
class BasicNetwork;

// Activations and caches left by one training forward pass. A trace may be
// consumed by exactly one backward pass on the same, unmodified network.
template <typename T>
class BasicForwardTrace {
 public:
  const BasicTensor<T>& logits() const { return activations.back(); }

 private:
  friend class BasicNetwork<T>;
  std::vector<BasicTensor<T>> activations;  // [0] is the input
  std::vector<LayerCache> caches;
  std::uint64_t network_id = 0;
  std::uint64_t revision = 0;
  bool consumed = true;
};

// Feed-forward CNN ending in an output head that emits K logits. The head's
// activation (sigmoid by default) turns them into per-class scores.
template <typename T>
class BasicNetwork {
 public:
  // Validates the whole shape chain; a bad layer list fails here, never later.
  // The last layer must be the (only) output layer.
  BasicNetwork(Shape input_shape, std::vector<LayerSpec> specs, std::uint8_t architecture_tag = 0);

  BasicNetwork(const BasicNetwork& other);
  BasicNetwork& operator=(const BasicNetwork& other);
  BasicNetwork(BasicNetwork&&) noexcept;
  BasicNetwork& operator=(BasicNetwork&&) noexcept;

  // Seeded Glorot initialisation of every parametrised layer.
  void initialize(std::uint64_t seed);

  const Shape& input_shape() const { return input_shape_; }
  std::size_t output_width() const { return layers_.back().spec().units; }
  HeadActivation head_activation() const { return layers_.back().spec().activation; }
  std::uint8_t architecture_tag() const { return architecture_tag_; }
  std::vector<LayerSpec> specs() const;

  const std::vector<BasicLayer<T>>& layers() const { return layers_; }
  // Mutable parameter access invalidates outstanding traces.
  std::vector<BasicTensor<T>>& mutable_params(std::size_t layer);
  std::size_t parameter_count() const;

  // Eval-mode pass: dropout disabled, no trace.
  BasicTensor<T> logits(const BasicTensor<T>& input) const;
  std::vector<T> scores(const BasicTensor<T>& input) const;

  BasicForwardTrace<T> forward(const BasicTensor<T>& input, Mode mode, Rng& rng) const;

  // Reverse-mode pass for the trace's forward pass. grad_logits is dLoss/dLogits.
  // Accumulates into grads. Throws StateError if the trace is stale or reused.
  void backward(BasicForwardTrace<T>& trace, std::span<const T> grad_logits, BasicGradients<T>& grads) const;

  BasicGradients<T> zero_gradients() const;

  // Grow the output head to new_units; existing rows are preserved bit-exactly.
  // A null rng initialises new rows to zero.
  void grow_output(std::size_t new_units, Rng* rng, double init_range);

  std::uint64_t revision() const { return revision_; }
  void touch() { ++revision_; }

 private:
  static std::uint64_t next_id();

  Shape input_shape_;
  std::vector<BasicLayer<T>> layers_;
  std::uint8_t architecture_tag_ = 0;
  std::uint64_t id_;
  std::uint64_t revision_ = 0;
};

// Head activation as a free function so tests and the stacker share it.
template <typename T>
std::vector<T> apply_head(std::span<const T> logits, HeadActivation activation);

using Network = BasicNetwork<float>;
using Gradients = BasicGradients<float>;
using ForwardTrace = BasicForwardTrace<float>;

}  // namespace owl
