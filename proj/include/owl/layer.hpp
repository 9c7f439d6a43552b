#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "owl/kernels.hpp"
#include "owl/rng.hpp"
#include "owl/tensor.hpp"

namespace owl {

enum class LayerKind : std::uint8_t {
  conv2d = 1,
  maxpool = 2,
  relu = 3,
  dropout = 4,
  dense = 5,
  sigmoid_output = 6,
};

// Activation applied to the output head's logits. The head is named after its
// default; softmax is kept as a configuration option.
enum class HeadActivation : std::uint8_t { sigmoid = 0, softmax = 1 };

enum class Mode { train, eval };

std::string to_string(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t kernel = 3;   // conv2d
  std::size_t filters = 1;  // conv2d
  std::size_t stride = 1;   // conv2d
  std::size_t window = 2;   // maxpool
  double rate = 0.0;        // dropout
  std::size_t units = 1;    // dense, sigmoid_output
  HeadActivation activation = HeadActivation::sigmoid;

  static LayerSpec conv2d(std::size_t filters, std::size_t kernel = 3, std::size_t stride = 1);
  static LayerSpec maxpool(std::size_t window);
  static LayerSpec relu();
  static LayerSpec dropout(double rate);
  static LayerSpec dense(std::size_t units);
  static LayerSpec sigmoid_output(std::size_t units, HeadActivation activation = HeadActivation::sigmoid);

  // Throws ParameterError on out-of-domain fields.
  void validate() const;
  bool has_parameters() const {
    return kind == LayerKind::conv2d || kind == LayerKind::dense || kind == LayerKind::sigmoid_output;
  }
  std::string describe() const;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// Output shape of a layer for a given input shape; throws DimensionError when
// the layer cannot accept the input.
Shape infer_output_shape(const LayerSpec& spec, const Shape& input);

// Per-sample bookkeeping a forward pass leaves for the matching backward pass.
struct LayerCache {
  std::vector<std::uint32_t> argmax;  // maxpool
  std::vector<std::uint8_t> mask;     // dropout survivors
  double keep_scale = 1.0;            // what forward multiplied survivors by
};

// One layer: its spec, resolved shapes, and parameters. Parameter order is
// (weights, bias) for conv2d / dense / output layers and empty otherwise.
template <typename T>
class BasicLayer {
 public:
  BasicLayer(LayerSpec spec, Shape input_shape);

  const LayerSpec& spec() const { return spec_; }
  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return output_shape_; }

  std::vector<BasicTensor<T>>& params() { return params_; }
  const std::vector<BasicTensor<T>>& params() const { return params_; }
  std::size_t parameter_count() const;

  // Glorot-uniform weights, zero biases.
  void initialize(Rng& rng);

  void forward(const BasicTensor<T>& in, BasicTensor<T>& out, LayerCache& cache, Mode mode,
               Rng* rng) const;

  // grad_in may be null when the input gradient is not needed. Parameter
  // gradients are accumulated into param_grads.
  void backward(const BasicTensor<T>& in, const BasicTensor<T>& out, const BasicTensor<T>& grad_out,
                const LayerCache& cache, BasicTensor<T>* grad_in,
                std::span<BasicTensor<T>> param_grads) const;

  // Append rows to an output layer. Existing rows stay bit-identical.
  void grow_units(std::size_t new_units, Rng* rng, double init_range);

 private:
  kernels::ConvGeometry conv_geometry() const;
  kernels::PoolGeometry pool_geometry() const;

  LayerSpec spec_;
  Shape input_shape_;
  Shape output_shape_;
  std::vector<BasicTensor<T>> params_;
};

using Layer = BasicLayer<float>;

}  // namespace owl
