#pragma once

// Compute kernels behind the network layers.
//
// Two implementations share one interface:
//   owl::kernels            OpenMP-parallel, loop orders chosen for SIMD
//   owl::kernels::reference plain serial loops, kept as the ground truth for
//                           tests and as the benchmark baseline
//
// Layout conventions: images are H x W x C row-major, convolution kernels are
// Kh x Kw x Cin x Cout, dense weights are out x in. Every parallel loop writes
// disjoint outputs and keeps a fixed per-element summation order, so results do
// not depend on the thread count.
//
// Backward kernels accumulate into parameter gradients and overwrite the input
// gradient. An empty grad_in span skips the input gradient.

#include <cstddef>
#include <cstdint>
#include <span>

namespace owl::kernels {

struct ConvGeometry {
  std::size_t in_h = 0, in_w = 0, in_c = 0;
  std::size_t k_h = 0, k_w = 0, out_c = 0;
  std::size_t stride = 1;

  std::size_t out_h() const { return (in_h - k_h) / stride + 1; }
  std::size_t out_w() const { return (in_w - k_w) / stride + 1; }
  std::size_t input_size() const { return in_h * in_w * in_c; }
  std::size_t kernel_size() const { return k_h * k_w * in_c * out_c; }
  std::size_t output_size() const { return out_h() * out_w() * out_c; }
};

struct PoolGeometry {
  std::size_t in_h = 0, in_w = 0, channels = 0;
  std::size_t window = 1;

  std::size_t out_h() const { return in_h / window; }
  std::size_t out_w() const { return in_w / window; }
  std::size_t input_size() const { return in_h * in_w * channels; }
  std::size_t output_size() const { return out_h() * out_w() * channels; }
};

// Throws DimensionError when the spans do not match the geometry.
void check(const ConvGeometry& g, std::size_t in, std::size_t kernels, std::size_t bias,
           std::size_t out);
void check(const PoolGeometry& g, std::size_t in, std::size_t out);

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> kernels,
                    std::span<const T> bias, std::span<T> out);

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> in, std::span<const T> kernels,
                     std::span<const T> grad_out, std::span<T> grad_in, std::span<T> grad_kernels,
                     std::span<T> grad_bias);

// argmax receives, per output element, the flat input index of the window max
// (first occurrence in row-major window order on ties).
template <typename T>
void maxpool_forward(const PoolGeometry& g, std::span<const T> in, std::span<T> out,
                     std::span<std::uint32_t> argmax);

template <typename T>
void maxpool_backward(const PoolGeometry& g, std::span<const T> grad_out,
                      std::span<const std::uint32_t> argmax, std::span<T> grad_in);

template <typename T>
void dense_forward(std::size_t in_n, std::size_t out_m, std::span<const T> in,
                   std::span<const T> weights, std::span<const T> bias, std::span<T> out);

template <typename T>
void dense_backward(std::size_t in_n, std::size_t out_m, std::span<const T> in,
                    std::span<const T> weights, std::span<const T> grad_out, std::span<T> grad_in,
                    std::span<T> grad_weights, std::span<T> grad_bias);

// Number of threads the parallel kernels will use.
int thread_count();

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> kernels,
                    std::span<const T> bias, std::span<T> out);

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> in, std::span<const T> kernels,
                     std::span<const T> grad_out, std::span<T> grad_in, std::span<T> grad_kernels,
                     std::span<T> grad_bias);

template <typename T>
void maxpool_forward(const PoolGeometry& g, std::span<const T> in, std::span<T> out,
                     std::span<std::uint32_t> argmax);

template <typename T>
void maxpool_backward(const PoolGeometry& g, std::span<const T> grad_out,
                      std::span<const std::uint32_t> argmax, std::span<T> grad_in);

template <typename T>
void dense_forward(std::size_t in_n, std::size_t out_m, std::span<const T> in,
                   std::span<const T> weights, std::span<const T> bias, std::span<T> out);

template <typename T>
void dense_backward(std::size_t in_n, std::size_t out_m, std::span<const T> in,
                    std::span<const T> weights, std::span<const T> grad_out, std::span<T> grad_in,
                    std::span<T> grad_weights, std::span<T> grad_bias);

}  // namespace reference
}  // namespace owl::kernels
