// Serial reference kernels: direct transcriptions of the layer definitions.

#include <algorithm>
#include <string>

#include "owl/error.hpp"
#include "owl/kernels.hpp"

namespace owl::kernels {

void check(const ConvGeometry& g, std::size_t in, std::size_t kernels, std::size_t bias,
           std::size_t out) {
  if (g.stride < 1) throw DimensionError("conv2d: stride must be >= 1");
  if (g.k_h < 1 || g.k_w < 1) throw DimensionError("conv2d: kernel dims must be >= 1");
  if (g.in_h < g.k_h || g.in_w < g.k_w) {
    throw DimensionError("conv2d: input " + std::to_string(g.in_h) + "x" + std::to_string(g.in_w) +
                         " (H x W) smaller than kernel " + std::to_string(g.k_h) + "x" +
                         std::to_string(g.k_w) + " (Kh x Kw)");
  }
  if (in != g.input_size()) throw DimensionError("conv2d: input length does not match H x W x Cin");
  if (kernels != g.kernel_size()) {
    throw DimensionError("conv2d: kernel length does not match Kh x Kw x Cin x Cout");
  }
  if (bias != g.out_c) throw DimensionError("conv2d: bias length does not match Cout");
  if (out != g.output_size()) throw DimensionError("conv2d: output length does not match Ho x Wo x Cout");
}

void check(const PoolGeometry& g, std::size_t in, std::size_t out) {
  if (g.window < 1) throw DimensionError("maxpool: window must be >= 1");
  if (g.in_h < g.window || g.in_w < g.window) {
    throw DimensionError("maxpool: window " + std::to_string(g.window) + " exceeds input " +
                         std::to_string(g.in_h) + "x" + std::to_string(g.in_w) + " (H x W)");
  }
  if (in != g.input_size()) throw DimensionError("maxpool: input length does not match H x W x C");
  if (out != g.output_size()) throw DimensionError("maxpool: output length does not match Ho x Wo x C");
}

namespace reference {

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> kernels,
                    std::span<const T> bias, std::span<T> out) {
  check(g, in.size(), kernels.size(), bias.size(), out.size());
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      for (std::size_t co = 0; co < g.out_c; ++co) {
        T acc = bias[co];
        for (std::size_t ky = 0; ky < g.k_h; ++ky) {
          for (std::size_t kx = 0; kx < g.k_w; ++kx) {
            for (std::size_t ci = 0; ci < g.in_c; ++ci) {
              const std::size_t iy = oy * g.stride + ky, ix = ox * g.stride + kx;
              acc += in[(iy * g.in_w + ix) * g.in_c + ci] *
                     kernels[((ky * g.k_w + kx) * g.in_c + ci) * g.out_c + co];
            }
          }
        }
        out[(oy * ow + ox) * g.out_c + co] = acc;
      }
    }
  }
}

template <typename T>
void conv2d_backward(const ConvGeometry& g, std::span<const T> in, std::span<const T> kernels,
                     std::span<const T> grad_out, std::span<T> grad_in, std::span<T> grad_kernels,
                     std::span<T> grad_bias) {
  check(g, in.size(), kernels.size(), grad_bias.size(), grad_out.size());
  if (grad_kernels.size() != kernels.size()) throw DimensionError("conv2d: kernel gradient length");
  const bool want_in = !grad_in.empty();
  if (want_in && grad_in.size() != in.size()) throw DimensionError("conv2d: input gradient length");
  if (want_in) std::fill(grad_in.begin(), grad_in.end(), T{0});
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      for (std::size_t co = 0; co < g.out_c; ++co) {
        const T go = grad_out[(oy * ow + ox) * g.out_c + co];
        grad_bias[co] += go;
        for (std::size_t ky = 0; ky < g.k_h; ++ky) {
          for (std::size_t kx = 0; kx < g.k_w; ++kx) {
            for (std::size_t ci = 0; ci < g.in_c; ++ci) {
              const std::size_t ii = ((oy * g.stride + ky) * g.in_w + ox * g.stride + kx) * g.in_c + ci;
              const std::size_t ki = ((ky * g.k_w + kx) * g.in_c + ci) * g.out_c + co;
              grad_kernels[ki] += in[ii] * go;
              if (want_in) grad_in[ii] += kernels[ki] * go;
            }
          }
        }
      }
    }
  }
}

template <typename T>
void maxpool_forward(const PoolGeometry& g, std::span<const T> in, std::span<T> out,
                     std::span<std::uint32_t> argmax) {
  check(g, in.size(), out.size());
  if (argmax.size() != out.size()) throw DimensionError("maxpool: argmax length");
  const std::size_t oh = g.out_h(), ow = g.out_w();
  for (std::size_t oy = 0; oy < oh; ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      for (std::size_t c = 0; c < g.channels; ++c) {
        std::size_t best = ((oy * g.window) * g.in_w + ox * g.window) * g.channels + c;
        for (std::size_t dy = 0; dy < g.window; ++dy) {
          for (std::size_t dx = 0; dx < g.window; ++dx) {
            const std::size_t i = ((oy * g.window + dy) * g.in_w + ox * g.window + dx) * g.channels + c;
            if (in[i] > in[best]) best = i;
          }
        }
        const std::size_t o = (oy * ow + ox) * g.channels + c;
        out[o] = in[best];
        argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
}

template <typename T>
void maxpool_backward(const PoolGeometry& g, std::span<const T> grad_out,
                      std::span<const std::uint32_t> argmax, std::span<T> grad_in) {
  check(g, grad_in.size(), grad_out.size());
  std::fill(grad_in.begin(), grad_in.end(), T{0});
  for (std::size_t o = 0; o < grad_out.size(); ++o) grad_in[argmax[o]] += grad_out[o];
}

template <typename T>
void dense_forward(std::size_t in_n, std::size_t out_m, std::span<const T> in,
                   std::span<const T> weights, std::span<const T> bias, std::span<T> out) {
  if (in.size() != in_n) throw DimensionError("dense: input length " + std::to_string(in.size()) +
                                              " != " + std::to_string(in_n));
  if (weights.size() != in_n * out_m || bias.size() != out_m || out.size() != out_m) {
    throw DimensionError("dense: weight/bias/output lengths do not match " + std::to_string(out_m) +
                         "x" + std::to_string(in_n));
  }
  for (std::size_t i = 0; i < out_m; ++i) {
    T acc = bias[i];
    for (std::size_t j = 0; j < in_n; ++j) acc += weights[i * in_n + j] * in[j];
    out[i] = acc;
  }
}

template <typename T>
void dense_backward(std::size_t in_n, std::size_t out_m, std::span<const T> in,
                    std::span<const T> weights, std::span<const T> grad_out, std::span<T> grad_in,
                    std::span<T> grad_weights, std::span<T> grad_bias) {
  if (in.size() != in_n || grad_out.size() != out_m || grad_weights.size() != in_n * out_m ||
      grad_bias.size() != out_m || weights.size() != in_n * out_m) {
    throw DimensionError("dense backward: lengths do not match " + std::to_string(out_m) + "x" +
                         std::to_string(in_n));
  }
  const bool want_in = !grad_in.empty();
  if (want_in && grad_in.size() != in_n) throw DimensionError("dense backward: input gradient length");
  if (want_in) std::fill(grad_in.begin(), grad_in.end(), T{0});
  for (std::size_t i = 0; i < out_m; ++i) {
    grad_bias[i] += grad_out[i];
    for (std::size_t j = 0; j < in_n; ++j) {
      grad_weights[i * in_n + j] += grad_out[i] * in[j];
      if (want_in) grad_in[j] += weights[i * in_n + j] * grad_out[i];
    }
  }
}

#define OWL_INSTANTIATE(T)                                                                       \
  template void conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,   \
                                  std::span<const T>, std::span<T>);                             \
  template void conv2d_backward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,  \
                                   std::span<const T>, std::span<T>, std::span<T>, std::span<T>); \
  template void maxpool_forward<T>(const PoolGeometry&, std::span<const T>, std::span<T>,        \
                                   std::span<std::uint32_t>);                                    \
  template void maxpool_backward<T>(const PoolGeometry&, std::span<const T>,                     \
                                    std::span<const std::uint32_t>, std::span<T>);               \
  template void dense_forward<T>(std::size_t, std::size_t, std::span<const T>, std::span<const T>, \
                                 std::span<const T>, std::span<T>);                              \
  template void dense_backward<T>(std::size_t, std::size_t, std::span<const T>,                  \
                                  std::span<const T>, std::span<const T>, std::span<T>,          \
                                  std::span<T>, std::span<T>);

OWL_INSTANTIATE(float)
OWL_INSTANTIATE(double)
#undef OWL_INSTANTIATE

}  // namespace reference
}  // namespace owl::kernels
