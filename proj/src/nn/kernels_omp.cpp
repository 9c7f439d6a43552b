// OpenMP kernels. Each parallel loop partitions the outputs it writes, and every
// output element is accumulated in one fixed order, so any thread count gives
// bitwise-identical results.

#include <algorithm>

#include "owl/error.hpp"
#include "owl/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace owl::kernels {

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

template <typename T>
inline T dot(const T* a, const T* b, std::size_t n) {
  T acc{0};
#pragma omp simd reduction(+ : acc)
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

template <typename T>
inline void axpy(T alpha, const T* x, T* y, std::size_t n) {
#pragma omp simd
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

constexpr std::size_t kDenseBlock = 256;

}  // namespace

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> in, std::span<const T> kernels,
                    std::span<const T> bias, std::span<T> out) {
  check(g, in.size(), kernels.size(), bias.size(), out.size());
  const std::size_t oh = g.out_h(), ow = g.out_w(), co_n = g.out_c;
  // Within one kernel row the window pixels are contiguous, so kx and ci fold
  // into a single run of length Kw * Cin.
  const std::size_t run = g.k_w * g.in_c;
  const T* ip0 = in.data();
  const T* kp0 = kernels.data();
  T* op0 = out.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t oy = 0; oy < static_cast<std::ptrdiff_t>(oh); ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      T* o = op0 + (oy * ow + ox) * co_n;
      std::copy(bias.begin(), bias.end(), o);
      for (std::size_t ky = 0; ky < g.k_h; ++ky) {
        const T* ip = ip0 + ((oy * g.stride + ky) * g.in_w + ox * g.stride) * g.in_c;
        const T* kp = kp0 + ky * run * co_n;
        for (std::size_t j = 0; j < run; ++j) axpy(ip[j], kp + j * co_n, o, co_n);
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

  const std::size_t oh = g.out_h(), ow = g.out_w(), co_n = g.out_c;
  const std::size_t run = g.k_w * g.in_c;
  const T* ip0 = in.data();
  const T* go0 = grad_out.data();

  for (std::size_t p = 0; p < oh * ow; ++p) axpy(T{1}, go0 + p * co_n, grad_bias.data(), co_n);

  // Kernel gradient: each (ky, kx, ci) row of Cout entries belongs to one iteration.
  T* gk0 = grad_kernels.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(g.k_h * run); ++r) {
    const std::size_t ky = r / run, j = r % run;
    T* gk = gk0 + r * co_n;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      const T* ip = ip0 + ((oy * g.stride + ky) * g.in_w) * g.in_c + j;
      const T* go = go0 + oy * ow * co_n;
      for (std::size_t ox = 0; ox < ow; ++ox) axpy(ip[ox * g.stride * g.in_c], go + ox * co_n, gk, co_n);
    }
  }

  if (!want_in) return;
  // Input gradient as a gather: each thread owns whole input rows.
  const T* kp0 = kernels.data();
  T* gi0 = grad_in.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t iy = 0; iy < static_cast<std::ptrdiff_t>(g.in_h); ++iy) {
    T* row = gi0 + iy * g.in_w * g.in_c;
    std::fill(row, row + g.in_w * g.in_c, T{0});
    for (std::size_t ky = 0; ky < g.k_h; ++ky) {
      const std::ptrdiff_t num = iy - static_cast<std::ptrdiff_t>(ky);
      if (num < 0 || num % static_cast<std::ptrdiff_t>(g.stride) != 0) continue;
      const std::size_t oy = static_cast<std::size_t>(num) / g.stride;
      if (oy >= oh) continue;
      const T* kp = kp0 + ky * run * co_n;
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const T* go = go0 + (oy * ow + ox) * co_n;
        T* gi = row + ox * g.stride * g.in_c;
        for (std::size_t j = 0; j < run; ++j) gi[j] += dot(go, kp + j * co_n, co_n);
      }
    }
  }
}

template <typename T>
void maxpool_forward(const PoolGeometry& g, std::span<const T> in, std::span<T> out,
                     std::span<std::uint32_t> argmax) {
  check(g, in.size(), out.size());
  if (argmax.size() != out.size()) throw DimensionError("maxpool: argmax length");
  const std::size_t oh = g.out_h(), ow = g.out_w(), c_n = g.channels;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t oy = 0; oy < static_cast<std::ptrdiff_t>(oh); ++oy) {
    for (std::size_t ox = 0; ox < ow; ++ox) {
      const std::size_t o = (oy * ow + ox) * c_n;
      const std::size_t origin = ((oy * g.window) * g.in_w + ox * g.window) * c_n;
      for (std::size_t c = 0; c < c_n; ++c) {
        out[o + c] = in[origin + c];
        argmax[o + c] = static_cast<std::uint32_t>(origin + c);
      }
      // Row-major window scan with strict comparison keeps the first maximum.
      for (std::size_t dy = 0; dy < g.window; ++dy) {
        for (std::size_t dx = 0; dx < g.window; ++dx) {
          const std::size_t base = ((oy * g.window + dy) * g.in_w + ox * g.window + dx) * c_n;
          for (std::size_t c = 0; c < c_n; ++c) {
            if (in[base + c] > out[o + c]) {
              out[o + c] = in[base + c];
              argmax[o + c] = static_cast<std::uint32_t>(base + c);
            }
          }
        }
      }
    }
  }
}

template <typename T>
void maxpool_backward(const PoolGeometry& g, std::span<const T> grad_out,
                      std::span<const std::uint32_t> argmax, std::span<T> grad_in) {
  check(g, grad_in.size(), grad_out.size());
  std::fill(grad_in.begin(), grad_in.end(), T{0});
  // Windows do not overlap, so every input index is hit by at most one output.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t o = 0; o < static_cast<std::ptrdiff_t>(grad_out.size()); ++o) {
    grad_in[argmax[o]] = grad_out[o];
  }
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
  const T* w = weights.data();
  const T* x = in.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(out_m); ++i) {
    out[i] = bias[i] + dot(w + i * in_n, x, in_n);
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

  const T* x = in.data();
  const T* w = weights.data();
  T* gw = grad_weights.data();
  for (std::size_t i = 0; i < out_m; ++i) grad_bias[i] += grad_out[i];
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(out_m); ++i) {
    axpy(grad_out[i], x, gw + i * in_n, in_n);
  }
  if (!want_in) return;
  T* gi = grad_in.data();
  const std::size_t blocks = (in_n + kDenseBlock - 1) / kDenseBlock;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < static_cast<std::ptrdiff_t>(blocks); ++b) {
    const std::size_t lo = b * kDenseBlock;
    const std::size_t len = std::min(kDenseBlock, in_n - lo);
    std::fill(gi + lo, gi + lo + len, T{0});
    for (std::size_t i = 0; i < out_m; ++i) axpy(grad_out[i], w + i * in_n + lo, gi + lo, len);
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

}  // namespace owl::kernels
