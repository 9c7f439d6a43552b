#include "owl/layer.hpp"

#include <cmath>
#include <sstream>

#include "owl/error.hpp"

namespace owl {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::relu: return "relu";
    case LayerKind::dropout: return "dropout";
    case LayerKind::dense: return "dense";
    case LayerKind::sigmoid_output: return "sigmoid_output";
  }
  return "unknown";
}

LayerSpec LayerSpec::conv2d(std::size_t filters, std::size_t kernel, std::size_t stride) {
  LayerSpec s;
  s.kind = LayerKind::conv2d;
  s.filters = filters;
  s.kernel = kernel;
  s.stride = stride;
  return s;
}

LayerSpec LayerSpec::maxpool(std::size_t window) {
  LayerSpec s;
  s.kind = LayerKind::maxpool;
  s.window = window;
  return s;
}

LayerSpec LayerSpec::relu() {
  LayerSpec s;
  s.kind = LayerKind::relu;
  return s;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::dropout;
  s.rate = rate;
  return s;
}

LayerSpec LayerSpec::dense(std::size_t units) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.units = units;
  return s;
}

LayerSpec LayerSpec::sigmoid_output(std::size_t units, HeadActivation activation) {
  LayerSpec s;
  s.kind = LayerKind::sigmoid_output;
  s.units = units;
  s.activation = activation;
  return s;
}

void LayerSpec::validate() const {
  switch (kind) {
    case LayerKind::conv2d:
      if (kernel < 1) throw ParameterError("conv2d kernel size must be >= 1");
      if (filters < 1) throw ParameterError("conv2d filter count must be >= 1");
      if (stride < 1) throw ParameterError("conv2d stride must be >= 1");
      break;
    case LayerKind::maxpool:
      if (window < 1) throw ParameterError("maxpool window must be >= 1");
      break;
    case LayerKind::dropout:
      if (!(rate >= 0.0 && rate < 1.0)) {
        throw ParameterError("dropout rate " + std::to_string(rate) + " outside [0, 1)");
      }
      break;
    case LayerKind::dense:
    case LayerKind::sigmoid_output:
      if (units < 1) throw ParameterError(to_string(kind) + " unit count must be >= 1");
      break;
    case LayerKind::relu:
      break;
    default:
      throw ParameterError("unknown layer kind");
  }
}

std::string LayerSpec::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  switch (kind) {
    case LayerKind::conv2d: os << "(" << filters << "@" << kernel << "x" << kernel << "/" << stride << ")"; break;
    case LayerKind::maxpool: os << "(" << window << ")"; break;
    case LayerKind::dropout: os << "(" << rate << ")"; break;
    case LayerKind::dense: os << "(" << units << ")"; break;
    case LayerKind::sigmoid_output:
      os << "(" << units << (activation == HeadActivation::softmax ? ",softmax" : "") << ")";
      break;
    default: break;
  }
  return os.str();
}

Shape infer_output_shape(const LayerSpec& spec, const Shape& input) {
  spec.validate();
  if (input.empty() || shape_size(input) == 0) throw DimensionError("empty input shape");
  switch (spec.kind) {
    case LayerKind::conv2d: {
      if (input.size() != 3) throw DimensionError("conv2d expects H x W x C input, got " + shape_string(input));
      if (input[0] < spec.kernel || input[1] < spec.kernel) {
        throw DimensionError("conv2d: input " + shape_string(input) + " smaller than kernel " +
                             std::to_string(spec.kernel) + " on axes H/W");
      }
      return {(input[0] - spec.kernel) / spec.stride + 1, (input[1] - spec.kernel) / spec.stride + 1,
              spec.filters};
    }
    case LayerKind::maxpool: {
      if (input.size() != 3) throw DimensionError("maxpool expects H x W x C input, got " + shape_string(input));
      if (input[0] < spec.window || input[1] < spec.window) {
        throw DimensionError("maxpool: window " + std::to_string(spec.window) + " larger than input " +
                             shape_string(input) + " on axes H/W");
      }
      return {input[0] / spec.window, input[1] / spec.window, input[2]};
    }
    case LayerKind::relu:
    case LayerKind::dropout:
      return input;
    case LayerKind::dense:
    case LayerKind::sigmoid_output:
      return {spec.units};
  }
  throw ParameterError("unknown layer kind");
}

template <typename T>
BasicLayer<T>::BasicLayer(LayerSpec spec, Shape input_shape)
    : spec_(spec), input_shape_(std::move(input_shape)) {
  output_shape_ = infer_output_shape(spec_, input_shape_);
  switch (spec_.kind) {
    case LayerKind::conv2d:
      params_.emplace_back(Shape{spec_.kernel, spec_.kernel, input_shape_[2], spec_.filters});
      params_.emplace_back(Shape{spec_.filters});
      break;
    case LayerKind::dense:
    case LayerKind::sigmoid_output:
      params_.emplace_back(Shape{spec_.units, shape_size(input_shape_)});
      params_.emplace_back(Shape{spec_.units});
      break;
    default:
      break;
  }
}

template <typename T>
std::size_t BasicLayer<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.size();
  return n;
}

template <typename T>
void BasicLayer<T>::initialize(Rng& rng) {
  if (params_.empty()) return;
  double fan_in = 0, fan_out = 0;
  if (spec_.kind == LayerKind::conv2d) {
    const double area = static_cast<double>(spec_.kernel * spec_.kernel);
    fan_in = area * static_cast<double>(input_shape_[2]);
    fan_out = area * static_cast<double>(spec_.filters);
  } else {
    fan_in = static_cast<double>(shape_size(input_shape_));
    fan_out = static_cast<double>(spec_.units);
  }
  const double a = std::sqrt(6.0 / (fan_in + fan_out));
  for (auto& w : params_[0].storage()) w = static_cast<T>(rng.uniform(-a, a));
  params_[1].fill(T{0});
}

template <typename T>
kernels::ConvGeometry BasicLayer<T>::conv_geometry() const {
  kernels::ConvGeometry g;
  g.in_h = input_shape_[0];
  g.in_w = input_shape_[1];
  g.in_c = input_shape_[2];
  g.k_h = g.k_w = spec_.kernel;
  g.out_c = spec_.filters;
  g.stride = spec_.stride;
  return g;
}

template <typename T>
kernels::PoolGeometry BasicLayer<T>::pool_geometry() const {
  kernels::PoolGeometry g;
  g.in_h = input_shape_[0];
  g.in_w = input_shape_[1];
  g.channels = input_shape_[2];
  g.window = spec_.window;
  return g;
}

template <typename T>
void BasicLayer<T>::forward(const BasicTensor<T>& in, BasicTensor<T>& out, LayerCache& cache, Mode mode,
                            Rng* rng) const {
  if (in.size() != shape_size(input_shape_)) {
    throw DimensionError(to_string(spec_.kind) + ": input " + shape_string(in.shape()) + " does not match " +
                         shape_string(input_shape_));
  }
  if (out.shape() != output_shape_) out = BasicTensor<T>(output_shape_);
  switch (spec_.kind) {
    case LayerKind::conv2d:
      kernels::conv2d_forward<T>(conv_geometry(), in.data(), params_[0].data(), params_[1].data(), out.data());
      break;
    case LayerKind::maxpool:
      cache.argmax.resize(out.size());
      kernels::maxpool_forward<T>(pool_geometry(), in.data(), out.data(), cache.argmax);
      break;
    case LayerKind::relu:
      for (std::size_t i = 0; i < in.size(); ++i) out[i] = in[i] > T{0} ? in[i] : T{0};
      break;
    case LayerKind::dropout:
      if (mode == Mode::eval || spec_.rate == 0.0) {
        std::copy(in.data().begin(), in.data().end(), out.data().begin());
        cache.mask.assign(in.size(), 1);
        cache.keep_scale = 1.0;
      } else {
        if (!rng) throw StateError("dropout in train mode needs a generator");
        const T scale = static_cast<T>(1.0 / (1.0 - spec_.rate));
        cache.mask.resize(in.size());
        cache.keep_scale = 1.0 / (1.0 - spec_.rate);
        for (std::size_t i = 0; i < in.size(); ++i) {
          const bool keep = !rng->bernoulli(spec_.rate);
          cache.mask[i] = keep ? 1 : 0;
          out[i] = keep ? in[i] * scale : T{0};
        }
      }
      break;
    case LayerKind::dense:
    case LayerKind::sigmoid_output:
      kernels::dense_forward<T>(in.size(), spec_.units, in.data(), params_[0].data(), params_[1].data(),
                                out.data());
      break;
  }
}

template <typename T>
void BasicLayer<T>::backward(const BasicTensor<T>& in, const BasicTensor<T>& out,
                             const BasicTensor<T>& grad_out, const LayerCache& cache,
                             BasicTensor<T>* grad_in, std::span<BasicTensor<T>> param_grads) const {
  if (grad_out.size() != out.size()) throw DimensionError(to_string(spec_.kind) + ": output gradient length");
  if (grad_in && grad_in->shape() != in.shape()) *grad_in = BasicTensor<T>(in.shape());
  std::span<T> gin = grad_in ? grad_in->data() : std::span<T>{};
  switch (spec_.kind) {
    case LayerKind::conv2d:
      kernels::conv2d_backward<T>(conv_geometry(), in.data(), params_[0].data(), grad_out.data(), gin,
                                  param_grads[0].data(), param_grads[1].data());
      break;
    case LayerKind::maxpool:
      if (cache.argmax.size() != out.size()) throw StateError("maxpool backward without forward record");
      if (grad_in) kernels::maxpool_backward<T>(pool_geometry(), grad_out.data(), cache.argmax, gin);
      break;
    case LayerKind::relu:
      if (grad_in) {
        for (std::size_t i = 0; i < in.size(); ++i) gin[i] = out[i] > T{0} ? grad_out[i] : T{0};
      }
      break;
    case LayerKind::dropout:
      if (cache.mask.size() != in.size()) throw StateError("dropout backward without forward mask");
      if (grad_in) {
        const T scale = static_cast<T>(cache.keep_scale);
        for (std::size_t i = 0; i < in.size(); ++i) gin[i] = cache.mask[i] ? grad_out[i] * scale : T{0};
      }
      break;
    case LayerKind::dense:
    case LayerKind::sigmoid_output:
      kernels::dense_backward<T>(in.size(), spec_.units, in.data(), params_[0].data(), grad_out.data(), gin,
                                 param_grads[0].data(), param_grads[1].data());
      break;
  }
}

template <typename T>
void BasicLayer<T>::grow_units(std::size_t new_units, Rng* rng, double init_range) {
  if (spec_.kind != LayerKind::sigmoid_output) throw StateError("only the output layer can grow");
  if (new_units <= spec_.units) {
    throw ParameterError("output width " + std::to_string(new_units) + " must exceed current " +
                         std::to_string(spec_.units));
  }
  const std::size_t n = shape_size(input_shape_);
  const std::size_t added = new_units - spec_.units;
  std::vector<T> w = params_[0].storage();
  std::vector<T> b = params_[1].storage();
  w.reserve(new_units * n);
  for (std::size_t i = 0; i < added * n; ++i) {
    w.push_back(rng ? static_cast<T>(rng->uniform(-init_range, init_range)) : T{0});
  }
  for (std::size_t i = 0; i < added; ++i) {
    b.push_back(rng ? static_cast<T>(rng->uniform(-init_range, init_range)) : T{0});
  }
  spec_.units = new_units;
  output_shape_ = {new_units};
  params_[0] = BasicTensor<T>(Shape{new_units, n}, std::move(w));
  params_[1] = BasicTensor<T>(Shape{new_units}, std::move(b));
}

template class BasicLayer<float>;
template class BasicLayer<double>;

}  // namespace owl
