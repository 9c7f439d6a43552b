#include "owl/network.hpp"

#include <atomic>
#include <cmath>

#include "owl/error.hpp"
#include "owl/loss.hpp"

namespace owl {

template <typename T>
void BasicGradients<T>::zero() {
  for (auto& layer : layers)
    for (auto& t : layer) t.fill(T{0});
}

template <typename T>
void BasicGradients<T>::scale(T factor) {
  for (auto& layer : layers)
    for (auto& t : layer)
      for (auto& v : t.storage()) v *= factor;
}

template <typename T>
void BasicGradients<T>::add(const BasicGradients& other) {
  if (other.layers.size() != layers.size()) throw DimensionError("gradient layer count mismatch");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (other.layers[l].size() != layers[l].size()) throw DimensionError("gradient parameter count mismatch");
    for (std::size_t p = 0; p < layers[l].size(); ++p) {
      auto& dst = layers[l][p].storage();
      const auto& src = other.layers[l][p].storage();
      if (dst.size() != src.size()) throw DimensionError("gradient shape mismatch");
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
    }
  }
}

template <typename T>
double BasicGradients<T>::squared_norm() const {
  double s = 0;
  for (const auto& layer : layers)
    for (const auto& t : layer)
      for (T v : t.storage()) s += static_cast<double>(v) * static_cast<double>(v);
  return s;
}

template <typename T>
int BasicGradients<T>::first_non_finite_layer() const {
  for (std::size_t l = 0; l < layers.size(); ++l)
    for (const auto& t : layers[l])
      if (!t.all_finite()) return static_cast<int>(l);
  return -1;
}

template <typename T>
std::uint64_t BasicNetwork<T>::next_id() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1);
}

template <typename T>
BasicNetwork<T>::BasicNetwork(Shape input_shape, std::vector<LayerSpec> specs, std::uint8_t architecture_tag)
    : input_shape_(std::move(input_shape)), architecture_tag_(architecture_tag), id_(next_id()) {
  if (specs.empty()) throw DimensionError("network needs at least one layer");
  Shape shape = input_shape_;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const bool last = i + 1 == specs.size();
    if ((specs[i].kind == LayerKind::sigmoid_output) != last) {
      throw DimensionError("layer " + std::to_string(i) + ": the output layer must be last and unique");
    }
    try {
      layers_.emplace_back(specs[i], shape);
    } catch (const DimensionError& e) {
      throw DimensionError("layer " + std::to_string(i) + " (" + specs[i].describe() + "): " + e.what());
    }
    shape = layers_.back().output_shape();
  }
}

template <typename T>
BasicNetwork<T>::BasicNetwork(const BasicNetwork& other)
    : input_shape_(other.input_shape_),
      layers_(other.layers_),
      architecture_tag_(other.architecture_tag_),
      id_(next_id()) {}

template <typename T>
BasicNetwork<T>& BasicNetwork<T>::operator=(const BasicNetwork& other) {
  if (this != &other) {
    input_shape_ = other.input_shape_;
    layers_ = other.layers_;
    architecture_tag_ = other.architecture_tag_;
    ++revision_;
  }
  return *this;
}

template <typename T>
BasicNetwork<T>::BasicNetwork(BasicNetwork&& other) noexcept
    : input_shape_(std::move(other.input_shape_)),
      layers_(std::move(other.layers_)),
      architecture_tag_(other.architecture_tag_),
      id_(other.id_),
      revision_(other.revision_ + 1) {}

template <typename T>
BasicNetwork<T>& BasicNetwork<T>::operator=(BasicNetwork&& other) noexcept {
  input_shape_ = std::move(other.input_shape_);
  layers_ = std::move(other.layers_);
  architecture_tag_ = other.architecture_tag_;
  id_ = other.id_;
  revision_ = std::max(revision_, other.revision_) + 1;
  return *this;
}

template <typename T>
void BasicNetwork<T>::initialize(std::uint64_t seed) {
  const Rng root(seed);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    Rng rng = root.fork(i);
    layers_[i].initialize(rng);
  }
  ++revision_;
}

template <typename T>
std::vector<LayerSpec> BasicNetwork<T>::specs() const {
  std::vector<LayerSpec> out;
  for (const auto& l : layers_) out.push_back(l.spec());
  return out;
}

template <typename T>
std::vector<BasicTensor<T>>& BasicNetwork<T>::mutable_params(std::size_t layer) {
  ++revision_;
  return layers_.at(layer).params();
}

template <typename T>
std::size_t BasicNetwork<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.parameter_count();
  return n;
}

template <typename T>
BasicTensor<T> BasicNetwork<T>::logits(const BasicTensor<T>& input) const {
  if (input.size() != shape_size(input_shape_)) {
    throw DimensionError("network input " + shape_string(input.shape()) + " does not match " +
                         shape_string(input_shape_));
  }
  BasicTensor<T> a = input, b;
  LayerCache cache;
  for (const auto& layer : layers_) {
    layer.forward(a, b, cache, Mode::eval, nullptr);
    std::swap(a, b);
  }
  return a;
}

template <typename T>
std::vector<T> BasicNetwork<T>::scores(const BasicTensor<T>& input) const {
  const auto z = logits(input);
  return apply_head<T>(z.data(), head_activation());
}

template <typename T>
BasicForwardTrace<T> BasicNetwork<T>::forward(const BasicTensor<T>& input, Mode mode, Rng& rng) const {
  if (input.size() != shape_size(input_shape_)) {
    throw DimensionError("network input " + shape_string(input.shape()) + " does not match " +
                         shape_string(input_shape_));
  }
  BasicForwardTrace<T> trace;
  trace.activations.resize(layers_.size() + 1);
  trace.caches.resize(layers_.size());
  trace.activations[0] = input.reshaped(input_shape_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].forward(trace.activations[i], trace.activations[i + 1], trace.caches[i], mode, &rng);
  }
  trace.network_id = id_;
  trace.revision = revision_;
  trace.consumed = false;
  return trace;
}

template <typename T>
void BasicNetwork<T>::backward(BasicForwardTrace<T>& trace, std::span<const T> grad_logits,
                               BasicGradients<T>& grads) const {
  if (trace.consumed) throw StateError("backward: trace already consumed or never filled by forward");
  if (trace.network_id != id_ || trace.revision != revision_) {
    throw StateError("backward: trace was produced by a different or since-modified network");
  }
  if (grad_logits.size() != output_width()) {
    throw DimensionError("backward: gradient width " + std::to_string(grad_logits.size()) + " != output width " +
                         std::to_string(output_width()));
  }
  if (grads.layers.size() != layers_.size()) grads = zero_gradients();
  trace.consumed = true;

  BasicTensor<T> grad(Shape{grad_logits.size()}, std::vector<T>(grad_logits.begin(), grad_logits.end()));
  BasicTensor<T> grad_in;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    const bool need_input = i > 0;
    layers_[i].backward(trace.activations[i], trace.activations[i + 1], grad, trace.caches[i],
                        need_input ? &grad_in : nullptr, grads.layers[i]);
    if (need_input) std::swap(grad, grad_in);
  }
}

template <typename T>
BasicGradients<T> BasicNetwork<T>::zero_gradients() const {
  BasicGradients<T> g;
  g.layers.resize(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (const auto& p : layers_[i].params()) g.layers[i].emplace_back(p.shape());
  }
  return g;
}

template <typename T>
void BasicNetwork<T>::grow_output(std::size_t new_units, Rng* rng, double init_range) {
  layers_.back().grow_units(new_units, rng, init_range);
  ++revision_;
}

template <typename T>
std::vector<T> apply_head(std::span<const T> logits, HeadActivation activation) {
  return activation == HeadActivation::softmax ? softmax<T>(logits) : sigmoid<T>(logits);
}

template class BasicNetwork<float>;
template class BasicNetwork<double>;
template struct BasicGradients<float>;
template struct BasicGradients<double>;
template std::vector<float> apply_head<float>(std::span<const float>, HeadActivation);
template std::vector<double> apply_head<double>(std::span<const double>, HeadActivation);

}  // namespace owl
