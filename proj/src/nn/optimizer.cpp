#include "owl/optimizer.hpp"

#include <cmath>

#include "owl/error.hpp"
#include "owl/loss.hpp"

namespace owl {

template <typename T>
void BasicSgd<T>::step(BasicNetwork<T>& network, const BasicGradients<T>& grads, double lr, double momentum) {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ParameterError("learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
  const auto& layers = network.layers();
  if (grads.layers.size() != layers.size()) throw DimensionError("sgd: gradient layer count mismatch");
  if (const int bad = grads.first_non_finite_layer(); bad >= 0) {
    throw TrainingError("non-finite gradient in layer " + std::to_string(bad) + " (" +
                        layers[static_cast<std::size_t>(bad)].spec().describe() + ")");
  }

  // (Re)shape velocity when the network changed shape, e.g. after growing the head.
  bool congruent = velocity_.layers.size() == layers.size();
  for (std::size_t l = 0; congruent && l < layers.size(); ++l) {
    const auto& ps = layers[l].params();
    congruent = velocity_.layers[l].size() == ps.size();
    for (std::size_t p = 0; congruent && p < ps.size(); ++p) {
      congruent = velocity_.layers[l][p].shape() == ps[p].shape();
    }
  }
  if (!congruent) {
    BasicGradients<T> fresh = network.zero_gradients();
    // Keep momentum for the parameters that still exist (grown heads keep
    // their leading rows).
    for (std::size_t l = 0; l < std::min(fresh.layers.size(), velocity_.layers.size()); ++l) {
      for (std::size_t p = 0; p < std::min(fresh.layers[l].size(), velocity_.layers[l].size()); ++p) {
        auto& dst = fresh.layers[l][p].storage();
        const auto& src = velocity_.layers[l][p].storage();
        std::copy_n(src.begin(), std::min(src.size(), dst.size()), dst.begin());
      }
    }
    velocity_ = std::move(fresh);
  }

  const T mu = static_cast<T>(momentum);
  const T eta = static_cast<T>(lr);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    if (layers[l].params().empty()) continue;
    auto& params = network.mutable_params(l);
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& w = params[p].storage();
      auto& v = velocity_.layers[l][p].storage();
      const auto& g = grads.layers[l][p].storage();
      if (g.size() != w.size()) throw DimensionError("sgd: gradient shape mismatch in layer " + std::to_string(l));
      for (std::size_t i = 0; i < w.size(); ++i) {
        v[i] = mu * v[i] - eta * g[i];
        w[i] += v[i];
      }
    }
  }
}

template <typename T>
std::pair<T, BasicGradients<T>> compute_gradients(const BasicNetwork<T>& network, const BasicTensor<T>& input,
                                                  std::type_identity_t<std::span<const T>> target, Rng& rng,
                                                  Mode mode) {
  auto trace = network.forward(input, mode, rng);
  const auto loss = head_loss<T>(trace.logits().data(), target, network.head_activation());
  auto grads = network.zero_gradients();
  network.backward(trace, loss.grad_logits, grads);
  return {loss.loss, std::move(grads)};
}

template class BasicSgd<float>;
template class BasicSgd<double>;
template std::pair<float, BasicGradients<float>> compute_gradients<float>(const BasicNetwork<float>&,
                                                                        const BasicTensor<float>&,
                                                                        std::span<const float>, Rng&, Mode);
template std::pair<double, BasicGradients<double>> compute_gradients<double>(const BasicNetwork<double>&,
                                                                           const BasicTensor<double>&,
                                                                           std::span<const double>, Rng&, Mode);

}  // namespace owl
