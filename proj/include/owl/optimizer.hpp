#pragma once

#include <type_traits>
#include <utility>

#include "owl/network.hpp"

namespace owl {

struct SgdParams {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 32;
};

// Momentum SGD: velocity = momentum * velocity - lr * grad; param += velocity.
// Velocity buffers are created lazily and re-shaped when the network grows.
template <typename T>
class BasicSgd {
 public:
  BasicSgd() = default;

  // Throws TrainingError naming the layer if any gradient is non-finite, and
  // ParameterError for lr <= 0 (lr == 0 is allowed and is a no-op) or momentum
  // outside [0, 1).
  void step(BasicNetwork<T>& network, const BasicGradients<T>& grads, double lr, double momentum);

  void reset() { velocity_.layers.clear(); }

 private:
  BasicGradients<T> velocity_;
};

using Sgd = BasicSgd<float>;

// One forward/backward pair for a single labelled sample.
template <typename T>
std::pair<T, BasicGradients<T>> compute_gradients(const BasicNetwork<T>& network, const BasicTensor<T>& input,
                                                  std::type_identity_t<std::span<const T>> target, Rng& rng,
                                                  Mode mode = Mode::train);

}  // namespace owl
