#pragma once

#include <span>
#include <vector>

#include "owl/layer.hpp"

namespace owl {

// Logits are clamped to this range before the sigmoid and log arguments are
// floored at kLogFloor, so saturated heads never produce inf or NaN.
inline constexpr double kLogitClamp = 60.0;
inline constexpr double kLogFloor = 1e-30;

template <typename T>
T sigmoid(T z);

template <typename T>
std::vector<T> sigmoid(std::span<const T> logits);

template <typename T>
std::vector<T> softmax(std::span<const T> logits);

template <typename T>
struct LossResult {
  T loss{};
  std::vector<T> grad_logits;
};

// Mean binary cross-entropy over K sigmoid scores against a one-hot target.
// The gradient is taken w.r.t. the logits that produced the scores: (s - t) / K.
template <typename T>
LossResult<T> bce_loss(std::span<const T> scores, std::span<const T> target);

// Categorical cross-entropy for the softmax head option; gradient p - t.
template <typename T>
LossResult<T> softmax_cross_entropy(std::span<const T> logits, std::span<const T> target);

// Dispatch on the head activation.
template <typename T>
LossResult<T> head_loss(std::span<const T> logits, std::span<const T> target, HeadActivation activation);

template <typename T>
std::vector<T> one_hot(std::size_t k, std::size_t label);

}  // namespace owl
