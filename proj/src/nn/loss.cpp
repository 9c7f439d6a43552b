#include "owl/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "owl/error.hpp"

namespace owl {

template <typename T>
T sigmoid(T z) {
  const T c = static_cast<T>(kLogitClamp);
  z = std::clamp(z, -c, c);
  return T{1} / (T{1} + std::exp(-z));
}

template <typename T>
std::vector<T> sigmoid(std::span<const T> logits) {
  std::vector<T> s(logits.size());
  std::transform(logits.begin(), logits.end(), s.begin(), [](T z) { return sigmoid<T>(z); });
  return s;
}

template <typename T>
std::vector<T> softmax(std::span<const T> logits) {
  if (logits.empty()) return {};
  const T m = *std::max_element(logits.begin(), logits.end());
  std::vector<T> p(logits.size());
  T sum{0};
  for (std::size_t i = 0; i < logits.size(); ++i) {
    p[i] = std::exp(logits[i] - m);
    sum += p[i];
  }
  for (auto& v : p) v /= sum;
  return p;
}

namespace {

template <typename T>
void require_one_hot(std::span<const T> target, std::size_t k) {
  if (target.size() != k) {
    throw DimensionError("target length " + std::to_string(target.size()) + " != " + std::to_string(k));
  }
  std::size_t ones = 0;
  for (T t : target) {
    if (t == T{1}) {
      ++ones;
    } else if (t != T{0}) {
      throw ParameterError("target is not one-hot");
    }
  }
  if (ones != 1) throw ParameterError("target is not one-hot");
}

}  // namespace

template <typename T>
LossResult<T> bce_loss(std::span<const T> scores, std::span<const T> target) {
  const std::size_t k = scores.size();
  if (k == 0) throw DimensionError("bce_loss: empty score vector");
  require_one_hot(target, k);
  const T floor = static_cast<T>(kLogFloor);
  LossResult<T> r;
  r.grad_logits.resize(k);
  T total{0};
  for (std::size_t i = 0; i < k; ++i) {
    const T s = scores[i];
    const T t = target[i];
    total -= t * std::log(std::max(s, floor)) + (T{1} - t) * std::log(std::max(T{1} - s, floor));
    r.grad_logits[i] = (s - t) / static_cast<T>(k);
  }
  r.loss = total / static_cast<T>(k);
  return r;
}

template <typename T>
LossResult<T> softmax_cross_entropy(std::span<const T> logits, std::span<const T> target) {
  const std::size_t k = logits.size();
  if (k == 0) throw DimensionError("softmax_cross_entropy: empty logit vector");
  require_one_hot(target, k);
  const auto p = softmax<T>(logits);
  LossResult<T> r;
  r.grad_logits.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (target[i] == T{1}) r.loss = -std::log(std::max(p[i], static_cast<T>(kLogFloor)));
    r.grad_logits[i] = p[i] - target[i];
  }
  return r;
}

template <typename T>
LossResult<T> head_loss(std::span<const T> logits, std::span<const T> target, HeadActivation activation) {
  if (activation == HeadActivation::softmax) return softmax_cross_entropy<T>(logits, target);
  const auto s = sigmoid<T>(logits);
  return bce_loss<T>(s, target);
}

template <typename T>
std::vector<T> one_hot(std::size_t k, std::size_t label) {
  if (label >= k) throw ParameterError("label " + std::to_string(label) + " outside " + std::to_string(k) + " classes");
  std::vector<T> v(k, T{0});
  v[label] = T{1};
  return v;
}

#define OWL_INSTANTIATE(T)                                                                          \
  template T sigmoid<T>(T);                                                                         \
  template std::vector<T> sigmoid<T>(std::span<const T>);                                           \
  template std::vector<T> softmax<T>(std::span<const T>);                                           \
  template LossResult<T> bce_loss<T>(std::span<const T>, std::span<const T>);                       \
  template LossResult<T> softmax_cross_entropy<T>(std::span<const T>, std::span<const T>);          \
  template LossResult<T> head_loss<T>(std::span<const T>, std::span<const T>, HeadActivation);      \
  template std::vector<T> one_hot<T>(std::size_t, std::size_t);

OWL_INSTANTIATE(float)
OWL_INSTANTIATE(double)
#undef OWL_INSTANTIATE

}  // namespace owl
