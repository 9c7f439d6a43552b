#include "owl/trainer.hpp"

#include <cmath>
#include <numeric>

#include "owl/error.hpp"
#include "owl/loss.hpp"

namespace owl {

void TrainingSet::append(const TrainingSet& other) {
  inputs.insert(inputs.end(), other.inputs.begin(), other.inputs.end());
  labels.insert(labels.end(), other.labels.begin(), other.labels.end());
}

TrainingSet to_training_set(const CropStore& store, const LabelSet& target) {
  TrainingSet out;
  out.inputs.reserve(store.size());
  out.labels.reserve(store.size());
  for (const auto& s : store.samples) {
    const std::string& name = store.label_name(s);
    const auto id = target.find(name);
    if (!id) throw ParameterError("label '" + name + "' is not in the committee's label set");
    out.inputs.push_back(s.pixels());
    out.labels.push_back(*id);
  }
  return out;
}

std::vector<EpochRecord> train_network(Network& network, const TrainingSet& data, const TrainConfig& config) {
  if (data.size() == 0) throw ParameterError("train_network: empty training split");
  if (config.epochs < 1) throw ParameterError("train_network: epochs must be >= 1");
  if (config.sgd.batch_size < 1) throw ParameterError("train_network: batch size must be >= 1");
  const std::size_t k = network.output_width();
  for (std::size_t y : data.labels)
    if (y >= k) throw ParameterError("train_network: label " + std::to_string(y) + " outside the output width");

  Rng rng(config.seed);
  Sgd sgd;
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<std::vector<float>> targets(k);
  for (std::size_t c = 0; c < k; ++c) targets[c] = one_hot<float>(k, c);

  std::vector<EpochRecord> history;
  Gradients grads = network.zero_gradients();
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0;
    std::size_t correct = 0;
    for (std::size_t start = 0, batch = 0; start < order.size(); start += config.sgd.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + config.sgd.batch_size);
      grads.zero();
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t idx = order[i];
        auto trace = network.forward(data.inputs[idx], Mode::train, rng);
        const auto& logits = trace.logits().storage();
        const auto loss = head_loss<float>(logits, targets[data.labels[idx]], network.head_activation());
        if (!std::isfinite(loss.loss)) {
          throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch));
        }
        loss_sum += loss.loss;
        correct += argmax(apply_head<float>(logits, network.head_activation())) == data.labels[idx];
        network.backward(trace, loss.grad_logits, grads);
      }
      grads.scale(1.0f / static_cast<float>(end - start));
      try {
        sgd.step(network, grads, config.sgd.learning_rate, config.sgd.momentum);
      } catch (const TrainingError& e) {
        throw TrainingError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ": " + e.what());
      }
    }
    const double n = static_cast<double>(data.size());
    history.push_back({epoch, loss_sum / n, static_cast<double>(correct) / n});
  }
  return history;
}

std::vector<float> member_scores(const Network& member, const Tensor& pixels) { return member.scores(pixels); }

}  // namespace owl
