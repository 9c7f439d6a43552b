#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "owl/crop_store.hpp"
#include "owl/network.hpp"
#include "owl/optimizer.hpp"

namespace owl {

// Inputs already converted to tensors, with label ids in the target label set.
struct TrainingSet {
  std::vector<Tensor> inputs;
  std::vector<std::size_t> labels;

  std::size_t size() const { return inputs.size(); }
  void append(const TrainingSet& other);
};

// Maps every sample's label by name into `target`. Throws ParameterError for
// a label `target` does not contain.
TrainingSet to_training_set(const CropStore& store, const LabelSet& target);

struct TrainConfig {
  std::size_t epochs = 10;
  SgdParams sgd;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;   // 1-based
  double loss = 0.0;       // mean per-sample loss over the epoch
  double accuracy = 0.0;   // running train-mode argmax accuracy over the epoch
};

// Mini-batch momentum SGD on `network` in place. Batch gradients are the mean
// of the per-sample gradients. Throws TrainingError with the epoch and batch
// index when the loss goes non-finite.
std::vector<EpochRecord> train_network(Network& network, const TrainingSet& data, const TrainConfig& config);

// Eval-mode scores, one vector per member.
std::vector<float> member_scores(const Network& member, const Tensor& pixels);

// Index of the largest value; ties resolve to the lowest index.
template <typename T>
std::size_t argmax(const std::vector<T>& values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

}  // namespace owl
