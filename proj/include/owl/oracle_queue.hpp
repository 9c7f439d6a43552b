#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "owl/openworld.hpp"

namespace owl {

enum class ItemStatus { pending, labeled, discarded };
std::string to_string(ItemStatus status);

struct OracleItem {
  std::uint64_t id = 0;
  Sample sample;
  std::string truth;  // simulation only; never leaves the process
  double certainty = 0.0;
  std::vector<std::vector<float>> member_scores;
  std::string suggested;
  std::int64_t enqueued_ms = 0;  // wall clock, for display
  ItemStatus status = ItemStatus::pending;
  std::string label;
  bool consumed = false;
};

enum class LabelOutcome { ok, not_found, already_resolved, empty_label };

// Every mutation takes one lock, so enqueue, label and take_labeled are
// totally ordered.
class OracleQueue {
 public:
  // Throws ContractError for a Known verdict. Identical samples are not merged.
  std::uint64_t enqueue(const Sample& sample, const std::string& truth, const Verdict& verdict,
                        const std::string& suggested);

  std::vector<OracleItem> pending() const;  // oldest first
  std::optional<OracleItem> find(std::uint64_t id) const;
  std::size_t size() const;
  std::size_t pending_count() const;

  LabelOutcome label(std::uint64_t id, const std::string& label);
  LabelOutcome discard(std::uint64_t id);

  // Labeled items not handed out before, in labeling order.
  std::vector<LabeledSample> take_labeled();

 private:
  OracleItem* locate(std::uint64_t id);

  mutable std::mutex mutex_;
  std::vector<OracleItem> items_;
  std::vector<std::uint64_t> labeled_order_;
  std::size_t handed_out_ = 0;
  std::uint64_t next_id_ = 1;
};

// Answers with the item's ground truth with probability 1 - noise, otherwise
// with a uniformly drawn other name from `classes`, and labels the item.
// Throws StateError when the item is not pending and ContractError when it is
// missing or carries no ground truth.
std::string simulated_oracle(OracleQueue& queue, std::uint64_t id, double noise,
                             const std::vector<std::string>& classes, Rng& rng);

}  // namespace owl
