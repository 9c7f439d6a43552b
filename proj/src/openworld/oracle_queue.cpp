#include "owl/oracle_queue.hpp"

#include <algorithm>
#include <chrono>

#include "owl/error.hpp"

namespace owl {

std::string to_string(ItemStatus status) {
  switch (status) {
    case ItemStatus::pending: return "pending";
    case ItemStatus::labeled: return "labeled";
    case ItemStatus::discarded: return "discarded";
  }
  return "?";
}

std::uint64_t OracleQueue::enqueue(const Sample& sample, const std::string& truth, const Verdict& verdict,
                                   const std::string& suggested) {
  if (!verdict.unknown()) throw ContractError("enqueue_unknown: verdict is Known");
  OracleItem item;
  item.sample = sample;
  item.truth = truth;
  item.certainty = verdict.certainty;
  item.member_scores = verdict.member_scores;
  item.suggested = suggested;
  item.enqueued_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::system_clock::now().time_since_epoch())
                         .count();
  std::lock_guard lock(mutex_);
  item.id = next_id_++;
  items_.push_back(std::move(item));
  return items_.back().id;
}

OracleItem* OracleQueue::locate(std::uint64_t id) {
  // Ids are handed out in increasing order, so items_ is sorted by id.
  auto it = std::lower_bound(items_.begin(), items_.end(), id,
                             [](const OracleItem& item, std::uint64_t key) { return item.id < key; });
  return it != items_.end() && it->id == id ? &*it : nullptr;
}

std::vector<OracleItem> OracleQueue::pending() const {
  std::lock_guard lock(mutex_);
  std::vector<OracleItem> out;
  for (const auto& item : items_)
    if (item.status == ItemStatus::pending) out.push_back(item);
  return out;
}

std::optional<OracleItem> OracleQueue::find(std::uint64_t id) const {
  std::lock_guard lock(mutex_);
  auto* item = const_cast<OracleQueue*>(this)->locate(id);
  if (!item) return std::nullopt;
  return *item;
}

std::size_t OracleQueue::size() const {
  std::lock_guard lock(mutex_);
  return items_.size();
}

std::size_t OracleQueue::pending_count() const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& item : items_) n += item.status == ItemStatus::pending;
  return n;
}

LabelOutcome OracleQueue::label(std::uint64_t id, const std::string& label) {
  std::lock_guard lock(mutex_);
  auto* item = locate(id);
  if (!item) return LabelOutcome::not_found;
  if (item->status != ItemStatus::pending) return LabelOutcome::already_resolved;
  if (label.empty()) return LabelOutcome::empty_label;
  item->status = ItemStatus::labeled;
  item->label = label;
  labeled_order_.push_back(id);
  return LabelOutcome::ok;
}

LabelOutcome OracleQueue::discard(std::uint64_t id) {
  std::lock_guard lock(mutex_);
  auto* item = locate(id);
  if (!item) return LabelOutcome::not_found;
  if (item->status != ItemStatus::pending) return LabelOutcome::already_resolved;
  item->status = ItemStatus::discarded;
  return LabelOutcome::ok;
}

std::vector<LabeledSample> OracleQueue::take_labeled() {
  std::lock_guard lock(mutex_);
  std::vector<LabeledSample> out;
  for (; handed_out_ < labeled_order_.size(); ++handed_out_) {
    auto* item = locate(labeled_order_[handed_out_]);
    item->consumed = true;
    out.push_back({item->sample, item->label});
  }
  return out;
}

std::string simulated_oracle(OracleQueue& queue, std::uint64_t id, double noise,
                             const std::vector<std::string>& classes, Rng& rng) {
  if (!(noise >= 0.0 && noise <= 1.0)) throw ParameterError("simulated_oracle: noise must lie in [0, 1]");
  const auto item = queue.find(id);
  if (!item) throw ContractError("simulated_oracle: no item " + std::to_string(id));
  if (item->status != ItemStatus::pending) throw StateError("simulated_oracle: item " + std::to_string(id) + " is already resolved");
  if (item->truth.empty()) throw ContractError("simulated_oracle: item " + std::to_string(id) + " has no ground truth");

  std::string answer = item->truth;
  if (rng.bernoulli(noise)) {
    std::vector<const std::string*> others;
    for (const auto& c : classes)
      if (c != item->truth) others.push_back(&c);
    if (others.empty()) throw ContractError("simulated_oracle: no alternative label to answer with");
    answer = *others[rng.below(others.size())];
  }
  if (queue.label(id, answer) != LabelOutcome::ok)
    throw StateError("simulated_oracle: item " + std::to_string(id) + " was resolved concurrently");
  return answer;
}

}  // namespace owl
