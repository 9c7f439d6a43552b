#include "owl/openworld.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "owl/error.hpp"

namespace owl {

OracleMode parse_oracle_mode(const std::string& text) {
  if (text == "simulated") return OracleMode::simulated;
  if (text == "external") return OracleMode::external;
  throw ConfigError("oracle mode must be 'simulated' or 'external', got '" + text + "'");
}

std::string to_string(OracleMode mode) { return mode == OracleMode::simulated ? "simulated" : "external"; }

void OpenWorldConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (min_new_class_samples < kMinNewClassSamples)
    throw ConfigError("min_new_class_samples must be at least " + std::to_string(kMinNewClassSamples));
  if (!(noise >= 0.0 && noise <= 1.0)) throw ConfigError("oracle noise must lie in [0, 1]");
  if (retrain_epochs < 1) throw ConfigError("retrain_epochs must be at least 1");
  if (initial_known.empty()) throw ConfigError("at least one initially known class is required");
  std::set<std::string> seen;
  for (const auto& n : initial_known)
    if (n.empty() || !seen.insert(n).second) throw ConfigError("duplicate or empty known class '" + n + "'");
  for (const auto& n : schedule)
    if (n.empty() || !seen.insert(n).second) throw ConfigError("schedule class '" + n + "' repeats a class");
}

Verdict make_verdict(const Prediction& prediction, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("alpha must lie in [0, 1]");
  Verdict v;
  v.kind = prediction.certainty < alpha ? Verdict::Kind::unknown : Verdict::Kind::known;
  v.label_id = prediction.label;
  v.certainty = prediction.certainty;
  v.member_scores = prediction.member_scores;
  return v;
}

Verdict classify_or_flag(const StackedCommittee& committee, const Tensor& pixels, double alpha) {
  return make_verdict(stacked_predict(committee, pixels), alpha);
}

namespace {

double flag_rate(const std::vector<double>& certainties, double alpha) {
  std::size_t n = 0;
  for (double c : certainties) n += c < alpha;
  return static_cast<double>(n) / static_cast<double>(certainties.size());
}

AlphaCalibration describe(double alpha, const std::vector<double>& known, const std::vector<double>& unseen) {
  AlphaCalibration out;
  out.alpha = alpha;
  out.known_flag_rate = flag_rate(known, alpha);
  if (!unseen.empty()) out.unknown_flag_rate = flag_rate(unseen, alpha);
  return out;
}

// Keeps thresholds inside the open interval the config requires.
double clamp_alpha(double a) { return std::clamp(a, 1e-9, 1.0 - 1e-9); }

}  // namespace

AlphaCalibration calibrate_alpha(const std::vector<double>& known, const std::vector<double>& unseen) {
  if (known.empty() || unseen.empty()) throw ParameterError("calibrate_alpha needs known and unseen certainties");
  std::vector<double> all(known);
  all.insert(all.end(), unseen.begin(), unseen.end());
  std::sort(all.begin(), all.end());
  all.erase(std::unique(all.begin(), all.end()), all.end());

  std::vector<double> candidates;
  candidates.push_back(clamp_alpha(all.front()));
  for (std::size_t i = 1; i < all.size(); ++i) candidates.push_back(clamp_alpha(0.5 * (all[i - 1] + all[i])));
  candidates.push_back(clamp_alpha(std::nextafter(all.back(), 2.0)));

  AlphaCalibration best = describe(candidates.front(), known, unseen);
  for (double a : candidates) {
    const AlphaCalibration c = describe(a, known, unseen);
    if (c.unknown_flag_rate - c.known_flag_rate > best.unknown_flag_rate - best.known_flag_rate) best = c;
  }
  return best;
}

AlphaCalibration alpha_for_known_rate(const std::vector<double>& known, double rate) {
  if (known.empty()) throw ParameterError("alpha_for_known_rate needs known certainties");
  if (!(rate >= 0.0 && rate < 1.0)) throw ParameterError("rate must lie in [0, 1)");
  std::vector<double> sorted(known);
  std::sort(sorted.begin(), sorted.end());
  // alpha = sorted[m] flags exactly the m smallest (minus ties below it).
  const auto m = static_cast<std::size_t>(std::floor(rate * static_cast<double>(sorted.size())));
  return describe(clamp_alpha(sorted[std::min(m, sorted.size() - 1)]), known, {});
}

std::size_t RetrainPool::staged_count(const std::string& name) const {
  const auto it = staged.find(name);
  return it == staged.end() ? 0 : it->second.size();
}

IntegrationResult integrate_labels(RetrainPool& pool, const std::vector<LabeledSample>& items, LabelSet& labels,
                                   std::size_t threshold) {
  if (threshold < 1) throw ParameterError("integrate_labels: threshold must be at least 1");
  IntegrationResult result;
  for (const auto& item : items) {
    if (item.label.empty()) throw ParameterError("integrate_labels: empty label");
    if (labels.contains(item.label)) {
      pool.ready.push_back(item);
      continue;
    }
    auto& bucket = pool.staged[item.label];
    bucket.push_back(item);
    if (bucket.size() >= threshold) {
      labels.append_new(item.label);
      pool.ready.insert(pool.ready.end(), bucket.begin(), bucket.end());
      pool.staged.erase(item.label);
      result.promoted.push_back(item.label);
      result.retrain_needed = true;
    }
  }
  return result;
}

namespace {

void append(CropStore& store, const LabeledSample& item) {
  Sample s = item.sample;
  s.label_id = static_cast<std::uint16_t>(store.labels.add(item.label));
  store.samples.push_back(std::move(s));
}

}  // namespace

StackedCommittee retrain_cycle(const StackedCommittee& committee, RetrainPool& pool, MemberSplits& data,
                               const LabelSet& labels, const RetrainConfig& config) {
  const std::size_t n = committee.members.size();
  if (n == 0) throw ContractError("retrain_cycle: committee has no members");
  if (data.members.size() != n) throw ContractError("retrain_cycle: member data does not match the committee");
  const std::size_t old_k = committee.width();
  if (labels.size() < old_k) throw ContractError("retrain_cycle: label set shrank");
  for (std::size_t i = 0; i < old_k; ++i)
    if (labels.name(i) != committee.labels.name(i))
      throw ContractError("retrain_cycle: label set does not extend the committee's labels");

  // Group the ready pool by class, keeping arrival order inside each class.
  std::vector<std::vector<const LabeledSample*>> by_class(labels.size());
  for (const auto& item : pool.ready) {
    const auto id = labels.find(item.label);
    if (!id) throw ContractError("retrain_cycle: pooled label '" + item.label + "' is not in the label set");
    by_class[*id].push_back(&item);
  }
  for (std::size_t c = old_k; c < labels.size(); ++c)
    if (by_class[c].empty()) throw ContractError("retrain_cycle: new class '" + labels.name(c) + "' has no samples");

  Rng deal(Rng::mix(config.seed, 1));
  for (std::size_t c = 0; c < labels.size(); ++c) {
    auto& group = by_class[c];
    if (group.empty()) continue;
    deal.shuffle(std::span(group));
    const std::size_t m = group.size();
    std::size_t withheld = static_cast<std::size_t>(std::llround(config.stack_fraction * static_cast<double>(m)));
    if (c >= old_k) {
      withheld = std::max<std::size_t>(static_cast<std::size_t>(std::ceil(config.stack_fraction * m)),
                                       kMinStackingPerClass);
    }
    withheld = std::min(withheld, m);
    for (std::size_t i = 0; i < withheld; ++i) append(data.stacking, *group[i]);
    for (std::size_t i = withheld; i < m; ++i) append(data.members[(i - withheld) % n], *group[i]);
  }
  pool.consumed += pool.ready.size();
  pool.ready.clear();

  StackedCommittee next;
  next.labels = labels;
  next.records = committee.records;
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t member_seed = Rng::mix(config.seed, 100 + i);
    Network net = labels.size() > old_k ? expand_output(committee.members[i], labels.size(), member_seed)
                                        : committee.members[i];
    const TrainingSet set = to_training_set(data.members[i], labels);
    auto history = train_network(net, set, {config.epochs, config.sgd, Rng::mix(config.seed, 200 + i)});
    auto& rec = next.records[i];
    rec.split_keys.clear();
    for (const auto& s : data.members[i].samples) rec.split_keys.push_back(s.provenance.key());
    rec.history.insert(rec.history.end(), history.begin(), history.end());
    next.members.push_back(std::move(net));
  }
  for (const auto& s : data.stacking.samples) next.stacking_keys.push_back(s.provenance.key());
  next.meta = fit_stacker(next, data.stacking, config.meta);
  return next;
}

}  // namespace owl
