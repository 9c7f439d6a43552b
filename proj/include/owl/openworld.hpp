#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "owl/committee.hpp"

namespace owl {

enum class OracleMode { simulated, external };

OracleMode parse_oracle_mode(const std::string& text);  // throws ConfigError
std::string to_string(OracleMode mode);

// A new class must leave at least one sample for the members after the
// stacker takes its share.
inline constexpr std::size_t kMinNewClassSamples = kMinStackingPerClass + 1;

struct OpenWorldConfig {
  double alpha = 0.5;
  // Re-pick alpha every cycle on the validation cities (see calibrate_alpha).
  bool calibrate = false;
  std::size_t min_new_class_samples = 20;
  OracleMode oracle = OracleMode::simulated;
  double noise = 0.0;
  std::size_t retrain_epochs = 10;
  std::vector<std::string> initial_known{"car", "person"};
  std::vector<std::string> schedule{"traffic_sign", "traffic_light", "building", "vegetation"};

  void validate() const;  // throws ConfigError
};

// Known carries the stacked argmax; Unknown keeps it too, as the suggestion
// shown to an oracle.
struct Verdict {
  enum class Kind { known, unknown };
  Kind kind = Kind::known;
  std::size_t label_id = 0;
  double certainty = 0.0;
  std::vector<std::vector<float>> member_scores;

  bool unknown() const { return kind == Kind::unknown; }
};

// Unknown exactly when certainty < alpha. Any alpha in [0, 1] is accepted.
Verdict make_verdict(const Prediction& prediction, double alpha);
Verdict classify_or_flag(const StackedCommittee& committee, const Tensor& pixels, double alpha);

struct AlphaCalibration {
  double alpha = 0.5;
  double known_flag_rate = 0.0;    // fraction of known samples with certainty < alpha
  double unknown_flag_rate = 0.0;  // same for unseen-class samples
};

// Youden choice: the threshold maximising unknown_flag_rate - known_flag_rate.
// Candidates are midpoints between consecutive distinct certainties; ties go
// to the smaller alpha. Both lists must be non-empty.
AlphaCalibration calibrate_alpha(const std::vector<double>& known, const std::vector<double>& unseen);

// Largest alpha that flags at most `rate` of the known certainties. Needs no
// unseen-class examples.
AlphaCalibration alpha_for_known_rate(const std::vector<double>& known, double rate);

// A resolved oracle answer.
struct LabeledSample {
  Sample sample;
  std::string label;
};

// Labeled samples waiting for the next retrain cycle. Labels already in the
// LabelSet sit in `ready`; new names wait in `staged` until they reach the
// threshold.
struct RetrainPool {
  std::vector<LabeledSample> ready;
  std::map<std::string, std::vector<LabeledSample>> staged;
  std::size_t consumed = 0;

  std::size_t staged_count(const std::string& name) const;
};

struct IntegrationResult {
  bool retrain_needed = false;
  std::vector<std::string> promoted;  // names appended to the LabelSet, in crossing order
};

// Items are processed in order. A staged class that reaches `threshold` is
// appended to `labels` and moves with all its samples into `ready`.
IntegrationResult integrate_labels(RetrainPool& pool, const std::vector<LabeledSample>& items, LabelSet& labels,
                                   std::size_t threshold);

struct RetrainConfig {
  std::size_t epochs = 10;
  SgdParams sgd;
  std::uint64_t seed = 0;
  double stack_fraction = kDefaultStackFraction;
  MetaFitOptions meta;
};

// Grows every member to |labels|, deals the ready pool out (a stacking share
// per class, the rest 1/N per member), fine-tunes each member on its whole
// accumulated split and refits the meta model from scratch. `data` holds the
// member splits and stacking store, and keeps the absorbed samples. Throws
// ContractError when `labels` does not extend the committee's labels or a new
// class has no pooled samples.
StackedCommittee retrain_cycle(const StackedCommittee& committee, RetrainPool& pool, MemberSplits& data,
                               const LabelSet& labels, const RetrainConfig& config);

// Readers take a reference-counted snapshot; writers replace it whole.
class CommitteeSnapshot {
 public:
  CommitteeSnapshot() = default;
  explicit CommitteeSnapshot(std::shared_ptr<const StackedCommittee> initial) : current_(std::move(initial)) {}

  std::shared_ptr<const StackedCommittee> get() const {
    std::lock_guard lock(mutex_);
    return current_;
  }
  void swap(std::shared_ptr<const StackedCommittee> next) {
    std::lock_guard lock(mutex_);
    current_ = std::move(next);
  }

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const StackedCommittee> current_;
};

}  // namespace owl
