#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "owl/architectures.hpp"
#include "owl/crop_store.hpp"
#include "owl/meta_model.hpp"
#include "owl/partition.hpp"
#include "owl/trainer.hpp"

namespace owl {

// The meta model needs this many stacking samples for every known class.
inline constexpr std::size_t kMinStackingPerClass = 5;

struct CommitteeConfig {
  std::size_t n_members = 3;
  ArchitectureId architecture = ArchitectureId::C;
  ArchitectureConfig arch;
  std::size_t epochs = 10;
  std::uint64_t seed = 1;
  SgdParams sgd;
  double stack_fraction = kDefaultStackFraction;
  MetaFitOptions meta;

  void validate() const;  // throws ParameterError
};

struct MemberRecord {
  std::uint64_t init_seed = 0;
  std::uint64_t train_seed = 0;
  std::vector<std::string> split_keys;  // provenance keys of the member split
  std::vector<EpochRecord> history;     // appended to by every training pass
};

// N trained members sharing one label set, plus the stacker over their scores.
struct StackedCommittee {
  LabelSet labels;
  std::vector<Network> members;
  std::vector<MemberRecord> records;
  std::vector<std::string> stacking_keys;
  MetaModel meta;

  std::size_t width() const { return labels.size(); }
};

struct Prediction {
  std::size_t label = 0;
  double certainty = 0.0;
  std::vector<double> posteriors;
  std::vector<std::vector<float>> member_scores;  // N x K
};

// Concatenated member scores, the meta model's input.
std::vector<double> stack_features(const std::vector<std::vector<float>>& member_scores);

Prediction predict_from_scores(const MetaModel& meta, std::vector<std::vector<float>> member_scores);
Prediction stacked_predict(const StackedCommittee& committee, const Tensor& pixels);
std::vector<Prediction> predict_store(const StackedCommittee& committee, const CropStore& store);

// Fits the meta model on a stacking store mapped into the committee's labels.
MetaModel fit_stacker(const StackedCommittee& committee, const CropStore& stacking, const MetaFitOptions& options);

// The deterministic member / stacking split train_committee uses.
MemberSplits committee_splits(const CropStore& train, const CommitteeConfig& config);

// Trains one fresh member per split and fits the stacker on splits.stacking.
StackedCommittee train_committee_on(const MemberSplits& splits, const LabelSet& labels, const CommitteeConfig& config);

// Splits `train`, trains every member on its split and fits the stacker on
// the withheld share. Member seeds derive from config.seed, so training the
// members in any order gives the same committee.
StackedCommittee train_committee(const CropStore& train, const CommitteeConfig& config);

struct Evaluation {
  std::vector<double> member_accuracy;
  double stacked_accuracy = 0.0;
  std::size_t samples = 0;
};

// Plain argmax accuracy. Test labels are matched by name; a label the
// committee does not know always counts as a miss.
Evaluation evaluate(const StackedCommittee& committee, const CropStore& test);
Evaluation evaluate_predictions(const std::vector<Prediction>& predictions, const CropStore& test,
                                const LabelSet& committee_labels);

// Bundle directory: member_<i>.ownn, meta.owlr and manifest.json (labels,
// seeds, split keys, histories).
void save_bundle(const StackedCommittee& committee, const std::string& dir);
StackedCommittee load_bundle(const std::string& dir);

}  // namespace owl
