#include "owl/committee.hpp"

#include <filesystem>
#include <json.hpp>

#include "owl/binary_io.hpp"
#include "owl/error.hpp"
#include "owl/network_io.hpp"

namespace owl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream tags for seed derivation.
constexpr std::uint64_t kSplitStream = 1;
constexpr std::uint64_t kInitStream = 1000;
constexpr std::uint64_t kTrainStream = 2000;

}  // namespace

void CommitteeConfig::validate() const {
  if (n_members < 2) throw ParameterError("a committee needs at least 2 members");
  if (epochs < 1) throw ParameterError("epochs must be >= 1");
  if (!(stack_fraction > 0.0 && stack_fraction < 1.0)) throw ParameterError("stack fraction must lie in (0, 1)");
  if (!(sgd.learning_rate >= 0.0)) throw ParameterError("learning rate must be >= 0");
  if (!(sgd.momentum >= 0.0 && sgd.momentum < 1.0)) throw ParameterError("momentum must lie in [0, 1)");
  if (sgd.batch_size < 1) throw ParameterError("batch size must be >= 1");
}

std::vector<double> stack_features(const std::vector<std::vector<float>>& member_scores) {
  std::vector<double> f;
  for (const auto& s : member_scores) f.insert(f.end(), s.begin(), s.end());
  return f;
}

Prediction predict_from_scores(const MetaModel& meta, std::vector<std::vector<float>> member_scores) {
  Prediction p;
  p.posteriors = meta.posteriors(stack_features(member_scores));
  p.label = argmax(p.posteriors);
  p.certainty = p.posteriors[p.label];
  p.member_scores = std::move(member_scores);
  return p;
}

Prediction stacked_predict(const StackedCommittee& committee, const Tensor& pixels) {
  std::vector<std::vector<float>> scores;
  scores.reserve(committee.members.size());
  for (const auto& m : committee.members) scores.push_back(member_scores(m, pixels));
  return predict_from_scores(committee.meta, std::move(scores));
}

std::vector<Prediction> predict_store(const StackedCommittee& committee, const CropStore& store) {
  std::vector<Prediction> out(store.size());
#pragma omp parallel for schedule(dynamic, 4) if (store.size() > 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(store.size()); ++i) {
    out[static_cast<std::size_t>(i)] = stacked_predict(committee, store.samples[static_cast<std::size_t>(i)].pixels());
  }
  return out;
}

MetaModel fit_stacker(const StackedCommittee& committee, const CropStore& stacking, const MetaFitOptions& options) {
  const std::size_t k = committee.width();
  std::vector<std::size_t> per_class(k, 0);
  std::vector<std::vector<double>> features(stacking.size());
  std::vector<std::size_t> labels(stacking.size());
  for (std::size_t i = 0; i < stacking.size(); ++i) {
    const auto& s = stacking.samples[i];
    const auto id = committee.labels.find(stacking.label_name(s));
    if (!id) throw ParameterError("stacking sample with label '" + stacking.label_name(s) + "' unknown to the committee");
    labels[i] = *id;
    ++per_class[*id];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (per_class[c] < kMinStackingPerClass) {
      throw ParameterError("fit_meta: class '" + committee.labels.name(c) + "' has " + std::to_string(per_class[c]) +
                           " stacking samples, need " + std::to_string(kMinStackingPerClass));
    }
  }
#pragma omp parallel for schedule(dynamic, 4) if (stacking.size() > 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(stacking.size()); ++i) {
    const Tensor x = stacking.samples[static_cast<std::size_t>(i)].pixels();
    std::vector<std::vector<float>> scores;
    for (const auto& m : committee.members) scores.push_back(member_scores(m, x));
    features[static_cast<std::size_t>(i)] = stack_features(scores);
  }
  return fit_meta(features, labels, k, committee.members.size(), options, committee.labels.names());
}

MemberSplits committee_splits(const CropStore& train, const CommitteeConfig& config) {
  config.validate();
  train.validate();
  return split_members(train, config.n_members, config.stack_fraction, Rng::mix(config.seed, kSplitStream));
}

StackedCommittee train_committee_on(const MemberSplits& splits, const LabelSet& labels, const CommitteeConfig& config) {
  config.validate();
  if (labels.empty()) throw ParameterError("train_committee: empty label set");
  if (splits.members.size() != config.n_members) throw ParameterError("train_committee: split count != n_members");
  StackedCommittee sc;
  sc.labels = labels;
  const std::size_t k = sc.labels.size();
  for (std::size_t i = 0; i < config.n_members; ++i) {
    MemberRecord rec;
    rec.init_seed = Rng::mix(config.seed, kInitStream + i);
    rec.train_seed = Rng::mix(config.seed, kTrainStream + i);
    for (const auto& s : splits.members[i].samples) rec.split_keys.push_back(s.provenance.key());
    Network net = build_cnn(config.architecture, k, rec.init_seed, config.arch);
    const TrainingSet data = to_training_set(splits.members[i], sc.labels);
    rec.history = train_network(net, data, {config.epochs, config.sgd, rec.train_seed});
    sc.members.push_back(std::move(net));
    sc.records.push_back(std::move(rec));
  }
  for (const auto& s : splits.stacking.samples) sc.stacking_keys.push_back(s.provenance.key());
  sc.meta = fit_stacker(sc, splits.stacking, config.meta);
  return sc;
}

StackedCommittee train_committee(const CropStore& train, const CommitteeConfig& config) {
  return train_committee_on(committee_splits(train, config), train.labels, config);
}

Evaluation evaluate_predictions(const std::vector<Prediction>& predictions, const CropStore& test,
                                const LabelSet& committee_labels) {
  if (test.empty()) throw ParameterError("evaluate: empty test set");
  if (predictions.size() != test.size()) throw DimensionError("evaluate: prediction count differs from test size");
  const std::size_t n_members = predictions[0].member_scores.size();
  Evaluation e;
  e.samples = test.size();
  e.member_accuracy.assign(n_members, 0.0);
  std::size_t stacked = 0;
  std::vector<std::size_t> member(n_members, 0);
  for (std::size_t i = 0; i < test.size(); ++i) {
    const auto truth = committee_labels.find(test.label_name(test.samples[i]));
    if (!truth) continue;
    stacked += predictions[i].label == *truth;
    for (std::size_t m = 0; m < n_members; ++m) member[m] += argmax(predictions[i].member_scores[m]) == *truth;
  }
  const double n = static_cast<double>(test.size());
  e.stacked_accuracy = static_cast<double>(stacked) / n;
  for (std::size_t m = 0; m < n_members; ++m) e.member_accuracy[m] = static_cast<double>(member[m]) / n;
  return e;
}

Evaluation evaluate(const StackedCommittee& committee, const CropStore& test) {
  return evaluate_predictions(predict_store(committee, test), test, committee.labels);
}

void save_bundle(const StackedCommittee& committee, const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create bundle directory " + dir + ": " + ec.message());
  json manifest;
  manifest["format"] = "owl-committee";
  manifest["labels"] = committee.labels.names();
  manifest["members"] = json::array();
  for (std::size_t i = 0; i < committee.members.size(); ++i) {
    const std::string file = "member_" + std::to_string(i) + ".ownn";
    save_network(committee.members[i], (fs::path(dir) / file).string());
    const auto& r = committee.records[i];
    json hist = json::array();
    for (const auto& h : r.history) hist.push_back({{"epoch", h.epoch}, {"loss", h.loss}, {"accuracy", h.accuracy}});
    manifest["members"].push_back({{"file", file},
                                   {"init_seed", r.init_seed},
                                   {"train_seed", r.train_seed},
                                   {"split", r.split_keys},
                                   {"history", hist}});
  }
  manifest["stacking_split"] = committee.stacking_keys;
  manifest["meta"] = "meta.owlr";
  save_meta(committee.meta, (fs::path(dir) / "meta.owlr").string());
  const std::string text = manifest.dump(2) + "\n";
  write_file_bytes((fs::path(dir) / "manifest.json").string(), std::vector<std::uint8_t>(text.begin(), text.end()));
}

StackedCommittee load_bundle(const std::string& dir) {
  const auto bytes = read_file_bytes((fs::path(dir) / "manifest.json").string());
  json manifest;
  try {
    manifest = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError("bundle manifest: " + std::string(e.what()));
  }
  StackedCommittee sc;
  try {
    sc.labels = LabelSet(manifest.at("labels").get<std::vector<std::string>>());
    for (const auto& m : manifest.at("members")) {
      sc.members.push_back(load_network((fs::path(dir) / m.at("file").get<std::string>()).string()));
      MemberRecord r;
      r.init_seed = m.at("init_seed").get<std::uint64_t>();
      r.train_seed = m.at("train_seed").get<std::uint64_t>();
      r.split_keys = m.at("split").get<std::vector<std::string>>();
      for (const auto& h : m.at("history"))
        r.history.push_back({h.at("epoch").get<std::size_t>(), h.at("loss").get<double>(), h.at("accuracy").get<double>()});
      sc.records.push_back(std::move(r));
    }
    sc.stacking_keys = manifest.at("stacking_split").get<std::vector<std::string>>();
    sc.meta = load_meta((fs::path(dir) / manifest.at("meta").get<std::string>()).string());
  } catch (const json::exception& e) {
    throw FormatError("bundle manifest: " + std::string(e.what()));
  }
  if (sc.members.size() < 2) throw FormatError("bundle: fewer than 2 members");
  for (const auto& m : sc.members)
    if (m.output_width() != sc.labels.size()) throw FormatError("bundle: member width does not match the label set");
  if (sc.meta.classes != sc.labels.size() || sc.meta.members != sc.members.size()) {
    throw FormatError("bundle: meta model shape does not match the members");
  }
  return sc;
}

}  // namespace owl
