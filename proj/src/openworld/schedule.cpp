#include "owl/schedule.hpp"

#include <algorithm>
#include <set>

#include "owl/error.hpp"
#include "owl/oracle_queue.hpp"

namespace owl {

namespace {

// Stacked accuracy over the samples of `names`; 0 when there are none.
double accuracy_on(const StackedCommittee& committee, const CropStore& store, const std::vector<std::string>& names) {
  const CropStore subset = store.with_labels(names);
  if (subset.empty()) return 0.0;
  return evaluate(committee, subset).stacked_accuracy;
}

}  // namespace

void check_schedule_inputs(const CropStore& dataset, const OpenWorldConfig& config, const ScheduleSplit& split) {
  config.validate();
  const auto counts = dataset.class_counts();
  auto require = [&](const std::string& name) {
    const auto id = dataset.labels.find(name);
    if (!id || counts[*id] == 0) throw ConfigError("class '" + name + "' does not occur in the dataset");
  };
  for (const auto& n : config.initial_known) require(n);
  for (const auto& n : config.schedule) require(n);
  const std::size_t need = split.train_cities + split.validation_cities + split.stream_cities;
  if (split.train_cities == 0 || split.validation_cities == 0 || split.stream_cities == 0)
    throw ConfigError("every city group needs at least one city");
  if (need > dataset.cities().size())
    throw ConfigError("split needs " + std::to_string(need) + " cities, dataset has " +
                      std::to_string(dataset.cities().size()));
}

ScheduleCities split_schedule_cities(const CropStore& dataset, const ScheduleSplit& split) {
  const auto order = partition_cities(dataset.cities(), split.train_cities,
                                      split.validation_cities + split.stream_cities, split.seed);
  ScheduleCities out;
  out.train = order.train_cities;
  out.validation.assign(order.test_cities.begin(), order.test_cities.begin() + split.validation_cities);
  out.stream.assign(order.test_cities.begin() + split.validation_cities, order.test_cities.end());
  return out;
}

ScheduleReport run_schedule(const CropStore& dataset, const CommitteeConfig& committee_config,
                            const OpenWorldConfig& config, const ScheduleSplit& split,
                            const CycleObserver& observer) {
  check_schedule_inputs(dataset, config, split);
  committee_config.validate();

  ScheduleReport report;
  report.split = split;
  {
    auto cities = split_schedule_cities(dataset, split);
    report.train_cities = std::move(cities.train);
    report.validation_cities = std::move(cities.validation);
    report.stream_cities = std::move(cities.stream);
  }
  const CropStore validation = dataset.with_cities(report.validation_cities);
  const CropStore stream_pool = dataset.with_cities(report.stream_cities);
  const CropStore train = dataset.with_cities(report.train_cities).with_labels(config.initial_known);
  for (const auto& name : config.initial_known)
    if (train.with_labels({name}).size() < 2 * committee_config.n_members)
      throw ConfigError("too few training samples of '" + name + "'");

  LabelSet labels(config.initial_known);
  MemberSplits data = committee_splits(train, committee_config);
  StackedCommittee committee = train_committee_on(data, labels, committee_config);

  OracleQueue queue;
  RetrainPool pool;
  Rng oracle_rng(Rng::mix(committee_config.seed, 7000));
  std::set<std::string> sent_to_oracle;
  std::vector<std::string> injected_so_far;

  RetrainConfig retrain;
  retrain.epochs = config.retrain_epochs;
  retrain.sgd = committee_config.sgd;
  retrain.stack_fraction = committee_config.stack_fraction;
  retrain.meta = committee_config.meta;

  if (config.schedule.empty()) {
    CycleRecord row;
    row.known = labels.names();
    row.alpha = config.alpha;
    row.closed_accuracy = accuracy_on(committee, validation, labels.names());
    row.post_retrain_accuracy = row.closed_accuracy;
    row.original_accuracy_after = row.closed_accuracy;
    if (observer) observer(row);
    report.cycles.push_back(row);
  }

  for (std::size_t c = 0; c < config.schedule.size(); ++c) {
    CycleRecord row;
    row.cycle = c + 1;
    row.known = labels.names();
    row.injected = config.schedule[c];
    injected_so_far.push_back(row.injected);
    row.closed_accuracy = accuracy_on(committee, validation, labels.names());
    row.injected_accuracy_before = accuracy_on(committee, validation, {row.injected});

    row.alpha = config.alpha;
    if (config.calibrate) {
      std::vector<double> known_c, unseen_c;
      const CropStore v_known = validation.with_labels(labels.names());
      const CropStore v_unseen = validation.with_labels({row.injected});
      for (const auto& p : predict_store(committee, v_known)) known_c.push_back(p.certainty);
      for (const auto& p : predict_store(committee, v_unseen)) unseen_c.push_back(p.certainty);
      if (!known_c.empty() && !unseen_c.empty()) row.alpha = calibrate_alpha(known_c, unseen_c).alpha;
    }

    // The stream carries every known and injected class, minus samples the
    // oracle has already seen.
    std::vector<std::string> stream_classes = labels.names();
    for (const auto& n : injected_so_far)
      if (!labels.contains(n)) stream_classes.push_back(n);
    const CropStore stream = stream_pool.with_labels(stream_classes).filter([&](const Sample& s) {
      return !sent_to_oracle.count(s.provenance.key());
    });
    row.stream_samples = stream.size();
    const auto predictions = predict_store(committee, stream);
    if (!stream.empty()) row.stream_accuracy = evaluate_predictions(predictions, stream, committee.labels).stacked_accuracy;
    {
      const Evaluation e = evaluate(committee, validation.with_labels(stream_classes));
      row.open_accuracy = e.stacked_accuracy;
      row.member_open_accuracy = e.member_accuracy;
    }

    for (std::size_t i = 0; i < stream.size(); ++i) {
      const Sample& s = stream.samples[i];
      const std::string& truth = stream.label_name(s);
      const bool known = labels.contains(truth);
      row.unseen_samples += !known;
      const Verdict v = make_verdict(predictions[i], row.alpha);
      if (!v.unknown()) continue;
      ++row.unknowns_flagged;
      if (known)
        ++row.false_unknowns;
      else
        ++row.unseen_flagged;
      const auto id = queue.enqueue(s, truth, v, committee.labels.name(v.label_id));
      sent_to_oracle.insert(s.provenance.key());
      const std::string answer = simulated_oracle(queue, id, config.noise, dataset.labels.names(), oracle_rng);
      ++row.oracle_queries;
      row.oracle_errors += answer != truth;
    }

    const IntegrationResult integration =
        integrate_labels(pool, queue.take_labeled(), labels, config.min_new_class_samples);
    if (integration.retrain_needed) {
      retrain.seed = Rng::mix(committee_config.seed, 5000 + c);
      committee = retrain_cycle(committee, pool, data, labels, retrain);
      row.retrained = true;
    }
    row.injected_accuracy_after = accuracy_on(committee, validation, {row.injected});
    row.original_accuracy_after = accuracy_on(committee, validation, config.initial_known);
    row.post_retrain_accuracy = accuracy_on(committee, validation, labels.names());
    if (observer) observer(row);
    report.cycles.push_back(row);
  }
  report.committee = std::move(committee);
  return report;
}

}  // namespace owl
