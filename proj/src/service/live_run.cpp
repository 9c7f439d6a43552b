#include "owl/error.hpp"
#include "owl/service.hpp"

namespace owl {

namespace {

double accuracy_on(const StackedCommittee& committee, const CropStore& store, const std::vector<std::string>& names) {
  std::vector<std::string> present;
  for (const auto& n : names)
    if (store.labels.contains(n)) present.push_back(n);
  const CropStore subset = store.with_labels(present);
  return subset.empty() ? 0.0 : evaluate(committee, subset).stacked_accuracy;
}

}  // namespace

LiveRun::LiveRun(const CropStore& dataset, const CommitteeConfig& committee, const OpenWorldConfig& config,
                 const ScheduleSplit& split)
    : committee_config_(committee), config_(config), dataset_(dataset),
      oracle_rng_(Rng::mix(committee.seed, 7000)) {
  check_schedule_inputs(dataset, config, split);
  committee.validate();
  const ScheduleCities cities = split_schedule_cities(dataset, split);
  validation_ = dataset.with_cities(cities.validation);
  stream_pool_ = dataset.with_cities(cities.stream);
  const CropStore train = dataset.with_cities(cities.train).with_labels(config.initial_known);
  data_ = committee_splits(train, committee);
  auto initial = std::make_shared<const StackedCommittee>(
      train_committee_on(data_, LabelSet(config.initial_known), committee));

  service_ = std::make_unique<OracleService>(initial, ServiceConfig{config.oracle, config.min_new_class_samples});
  service_->set_training_counts(counts());
  RunStatus status;
  status.alpha = config.alpha;
  status.last_stacked_accuracy = accuracy_on(*initial, validation_, config.initial_known);
  service_->set_status(status);
  service_->on_retrain([this] {
    std::lock_guard lock(mutex_);
    retrain_requested_ = true;
    wake_.notify_all();
  });
}

LiveRun::~LiveRun() { stop(); }

void LiveRun::start() {
  if (worker_.joinable()) throw StateError("LiveRun already started");
  worker_ = std::thread([this] { loop(); });
}

void LiveRun::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  wake_.notify_all();
  if (worker_.joinable()) worker_.join();
}

bool LiveRun::wait_for_cycle(std::size_t cycle, std::chrono::milliseconds timeout) {
  std::unique_lock lock(mutex_);
  return wake_.wait_for(lock, timeout, [&] { return finished_cycles_ >= cycle || stopping_; }) &&
         finished_cycles_ >= cycle;
}

std::vector<CycleRecord> LiveRun::records() const {
  std::lock_guard lock(mutex_);
  return records_;
}

std::map<std::string, std::size_t> LiveRun::counts() const {
  std::map<std::string, std::size_t> out;
  auto add = [&](const CropStore& store) {
    for (const auto& s : store.samples) ++out[store.label_name(s)];
  };
  for (const auto& m : data_.members) add(m);
  add(data_.stacking);
  return out;
}

void LiveRun::loop() {
  try {
    begin_cycle();
    while (true) {
      {
        std::unique_lock lock(mutex_);
        wake_.wait(lock, [&] { return retrain_requested_ || stopping_; });
        if (stopping_) return;
        retrain_requested_ = false;
      }
      finish_cycle();
      if (next_class_ < config_.schedule.size()) begin_cycle();
    }
  } catch (const std::exception& e) {
    RunStatus status = service_->status();
    status.retraining = false;
    status.error = e.what();
    service_->set_status(status);
    std::lock_guard lock(mutex_);
    stopping_ = true;
    wake_.notify_all();
  }
}

// Same measurements and stream as one run_schedule cycle, up to the point
// where the oracle takes over.
void LiveRun::begin_cycle() {
  const auto committee = service_->snapshot().get();
  const LabelSet& labels = committee->labels;
  current_ = CycleRecord{};
  current_.cycle = finished_cycles_ + 1;
  current_.known = labels.names();
  if (next_class_ < config_.schedule.size()) current_.injected = config_.schedule[next_class_++];
  current_.closed_accuracy = accuracy_on(*committee, validation_, labels.names());
  if (!current_.injected.empty())
    current_.injected_accuracy_before = accuracy_on(*committee, validation_, {current_.injected});

  current_.alpha = config_.alpha;
  if (config_.calibrate && !current_.injected.empty()) {
    std::vector<double> known_c, unseen_c;
    for (const auto& p : predict_store(*committee, validation_.with_labels(labels.names())))
      known_c.push_back(p.certainty);
    for (const auto& p : predict_store(*committee, validation_.with_labels({current_.injected})))
      unseen_c.push_back(p.certainty);
    if (!known_c.empty() && !unseen_c.empty()) current_.alpha = calibrate_alpha(known_c, unseen_c).alpha;
  }

  std::vector<std::string> stream_classes = labels.names();
  for (std::size_t i = 0; i < next_class_; ++i)
    if (!labels.contains(config_.schedule[i])) stream_classes.push_back(config_.schedule[i]);
  const CropStore stream = stream_pool_.with_labels(stream_classes).filter([&](const Sample& s) {
    return !sent_to_oracle_.count(s.provenance.key());
  });
  current_.stream_samples = stream.size();
  {
    const Evaluation e = evaluate(*committee, validation_.with_labels(stream_classes));
    current_.open_accuracy = e.stacked_accuracy;
    current_.member_open_accuracy = e.member_accuracy;
  }

  RunStatus status = service_->status();
  status.cycle = current_.cycle;
  status.alpha = current_.alpha;
  status.injected = current_.injected;
  status.last_stacked_accuracy = current_.open_accuracy;
  service_->set_status(status);

  const auto predictions = predict_store(*committee, stream);
  if (!stream.empty())
    current_.stream_accuracy = evaluate_predictions(predictions, stream, labels).stacked_accuracy;
  std::vector<std::uint64_t> flagged;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const Sample& s = stream.samples[i];
    const std::string& truth = stream.label_name(s);
    const bool known = labels.contains(truth);
    current_.unseen_samples += !known;
    const Verdict v = make_verdict(predictions[i], current_.alpha);
    if (!v.unknown()) continue;
    ++current_.unknowns_flagged;
    if (known)
      ++current_.false_unknowns;
    else
      ++current_.unseen_flagged;
    flagged.push_back(service_->queue().enqueue(s, truth, v, labels.name(v.label_id)));
    sent_to_oracle_.insert(s.provenance.key());
  }
  if (config_.oracle == OracleMode::simulated) {
    for (const auto id : flagged) {
      const auto truth = service_->queue().find(id)->truth;
      const std::string answer = simulated_oracle(service_->queue(), id, config_.noise, dataset_.labels.names(),
                                                  oracle_rng_);
      ++current_.oracle_queries;
      current_.oracle_errors += answer != truth;
    }
    service_->absorb_labels();
  }
}

void LiveRun::finish_cycle() {
  RunStatus status = service_->status();
  status.retraining = true;
  service_->set_status(status);

  const auto committee = service_->snapshot().get();
  auto [labels, pool] = service_->checkout();
  if (config_.oracle == OracleMode::external) current_.oracle_queries = pool.ready.size();
  RetrainConfig retrain;
  retrain.epochs = config_.retrain_epochs;
  retrain.sgd = committee_config_.sgd;
  retrain.stack_fraction = committee_config_.stack_fraction;
  retrain.meta = committee_config_.meta;
  retrain.seed = Rng::mix(committee_config_.seed, 5000 + finished_cycles_);
  auto next = std::make_shared<const StackedCommittee>(retrain_cycle(*committee, pool, data_, labels, retrain));
  service_->snapshot().swap(next);
  service_->set_training_counts(counts());

  current_.retrained = true;
  if (!current_.injected.empty())
    current_.injected_accuracy_after = accuracy_on(*next, validation_, {current_.injected});
  current_.original_accuracy_after = accuracy_on(*next, validation_, config_.initial_known);
  current_.post_retrain_accuracy = accuracy_on(*next, validation_, next->labels.names());

  status.retraining = false;
  status.last_stacked_accuracy = current_.post_retrain_accuracy;
  service_->set_status(status);
  {
    std::lock_guard lock(mutex_);
    records_.push_back(current_);
    ++finished_cycles_;
  }
  wake_.notify_all();
}

}  // namespace owl
