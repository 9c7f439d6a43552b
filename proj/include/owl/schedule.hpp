#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "owl/openworld.hpp"

namespace owl {

// Cities are shuffled once; training, validation and stream cities are
// consecutive slices of that order.
struct ScheduleSplit {
  std::size_t train_cities = 15;
  std::size_t validation_cities = 2;
  std::size_t stream_cities = 3;
  std::uint64_t seed = 7;
};

struct CycleRecord {
  std::size_t cycle = 0;  // 1-based; 0 is the closed-set-only row of an empty schedule
  std::vector<std::string> known;  // committee classes before the injection
  std::string injected;
  double alpha = 0.0;
  double closed_accuracy = 0.0;  // validation cities, known classes only
  // Validation cities, known plus every injected class; unseen samples always
  // count as misses.
  std::vector<double> member_open_accuracy;
  double open_accuracy = 0.0;
  double stream_accuracy = 0.0;  // same metric on this cycle's stream
  std::size_t stream_samples = 0;
  std::size_t unseen_samples = 0;    // stream samples of classes the committee lacks
  std::size_t unknowns_flagged = 0;  // verdicts with certainty < alpha
  std::size_t unseen_flagged = 0;
  std::size_t false_unknowns = 0;    // flagged samples of known classes
  std::size_t oracle_queries = 0;
  std::size_t oracle_errors = 0;     // answers that differ from ground truth
  bool retrained = false;
  double injected_accuracy_before = 0.0;  // validation cities, injected class only
  double injected_accuracy_after = 0.0;
  double original_accuracy_after = 0.0;   // validation cities, initially known classes
  double post_retrain_accuracy = 0.0;     // validation cities, every class known after the cycle
};

struct ScheduleReport {
  ScheduleSplit split;
  std::vector<std::string> train_cities, validation_cities, stream_cities;
  std::vector<CycleRecord> cycles;
  StackedCommittee committee;  // final state, with full training histories
};

// Throws ConfigError when a configured class is missing from `dataset` or the
// split asks for more cities than it has.
void check_schedule_inputs(const CropStore& dataset, const OpenWorldConfig& config, const ScheduleSplit& split);

struct ScheduleCities {
  std::vector<std::string> train, validation, stream;
};
ScheduleCities split_schedule_cities(const CropStore& dataset, const ScheduleSplit& split);

using CycleObserver = std::function<void(const CycleRecord&)>;

// Trains the initial committee on the known classes of the training cities,
// then for each scheduled class: measures closed-set accuracy, adds the class
// to the stream, flags low-certainty verdicts, asks the simulated oracle,
// integrates the answers and retrains when a class crosses the threshold.
// Throws ConfigError before any training when a class is missing from the
// data or the split asks for more cities than exist.
ScheduleReport run_schedule(const CropStore& dataset, const CommitteeConfig& committee,
                            const OpenWorldConfig& config, const ScheduleSplit& split = {},
                            const CycleObserver& observer = {});

}  // namespace owl
