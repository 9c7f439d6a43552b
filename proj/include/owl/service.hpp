#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "owl/oracle_queue.hpp"
#include "owl/schedule.hpp"

namespace owl {

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(const std::string& text);  // throws ParseError

// PNG of a stored crop, as served to the console.
std::vector<std::uint8_t> sample_png(const Sample& sample);

struct ServiceConfig {
  OracleMode mode = OracleMode::external;
  std::size_t min_new_class_samples = 20;
};

struct RunStatus {
  std::size_t cycle = 0;
  double alpha = 0.5;
  double last_stacked_accuracy = 0.0;
  bool retraining = false;
  std::string injected;  // class currently fed into the stream, if any
  std::string error;     // set when the run loop stopped on an exception
};

// HTTP-independent reply: status code and JSON body.
struct Reply {
  int status = 200;
  std::string body;
};

// State shared between the HTTP handlers and the open-world loop. Labeling
// and integration happen under one lock, so the reply to the label that
// crosses a class threshold is the one that reports the retrain.
class OracleService {
 public:
  OracleService(std::shared_ptr<const StackedCommittee> committee, ServiceConfig config);

  CommitteeSnapshot& snapshot() { return snapshot_; }
  OracleQueue& queue() { return queue_; }
  const ServiceConfig& config() const { return config_; }

  RunStatus status() const;
  void set_status(const RunStatus& status);
  void set_training_counts(std::map<std::string, std::size_t> counts);
  // Called, outside the lock, whenever integration reports a retrain.
  void on_retrain(std::function<void()> handler);

  // Moves newly labeled queue items into the retraining pool.
  IntegrationResult absorb_labels();
  LabelSet labels() const;
  // Label set plus every ready sample, which leave the pool.
  std::pair<LabelSet, RetrainPool> checkout();

  Reply get_queue() const;
  Reply post_label(const std::string& id, const std::string& body);
  Reply get_classes() const;
  Reply post_class(const std::string& body);
  Reply get_status() const;

 private:
  IntegrationResult absorb_locked();

  CommitteeSnapshot snapshot_;
  OracleQueue queue_;
  ServiceConfig config_;

  mutable std::mutex mutex_;
  LabelSet labels_;
  RetrainPool pool_;
  std::set<std::string> registered_;
  std::map<std::string, std::size_t> training_counts_;
  RunStatus status_;
  std::function<void()> retrain_handler_;
};

Reply error_reply(int status, const std::string& message);

// cpp-httplib front end for an OracleService.
class HttpFrontend {
 public:
  explicit HttpFrontend(OracleService& service, std::string static_dir = {});
  ~HttpFrontend();
  HttpFrontend(const HttpFrontend&) = delete;
  HttpFrontend& operator=(const HttpFrontend&) = delete;

  // Binds and starts serving on a background thread. Port 0 picks a free
  // port. Returns the bound port; throws IoError when binding fails.
  int start(const std::string& bind, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// An open-world run driven by oracle answers instead of a fixed loop. It
// trains the initial committee, injects the first scheduled class into the
// stream and flags unknowns, then waits. Each retrain trigger runs one
// retrain cycle, swaps the committee and moves on to the next class.
class LiveRun {
 public:
  LiveRun(const CropStore& dataset, const CommitteeConfig& committee, const OpenWorldConfig& config,
          const ScheduleSplit& split = {});
  ~LiveRun();
  LiveRun(const LiveRun&) = delete;
  LiveRun& operator=(const LiveRun&) = delete;

  OracleService& service() { return *service_; }

  void start();
  void stop();
  // Blocks until `cycle` retrains have finished or the timeout elapses.
  bool wait_for_cycle(std::size_t cycle, std::chrono::milliseconds timeout);
  std::vector<CycleRecord> records() const;

 private:
  void loop();
  void begin_cycle();
  void finish_cycle();
  std::map<std::string, std::size_t> counts() const;

  CommitteeConfig committee_config_;
  OpenWorldConfig config_;
  CropStore dataset_, validation_, stream_pool_;
  MemberSplits data_;
  std::unique_ptr<OracleService> service_;
  Rng oracle_rng_;
  std::set<std::string> sent_to_oracle_;
  std::size_t next_class_ = 0;
  CycleRecord current_;
  std::vector<CycleRecord> records_;

  mutable std::mutex mutex_;
  std::condition_variable wake_;
  bool retrain_requested_ = false;
  bool stopping_ = false;
  std::size_t finished_cycles_ = 0;
  std::thread worker_;
};

}  // namespace owl
