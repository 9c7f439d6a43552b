#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "owl/error.hpp"
#include "owl/image.hpp"
#include "owl/ingest.hpp"
#include "owl/service.hpp"
#include "owl/synth.hpp"

using nlohmann::json;
using owl::OracleService;

namespace {

constexpr const char* kSecretTruth = "ground_truth_marker";

owl::CommitteeConfig tiny_committee() {
  owl::CommitteeConfig c;
  c.n_members = 2;
  c.arch.filters = {4, 6, 6};
  c.arch.dense_units = 24;
  c.epochs = 2;
  c.seed = 5;
  c.stack_fraction = 0.3;
  c.sgd.learning_rate = 0.05;
  c.sgd.batch_size = 8;
  return c;
}

owl::CropStore synth_store(std::size_t per_class, std::vector<std::string> classes) {
  owl::SynthConfig c;
  c.classes = classes;
  c.per_class = per_class;
  c.seed = 4;
  owl::IngestOptions options;
  options.classes = std::move(classes);
  return owl::ingest_scenes(owl::synth_scenes(c), options);
}

// A barely trained car/person committee; the handlers only need its labels
// and a forward pass.
std::shared_ptr<const owl::StackedCommittee> committee() {
  static const auto shared = [] {
    auto config = tiny_committee();
    config.epochs = 1;
    return std::make_shared<const owl::StackedCommittee>(
        owl::train_committee(synth_store(30, {"car", "person"}), config));
  }();
  return shared;
}

owl::Sample numbered_sample(std::uint32_t index) {
  owl::Sample s;
  s.bytes.resize(owl::kSampleBytes);
  for (std::size_t i = 0; i < s.bytes.size(); ++i) s.bytes[i] = static_cast<std::uint8_t>((i * 7 + index * 13) % 256);
  s.provenance = {"c", "i" + std::to_string(index), index};
  return s;
}

owl::Verdict unknown_verdict(double certainty) {
  owl::Verdict v;
  v.kind = owl::Verdict::Kind::unknown;
  v.certainty = certainty;
  v.member_scores = {{0.4f, 0.3f}, {0.2f, 0.6f}};
  return v;
}

std::vector<std::uint64_t> fill(OracleService& service, std::size_t n) {
  std::vector<std::uint64_t> ids;
  for (std::size_t i = 0; i < n; ++i)
    ids.push_back(service.queue().enqueue(numbered_sample(static_cast<std::uint32_t>(i)), kSecretTruth,
                                          unknown_verdict(0.3 + 0.01 * static_cast<double>(i)), "car"));
  return ids;
}

std::string label_body(const std::string& label) { return json{{"label", label}}.dump(); }

void expect_error_body(const owl::Reply& reply, int code) {
  EXPECT_EQ(reply.status, code) << reply.body;
  const json body = json::parse(reply.body);
  EXPECT_TRUE(body.at("error").is_string());
  EXPECT_EQ(body.at("code"), code);
}

}  // namespace

TEST(Base64, StandardVectors) {
  const std::vector<std::pair<std::string, std::string>> vectors{
      {"", ""}, {"f", "Zg=="}, {"fo", "Zm8="}, {"foo", "Zm9v"}, {"foob", "Zm9vYg=="}, {"fooba", "Zm9vYmE="},
      {"foobar", "Zm9vYmFy"}};
  for (const auto& [plain, encoded] : vectors) {
    const std::vector<std::uint8_t> bytes(plain.begin(), plain.end());
    EXPECT_EQ(owl::base64_encode(bytes), encoded);
    EXPECT_EQ(owl::base64_decode(encoded), bytes);
  }
}

TEST(Base64, RandomRoundTripAndMalformedInput) {
  owl::Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint8_t> bytes(rng.below(100));
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng.below(256));
    EXPECT_EQ(owl::base64_decode(owl::base64_encode(bytes)), bytes);
  }
  for (const char* bad : {"Zg=", "Z!==", "Zg==Zg==", "=Zg="}) EXPECT_THROW(owl::base64_decode(bad), owl::ParseError);
}

TEST(Service, FreshRunIsIdle) {
  OracleService service(committee(), {});
  EXPECT_EQ(service.get_queue().body, "[]");
  const json classes = json::parse(service.get_classes().body);
  ASSERT_EQ(classes.size(), 2u);
  EXPECT_EQ(classes[0]["name"], "car");
  EXPECT_EQ(classes[1]["name"], "person");
  const json status = json::parse(service.get_status().body);
  EXPECT_EQ(status["queue_depth"], 0);
  EXPECT_EQ(status["cycle"], 0);
}

TEST(Service, PendingViewsAndQueueDepth) {
  OracleService service(committee(), {});
  owl::RunStatus st;
  st.alpha = 0.5;
  service.set_status(st);
  const auto ids = fill(service, 3);
  const json items = json::parse(service.get_queue().body);
  ASSERT_EQ(items.size(), 3u);
  std::set<std::uint64_t> seen;
  for (std::size_t i = 0; i < items.size(); ++i) {
    EXPECT_EQ(items[i]["id"], ids[i]);  // oldest first
    seen.insert(items[i]["id"].get<std::uint64_t>());
    EXPECT_LT(items[i]["certainty"].get<double>(), st.alpha);
    ASSERT_EQ(items[i]["member_scores"].size(), 2u);
    EXPECT_EQ(items[i]["member_scores"][1]["top_label"], "person");
    EXPECT_FLOAT_EQ(items[i]["member_scores"][1]["top_score"].get<float>(), 0.6f);
    EXPECT_EQ(items[i]["suggested"], "car");
  }
  EXPECT_EQ(seen.size(), 3u);

  for (std::size_t k = 3; k < 12; ++k) {
    EXPECT_EQ(json::parse(service.get_status().body)["queue_depth"], k);
    fill(service, 1);
  }
}

TEST(Service, ImageDecodesToTheStoredCropBytes) {
  OracleService service(committee(), {});
  fill(service, 4);
  const json items = json::parse(service.get_queue().body);
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto png = owl::base64_decode(items[i]["image_png_base64"].get<std::string>());
    const owl::RgbImage image = owl::decode_png(png);
    EXPECT_EQ(image.width, 64u);
    EXPECT_EQ(image.height, 64u);
    EXPECT_EQ(image.pixels, numbered_sample(static_cast<std::uint32_t>(i)).bytes);
  }
}

TEST(Service, RepeatedReadsAreIdenticalAndNeverExposeTruth) {
  OracleService service(committee(), {});
  const auto ids = fill(service, 5);
  EXPECT_EQ(service.get_queue().body, service.get_queue().body);
  EXPECT_EQ(service.get_classes().body, service.get_classes().body);
  std::vector<std::string> bodies{service.get_queue().body, service.get_classes().body, service.get_status().body,
                                  service.post_label(std::to_string(ids[0]), label_body("car")).body,
                                  service.post_label(std::to_string(ids[1]), label_body("traffic_sign")).body,
                                  service.get_classes().body};
  for (const auto& b : bodies) EXPECT_EQ(b.find(kSecretTruth), std::string::npos) << b;
}

TEST(Service, LabelWithExistingClass) {
  OracleService service(committee(), {});
  const auto ids = fill(service, 2);
  const auto reply = service.post_label(std::to_string(ids[0]), label_body("person"));
  ASSERT_EQ(reply.status, 200) << reply.body;
  const json body = json::parse(reply.body);
  EXPECT_EQ(body["status"], "labeled");
  EXPECT_EQ(body["retrain_triggered"], false);
  EXPECT_EQ(service.labels().names(), (std::vector<std::string>{"car", "person"}));
  EXPECT_EQ(service.queue().find(ids[0])->status, owl::ItemStatus::labeled);
  // Gone from the pending view.
  EXPECT_EQ(json::parse(service.get_queue().body).size(), 1u);
}

TEST(Service, TwentiethNewClassLabelReportsRetrain) {
  OracleService service(committee(), {});
  int triggers = 0;
  service.on_retrain([&] { ++triggers; });
  const auto ids = fill(service, 21);
  for (std::size_t i = 0; i < 20; ++i) {
    const json body = json::parse(service.post_label(std::to_string(ids[i]), label_body("traffic_sign")).body);
    EXPECT_EQ(body["retrain_triggered"], i == 19) << i;
  }
  EXPECT_EQ(triggers, 1);
  EXPECT_TRUE(service.labels().contains("traffic_sign"));
  const json classes = json::parse(service.get_classes().body);
  ASSERT_EQ(classes.size(), 3u);
  EXPECT_EQ(classes[2]["name"], "traffic_sign");
  EXPECT_EQ(classes[2]["pending_samples"], 20);
  EXPECT_EQ(classes[2]["in_committee"], false);
  // The 21st sample of a promoted class goes straight to the pool.
  EXPECT_EQ(json::parse(service.post_label(std::to_string(ids[20]), label_body("traffic_sign")).body)["retrain_triggered"],
            false);
  auto [labels, pool] = service.checkout();
  EXPECT_EQ(pool.ready.size(), 21u);
  EXPECT_EQ(labels.size(), 3u);
}

TEST(Service, LabelErrors) {
  OracleService service(committee(), {});
  const auto ids = fill(service, 2);
  const std::string id = std::to_string(ids[0]);
  expect_error_body(service.post_label("999", label_body("car")), 404);
  expect_error_body(service.post_label("abc", label_body("car")), 404);
  expect_error_body(service.post_label(id, label_body("")), 400);
  expect_error_body(service.post_label(id, "{not json"), 400);
  expect_error_body(service.post_label(id, R"({"label": 3})"), 400);
  EXPECT_EQ(service.post_label(id, label_body("car")).status, 200);
  expect_error_body(service.post_label(id, label_body("car")), 409);
  expect_error_body(service.post_label(id, label_body("person")), 409);
}

TEST(Service, SimulatedModeRejectsHumanLabels) {
  OracleService service(committee(), {owl::OracleMode::simulated, 20});
  const auto ids = fill(service, 1);
  expect_error_body(service.post_label(std::to_string(ids[0]), label_body("car")), 409);
  EXPECT_EQ(service.queue().find(ids[0])->status, owl::ItemStatus::pending);
}

TEST(Service, RegisteringClasses) {
  OracleService service(committee(), {});
  bool triggered = false;
  service.on_retrain([&] { triggered = true; });
  EXPECT_EQ(service.post_class(R"({"name": "building"})").status, 201);
  expect_error_body(service.post_class(R"({"name": "building"})"), 409);
  expect_error_body(service.post_class(R"({"name": "car"})"), 409);
  expect_error_body(service.post_class(R"({"name": ""})"), 400);
  expect_error_body(service.post_class("[]"), 400);
  const json classes = json::parse(service.get_classes().body);
  ASSERT_EQ(classes.size(), 3u);
  EXPECT_EQ(classes[2]["name"], "building");
  EXPECT_EQ(classes[2]["samples"], 0);
  EXPECT_FALSE(triggered);
  EXPECT_EQ(service.labels().size(), 2u);  // registration is not promotion
}

class HttpTest : public ::testing::Test {
 protected:
  void SetUp() override {
    service = std::make_unique<OracleService>(committee(), owl::ServiceConfig{});
    frontend = std::make_unique<owl::HttpFrontend>(*service);
    port = frontend->start("127.0.0.1", 0);
  }
  void TearDown() override { frontend->stop(); }

  httplib::Client client() const { return httplib::Client("127.0.0.1", port); }

  std::unique_ptr<OracleService> service;
  std::unique_ptr<owl::HttpFrontend> frontend;
  int port = 0;
};

TEST_F(HttpTest, EndpointsOverTheWire) {
  auto cli = client();
  auto res = cli.Get("/api/queue");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "[]");
  const auto ids = fill(*service, 2);
  res = cli.Get("/api/queue");
  EXPECT_EQ(json::parse(res->body).size(), 2u);
  res = cli.Post("/api/queue/" + std::to_string(ids[0]) + "/label", label_body("car"), "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_EQ(json::parse(res->body)["retrain_triggered"], false);
  res = cli.Post("/api/queue/77/label", label_body("car"), "application/json");
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(json::parse(res->body)["code"], 404);
  res = cli.Post("/api/classes", R"({"name": "building"})", "application/json");
  EXPECT_EQ(res->status, 201);
  res = cli.Get("/api/status");
  EXPECT_EQ(json::parse(res->body)["queue_depth"], 1);
  res = cli.Get("/api/nothing");
  EXPECT_EQ(res->status, 404);
  EXPECT_EQ(json::parse(res->body)["code"], 404);
}

TEST_F(HttpTest, ConcurrentDoubleSubmitMutatesOnce) {
  const auto ids = fill(*service, 20);
  for (const auto id : ids) {
    std::atomic<int> ok{0}, conflict{0};
    auto submit = [&](const std::string& label) {
      auto cli = client();
      auto res = cli.Post("/api/queue/" + std::to_string(id) + "/label", label_body(label), "application/json");
      ASSERT_TRUE(res);
      if (res->status == 200) ++ok;
      if (res->status == 409) ++conflict;
    };
    std::thread a(submit, "car"), b(submit, "person");
    a.join();
    b.join();
    EXPECT_EQ(ok.load(), 1);
    EXPECT_EQ(conflict.load(), 1);
  }
  EXPECT_EQ(service->queue().pending_count(), 0u);
  // One labeled sample per item reached the pool.
  EXPECT_EQ(service->checkout().second.ready.size(), 20u);
}

class LiveRunTest : public ::testing::Test {
 protected:
  static owl::OpenWorldConfig config(owl::OracleMode mode) {
    owl::OpenWorldConfig ow;
    ow.schedule = {"traffic_sign"};
    ow.min_new_class_samples = 6;
    ow.retrain_epochs = 2;
    ow.calibrate = true;
    ow.oracle = mode;
    return ow;
  }
};

TEST_F(LiveRunTest, SimulatedOracleMatchesTheBatchSchedule) {
  const auto data = synth_store(100, {"car", "person", "traffic_sign"});
  const auto ow = config(owl::OracleMode::simulated);
  const auto report = owl::run_schedule(data, tiny_committee(), ow);
  ASSERT_TRUE(report.cycles[0].retrained);

  owl::LiveRun run(data, tiny_committee(), ow);
  run.start();
  ASSERT_TRUE(run.wait_for_cycle(1, std::chrono::seconds(120)));
  const auto records = run.records();
  ASSERT_EQ(records.size(), 1u);
  const auto& a = report.cycles[0];
  const auto& b = records[0];
  EXPECT_EQ(a.alpha, b.alpha);
  EXPECT_EQ(a.unknowns_flagged, b.unknowns_flagged);
  EXPECT_EQ(a.oracle_queries, b.oracle_queries);
  EXPECT_EQ(a.open_accuracy, b.open_accuracy);
  EXPECT_EQ(a.post_retrain_accuracy, b.post_retrain_accuracy);
  EXPECT_EQ(run.service().snapshot().get()->meta.weights, report.committee.meta.weights);
  EXPECT_EQ(run.service().post_label("1", label_body("car")).status, 409);
  run.stop();
}

TEST_F(LiveRunTest, HumanLabelsOverHttpTriggerTheRetrain) {
  const auto data = synth_store(100, {"car", "person", "traffic_sign"});
  owl::LiveRun run(data, tiny_committee(), config(owl::OracleMode::external));
  owl::HttpFrontend frontend(run.service());
  const int port = frontend.start("127.0.0.1", 0);
  run.start();
  httplib::Client cli("127.0.0.1", port);

  // Wait for the first cycle to flag its stream.
  json items;
  for (int tries = 0; tries < 600; ++tries) {
    items = json::parse(cli.Get("/api/queue")->body);
    if (!items.empty()) break;
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  ASSERT_FALSE(items.empty());
  EXPECT_EQ(json::parse(cli.Get("/api/status")->body)["cycle"], 1);

  bool triggered = false;
  std::size_t new_class_labels = 0;
  for (const auto& item : items) {
    const auto id = item["id"].get<std::uint64_t>();
    const std::string truth = run.service().queue().find(id)->truth;  // the test plays the oracle
    const auto res = cli.Post("/api/queue/" + std::to_string(id) + "/label", label_body(truth), "application/json");
    ASSERT_EQ(res->status, 200) << res->body;
    new_class_labels += truth == "traffic_sign";
    if (json::parse(res->body)["retrain_triggered"].get<bool>()) {
      EXPECT_EQ(new_class_labels, 6u);
      triggered = true;
    }
  }
  ASSERT_TRUE(triggered);
  ASSERT_TRUE(run.wait_for_cycle(1, std::chrono::seconds(120)));
  const json status = json::parse(cli.Get("/api/status")->body);
  EXPECT_EQ(status["retraining"], false);
  EXPECT_EQ(status["known_classes"], json({"car", "person", "traffic_sign"}));
  const json classes = json::parse(cli.Get("/api/classes")->body);
  EXPECT_EQ(classes[2]["in_committee"], true);
  EXPECT_GT(classes[2]["samples"].get<int>(), 0);
  run.stop();
  frontend.stop();
}
