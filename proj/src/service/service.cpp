#include "owl/service.hpp"

#include <array>
#include <charconv>

#include "json.hpp"
#include "owl/error.hpp"
#include "owl/crop.hpp"
#include "owl/image.hpp"

namespace owl {

using nlohmann::json;

namespace {

constexpr char kAlphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

json member_view(const std::vector<float>& scores, const LabelSet& labels, std::size_t index) {
  json view;
  view["member"] = index + 1;
  view["scores"] = scores;
  if (!scores.empty()) {
    const std::size_t top = argmax(scores);
    view["top_label"] = top < labels.size() ? labels.name(top) : std::to_string(top);
    view["top_score"] = scores[top];
  }
  return view;
}

Reply json_reply(int status, const json& body) { return {status, body.dump()}; }

std::optional<std::uint64_t> parse_id(const std::string& text) {
  std::uint64_t id = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, id);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return id;
}

// The label or name field of a request body; nullopt when the body is not a
// JSON object with a string under `field`.
std::optional<std::string> string_field(const std::string& body, const char* field) {
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) return std::nullopt;
  const auto it = doc.find(field);
  if (it == doc.end() || !it->is_string()) return std::nullopt;
  return it->get<std::string>();
}

}  // namespace

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  for (std::size_t i = 0; i < bytes.size(); i += 3) {
    const std::size_t n = std::min<std::size_t>(3, bytes.size() - i);
    std::uint32_t v = static_cast<std::uint32_t>(bytes[i]) << 16;
    if (n > 1) v |= static_cast<std::uint32_t>(bytes[i + 1]) << 8;
    if (n > 2) v |= bytes[i + 2];
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += n > 1 ? kAlphabet[(v >> 6) & 63] : '=';
    out += n > 2 ? kAlphabet[v & 63] : '=';
  }
  return out;
}

std::vector<std::uint8_t> base64_decode(const std::string& text) {
  std::array<int, 256> value;
  value.fill(-1);
  for (int i = 0; i < 64; ++i) value[static_cast<unsigned char>(kAlphabet[i])] = i;
  if (text.size() % 4 != 0) throw ParseError("base64", "length is not a multiple of 4");
  std::vector<std::uint8_t> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t v = 0;
    int pad = 0;
    for (std::size_t j = 0; j < 4; ++j) {
      const char c = text[i + j];
      if (c == '=' && i + 4 == text.size() && j >= 2) {
        ++pad;
        v <<= 6;
        continue;
      }
      const int d = value[static_cast<unsigned char>(c)];
      if (d < 0 || pad > 0) throw ParseError("base64 offset " + std::to_string(i + j), "invalid character");
      v = (v << 6) | static_cast<std::uint32_t>(d);
    }
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    if (pad < 2) out.push_back(static_cast<std::uint8_t>(v >> 8));
    if (pad < 1) out.push_back(static_cast<std::uint8_t>(v));
  }
  return out;
}

std::vector<std::uint8_t> sample_png(const Sample& sample) {
  RgbImage image(kCropSize, kCropSize);
  if (sample.bytes.size() != image.pixels.size()) throw DimensionError("sample_png: crop is not 64 x 64 x 3");
  image.pixels = sample.bytes;
  return encode_png(image);
}

Reply error_reply(int status, const std::string& message) {
  return json_reply(status, json{{"error", message}, {"code", status}});
}

OracleService::OracleService(std::shared_ptr<const StackedCommittee> committee, ServiceConfig config)
    : snapshot_(committee), config_(config) {
  if (!committee) throw ContractError("OracleService needs a committee");
  labels_ = committee->labels;
}

RunStatus OracleService::status() const {
  std::lock_guard lock(mutex_);
  return status_;
}

void OracleService::set_status(const RunStatus& status) {
  std::lock_guard lock(mutex_);
  status_ = status;
}

void OracleService::set_training_counts(std::map<std::string, std::size_t> counts) {
  std::lock_guard lock(mutex_);
  training_counts_ = std::move(counts);
}

void OracleService::on_retrain(std::function<void()> handler) {
  std::lock_guard lock(mutex_);
  retrain_handler_ = std::move(handler);
}

IntegrationResult OracleService::absorb_locked() {
  return integrate_labels(pool_, queue_.take_labeled(), labels_, config_.min_new_class_samples);
}

IntegrationResult OracleService::absorb_labels() {
  IntegrationResult result;
  std::function<void()> handler;
  {
    std::lock_guard lock(mutex_);
    result = absorb_locked();
    if (result.retrain_needed) handler = retrain_handler_;
  }
  if (handler) handler();
  return result;
}

LabelSet OracleService::labels() const {
  std::lock_guard lock(mutex_);
  return labels_;
}

std::pair<LabelSet, RetrainPool> OracleService::checkout() {
  std::lock_guard lock(mutex_);
  RetrainPool out;
  out.ready = std::move(pool_.ready);
  pool_.ready.clear();
  pool_.consumed += out.ready.size();
  return {labels_, std::move(out)};
}

Reply OracleService::get_queue() const {
  const auto committee = snapshot_.get();
  json items = json::array();
  for (const auto& item : queue_.pending()) {
    json members = json::array();
    for (std::size_t m = 0; m < item.member_scores.size(); ++m)
      members.push_back(member_view(item.member_scores[m], committee->labels, m));
    items.push_back(json{{"id", item.id},
                     {"image_png_base64", base64_encode(sample_png(item.sample))},
                     {"width", kCropSize},
                     {"height", kCropSize},
                     {"certainty", item.certainty},
                     {"member_scores", members},
                     {"suggested", item.suggested},
                     {"enqueued_ms", item.enqueued_ms}});
  }
  return json_reply(200, items);
}

Reply OracleService::post_label(const std::string& id_text, const std::string& body) {
  if (config_.mode == OracleMode::simulated)
    return error_reply(409, "labels come from the simulated oracle in this run");
  const auto id = parse_id(id_text);
  if (!id) return error_reply(404, "no queue item '" + id_text + "'");
  const auto label = string_field(body, "label");
  if (!label) return error_reply(400, "body must be a JSON object with a string 'label'");

  IntegrationResult result;
  std::function<void()> handler;
  {
    std::lock_guard lock(mutex_);
    switch (queue_.label(*id, *label)) {
      case LabelOutcome::not_found: return error_reply(404, "no queue item " + id_text);
      case LabelOutcome::already_resolved: return error_reply(409, "item " + id_text + " is already resolved");
      case LabelOutcome::empty_label: return error_reply(400, "label must not be empty");
      case LabelOutcome::ok: break;
    }
    result = absorb_locked();
    if (result.retrain_needed) handler = retrain_handler_;
  }
  if (handler) handler();
  return json_reply(200, json{{"id", *id},
                              {"status", to_string(ItemStatus::labeled)},
                              {"label", *label},
                              {"retrain_triggered", result.retrain_needed},
                              {"promoted", result.promoted}});
}

Reply OracleService::get_classes() const {
  const auto committee = snapshot_.get();
  std::lock_guard lock(mutex_);
  json classes = json::array();
  auto count_of = [&](const std::string& name) {
    const auto it = training_counts_.find(name);
    return it == training_counts_.end() ? std::size_t{0} : it->second;
  };
  auto ready_of = [&](const std::string& name) {
    std::size_t n = 0;
    for (const auto& s : pool_.ready) n += s.label == name;
    return n;
  };
  for (const auto& name : labels_.names())
    classes.push_back({{"name", name},
                       {"samples", count_of(name)},
                       {"pending_samples", ready_of(name)},
                       {"in_committee", committee->labels.contains(name)}});
  for (const auto& [name, staged] : pool_.staged)
    if (!labels_.contains(name))
      classes.push_back({{"name", name}, {"samples", 0}, {"pending_samples", staged.size()}, {"in_committee", false}});
  for (const auto& name : registered_)
    if (!labels_.contains(name) && !pool_.staged.count(name))
      classes.push_back({{"name", name}, {"samples", 0}, {"pending_samples", 0}, {"in_committee", false}});
  return json_reply(200, classes);
}

Reply OracleService::post_class(const std::string& body) {
  const auto name = string_field(body, "name");
  if (!name) return error_reply(400, "body must be a JSON object with a string 'name'");
  if (name->empty()) return error_reply(400, "class name must not be empty");
  std::lock_guard lock(mutex_);
  if (labels_.contains(*name) || pool_.staged.count(*name) || registered_.count(*name))
    return error_reply(409, "class '" + *name + "' already exists");
  registered_.insert(*name);
  return json_reply(201, json{{"name", *name}, {"samples", 0}, {"pending_samples", 0}, {"in_committee", false}});
}

Reply OracleService::get_status() const {
  const auto committee = snapshot_.get();
  const RunStatus s = status();
  return json_reply(200, json{{"cycle", s.cycle},
                              {"alpha", s.alpha},
                              {"queue_depth", queue_.pending_count()},
                              {"last_stacked_accuracy", s.last_stacked_accuracy},
                              {"retraining", s.retraining},
                              {"injected", s.injected},
                              {"error", s.error},
                              {"oracle", to_string(config_.mode)},
                              {"known_classes", committee->labels.names()}});
}

}  // namespace owl
