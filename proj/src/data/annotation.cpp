#include "owl/annotation.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "owl/error.hpp"

namespace owl {

using nlohmann::json;

namespace {

std::string line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

int integer_field(const json& doc, const char* key) {
  const auto it = doc.find(key);
  if (it == doc.end()) throw ParseError(std::string("/") + key, "missing required field");
  if (!it->is_number()) throw ParseError(std::string("/") + key, "expected a number");
  const double v = it->get<double>();
  if (!(v >= 1) || v > 1e6) throw ParseError(std::string("/") + key, "image dimension out of range");
  return static_cast<int>(v);
}

}  // namespace

Annotation parse_annotation(const std::string& document) {
  json doc;
  try {
    doc = json::parse(document);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based and points past the offending character.
    throw ParseError(line_column(document, e.byte == 0 ? 0 : e.byte - 1), "malformed JSON");
  }
  if (!doc.is_object()) throw ParseError("/", "annotation root must be an object");

  Annotation out;
  out.height = integer_field(doc, "imgHeight");
  out.width = integer_field(doc, "imgWidth");
  const auto objects = doc.find("objects");
  if (objects == doc.end()) throw ParseError("/objects", "missing required field");
  if (!objects->is_array()) throw ParseError("/objects", "expected an array");

  for (std::size_t i = 0; i < objects->size(); ++i) {
    const std::string where = "/objects/" + std::to_string(i);
    const json& obj = (*objects)[i];
    if (!obj.is_object()) throw ParseError(where, "expected an object");
    const auto label = obj.find("label");
    if (label == obj.end() || !label->is_string()) throw ParseError(where + "/label", "expected a string");
    if (label->get<std::string>().empty()) throw ParseError(where + "/label", "empty label");
    const auto poly = obj.find("polygon");
    if (poly == obj.end() || !poly->is_array()) throw ParseError(where + "/polygon", "expected an array");

    LabeledPolygon lp;
    lp.label = label->get<std::string>();
    bool clamped = false;
    for (std::size_t j = 0; j < poly->size(); ++j) {
      const json& pt = (*poly)[j];
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number()) {
        throw ParseError(where + "/polygon/" + std::to_string(j), "expected an [x, y] pair");
      }
      const long x = std::lround(pt[0].get<double>());
      const long y = std::lround(pt[1].get<double>());
      const int cx = static_cast<int>(std::clamp<long>(x, 0, out.width - 1));
      const int cy = static_cast<int>(std::clamp<long>(y, 0, out.height - 1));
      clamped |= cx != x || cy != y;
      lp.points.push_back({cx, cy});
    }
    if (lp.points.size() < 3) {
      out.warnings.push_back(where + ": skipped object '" + lp.label + "' with " +
                             std::to_string(lp.points.size()) + " points");
      continue;
    }
    if (clamped) out.warnings.push_back(where + ": points clamped to image bounds");
    out.polygons.push_back(std::move(lp));
  }
  return out;
}

std::string write_annotation(const Annotation& annotation) {
  json doc;
  doc["imgHeight"] = annotation.height;
  doc["imgWidth"] = annotation.width;
  doc["objects"] = json::array();
  for (const auto& p : annotation.polygons) {
    json pts = json::array();
    for (const auto& pt : p.points) pts.push_back({pt.x, pt.y});
    doc["objects"].push_back({{"label", p.label}, {"polygon", std::move(pts)}});
  }
  return doc.dump(2) + "\n";
}

}  // namespace owl
