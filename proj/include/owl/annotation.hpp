#pragma once

#include <string>
#include <vector>

namespace owl {

struct Point {
  int x = 0;
  int y = 0;
  friend bool operator==(const Point&, const Point&) = default;
};

struct LabeledPolygon {
  std::string label;
  std::vector<Point> points;
};

// A polygon annotation document in the Cityscapes "*_polygons.json" schema:
//
//   {"imgHeight": H, "imgWidth": W,
//    "objects": [{"label": "car", "polygon": [[x, y], ...]}, ...]}
//
// Other keys (e.g. "date", "deleted") are ignored.
struct Annotation {
  int width = 0;
  int height = 0;
  std::vector<LabeledPolygon> polygons;
  // Non-fatal findings: clamped points, skipped objects.
  std::vector<std::string> warnings;
};

// Objects with fewer than three points are skipped and points outside the
// image are clamped; both are reported in `warnings`. Malformed documents
// throw ParseError whose location is "line:column" for syntax errors or a JSON
// pointer (e.g. "/objects/2/polygon") for schema errors.
Annotation parse_annotation(const std::string& document);

std::string write_annotation(const Annotation& annotation);

}  // namespace owl
