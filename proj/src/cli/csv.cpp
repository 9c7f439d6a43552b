#include "owl/csv.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "owl/error.hpp"

namespace owl {

namespace {

const char* type_name(ColumnType t) {
  switch (t) {
    case ColumnType::integer: return "integer";
    case ColumnType::real: return "real";
    case ColumnType::text: return "text";
    case ColumnType::boolean: return "boolean";
  }
  return "?";
}

bool valid(const std::string& cell, ColumnType type) {
  switch (type) {
    case ColumnType::integer: {
      if (cell.empty()) return false;
      std::size_t i = cell[0] == '-' ? 1 : 0;
      if (i == cell.size()) return false;
      for (; i < cell.size(); ++i)
        if (cell[i] < '0' || cell[i] > '9') return false;
      return true;
    }
    case ColumnType::real: {
      if (cell.empty()) return false;
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      return end == cell.c_str() + cell.size() && std::isfinite(v);
    }
    case ColumnType::text: return cell.find_first_of(",\"\r\n") == std::string::npos;
    case ColumnType::boolean: return cell == "0" || cell == "1";
  }
  return false;
}

}  // namespace

CsvTable::CsvTable(std::vector<Column> columns) : columns_(std::move(columns)) {
  if (columns_.empty()) throw FormatError("csv: a table needs at least one column");
  for (const auto& c : columns_)
    if (c.name.empty() || !valid(c.name, ColumnType::text)) throw FormatError("csv: bad column name '" + c.name + "'");
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size())
    throw FormatError("csv: row has " + std::to_string(cells.size()) + " cells, schema has " +
                      std::to_string(columns_.size()));
  for (std::size_t i = 0; i < cells.size(); ++i)
    if (!valid(cells[i], columns_[i].type))
      throw FormatError("csv: column '" + columns_[i].name + "' expects " + type_name(columns_[i].type) + ", got '" +
                        cells[i] + "'");
  rows_.push_back(std::move(cells));
}

std::string CsvTable::str() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) out += (i ? "," : "") + columns_[i].name;
  out += '\n';
  for (const auto& row : rows_) {
    out += join(row, ',');
    out += '\n';
  }
  return out;
}

void CsvTable::write(const std::string& path) const {
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path);
  const std::string text = str();
  file.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!file) throw IoError("short write to " + path);
}

std::string format_real(double value) {
  if (!std::isfinite(value)) return "nan";  // rejected by every real column
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", value);
  // Avoid "-0.000000" for tiny negatives.
  if (std::string(buf) == "-0.000000") return "0.000000";
  return buf;
}

std::string format_bool(bool value) { return value ? "1" : "0"; }

std::string join(const std::vector<std::string>& items, char separator) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += separator;
    out += items[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& text, char separator) {
  std::vector<std::string> out;
  if (text.empty()) return out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, separator)) out.push_back(item);
  if (text.back() == separator) out.emplace_back();
  return out;
}

std::size_t CsvDocument::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ParseError("csv header", "missing column '" + name + "'");
}

CsvDocument read_csv(const std::string& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot read " + path);
  CsvDocument doc;
  std::string line;
  std::size_t number = 0;
  while (std::getline(file, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line, ',');
    if (doc.header.empty()) {
      doc.header = std::move(cells);
      continue;
    }
    if (cells.size() != doc.header.size())
      throw ParseError(path + ":" + std::to_string(number),
                       "expected " + std::to_string(doc.header.size()) + " cells, got " + std::to_string(cells.size()));
    doc.rows.push_back(std::move(cells));
  }
  if (doc.header.empty()) throw ParseError(path + ":1", "empty file");
  return doc;
}

}  // namespace owl
