#pragma once

#include <string>
#include <vector>

namespace owl {

enum class ColumnType { integer, real, text, boolean };

struct Column {
  std::string name;
  ColumnType type = ColumnType::text;
};

// In-memory CSV report. Rows are checked against the column types when they
// are added, and nothing reaches disk until write().
class CsvTable {
 public:
  explicit CsvTable(std::vector<Column> columns);

  // Throws FormatError naming the column when a cell does not parse as its
  // type, a real is not finite, or a text cell holds a comma, quote or line
  // break.
  void add_row(std::vector<std::string> cells);

  const std::vector<Column>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }
  std::string str() const;
  void write(const std::string& path) const;  // throws IoError

 private:
  std::vector<Column> columns_;
  std::vector<std::vector<std::string>> rows_;
};

// Fixed six decimals, so reports compare byte for byte.
std::string format_real(double value);
std::string format_bool(bool value);
std::string join(const std::vector<std::string>& items, char separator);
std::vector<std::string> split(const std::string& text, char separator);

struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws ParseError when the column is missing.
  std::size_t column(const std::string& name) const;
};

// Plain comma-separated reader for the reports above (no quoting). Throws
// IoError when unreadable and ParseError, with the line, on ragged rows.
CsvDocument read_csv(const std::string& path);

}  // namespace owl
