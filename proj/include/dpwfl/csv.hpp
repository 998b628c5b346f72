#pragma once

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dpwfl {

// Shortest decimal string that round-trips the exact IEEE-754 value.
std::string format_double(double v);

// Inverse of format_double; throws std::invalid_argument on malformed input.
double parse_double(std::string_view s);

// Comma-separated output with '#' comment lines and a mandatory header row.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void comment(std::string_view text);
  void header(std::span<const std::string> names);
  void row(std::span<const std::string> cells);
  void row(std::span<const double> values);

 private:
  std::ostream& out_;
  bool header_written_ = false;
};

// In-memory parse of the same format. Cells are kept as strings; number()
// converts on access.
struct CsvTable {
  std::vector<std::string> comments;  // comment text, '#' and padding stripped
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const;  // throws if absent
  const std::string& cell(std::size_t row, int col) const;
  double number(std::size_t row, int col) const;
};

CsvTable read_csv(std::istream& in);

}  // namespace dpwfl
