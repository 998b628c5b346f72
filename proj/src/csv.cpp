#include "dpwfl/csv.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace dpwfl {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument("parse_double: malformed number '" + std::string(s) + "'");
  return v;
}

void CsvWriter::comment(std::string_view text) {
  out_ << "# " << text << "\n";
}

void CsvWriter::header(std::span<const std::string> names) {
  if (header_written_) throw std::logic_error("CsvWriter: header already written");
  header_written_ = true;
  for (std::size_t i = 0; i < names.size(); ++i) out_ << (i ? "," : "") << names[i];
  out_ << "\n";
}

void CsvWriter::row(std::span<const std::string> cells) {
  if (!header_written_) throw std::logic_error("CsvWriter: header must precede rows");
  for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
  out_ << "\n";
}

void CsvWriter::row(std::span<const double> values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_double(v));
  row(cells);
}

int CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return static_cast<int>(i);
  throw std::out_of_range("CsvTable: no column named '" + std::string(name) + "'");
}

const std::string& CsvTable::cell(std::size_t row, int col) const {
  return rows.at(row).at(static_cast<std::size_t>(col));
}

double CsvTable::number(std::size_t row, int col) const {
  return parse_double(cell(row, col));
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  auto split = [](const std::string& s) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
      const auto comma = s.find(',', start);
      cells.push_back(s.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return cells;
  };
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::size_t begin = 1;
      while (begin < line.size() && line[begin] == ' ') ++begin;
      table.comments.push_back(line.substr(begin));
      continue;
    }
    if (!have_header) {
      table.columns = split(line);
      have_header = true;
    } else {
      auto cells = split(line);
      if (cells.size() != table.columns.size())
        throw std::invalid_argument("read_csv: row width does not match header");
      table.rows.push_back(std::move(cells));
    }
  }
  if (!have_header) throw std::invalid_argument("read_csv: missing header row");
  return table;
}

}  // namespace dpwfl
