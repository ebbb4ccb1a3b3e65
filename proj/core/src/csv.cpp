#include "surveymeld/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "surveymeld/errors.hpp"

namespace meld {

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {
  for (std::size_t i = 0; i < columns_.size(); ++i) index_[columns_[i]] = i;
}

namespace {
std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}
}  // namespace

CsvTable CsvTable::read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  CsvTable t(split_line(line));
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != t.columns_.size())
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected " + std::to_string(t.columns_.size()) +
                      " cells, got " + std::to_string(cells.size()));
    t.rows_.push_back(std::move(cells));
  }
  return t;
}

void CsvTable::write_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  for (std::size_t i = 0; i < columns_.size(); ++i)
    out << (i ? "," : "") << columns_[i];
  out << "\n";
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << row[i];
    out << "\n";
  }
  if (!out) throw DataError("write failed: " + path);
}

bool CsvTable::has_column(const std::string& name) const {
  return index_.count(name) > 0;
}

std::size_t CsvTable::column_index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("missing column: " + name);
  return it->second;
}

const std::string& CsvTable::cell(std::size_t row, const std::string& column) const {
  return rows_.at(row)[column_index(column)];
}

double CsvTable::cell_double(std::size_t row, const std::string& column) const {
  const std::string& s = cell(row, column);
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("bad numeric value '" + s + "' in column " + column);
  }
}

long CsvTable::cell_long(std::size_t row, const std::string& column) const {
  const std::string& s = cell(row, column);
  try {
    std::size_t pos = 0;
    long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw DataError("bad integer value '" + s + "' in column " + column);
  }
}

void CsvTable::append_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size())
    throw DataError("append_row: cell count does not match header");
  rows_.push_back(cells);
}

std::string CsvTable::format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace meld
