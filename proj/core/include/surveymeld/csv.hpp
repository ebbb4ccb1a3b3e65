#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace meld {

// Minimal CSV table: a header row plus string cells. Values are written with
// 17 significant digits so numeric round trips are lossless.
class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> columns);

  static CsvTable read_file(const std::string& path);
  void write_file(const std::string& path) const;

  std::size_t n_rows() const { return rows_.size(); }
  std::size_t n_cols() const { return columns_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }

  bool has_column(const std::string& name) const;
  std::size_t column_index(const std::string& name) const;  // throws DataError

  const std::string& cell(std::size_t row, const std::string& column) const;
  double cell_double(std::size_t row, const std::string& column) const;
  long cell_long(std::size_t row, const std::string& column) const;

  void append_row(const std::vector<std::string>& cells);

  static std::string format_double(double v);

 private:
  std::vector<std::string> columns_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace meld
