#include "surveymeld/reservoir.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <unordered_map>

#include "surveymeld/csv.hpp"

namespace meld {

DensityReservoir::DensityReservoir(std::vector<std::pair<int, int>> cells,
                                   int n_rows, int n_years, int first_year)
    : cells_(std::move(cells)),
      n_rows_(n_rows),
      n_years_(n_years),
      first_year_(first_year) {
  cell_index_.set_size(std::max(n_rows, 1), std::max(n_years, 1));
  cell_index_.fill(-1);
  draws_.assign(cells_.size(), {});
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& [row, t] = cells_[c];
    if (row < 0 || row >= n_rows_ || t < 0 || t >= n_years_)
      throw DataError("reservoir: cell outside the region/year range");
    cell_index_(row, t) = int(c);
  }
}

std::size_t DensityReservoir::min_draws() const {
  std::size_t m = std::numeric_limits<std::size_t>::max();
  if (draws_.empty()) return 0;
  for (const auto& d : draws_) m = std::min(m, d.size());
  return m;
}

void DensityReservoir::save_csv(const std::string& path,
                                const std::vector<long>& region_ids) const {
  CsvTable t({"iteration", "region_id", "year", "density"});
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& [row, tt] = cells_[c];
    for (std::size_t k = 0; k < draws_[c].size(); ++k)
      t.append_row({std::to_string(k), std::to_string(region_ids[row]),
                    std::to_string(first_year_ + tt),
                    CsvTable::format_double(draws_[c][k])});
  }
  t.write_file(path);
}

DensityReservoir DensityReservoir::load_csv(const std::string& path,
                                            const std::vector<long>& region_ids,
                                            int n_rows, int first_year,
                                            int n_years) {
  std::unordered_map<long, int> row_of;
  for (std::size_t i = 0; i < region_ids.size(); ++i) row_of[region_ids[i]] = int(i);

  CsvTable t = CsvTable::read_file(path);
  // First pass discovers the surveyed cells in file order.
  std::vector<std::pair<int, int>> cells;
  arma::imat seen(std::max(n_rows, 1), std::max(n_years, 1));
  seen.fill(-1);
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const auto it = row_of.find(t.cell_long(r, "region_id"));
    if (it == row_of.end())
      throw DataError("reservoir: unknown region_id in " + path);
    const int tt = int(t.cell_long(r, "year")) - first_year;
    if (tt < 0 || tt >= n_years)
      throw DataError("reservoir: year outside range in " + path);
    if (seen(it->second, tt) < 0) {
      seen(it->second, tt) = int(cells.size());
      cells.emplace_back(it->second, tt);
    }
  }
  DensityReservoir res(cells, n_rows, n_years, first_year);
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const int row = row_of.at(t.cell_long(r, "region_id"));
    const int tt = int(t.cell_long(r, "year")) - first_year;
    res.add(seen(row, tt), t.cell_double(r, "density"));
  }
  return res;
}

namespace {
constexpr char kMagic[8] = {'S', 'M', 'R', 'E', 'S', 'V', '0', '1'};
}

void DensityReservoir::save_binary(const std::string& path,
                                   const std::vector<long>& region_ids) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out.write(kMagic, sizeof(kMagic));
  const std::string schema =
      "{\"columns\":[\"iteration\",\"region_id\",\"year\",\"density\"],"
      "\"layout\":\"per-cell\"}";
  const std::uint64_t schema_len = schema.size();
  out.write(reinterpret_cast<const char*>(&schema_len), sizeof(schema_len));
  out.write(schema.data(), std::streamsize(schema.size()));
  const std::uint64_t n_cells = cells_.size();
  out.write(reinterpret_cast<const char*>(&n_cells), sizeof(n_cells));
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const std::int64_t id = region_ids[cells_[c].first];
    const std::int32_t year = first_year_ + cells_[c].second;
    const std::uint64_t n = draws_[c].size();
    out.write(reinterpret_cast<const char*>(&id), sizeof(id));
    out.write(reinterpret_cast<const char*>(&year), sizeof(year));
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(draws_[c].data()),
              std::streamsize(n * sizeof(double)));
  }
  if (!out) throw DataError("write failed: " + path);
}

DensityReservoir DensityReservoir::load_binary(const std::string& path,
                                               const std::vector<long>& region_ids,
                                               int n_rows, int first_year,
                                               int n_years) {
  std::unordered_map<long, int> row_of;
  for (std::size_t i = 0; i < region_ids.size(); ++i) row_of[region_ids[i]] = int(i);

  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw DataError("not a reservoir binary file: " + path);
  std::uint64_t schema_len = 0;
  in.read(reinterpret_cast<char*>(&schema_len), sizeof(schema_len));
  in.seekg(std::streamoff(schema_len), std::ios::cur);
  std::uint64_t n_cells = 0;
  in.read(reinterpret_cast<char*>(&n_cells), sizeof(n_cells));

  std::vector<std::pair<int, int>> cells;
  std::vector<std::vector<double>> all;
  for (std::uint64_t c = 0; c < n_cells; ++c) {
    std::int64_t id = 0;
    std::int32_t year = 0;
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&id), sizeof(id));
    in.read(reinterpret_cast<char*>(&year), sizeof(year));
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    const auto it = row_of.find(long(id));
    if (it == row_of.end())
      throw DataError("reservoir: unknown region_id in " + path);
    cells.emplace_back(it->second, int(year) - first_year);
    std::vector<double> d(n);
    in.read(reinterpret_cast<char*>(d.data()), std::streamsize(n * sizeof(double)));
    all.push_back(std::move(d));
    if (!in) throw DataError("truncated reservoir binary: " + path);
  }
  DensityReservoir res(cells, n_rows, n_years, first_year);
  for (std::size_t c = 0; c < all.size(); ++c)
    for (double v : all[c]) res.add(int(c), v);
  return res;
}

void ReservoirHandle::validate_floor(std::size_t floor) const {
  if (aerial.n_cells() > 0 && aerial.min_draws() < floor)
    throw ConfigError("reservoir: an aerial cell has fewer than " +
                      std::to_string(floor) + " retained draws");
  if (ground.n_cells() > 0 && ground.min_draws() < floor)
    throw ConfigError("reservoir: a ground cell has fewer than " +
                      std::to_string(floor) + " retained draws");
}

}  // namespace meld
