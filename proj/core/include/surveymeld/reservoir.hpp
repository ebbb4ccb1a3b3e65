#pragma once

#include <string>
#include <utility>
#include <vector>

#include <armadillo>

#include "surveymeld/errors.hpp"

namespace meld {

// Stage-1 posterior draws of derived density per surveyed (region, year):
// the melding link consumed by the stage-2 sampler as its proposal pool.
class DensityReservoir {
 public:
  DensityReservoir() = default;
  DensityReservoir(std::vector<std::pair<int, int>> cells, int n_rows, int n_years,
                   int first_year);

  int n_cells() const { return int(cells_.size()); }
  int n_rows() const { return n_rows_; }
  int n_years() const { return n_years_; }
  int first_year() const { return first_year_; }
  const std::vector<std::pair<int, int>>& cells() const { return cells_; }

  // -1 when (row, t) has no draws.
  int cell_of(int row, int t) const {
    if (row < 0 || row >= n_rows_ || t < 0 || t >= n_years_) return -1;
    return cell_index_(row, t);
  }

  void add(int cell, double density) {
    if (density < 0.0)
      throw NumericError("reservoir: negative density draw");
    draws_[cell].push_back(density);
  }

  const std::vector<double>& draws(int cell) const { return draws_.at(cell); }

  std::size_t min_draws() const;

  void save_csv(const std::string& path, const std::vector<long>& region_ids) const;
  static DensityReservoir load_csv(const std::string& path,
                                   const std::vector<long>& region_ids,
                                   int n_rows, int first_year, int n_years);

  void save_binary(const std::string& path, const std::vector<long>& region_ids) const;
  static DensityReservoir load_binary(const std::string& path,
                                      const std::vector<long>& region_ids,
                                      int n_rows, int first_year, int n_years);

 private:
  std::vector<std::pair<int, int>> cells_;
  arma::imat cell_index_;
  std::vector<std::vector<double>> draws_;
  int n_rows_ = 0;
  int n_years_ = 0;
  int first_year_ = 0;
};

struct ReservoirHandle {
  DensityReservoir aerial;
  DensityReservoir ground;

  // Every surveyed cell must hold at least `floor` retained draws.
  void validate_floor(std::size_t floor) const;
};

}  // namespace meld
