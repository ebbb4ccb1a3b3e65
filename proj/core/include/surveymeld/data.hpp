#pragma once

#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <armadillo>

#include "surveymeld/covariates.hpp"
#include "surveymeld/geometry.hpp"

namespace meld {

// External region identifiers mapped to geometry row order (aerial rows
// first, ground rows after, both sorted by id).
struct IdMaps {
  std::vector<long> aerial_ids;
  std::vector<long> ground_ids;
  std::unordered_map<long, int> aerial_row;
  std::unordered_map<long, int> ground_row;  // 0-based within ground sites
};

// One detected group from the aerial survey.
struct AerialGroup {
  int block = 0;     // aerial row index
  int t = 0;         // 0-based year index
  long group_id = 0;
  int v = 0;         // number of observers that detected the group, 1..2
  double d = 0.0;    // distance from transect, meters
  int side = 0;      // 1 = left of transect
  long count = 1;    // individuals at detection
};

struct AerialDataset {
  int n_aerial = 0;
  int first_year = 0;
  int n_years = 0;
  arma::imat surveyed;  // n_aerial x T
  std::vector<AerialGroup> groups;

  int M = 20;            // super-population size per surveyed cell
  double nu_d = 600.0;   // max detection distance, meters
  double area_s = 36.0;  // effective surveyed area per block, km^2

  arma::mat x_rho;       // n_aerial x n_eco
  arma::cube x_lambda;   // n_aerial x P x T  (X_lambda = X_psi)
  std::vector<std::string> x_names;

  // Derived after finalize():
  std::vector<std::pair<int, int>> cells;     // surveyed (block, t)
  arma::imat cell_index;                      // -1 where unsurveyed
  std::vector<std::vector<int>> cell_groups;  // observed group ids per cell

  void finalize();  // builds the cell tables and validates invariants
};

// One monitored lek with its per-visit flush counts.
struct GroundLek {
  int site = 0;  // 0-based ground row
  int t = 0;
  long lek_id = 0;
  std::vector<long> counts;  // males flushed, one per visit (J >= 1)
};

struct GroundDataset {
  int n_ground = 0;
  int first_year = 0;
  int n_years = 0;
  arma::imat surveyed;  // n_ground x T
  std::vector<GroundLek> leks;
  arma::vec areas;      // km^2 per site

  arma::cube w;         // n_ground x P x T
  std::vector<std::string> w_names;

  std::vector<std::pair<int, int>> cells;
  arma::imat cell_index;
  std::vector<std::vector<int>> cell_leks;

  void finalize();
};

// --- file loading -------------------------------------------------------------

// Geometry CSV: region_id, kind (aerial|ground), x_m, y_m, area_km2.
// Adjacency CSV: block_id_a, block_id_b (one undirected edge per row).
std::pair<SurveyGeometry, IdMaps> load_geometry(const std::string& geometry_csv,
                                                const std::string& adjacency_csv);

// Covariate CSV: block_id, ecoregion, development, crp, grass_patch, shrub,
// woodland. PDSI CSV: division_id, year, pdsi. Overlap CSV: site_id,
// block_id, weight. division_map_csv (block_id, division_id) may be empty,
// in which case each block is its own division.
CovariateTable load_covariates(const std::string& covariate_csv,
                               const std::string& pdsi_csv,
                               const std::string& overlap_csv,
                               const std::string& division_map_csv,
                               const SurveyGeometry& geometry, const IdMaps& ids);

// Survey mask CSV: region_id, year, surveyed (0/1). Returns mask plus the
// (first_year, n_years) range covered.
struct MaskInfo {
  arma::imat mask;
  int first_year = 0;
  int n_years = 0;
};
MaskInfo load_mask(const std::string& mask_csv,
                   const std::unordered_map<long, int>& row_of_id, int n_rows);

// Aerial detections CSV: region_id, year, group_id, v, d_m, side, count.
AerialDataset load_aerial(const std::string& detections_csv,
                          const std::string& mask_csv, const IdMaps& ids,
                          const DesignSet& designs, int M, double nu_d,
                          double area_s);

// Ground counts CSV: site_id, year, lek_id, visit, males_flushed.
GroundDataset load_ground(const std::string& counts_csv,
                          const std::string& mask_csv, const IdMaps& ids,
                          const SurveyGeometry& geometry, const DesignSet& designs);

// --- file writing (simulator output; same schemas as the loaders) -------------

void write_geometry(const std::string& geometry_csv, const std::string& adjacency_csv,
                    const SurveyGeometry& geometry, const IdMaps& ids);
void write_covariates(const std::string& covariate_csv, const std::string& pdsi_csv,
                      const std::string& overlap_csv, const CovariateTable& table,
                      const IdMaps& ids, int first_year, int n_years);
void write_mask(const std::string& mask_csv, const arma::imat& mask,
                const std::vector<long>& ids, int first_year);
void write_aerial_detections(const std::string& detections_csv,
                             const AerialDataset& data, const IdMaps& ids);
void write_ground_counts(const std::string& counts_csv, const GroundDataset& data,
                         const IdMaps& ids);

}  // namespace meld
