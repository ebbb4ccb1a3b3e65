#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include <armadillo>

#include "surveymeld/geometry.hpp"

namespace meld {

// Block-level covariates plus the pieces needed to derive ground-site rows:
// PDSI by climate division and the site-to-block overlap weights.
struct CovariateTable {
  std::vector<std::string> ecoregion;   // per aerial block, geometry row order
  arma::mat statics;                    // n_aerial x K, raw values
  std::vector<std::string> static_names;
  std::map<std::pair<long, int>, double> pdsi;  // (division_id, year) -> value
  std::vector<long> block_division;             // per aerial block
  // Per ground site: (aerial block row, weight), weights summing to 1.
  std::vector<std::vector<std::pair<int, double>>> overlap;
};

// (x - mean) / sd with the population sd. Throws DataError on a constant
// column (sd = 0), naming nothing the caller can't add; use the _named
// overload when a column label is available.
arma::vec standardize(const arma::vec& values);
arma::vec standardize_named(const arma::vec& values, const std::string& name);

// Weighted average of block covariate rows for one ground site.
// Validates that the weights sum to 1 within 1e-6.
arma::rowvec weight_ground_covariates(const arma::mat& block_rows,
                                      const std::vector<std::pair<int, double>>& weights);

// Design matrices assembled per the covariate roster: ecoregion one-hot
// intercepts (no global intercept), standardized statics, and PDSI as the
// only time-varying column. PDSI is never standardized.
struct DesignSet {
  std::vector<std::string> eco_labels;  // column order of the one-hot block
  int first_year = 0;
  int n_years = 0;  // T; time index t in 0..T-1 maps to calendar first_year + t

  arma::mat x_rho;      // n_aerial x n_eco, detection intercepts
  arma::cube aerial_xl; // n_aerial x P x T, X_lambda = X_psi rows per year
  arma::cube ground_w;  // n_ground x P x T, weighted rows per year
  arma::mat x0;         // n_regions x P0 (eco + statics, no PDSI)
  arma::mat pdsi;       // n_regions x (T+1); col j = calendar year first_year-1+j
  std::vector<std::string> xl_names;
  std::vector<std::string> x0_names;

  int n_eco() const { return int(eco_labels.size()); }
};

// Throws DataError listing any (division, year) gaps in [first_year-1,
// first_year+n_years-1].
DesignSet assemble_designs(const CovariateTable& table,
                           const SurveyGeometry& geometry, int first_year,
                           int n_years);

}  // namespace meld
