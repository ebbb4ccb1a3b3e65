#include "surveymeld/covariates.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "surveymeld/errors.hpp"

namespace meld {

arma::vec standardize(const arma::vec& values) {
  return standardize_named(values, "<unnamed>");
}

arma::vec standardize_named(const arma::vec& values, const std::string& name) {
  if (values.n_elem < 2)
    throw DataError("standardize: column '" + name + "' needs >= 2 values");
  const double mean = arma::mean(values);
  const double sd = std::sqrt(arma::mean(arma::square(values - mean)));
  if (!(sd > 0.0))
    throw DataError("standardize: column '" + name + "' is constant");
  return (values - mean) / sd;
}

arma::rowvec weight_ground_covariates(
    const arma::mat& block_rows,
    const std::vector<std::pair<int, double>>& weights) {
  if (weights.empty())
    throw DataError("ground covariates: site has no overlapping blocks");
  double total = 0.0;
  arma::rowvec out(block_rows.n_cols, arma::fill::zeros);
  for (const auto& [row, w] : weights) {
    if (row < 0 || row >= int(block_rows.n_rows))
      throw DataError("ground covariates: overlap references unknown block row");
    if (!(w > 0.0)) throw DataError("ground covariates: weights must be positive");
    out += w * block_rows.row(arma::uword(row));
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-6)
    throw DataError("ground covariates: overlap weights sum to " +
                    std::to_string(total) + ", expected 1");
  return out;
}

DesignSet assemble_designs(const CovariateTable& table,
                           const SurveyGeometry& geometry, int first_year,
                           int n_years) {
  const int n_aerial = geometry.n_aerial;
  const int n_ground = geometry.n_ground;
  if (int(table.ecoregion.size()) != n_aerial)
    throw DataError("designs: ecoregion labels must cover every aerial block");
  if (int(table.statics.n_rows) != n_aerial)
    throw DataError("designs: static covariates must cover every aerial block");
  if (int(table.block_division.size()) != n_aerial)
    throw DataError("designs: PDSI division map must cover every aerial block");
  if (int(table.overlap.size()) != n_ground)
    throw DataError("designs: overlap weights must cover every ground site");
  if (n_years < 1) throw DataError("designs: need at least one year");

  DesignSet ds;
  ds.first_year = first_year;
  ds.n_years = n_years;

  // Ecoregion one-hot columns in sorted label order, no global intercept.
  std::set<std::string> labels(table.ecoregion.begin(), table.ecoregion.end());
  ds.eco_labels.assign(labels.begin(), labels.end());
  const int n_eco = ds.n_eco();
  arma::mat eco_block(n_aerial, n_eco, arma::fill::zeros);
  for (int i = 0; i < n_aerial; ++i) {
    const auto it = labels.find(table.ecoregion[i]);
    eco_block(i, std::distance(labels.begin(), it)) = 1.0;
  }

  const int k_static = int(table.statics.n_cols);
  arma::mat statics_std(n_aerial, k_static);
  for (int k = 0; k < k_static; ++k) {
    const std::string name = k < int(table.static_names.size())
                                 ? table.static_names[k]
                                 : ("static_" + std::to_string(k));
    statics_std.col(k) = standardize_named(table.statics.col(k), name);
  }

  // Block-level PDSI for calendar years first_year-1 .. first_year+n_years-1.
  arma::mat pdsi_block(n_aerial, n_years + 1);
  std::string gaps;
  for (int i = 0; i < n_aerial; ++i) {
    for (int j = 0; j <= n_years; ++j) {
      const int year = first_year - 1 + j;
      const auto it = table.pdsi.find({table.block_division[i], year});
      if (it == table.pdsi.end()) {
        gaps += " (division " + std::to_string(table.block_division[i]) +
                ", year " + std::to_string(year) + ")";
        continue;
      }
      pdsi_block(i, j) = it->second;
    }
  }
  if (!gaps.empty()) throw DataError("designs: missing PDSI values:" + gaps);

  // Ground rows are area-weighted combinations of block rows; PDSI passes
  // through the same weighting, unstandardized.
  arma::mat eco_all(n_aerial + n_ground, n_eco);
  arma::mat statics_all(n_aerial + n_ground, k_static);
  arma::mat pdsi_all(n_aerial + n_ground, n_years + 1);
  eco_all.rows(0, n_aerial - 1) = eco_block;
  statics_all.rows(0, n_aerial - 1) = statics_std;
  pdsi_all.rows(0, n_aerial - 1) = pdsi_block;
  for (int s = 0; s < n_ground; ++s) {
    eco_all.row(n_aerial + s) = weight_ground_covariates(eco_block, table.overlap[s]);
    statics_all.row(n_aerial + s) =
        weight_ground_covariates(statics_std, table.overlap[s]);
    pdsi_all.row(n_aerial + s) =
        weight_ground_covariates(pdsi_block, table.overlap[s]);
  }

  ds.x_rho = eco_block;
  ds.pdsi = pdsi_all;

  const int p = n_eco + k_static + 1;  // eco + statics + PDSI
  ds.aerial_xl.set_size(n_aerial, p, n_years);
  ds.ground_w.set_size(std::max(n_ground, 1), p, n_years);
  if (n_ground == 0) ds.ground_w.zeros();
  for (int t = 0; t < n_years; ++t) {
    arma::mat slice_a(n_aerial, p);
    slice_a.cols(0, n_eco - 1) = eco_block;
    if (k_static > 0) slice_a.cols(n_eco, n_eco + k_static - 1) = statics_std;
    slice_a.col(p - 1) = pdsi_block.col(t + 1);  // current-year PDSI
    ds.aerial_xl.slice(t) = slice_a;
    if (n_ground > 0) {
      arma::mat slice_g(n_ground, p);
      slice_g.cols(0, n_eco - 1) = eco_all.rows(n_aerial, n_aerial + n_ground - 1);
      if (k_static > 0)
        slice_g.cols(n_eco, n_eco + k_static - 1) =
            statics_all.rows(n_aerial, n_aerial + n_ground - 1);
      slice_g.col(p - 1) =
          pdsi_all.submat(n_aerial, t + 1, n_aerial + n_ground - 1, t + 1);
      ds.ground_w.slice(t) = slice_g;
    }
  }

  ds.x0.set_size(n_aerial + n_ground, n_eco + k_static);
  ds.x0.cols(0, n_eco - 1) = eco_all;
  if (k_static > 0) ds.x0.cols(n_eco, n_eco + k_static - 1) = statics_all;

  ds.xl_names.clear();
  for (const auto& l : ds.eco_labels) ds.xl_names.push_back("eco_" + l);
  for (int k = 0; k < k_static; ++k)
    ds.xl_names.push_back(k < int(table.static_names.size())
                              ? table.static_names[k]
                              : ("static_" + std::to_string(k)));
  ds.x0_names = ds.xl_names;
  ds.xl_names.push_back("pdsi");
  return ds;
}

}  // namespace meld
