#pragma once

#include <vector>

#include <armadillo>

#include "surveymeld/data.hpp"
#include "surveymeld/mcmc.hpp"
#include "surveymeld/reservoir.hpp"
#include "surveymeld/rng.hpp"

namespace meld {

struct NmixPriors {
  double eta_var = 100.0;
};

enum class NProposal { prior, walk };

struct NmixState {
  arma::vec eta;
  double p = 0.5;
  std::vector<long> N;   // per lek, aligned with GroundDataset::leks
  arma::vec log_mu;      // per surveyed cell

  RwAdapter adapt_eta;
  RwAdapter adapt_n;     // single element: integer walk width (log scale)
  long iteration = 0;

  long walk_width() const;

  static NmixState init(const GroundDataset& data, RngStream& rng);
  void refresh_caches(const GroundDataset& data);
  void check(const GroundDataset& data) const;
};

void nmix_step(NmixState& state, const GroundDataset& data,
               const NmixPriors& priors, NProposal proposal, RngStream& rng,
               bool adapting);

// 2 * sum_l N_l / S_i for one surveyed cell.
double derive_density_ground(const NmixState& state, const GroundDataset& data,
                             int cell);
double derive_density_ground(const NmixState& state, const GroundDataset& data,
                             int site, int t);

struct NmixRun {
  DensityReservoir reservoir;
  ParamDraws params;
  arma::vec accept_eta;
  double accept_n = 0.0;
};

NmixRun run_nmix(const GroundDataset& data, const NmixPriors& priors,
                 const McmcControl& control, NProposal proposal, RngStream& rng);

}  // namespace meld
