#pragma once

#include <vector>

#include <armadillo>

#include "surveymeld/data.hpp"
#include "surveymeld/mcmc.hpp"
#include "surveymeld/reservoir.hpp"
#include "surveymeld/rng.hpp"

namespace meld {

struct AdsmPriors {
  double beta_rho_var = 2.25;
  double beta_psi_var = 2.25;
  double beta_lambda_var = 10.0;
  // Shape-scale so the prior mean is 1.78 * 0.675 ~ 1.2 individuals.
  double lambda0_shape = 1.78;
  double lambda0_scale = 0.675;
};

// Number of observers a group is visible to: both left-hand observers for
// groups past 7 m on the left, exactly one otherwise, none for non-members.
int visibility_B(double d, int side, int z);

// Linear predictor for detection: ecoregion intercepts plus count and
// distance columns.
double detection_logit(const arma::vec& beta_rho, const arma::rowvec& x_eco,
                       long count, double d);

// Per-group latent state; observed groups keep (v, d, side, N) fixed.
struct AdsmGroupState {
  bool observed = false;
  int v = 0;
  double d = 0.0;
  int side = 0;
  long N = 1;
  int z = 0;
  int omega = 0;
};

struct AdsmState {
  arma::vec beta_rho;     // n_eco + 2 (count, distance)
  arma::vec beta_lambda;  // P
  arma::vec beta_psi;     // P
  double lambda0 = 1.2;
  double p_omega = 0.5;
  std::vector<std::vector<AdsmGroupState>> cells;  // per surveyed cell, M slots

  // Cached per-cell linear predictors, kept consistent with the betas.
  arma::vec log_lambda;
  arma::vec psi_logit;

  RwAdapter adapt_beta_lambda;
  RwAdapter adapt_beta_rho;
  RwAdapter adapt_lambda0;  // single element
  long iteration = 0;

  static AdsmState init(const AerialDataset& data, const AdsmPriors& priors,
                        RngStream& rng);

  // Re-derive the cached linear predictors from the betas.
  void refresh_caches(const AerialDataset& data);

  // Throws NumericError if a state invariant is violated.
  void check(const AerialDataset& data) const;
};

// One full Metropolis-within-Gibbs sweep.
void adsm_step(AdsmState& state, const AerialDataset& data,
               const AdsmPriors& priors, RngStream& rng, bool adapting);

// Sum_l N_l z_l / S for one surveyed cell.
double derive_density_aerial(const AdsmState& state, const AerialDataset& data,
                             int cell);
// (block, t) variant; throws DataError for unsurveyed cells.
double derive_density_aerial(const AdsmState& state, const AerialDataset& data,
                             int block, int t);

struct AdsmRun {
  DensityReservoir reservoir;  // every post-burn-in iteration
  ParamDraws params;           // thinned
  arma::vec accept_beta_lambda;
  arma::vec accept_beta_rho;
  double accept_lambda0 = 0.0;
};

AdsmRun run_adsm(const AerialDataset& data, const AdsmPriors& priors,
                 const McmcControl& control, RngStream& rng);

}  // namespace meld
