#pragma once

#include <set>

#include <armadillo>

#include "surveymeld/data.hpp"
#include "surveymeld/sttm.hpp"

namespace meld {

// Generative parameters for the forward simulator. Defaults give the desk
// scale used by the recovery and sensitivity suites.
struct TruthSpec {
  // geometry / scale
  int n_side = 5;
  int n_ground = 4;
  double block_km = 15.0;
  int n_years = 8;
  int first_year = 2005;
  int n_static = 2;
  int leks_per_site = 5;
  int M = 10;
  double nu_d = 600.0;
  double area_s = 36.0;       // effective surveyed area per aerial block
  double area_ground = 51.2;  // per ground site

  // aerial submodel
  arma::vec beta_rho;     // n_eco + 2; default set by ensure_defaults()
  arma::vec beta_lambda;  // n_eco + n_static + 1
  arma::vec beta_psi;     // recorded but superseded by the density-matching
                          // allocation below
  double lambda0 = 1.2;
  double p_omega = 0.5;

  // ground submodel
  arma::vec eta;  // n_eco + n_static + 1
  double p_attend = 0.6;

  // joint spatio-temporal model
  arma::vec gamma;  // n_eco + n_static
  double alpha0 = 0.6;
  double alpha1 = 0.08;
  double sigma2_d = 0.15;
  double sigma2_tau_a = 0.10;
  double sigma2_tau_g = 0.10;
  double phi = 20001.0;
  TauStructure tau_structure = TauStructure::icar;

  int n_eco() const { return 3; }   // lattice thirds
  void ensure_defaults();           // fill any empty coefficient vectors
  void validate() const;
};

// Latent truth kept alongside the generated data for recovery scoring.
struct SimTruthRecord {
  arma::mat xi;      // n_regions x T
  arma::mat zeta;
  arma::mat y;
  // Realized densities implied by the allocated groups/leks (NaN where
  // unsurveyed); the gap to the y field is the allocation quantization.
  arma::mat aerial_density;
  arma::mat ground_density;
  double aerial_quantization_rmse = 0.0;
};

struct SimulatedSurveys {
  SurveyGeometry geometry;
  IdMaps ids;
  CovariateTable covariates;
  DesignSet designs;
  AerialDataset aerial;
  GroundDataset ground;
  SimTruthRecord truth;
};

// Square rook-adjacency lattice of n_side^2 blocks with ground sites placed
// uniformly inside the lattice extent.
std::pair<SurveyGeometry, IdMaps> simulate_geometry(int n_side, int n_ground,
                                                    double block_km,
                                                    double area_s,
                                                    double area_ground,
                                                    RngStream& rng);

// Full forward pass: covariates, latent field, and both survey datasets.
// Masks default to every cell surveyed.
SimulatedSurveys simulate_surveys(const TruthSpec& truth, RngStream& rng);
SimulatedSurveys simulate_surveys(const TruthSpec& truth,
                                  const arma::imat& aerial_mask,
                                  const arma::imat& ground_mask, RngStream& rng);

// Drop all aerial survey records in the listed calendar years and mark those
// cells unsurveyed.
AerialDataset apply_scenario_mask(const AerialDataset& data,
                                  const std::set<int>& missing_years);

}  // namespace meld
