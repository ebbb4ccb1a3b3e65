#pragma once

#include <vector>

#include <armadillo>

#include "surveymeld/geometry.hpp"
#include "surveymeld/mcmc.hpp"
#include "surveymeld/reservoir.hpp"
#include "surveymeld/rng.hpp"

namespace meld {

struct SttmPriors {
  double gamma_var = 100.0;
  double ig_shape = 0.01;
  double ig_scale = 100.0;
};

enum class TauStructure { icar, diagonal };
enum class PhiProposal { uniform, neighbor };

// Everything the stage-2 sampler conditions on but never modifies.
struct SttmModel {
  int n_aerial = 0;
  int n_ground = 0;
  int n_years = 0;
  int first_year = 0;
  const PhiGrid* grid = nullptr;
  arma::mat q_icar;        // n_aerial x n_aerial; unused when diagonal
  TauStructure tau_structure = TauStructure::icar;
  arma::mat x0;            // n_regions x P0
  arma::mat pdsi;          // n_regions x (T+1), col j = year first_year-1+j
  arma::imat surveyed;     // n_regions x T (aerial rows first)
  std::vector<std::string> x0_names;
  SttmPriors priors;
  PhiProposal phi_proposal = PhiProposal::uniform;

  int n_regions() const { return n_aerial + n_ground; }
  void validate() const;

  // Innovation precision Q_tau given the current variance draws.
  arma::mat tau_precision(double sigma2_tau_a, double sigma2_tau_g) const;
};

struct SttmState {
  arma::mat zeta;  // n_regions x T
  arma::mat xi;    // n_regions x T
  arma::vec gamma;
  double alpha0 = 0.0;
  double alpha1 = 0.0;
  double sigma2_d = 1.0;
  double sigma2_tau_a = 1.0;
  double sigma2_tau_g = 1.0;
  int phi_index = 0;
  arma::mat y;     // n_regions x T

  static SttmState init(const SttmModel& model, const ReservoirHandle& reservoirs);

  // Tobit and support invariants; throws NumericError on violation.
  void check(const SttmModel& model) const;
};

struct SttmCounters {
  long meld_prop_aerial = 0, meld_acc_aerial = 0;
  long meld_prop_ground = 0, meld_acc_ground = 0;
  long phi_prop = 0, phi_acc = 0;

  double aerial_rate() const {
    return meld_prop_aerial ? double(meld_acc_aerial) / double(meld_prop_aerial) : 0.0;
  }
  double ground_rate() const {
    return meld_prop_ground ? double(meld_acc_ground) / double(meld_prop_ground) : 0.0;
  }
};

// Conditional moments of zeta_{it} given the rest of the year-t field at the
// current phi: the single-site kriging equations, computed from the cached
// inverse correlation matrix.
ConditionalNormal sttm_conditional_moments(const SttmState& state,
                                           const SttmModel& model, int region,
                                           int t);

// Reservoir-proposal Metropolis step for one surveyed cell's density.
void meld_update_y(SttmState& state, const SttmModel& model,
                   const ReservoirHandle& reservoirs, int region, int t,
                   RngStream& rng, SttmCounters& counters);

// Redraw latent zeta at censored (y = 0) and unsurveyed cells; unsurveyed y
// follows as max(zeta, 0).
void gibbs_zeta_latent(SttmState& state, const SttmModel& model, RngStream& rng);

void gibbs_xi(SttmState& state, const SttmModel& model, RngStream& rng);
void gibbs_gamma_alpha(SttmState& state, const SttmModel& model, RngStream& rng);
void gibbs_variances(SttmState& state, const SttmModel& model, RngStream& rng);
void mh_phi(SttmState& state, const SttmModel& model, RngStream& rng,
            SttmCounters& counters);

// One full stage-2 sweep in the fixed order: meld, zeta, xi, gamma/alpha,
// variances, phi.
void sttm_step(SttmState& state, const SttmModel& model,
               const ReservoirHandle& reservoirs, RngStream& rng,
               SttmCounters& counters);

struct SttmRun {
  ParamDraws params;
  // Thinned draws of the full y field, one matrix per retained iteration.
  std::vector<arma::mat> y_draws;
  SttmCounters counters;
};

SttmRun run_sttm(const SttmModel& model, const ReservoirHandle& reservoirs,
                 const McmcControl& control, RngStream& rng);

}  // namespace meld
