#pragma once

#include <set>
#include <string>
#include <vector>

#include "surveymeld/config.hpp"
#include "surveymeld/data.hpp"
#include "surveymeld/diagnostics.hpp"
#include "surveymeld/reservoir.hpp"
#include "surveymeld/sttm.hpp"

namespace meld {

struct LoadedInputs {
  SurveyGeometry geometry;
  IdMaps ids;
  CovariateTable covariates;
  DesignSet designs;
  AerialDataset aerial;
  GroundDataset ground;
};

LoadedInputs load_inputs(const FitConfig& config);

// Full fit state kept in memory for tests and downstream computation; the
// same content is persisted under out_dir.
struct FitOutputs {
  std::string out_dir;
  IdMaps ids;
  int n_aerial = 0;
  int n_ground = 0;
  int first_year = 0;
  int n_years = 0;

  ReservoirHandle reservoirs;
  std::vector<ParamDraws> adsm_chains;
  std::vector<ParamDraws> nmix_chains;
  std::vector<ParamDraws> sttm_chains;
  std::vector<std::vector<arma::mat>> y_chains;  // per chain, per retained draw
  std::vector<SttmCounters> sttm_counters;       // per chain
  std::vector<arma::vec> accept_beta_lambda;     // per chain
  std::vector<arma::vec> accept_beta_rho;
  std::vector<arma::vec> accept_eta;
  std::vector<double> accept_lambda0;

  std::vector<DiagnosticsRow> diagnostics;
  double max_rhat = 1.0;

  // Posterior mean of y per (region, year) pooled over chains.
  arma::mat posterior_mean_y() const;
};

// Stage 1 (ADSM and N-mixture concurrently, all chains), reservoir build,
// stage 2, persistence, diagnostics, manifest.
FitOutputs cmd_fit(const FitConfig& config);

// Fit without touching the filesystem (used by the test harnesses). The
// stream offset keeps concurrent refits (scenario runs, replicates) on
// disjoint RNG streams.
FitOutputs fit_in_memory(const FitConfig& config, const LoadedInputs& inputs);
FitOutputs fit_in_memory(const FitConfig& config, const LoadedInputs& inputs,
                         std::uint64_t stream_offset);

void cmd_simulate(const SimConfig& config);

struct ScenarioSpec {
  std::string name;
  std::set<int> missing_years;
};

// The four named presets from the sensitivity protocol.
std::vector<ScenarioSpec> builtin_scenarios();

struct ScenarioResult {
  std::string name;
  std::set<int> missing_years;
  double bias_per_100km2 = 0.0;  // mean absolute deviation of posterior means
  double rmse_per_100km2 = 0.0;
};

struct ScenarioReport {
  std::vector<ScenarioResult> rows;
};

ScenarioReport cmd_sensitivity(const FitConfig& config,
                               const std::vector<ScenarioSpec>& scenarios,
                               const std::string& reference_fit_dir,
                               int workers);

// Per-cell posterior summaries from persisted density draws.
void cmd_predict(const std::string& fit_dir, const std::string& targets_csv,
                 const std::string& out_csv, double level);

// Recompute the diagnostics table from persisted parameter draws.
void cmd_diagnose(const std::string& fit_dir, const std::string& out_csv);

// Posterior means of aerial block-year densities from a persisted fit.
arma::mat load_reference_density_means(const std::string& fit_dir,
                                       const std::vector<long>& aerial_ids,
                                       int first_year, int n_years);

}  // namespace meld
