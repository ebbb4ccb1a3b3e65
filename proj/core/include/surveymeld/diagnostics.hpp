#pragma once

#include <string>
#include <vector>

#include <armadillo>

namespace meld {

// Aligned per-parameter draw sequences from two or more chains.
struct ChainBundle {
  std::vector<arma::vec> chains;

  void validate() const;  // >= 2 chains, equal lengths, >= 10 draws
};

// Split-chain potential scale reduction factor (Gelman-Rubin). A zero
// within-chain variance is reported as exactly 1 with the degenerate flag.
struct RhatResult {
  double value = 1.0;
  bool degenerate = false;
};
RhatResult rhat(const ChainBundle& bundle);

// Effective sample size by summed autocorrelations with the
// initial-positive-sequence truncation. Constant chains report n with the
// degenerate flag.
struct EssResult {
  double value = 0.0;
  bool degenerate = false;
};
EssResult ess(const arma::vec& draws);

struct Summary {
  double mean = 0.0;
  double sd = 0.0;
  std::vector<std::pair<double, double>> intervals;  // one per level
};

// Mean, sd and equal-tailed credible intervals at the given levels
// (default 90%).
Summary summarize(const arma::vec& draws,
                  const std::vector<double>& levels = {0.90});

// One row of the diagnostics table.
struct DiagnosticsRow {
  std::string parameter;
  double rhat = 1.0;
  double ess = 0.0;
  double mean = 0.0;
  double sd = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  double acceptance_rate = arma::datum::nan;  // NaN for Gibbs updates
};

void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagnosticsRow>& rows);

}  // namespace meld
