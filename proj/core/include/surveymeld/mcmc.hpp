#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <armadillo>

#include "surveymeld/errors.hpp"

namespace meld {

// A retained-draw table: one column per parameter, one row per retained
// iteration.
struct ParamDraws {
  std::vector<std::string> names;
  arma::mat values;  // n_retained x n_params

  arma::vec column(const std::string& name) const {
    for (std::size_t j = 0; j < names.size(); ++j)
      if (names[j] == name) return values.col(j);
    throw DataError("ParamDraws: unknown parameter " + name);
  }
};

// Iteration plan shared by all samplers.
struct McmcControl {
  long iterations = 0;
  long burn_in = 0;
  int thin = 10;

  long retained() const { return (iterations - burn_in) / thin; }

  void validate() const {
    if (iterations <= 0) throw ConfigError("mcmc: iterations must be positive");
    if (burn_in < 0 || burn_in >= iterations)
      throw ConfigError("mcmc: burn-in must be in [0, iterations)");
    if (thin < 1) throw ConfigError("mcmc: thin must be >= 1");
    if (retained() < 1)
      throw ConfigError("mcmc: 0 retained iterations requested");
  }
};

// Per-element random-walk scale with batch log-adaptation toward a target
// acceptance rate during burn-in; frozen afterwards. Post-burn-in rates are
// tracked separately for the acceptance ledger.
class RwAdapter {
 public:
  RwAdapter() = default;
  RwAdapter(arma::uword n, double initial_step, double target = 0.30)
      : step_(n, arma::fill::value(initial_step)),
        batch_acc_(n, arma::fill::zeros),
        post_acc_(n, arma::fill::zeros),
        target_(target) {}

  double step(arma::uword j) const { return step_(j); }
  arma::uword size() const { return step_.n_elem; }

  void record(arma::uword j, bool accepted, bool adapting) {
    if (adapting) {
      if (accepted) batch_acc_(j) += 1.0;
    } else {
      if (accepted) post_acc_(j) += 1.0;
    }
  }

  void end_iteration(bool adapting) {
    if (adapting) {
      ++batch_n_;
      if (batch_n_ == kBatch) {
        ++batch_count_;
        const double c = std::max(0.05, 1.0 / std::sqrt(double(batch_count_)));
        for (arma::uword j = 0; j < step_.n_elem; ++j) {
          const double rate = batch_acc_(j) / double(kBatch);
          step_(j) = std::clamp(step_(j) * std::exp(c * (rate - target_)),
                                1e-5, 100.0);
        }
        batch_acc_.zeros();
        batch_n_ = 0;
      }
    } else {
      ++post_n_;
    }
  }

  // Post-burn-in acceptance rate per element.
  arma::vec rates() const {
    if (post_n_ == 0) return arma::vec(step_.n_elem, arma::fill::zeros);
    return post_acc_ / double(post_n_);
  }

 private:
  static constexpr long kBatch = 50;
  arma::vec step_;
  arma::vec batch_acc_;
  arma::vec post_acc_;
  double target_ = 0.30;
  long batch_n_ = 0;
  long batch_count_ = 0;
  long post_n_ = 0;
};

}  // namespace meld
