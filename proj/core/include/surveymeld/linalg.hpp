#pragma once

#include <armadillo>

#include "surveymeld/rng.hpp"

namespace meld {

// Dense symmetric positive-definite matrix. Construction checks symmetry to
// within 1e-12 (relative to the largest entry) and symmetrizes; positive
// definiteness is established by cholesky(), not here, so rank-deficient
// cases (ICAR) can be represented and flagged where they are used.
class SpdMatrix {
 public:
  explicit SpdMatrix(arma::mat m);

  arma::uword dim() const { return values_.n_rows; }
  const arma::mat& values() const { return values_; }
  double operator()(arma::uword i, arma::uword j) const { return values_(i, j); }

 private:
  arma::mat values_;
};

// Lower-triangular L with L L' = m. Pivot floor is 1e-12 of the largest
// diagonal entry; failure carries the pivot index.
arma::mat cholesky(const SpdMatrix& m);

// In-place variant over a raw symmetric matrix (no SpdMatrix validation).
arma::mat cholesky_lower(const arma::mat& m);

double chol_logdet(const arma::mat& chol_lower);

// Solve (L L') x = b given the lower factor.
arma::vec chol_solve(const arma::mat& chol_lower, const arma::vec& b);

// (L L')^{-1} given the lower factor.
arma::mat chol_inverse(const arma::mat& chol_lower);

// Draw from N(mean, cov).
arma::vec mvn_sample(const arma::vec& mean, const SpdMatrix& cov, RngStream& rng);

// Draw mean + L z for standard-normal z, L a lower Cholesky factor.
arma::vec mvn_sample_chol(const arma::vec& mean, const arma::mat& chol_lower,
                          RngStream& rng);

// Draw from the canonical form N(Lambda^{-1} b, Lambda^{-1}) given the lower
// Cholesky factor of the precision Lambda.
arma::vec mvn_sample_precision_chol(const arma::mat& chol_lower_precision,
                                    const arma::vec& b, RngStream& rng);

// log N(x; mean, L L').
double mvn_log_pdf_chol(const arma::vec& x, const arma::vec& mean,
                        const arma::mat& chol_lower);

struct ConditionalNormal {
  double mean;
  double var;
};

// Moments of component `index` of N(mean, cov) given the remaining
// components fixed at values_at_others (in original order, index removed):
//   mu~     = mean_i + r_{i,-i} (R_{-i,-i})^{-1} (v_{-i} - mean_{-i})
//   sigma~2 = r_ii - r_{i,-i} (R_{-i,-i})^{-1} r_{-i,i}
// with cov carrying any variance scaling.
ConditionalNormal conditional_normal(const arma::vec& mean, const SpdMatrix& cov,
                                     arma::uword index,
                                     const arma::vec& values_at_others);

}  // namespace meld
