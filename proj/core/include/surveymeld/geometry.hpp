#pragma once

#include <vector>

#include <armadillo>

#include "surveymeld/linalg.hpp"

namespace meld {

// Spatial layout of the survey: aerial lattice blocks first, then ground
// sites. Coordinates are projected meters; areas are km^2.
struct SurveyGeometry {
  int n_aerial = 0;
  int n_ground = 0;
  arma::mat centroids;        // (n_aerial + n_ground) x 2, aerial rows first
  arma::mat adjacency;        // n_aerial x n_aerial, binary, zero diagonal
  double block_area_aerial = 0.0;  // effective surveyed area S per block
  arma::vec areas_ground;          // per-site area

  int n_regions() const { return n_aerial + n_ground; }

  // Pairwise Euclidean distances in meters over all regions.
  arma::mat pairwise_distances() const;

  // Throws DataError on duplicate centroids, asymmetric adjacency,
  // nonzero adjacency diagonal, or non-positive areas.
  void validate() const;
};

// Entry (i,j) = exp(-d_ij / phi); unit diagonal.
SpdMatrix exp_correlation(const arma::mat& distances, double phi);

// ICAR precision Q = diag(A 1) - A (the rho -> 1 limit, never inverted).
// Throws DataError if the adjacency graph is disconnected.
arma::mat icar_precision(const arma::mat& adjacency);

// Correlation matrices R(phi), their Cholesky factors, log-determinants and
// inverses, precomputed once per support point and immutable afterwards.
class PhiGrid {
 public:
  struct Entry {
    double phi;
    arma::mat corr;
    arma::mat chol;   // lower
    double logdet;
    arma::mat inv;
  };

  static PhiGrid build(const SurveyGeometry& geometry,
                       const std::vector<double>& support, int threads = 1);
  static PhiGrid build_from_distances(const arma::mat& distances,
                                      const std::vector<double>& support,
                                      int threads = 1);

  std::size_t size() const { return entries_.size(); }
  double phi(std::size_t i) const { return entries_[i].phi; }
  const Entry& entry(std::size_t i) const { return entries_[i]; }
  const std::vector<double>& support() const { return support_; }

 private:
  std::vector<double> support_;
  std::vector<Entry> entries_;
};

// The default spatial-range support: {1, 1001, 2001, ..., 99001} meters.
std::vector<double> default_phi_support();

}  // namespace meld
