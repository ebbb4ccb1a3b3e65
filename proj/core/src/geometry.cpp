#include "surveymeld/geometry.hpp"

#include <atomic>
#include <cmath>
#include <future>
#include <queue>

#include "surveymeld/errors.hpp"

namespace meld {

arma::mat SurveyGeometry::pairwise_distances() const {
  const int n = n_regions();
  arma::mat d(n, n, arma::fill::zeros);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double dx = centroids(i, 0) - centroids(j, 0);
      const double dy = centroids(i, 1) - centroids(j, 1);
      d(i, j) = d(j, i) = std::sqrt(dx * dx + dy * dy);
    }
  }
  return d;
}

void SurveyGeometry::validate() const {
  if (n_aerial < 1) throw DataError("geometry: need at least one aerial block");
  if (int(centroids.n_rows) != n_regions() || centroids.n_cols != 2)
    throw DataError("geometry: centroid matrix must be (n_aerial+n_ground) x 2");
  if (int(adjacency.n_rows) != n_aerial || int(adjacency.n_cols) != n_aerial)
    throw DataError("geometry: adjacency must be n_aerial x n_aerial");
  if (arma::abs(adjacency - adjacency.t()).max() > 0.0)
    throw DataError("geometry: adjacency must be symmetric");
  if (arma::abs(adjacency.diag()).max() > 0.0)
    throw DataError("geometry: adjacency diagonal must be zero");
  if (!(block_area_aerial > 0.0))
    throw DataError("geometry: aerial block area must be positive");
  if (int(areas_ground.n_elem) != n_ground)
    throw DataError("geometry: one area per ground site required");
  if (n_ground > 0 && areas_ground.min() <= 0.0)
    throw DataError("geometry: ground site areas must be positive");
  const int n = n_regions();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (centroids(i, 0) == centroids(j, 0) &&
          centroids(i, 1) == centroids(j, 1))
        throw DataError("geometry: duplicate centroids for regions " +
                        std::to_string(i) + " and " + std::to_string(j));
    }
  }
}

SpdMatrix exp_correlation(const arma::mat& distances, double phi) {
  if (!(phi > 0.0)) throw DomainError("exp_correlation: phi must be positive");
  arma::mat r = arma::exp(-distances / phi);
  r.diag().ones();
  return SpdMatrix(std::move(r));
}

arma::mat icar_precision(const arma::mat& adjacency) {
  const arma::uword n = adjacency.n_rows;
  if (adjacency.n_cols != n) throw DataError("icar_precision: adjacency must be square");
  if (arma::abs(adjacency - adjacency.t()).max() > 0.0)
    throw DataError("icar_precision: adjacency must be symmetric");
  if (arma::abs(adjacency.diag()).max() > 0.0)
    throw DataError("icar_precision: adjacency diagonal must be zero");

  // Connectivity check (BFS); a disconnected lattice would leave the xi
  // full conditional improper per component.
  std::vector<char> seen(n, 0);
  std::queue<arma::uword> frontier;
  frontier.push(0);
  seen[0] = 1;
  arma::uword reached = 1;
  while (!frontier.empty()) {
    const arma::uword v = frontier.front();
    frontier.pop();
    for (arma::uword j = 0; j < n; ++j) {
      if (adjacency(v, j) != 0.0 && !seen[j]) {
        seen[j] = 1;
        ++reached;
        frontier.push(j);
      }
    }
  }
  if (reached != n)
    throw DataError("icar_precision: adjacency graph is disconnected");

  arma::mat q = arma::diagmat(arma::sum(adjacency, 1)) - adjacency;
  return q;
}

PhiGrid PhiGrid::build(const SurveyGeometry& geometry,
                       const std::vector<double>& support, int threads) {
  geometry.validate();
  return build_from_distances(geometry.pairwise_distances(), support, threads);
}

PhiGrid PhiGrid::build_from_distances(const arma::mat& distances,
                                      const std::vector<double>& support,
                                      int threads) {
  if (support.empty()) throw ConfigError("phi grid: support must be non-empty");
  for (std::size_t i = 0; i < support.size(); ++i) {
    if (!(support[i] > 0.0))
      throw ConfigError("phi grid: support values must be positive");
    if (i > 0 && !(support[i] > support[i - 1]))
      throw ConfigError("phi grid: support must be strictly increasing");
  }

  PhiGrid grid;
  grid.support_ = support;
  grid.entries_.resize(support.size());

  auto build_entry = [&](std::size_t k) {
    Entry& e = grid.entries_[k];
    e.phi = support[k];
    e.corr = arma::exp(-distances / e.phi);
    e.corr.diag().ones();
    try {
      e.chol = cholesky_lower(e.corr);
    } catch (const NotPositiveDefiniteError& err) {
      throw NumericError("phi grid: correlation matrix not positive definite at phi=" +
                         std::to_string(e.phi) + " (" + err.what() + ")");
    }
    e.logdet = chol_logdet(e.chol);
    e.inv = chol_inverse(e.chol);
  };

  if (threads <= 1 || support.size() == 1) {
    for (std::size_t k = 0; k < support.size(); ++k) build_entry(k);
  } else {
    std::vector<std::future<void>> jobs;
    std::atomic<std::size_t> next{0};
    const int workers = std::min<int>(threads, int(support.size()));
    for (int w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&]() {
        for (;;) {
          const std::size_t k = next.fetch_add(1);
          if (k >= support.size()) return;
          build_entry(k);
        }
      }));
    }
    for (auto& j : jobs) j.get();
  }
  return grid;
}

std::vector<double> default_phi_support() {
  std::vector<double> s;
  for (int k = 0; k < 100; ++k) s.push_back(1.0 + 1000.0 * k);
  return s;
}

}  // namespace meld
