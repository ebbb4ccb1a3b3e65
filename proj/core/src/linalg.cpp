#include "surveymeld/linalg.hpp"

#include <cmath>

#include "surveymeld/errors.hpp"

namespace meld {

SpdMatrix::SpdMatrix(arma::mat m) {
  if (m.n_rows != m.n_cols) throw DomainError("SpdMatrix: matrix must be square");
  if (m.n_rows == 0) throw DomainError("SpdMatrix: matrix must be non-empty");
  const double scale = std::max(1.0, arma::abs(m).max());
  const double asym = arma::abs(m - m.t()).max();
  if (asym > 1e-12 * scale)
    throw DomainError("SpdMatrix: matrix is not symmetric to within 1e-12");
  values_ = 0.5 * (m + m.t());
}

arma::mat cholesky_lower(const arma::mat& m) {
  const arma::uword n = m.n_rows;
  const double floor = 1e-12 * std::max(m.diag().max(), 0.0);
  arma::mat L(n, n, arma::fill::zeros);
  for (arma::uword j = 0; j < n; ++j) {
    double d = m(j, j);
    for (arma::uword k = 0; k < j; ++k) d -= L(j, k) * L(j, k);
    if (!(d > floor))
      throw NotPositiveDefiniteError(
          "cholesky: non-positive pivot at index " + std::to_string(j), j);
    const double ljj = std::sqrt(d);
    L(j, j) = ljj;
    for (arma::uword i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (arma::uword k = 0; k < j; ++k) s -= L(i, k) * L(j, k);
      L(i, j) = s / ljj;
    }
  }
  return L;
}

arma::mat cholesky(const SpdMatrix& m) { return cholesky_lower(m.values()); }

double chol_logdet(const arma::mat& chol_lower) {
  return 2.0 * arma::accu(arma::log(chol_lower.diag()));
}

arma::vec chol_solve(const arma::mat& chol_lower, const arma::vec& b) {
  arma::vec y = arma::solve(arma::trimatl(chol_lower), b);
  return arma::solve(arma::trimatu(chol_lower.t()), y);
}

arma::mat chol_inverse(const arma::mat& chol_lower) {
  const arma::uword n = chol_lower.n_rows;
  arma::mat linv =
      arma::solve(arma::trimatl(chol_lower), arma::eye(n, n));
  return linv.t() * linv;
}

arma::vec mvn_sample(const arma::vec& mean, const SpdMatrix& cov,
                     RngStream& rng) {
  if (mean.n_elem != cov.dim())
    throw DomainError("mvn_sample: mean/cov dimension mismatch");
  return mvn_sample_chol(mean, cholesky(cov), rng);
}

arma::vec mvn_sample_chol(const arma::vec& mean, const arma::mat& chol_lower,
                          RngStream& rng) {
  arma::vec z(mean.n_elem);
  for (arma::uword i = 0; i < z.n_elem; ++i) z(i) = rng.normal();
  return mean + chol_lower * z;
}

arma::vec mvn_sample_precision_chol(const arma::mat& chol_lower_precision,
                                    const arma::vec& b, RngStream& rng) {
  // mean = Lambda^{-1} b; draw = mean + L^{-T} z
  arma::vec mu = chol_solve(chol_lower_precision, b);
  arma::vec z(b.n_elem);
  for (arma::uword i = 0; i < z.n_elem; ++i) z(i) = rng.normal();
  return mu + arma::solve(arma::trimatu(chol_lower_precision.t()), z);
}

double mvn_log_pdf_chol(const arma::vec& x, const arma::vec& mean,
                        const arma::mat& chol_lower) {
  const arma::uword n = x.n_elem;
  arma::vec w = arma::solve(arma::trimatl(chol_lower), x - mean);
  return -0.5 * double(n) * std::log(2.0 * arma::datum::pi) -
         0.5 * chol_logdet(chol_lower) - 0.5 * arma::dot(w, w);
}

ConditionalNormal conditional_normal(const arma::vec& mean, const SpdMatrix& cov,
                                     arma::uword index,
                                     const arma::vec& values_at_others) {
  const arma::uword n = cov.dim();
  if (mean.n_elem != n)
    throw DomainError("conditional_normal: mean/cov dimension mismatch");
  if (index >= n) throw DomainError("conditional_normal: index out of range");
  if (values_at_others.n_elem != n - 1)
    throw DomainError("conditional_normal: values_at_others must have dim-1 entries");
  if (n == 1) return {mean(0), cov(0, 0)};

  arma::uvec others(n - 1);
  arma::uword k = 0;
  for (arma::uword j = 0; j < n; ++j)
    if (j != index) others(k++) = j;

  const arma::mat r_oo = cov.values()(others, others);
  const arma::vec r_io = cov.values().submat(arma::uvec{index}, others).t();

  arma::mat L;
  try {
    L = cholesky_lower(r_oo);
  } catch (const NotPositiveDefiniteError&) {
    throw NumericError("conditional_normal: singular conditioning block");
  }
  const arma::vec resid = values_at_others - mean(others);
  const arma::vec w = chol_solve(L, r_io);

  ConditionalNormal out;
  out.mean = mean(index) + arma::dot(w, resid);
  out.var = cov(index, index) - arma::dot(w, r_io);
  if (!(out.var > 0.0))
    throw NumericError("conditional_normal: non-positive conditional variance");
  return out;
}

}  // namespace meld
