#pragma once

#include <cstdint>

#include "surveymeld/rng.hpp"

namespace meld {

// --- density / pmf helpers -------------------------------------------------

double logistic(double x);
double log1pexp(double x);

double normal_log_pdf(double x, double mean, double var);
double normal_cdf(double z);
// log Phi(z), accurate in the far left tail (Mills-ratio expansion).
double normal_log_cdf(double z);

double lchoose(long n, long k);
double binomial_log_pmf(long k, long n, double p);
double poisson_log_pmf(long k, double lambda);

// Zero-truncated Poisson: log P(K = k), k >= 1.
double ztp_log_pmf(long k, double lambda);
double ztp_mean(double lambda);

// --- samplers ----------------------------------------------------------------

// Poisson draw; inversion for small lambda, PTRS transformed rejection above.
long sample_poisson(double lambda, RngStream& rng);

// Zero-truncated Poisson draw (always >= 1). Inverse CDF for lambda < 1,
// rejection from Poisson otherwise; bounded expected cost for all lambda.
long sample_ztp(double lambda, RngStream& rng);

// Marsaglia-Tsang; shape-scale parameterization (mean = shape * scale).
double sample_gamma(double shape, double scale, RngStream& rng);

double sample_beta(double a, double b, RngStream& rng);

// Inverse-gamma with density ~ x^{-shape-1} exp(-scale/x).
double sample_inverse_gamma(double shape, double scale, RngStream& rng);

// Exact PG(b, c) draw for integer b >= 1 via the alternating-series
// rejection sampler; b > 1 by additivity.
double sample_polya_gamma(int b, double c, RngStream& rng);

// Exact N(mu, sigma2) draw restricted to (lower, upper); bounds may be
// +/-infinity. Far-tail regimes use exponential-proposal rejection.
double sample_truncated_normal(double mu, double sigma2, double lower,
                               double upper, RngStream& rng);

}  // namespace meld
