#include "surveymeld/adsm.hpp"

#include <cmath>

#include "surveymeld/distributions.hpp"
#include "surveymeld/errors.hpp"

namespace meld {

int visibility_B(double d, int side, int z) {
  if (z == 0) return 0;
  if (d > 7.0 && side == 1) return 2;
  return 1;
}

double detection_logit(const arma::vec& beta_rho, const arma::rowvec& x_eco,
                       long count, double d) {
  if (beta_rho.n_elem != x_eco.n_elem + 2)
    throw DomainError("detection_logit: beta_rho must have ecoregion columns + 2");
  double eta = 0.0;
  for (arma::uword k = 0; k < x_eco.n_elem; ++k) eta += x_eco(k) * beta_rho(k);
  eta += beta_rho(beta_rho.n_elem - 2) * double(count);
  eta += beta_rho(beta_rho.n_elem - 1) * d;
  return eta;
}

namespace {

// Binomial(v | B, logistic(eta)) log-likelihood without the constant term.
double binlogit_ll(int v, int B, double eta) {
  return double(v) * eta - double(B) * log1pexp(eta);
}

// Summed ZTP log-likelihood of `count` groups totalling `sum_n` individuals
// at rate lambda = exp(log_lambda), dropping the N! terms (they cancel in
// every ratio this is used for).
double ztp_block_ll(double log_lambda, double sum_n, double count) {
  if (count == 0.0) return 0.0;
  const double lam = std::exp(log_lambda);
  if (!std::isfinite(lam)) return -arma::datum::inf;
  return sum_n * log_lambda - count * lam -
         count * std::log(-std::expm1(-lam));
}

}  // namespace

AdsmState AdsmState::init(const AerialDataset& data, const AdsmPriors& priors,
                          RngStream& rng) {
  AdsmState s;
  const arma::uword p = data.x_lambda.n_cols;
  s.beta_rho.zeros(data.x_rho.n_cols + 2);
  s.beta_lambda.zeros(p);
  s.beta_psi.zeros(p);
  s.lambda0 = priors.lambda0_shape * priors.lambda0_scale;
  s.p_omega = 0.5;

  s.cells.resize(data.cells.size());
  for (std::size_t c = 0; c < data.cells.size(); ++c) {
    auto& slots = s.cells[c];
    for (int g_idx : data.cell_groups[c]) {
      const AerialGroup& g = data.groups[g_idx];
      AdsmGroupState gs;
      gs.observed = true;
      gs.v = g.v;
      gs.d = g.d;
      gs.side = g.side;
      gs.N = g.count;
      gs.z = 1;
      gs.omega = g.count >= 3 ? 1 : 0;  // monitoring rule: a lek is 3+ birds
      slots.push_back(gs);
    }
    while (int(slots.size()) < data.M) {
      AdsmGroupState gs;
      gs.observed = false;
      gs.v = 0;
      gs.d = data.nu_d * rng.uniform();
      gs.side = rng.bernoulli(0.5) ? 1 : 0;
      gs.N = 1;
      gs.z = 0;
      gs.omega = 0;
      slots.push_back(gs);
    }
  }

  s.adapt_beta_lambda = RwAdapter(p, 0.3);
  s.adapt_beta_rho = RwAdapter(s.beta_rho.n_elem, 0.3);
  s.adapt_lambda0 = RwAdapter(1, 0.5);
  s.refresh_caches(data);
  return s;
}

void AdsmState::refresh_caches(const AerialDataset& data) {
  const std::size_t n_cells = data.cells.size();
  log_lambda.set_size(n_cells);
  psi_logit.set_size(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) {
    const auto& [i, t] = data.cells[c];
    const arma::rowvec x = data.x_lambda.slice(t).row(i);
    log_lambda(c) = arma::dot(x, beta_lambda);
    psi_logit(c) = arma::dot(x, beta_psi);
  }
}

void AdsmState::check(const AerialDataset& data) const {
  if (!(p_omega > 0.0 && p_omega < 1.0))
    throw NumericError("adsm: p_omega left (0,1)");
  if (!(lambda0 > 0.0) || !std::isfinite(lambda0))
    throw NumericError("adsm: lambda0 left (0,inf)");
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (const AdsmGroupState& g : cells[c]) {
      if (g.observed && g.z != 1)
        throw NumericError("adsm: detected group lost membership");
      if (g.N < 1) throw NumericError("adsm: group count below 1");
      if (!g.observed && (g.d <= 0.0 || g.d >= data.nu_d))
        throw NumericError("adsm: augmented distance left (0, nu_d)");
    }
  }
}

void adsm_step(AdsmState& state, const AerialDataset& data,
               const AdsmPriors& priors, RngStream& rng, bool adapting) {
  const std::size_t n_cells = data.cells.size();
  const arma::uword p = state.beta_lambda.n_elem;

  // --- beta_lambda: element-wise normal random walk --------------------------
  // The ZTP likelihood over groups collapses to per-cell sufficient stats
  // (sum of N and count of lek groups); N! terms cancel in the ratio.
  arma::vec sum_n1(n_cells, arma::fill::zeros);
  arma::vec cnt1(n_cells, arma::fill::zeros);
  for (std::size_t c = 0; c < n_cells; ++c)
    for (const AdsmGroupState& g : state.cells[c])
      if (g.omega) {
        sum_n1(c) += double(g.N);
        cnt1(c) += 1.0;
      }

  for (arma::uword j = 0; j < p; ++j) {
    const double cur = state.beta_lambda(j);
    const double prop = cur + state.adapt_beta_lambda.step(j) * rng.normal();
    double dll = (cur * cur - prop * prop) / (2.0 * priors.beta_lambda_var);
    for (std::size_t c = 0; c < n_cells; ++c) {
      if (cnt1(c) == 0.0) continue;
      const auto& [i, t] = data.cells[c];
      const double x = data.x_lambda(i, j, t);
      if (x == 0.0) continue;
      const double ll_new = state.log_lambda(c) + (prop - cur) * x;
      dll += ztp_block_ll(ll_new, sum_n1(c), cnt1(c)) -
             ztp_block_ll(state.log_lambda(c), sum_n1(c), cnt1(c));
    }
    const bool acc = std::log(rng.uniform()) < dll;
    if (acc) {
      for (std::size_t c = 0; c < n_cells; ++c) {
        const auto& [i, t] = data.cells[c];
        state.log_lambda(c) += (prop - cur) * data.x_lambda(i, j, t);
      }
      state.beta_lambda(j) = prop;
    }
    state.adapt_beta_lambda.record(j, acc, adapting);
  }

  // --- beta_rho: element-wise normal random walk -----------------------------
  for (arma::uword j = 0; j < state.beta_rho.n_elem; ++j) {
    arma::vec prop_beta = state.beta_rho;
    prop_beta(j) += state.adapt_beta_rho.step(j) * rng.normal();
    double dll = (state.beta_rho(j) * state.beta_rho(j) -
                  prop_beta(j) * prop_beta(j)) /
                 (2.0 * priors.beta_rho_var);
    for (std::size_t c = 0; c < n_cells; ++c) {
      const auto& [i, t] = data.cells[c];
      const arma::rowvec x_eco = data.x_rho.row(i);
      for (const AdsmGroupState& g : state.cells[c]) {
        if (!g.z) continue;
        const int B = visibility_B(g.d, g.side, 1);
        const double eta_cur = detection_logit(state.beta_rho, x_eco, g.N, g.d);
        const double eta_new = detection_logit(prop_beta, x_eco, g.N, g.d);
        dll += binlogit_ll(g.v, B, eta_new) - binlogit_ll(g.v, B, eta_cur);
      }
    }
    const bool acc = std::log(rng.uniform()) < dll;
    if (acc) state.beta_rho(j) = prop_beta(j);
    state.adapt_beta_rho.record(j, acc, adapting);
  }

  // --- beta_psi: Polya-Gamma Gibbs --------------------------------------------
  // All M Bernoulli memberships in a cell share one covariate row, so the M
  // PG(1, eta) variables enter only through their sum: one PG(M, eta) draw.
  {
    arma::mat prec(p, p, arma::fill::eye);
    prec /= priors.beta_psi_var;
    arma::vec b(p, arma::fill::zeros);
    for (std::size_t c = 0; c < n_cells; ++c) {
      const auto& [i, t] = data.cells[c];
      const arma::vec x = data.x_lambda.slice(t).row(i).t();
      const double w = sample_polya_gamma(data.M, state.psi_logit(c), rng);
      long n1 = 0;
      for (const AdsmGroupState& g : state.cells[c]) n1 += g.z;
      prec += w * (x * x.t());
      b += (double(n1) - double(data.M) / 2.0) * x;
    }
    state.beta_psi = mvn_sample_precision_chol(cholesky_lower(prec), b, rng);
    for (std::size_t c = 0; c < n_cells; ++c) {
      const auto& [i, t] = data.cells[c];
      state.psi_logit(c) = arma::dot(data.x_lambda.slice(t).row(i), state.beta_psi);
    }
  }

  // --- augmented groups: prior proposals on (N, d, side), Gibbs on z ----------
  for (std::size_t c = 0; c < n_cells; ++c) {
    const auto& [i, t] = data.cells[c];
    const arma::rowvec x_eco = data.x_rho.row(i);
    const double lam_it = std::exp(state.log_lambda(c));
    const double psi = logistic(state.psi_logit(c));
    for (AdsmGroupState& g : state.cells[c]) {
      if (g.observed) continue;
      const double lam_prior = g.omega ? lam_it : state.lambda0;
      if (std::isfinite(lam_prior) && lam_prior > 0.0) {
        const long n_prop = sample_ztp(lam_prior, rng);
        const double d_prop = data.nu_d * rng.uniform();
        const int side_prop = rng.bernoulli(0.5) ? 1 : 0;
        bool acc = true;
        if (g.z) {
          // v = 0, so only the non-detection terms survive.
          const int b_new = visibility_B(d_prop, side_prop, 1);
          const int b_cur = visibility_B(g.d, g.side, 1);
          const double dll =
              binlogit_ll(0, b_new, detection_logit(state.beta_rho, x_eco,
                                                    n_prop, d_prop)) -
              binlogit_ll(0, b_cur,
                          detection_logit(state.beta_rho, x_eco, g.N, g.d));
          acc = std::log(rng.uniform()) < dll;
        }
        if (acc) {
          g.N = n_prop;
          g.d = d_prop;
          g.side = side_prop;
        }
      }
      // z | rest: Bernoulli(psi (1-rho)^B / (psi (1-rho)^B + 1 - psi))
      const int b1 = visibility_B(g.d, g.side, 1);
      const double eta = detection_logit(state.beta_rho, x_eco, g.N, g.d);
      const double l1 = std::log(psi) + binlogit_ll(0, b1, eta);
      const double l0 = std::log1p(-psi);
      g.z = rng.bernoulli(1.0 / (1.0 + std::exp(l0 - l1))) ? 1 : 0;
    }
  }

  // --- omega and p_omega: Gibbs ------------------------------------------------
  long n_omega1 = 0, n_groups = 0;
  for (std::size_t c = 0; c < n_cells; ++c) {
    const double lam_it = std::exp(state.log_lambda(c));
    const bool lam_ok = std::isfinite(lam_it) && lam_it > 0.0;
    for (AdsmGroupState& g : state.cells[c]) {
      const double l1 = lam_ok ? std::log(state.p_omega) + ztp_log_pmf(g.N, lam_it)
                               : -arma::datum::inf;
      const double l0 =
          std::log1p(-state.p_omega) + ztp_log_pmf(g.N, state.lambda0);
      g.omega = rng.bernoulli(1.0 / (1.0 + std::exp(l0 - l1))) ? 1 : 0;
      n_omega1 += g.omega;
      ++n_groups;
    }
  }
  state.p_omega =
      sample_beta(1.0 + double(n_omega1), 1.0 + double(n_groups - n_omega1), rng);

  // --- lambda0: normal random walk on the log scale ----------------------------
  {
    double sum_n0 = 0.0, cnt0 = 0.0;
    for (std::size_t c = 0; c < n_cells; ++c)
      for (const AdsmGroupState& g : state.cells[c])
        if (!g.omega) {
          sum_n0 += double(g.N);
          cnt0 += 1.0;
        }
    const double log_cur = std::log(state.lambda0);
    const double log_prop = log_cur + state.adapt_lambda0.step(0) * rng.normal();
    const double lam_prop = std::exp(log_prop);
    // Gamma(shape, scale) prior plus the log-scale Jacobian.
    double dll = priors.lambda0_shape * (log_prop - log_cur) -
                 (lam_prop - state.lambda0) / priors.lambda0_scale;
    dll += ztp_block_ll(log_prop, sum_n0, cnt0) -
           ztp_block_ll(log_cur, sum_n0, cnt0);
    const bool acc = std::isfinite(lam_prop) && std::log(rng.uniform()) < dll;
    if (acc) state.lambda0 = lam_prop;
    state.adapt_lambda0.record(0, acc, adapting);
  }

  state.adapt_beta_lambda.end_iteration(adapting);
  state.adapt_beta_rho.end_iteration(adapting);
  state.adapt_lambda0.end_iteration(adapting);
  ++state.iteration;
}

double derive_density_aerial(const AdsmState& state, const AerialDataset& data,
                             int cell) {
  double total = 0.0;
  for (const AdsmGroupState& g : state.cells.at(cell))
    if (g.z) total += double(g.N);
  return total / data.area_s;
}

double derive_density_aerial(const AdsmState& state, const AerialDataset& data,
                             int block, int t) {
  const int cell = data.cell_index(block, t);
  if (cell < 0)
    throw DataError("derive_density_aerial: cell (" + std::to_string(block) +
                    ", " + std::to_string(t) + ") was not surveyed");
  return derive_density_aerial(state, data, cell);
}

AdsmRun run_adsm(const AerialDataset& data, const AdsmPriors& priors,
                 const McmcControl& control, RngStream& rng) {
  control.validate();
  if (data.cells.empty())
    throw ConfigError("run_adsm: no surveyed aerial cells");

  AdsmState state = AdsmState::init(data, priors, rng);

  AdsmRun out;
  out.reservoir =
      DensityReservoir(data.cells, data.n_aerial, data.n_years, data.first_year);

  const int n_eco = int(data.x_rho.n_cols);
  out.params.names.clear();
  for (const auto& n : data.x_names) out.params.names.push_back("beta_lambda_" + n);
  for (int k = 0; k < n_eco; ++k)
    out.params.names.push_back("beta_rho_" + data.x_names[k]);
  out.params.names.push_back("beta_rho_count");
  out.params.names.push_back("beta_rho_distance");
  for (const auto& n : data.x_names) out.params.names.push_back("beta_psi_" + n);
  out.params.names.push_back("lambda0");
  out.params.names.push_back("p_omega");
  out.params.values.set_size(control.retained(), out.params.names.size());

  long row = 0;
  for (long iter = 0; iter < control.iterations; ++iter) {
    const bool adapting = iter < control.burn_in;
    adsm_step(state, data, priors, rng, adapting);
    if (iter % 500 == 0) state.check(data);
    if (iter < control.burn_in) continue;
    for (int c = 0; c < int(data.cells.size()); ++c)
      out.reservoir.add(c, derive_density_aerial(state, data, c));
    if ((iter - control.burn_in) % control.thin == 0 && row < control.retained()) {
      arma::uword j = 0;
      for (arma::uword k = 0; k < state.beta_lambda.n_elem; ++k)
        out.params.values(row, j++) = state.beta_lambda(k);
      for (arma::uword k = 0; k < state.beta_rho.n_elem; ++k)
        out.params.values(row, j++) = state.beta_rho(k);
      for (arma::uword k = 0; k < state.beta_psi.n_elem; ++k)
        out.params.values(row, j++) = state.beta_psi(k);
      out.params.values(row, j++) = state.lambda0;
      out.params.values(row, j++) = state.p_omega;
      ++row;
    }
  }
  state.check(data);
  out.params.values.resize(row, out.params.values.n_cols);

  out.accept_beta_lambda = state.adapt_beta_lambda.rates();
  out.accept_beta_rho = state.adapt_beta_rho.rates();
  out.accept_lambda0 = state.adapt_lambda0.rates()(0);
  return out;
}

}  // namespace meld
