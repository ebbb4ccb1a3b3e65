#include "surveymeld/sttm.hpp"

#include <cmath>

#include "surveymeld/distributions.hpp"
#include "surveymeld/errors.hpp"

namespace meld {

void SttmModel::validate() const {
  if (!grid || grid->size() == 0) throw ConfigError("sttm: phi grid is empty");
  if (n_years < 1) throw ConfigError("sttm: need at least one year");
  const int n = n_regions();
  if (int(grid->entry(0).corr.n_rows) != n)
    throw ConfigError("sttm: phi grid dimension does not match the geometry");
  if (int(x0.n_rows) != n) throw ConfigError("sttm: X0 must have one row per region");
  if (int(pdsi.n_rows) != n || int(pdsi.n_cols) != n_years + 1)
    throw ConfigError("sttm: PDSI must be n_regions x (n_years + 1)");
  if (int(surveyed.n_rows) != n || int(surveyed.n_cols) != n_years)
    throw ConfigError("sttm: survey mask must be n_regions x n_years");
  if (tau_structure == TauStructure::icar &&
      (int(q_icar.n_rows) != n_aerial || int(q_icar.n_cols) != n_aerial))
    throw ConfigError("sttm: ICAR precision must be n_aerial x n_aerial");
}

arma::mat SttmModel::tau_precision(double sigma2_tau_a, double sigma2_tau_g) const {
  const int n = n_regions();
  arma::mat q(n, n, arma::fill::zeros);
  if (tau_structure == TauStructure::icar) {
    q.submat(0, 0, n_aerial - 1, n_aerial - 1) = q_icar / sigma2_tau_a;
  } else {
    for (int i = 0; i < n_aerial; ++i) q(i, i) = 1.0 / sigma2_tau_a;
  }
  for (int i = n_aerial; i < n; ++i) q(i, i) = 1.0 / sigma2_tau_g;
  return q;
}

SttmState SttmState::init(const SttmModel& model, const ReservoirHandle& reservoirs) {
  const int n = model.n_regions();
  const int T = model.n_years;
  SttmState s;
  s.zeta.zeros(n, T);
  s.xi.zeros(n, T);
  s.gamma.zeros(model.x0.n_cols);
  s.alpha0 = 0.5;
  s.alpha1 = 0.0;
  s.sigma2_d = 1.0;
  s.sigma2_tau_a = 1.0;
  s.sigma2_tau_g = 1.0;
  s.phi_index = int(model.grid->size() / 2);
  s.y.zeros(n, T);
  for (int i = 0; i < n; ++i) {
    for (int t = 0; t < T; ++t) {
      if (model.surveyed(i, t)) {
        const int cell = i < model.n_aerial
                             ? reservoirs.aerial.cell_of(i, t)
                             : reservoirs.ground.cell_of(i - model.n_aerial, t);
        if (cell < 0)
          throw ConfigError("sttm: surveyed cell has no reservoir draws");
        const double y0 = i < model.n_aerial ? reservoirs.aerial.draws(cell).front()
                                             : reservoirs.ground.draws(cell).front();
        s.y(i, t) = y0;
        s.zeta(i, t) = y0 > 0.0 ? y0 : -0.1;
      } else {
        s.y(i, t) = 0.0;
        s.zeta(i, t) = 0.0;
      }
    }
  }
  return s;
}

void SttmState::check(const SttmModel& model) const {
  if (!(alpha0 > -1.0 && alpha0 < 1.0 && alpha1 > -1.0 && alpha1 < 1.0))
    throw NumericError("sttm: alpha left (-1,1)");
  if (!(sigma2_d > 0.0 && sigma2_tau_a > 0.0 && sigma2_tau_g > 0.0))
    throw NumericError("sttm: a variance left (0,inf)");
  if (phi_index < 0 || phi_index >= int(model.grid->size()))
    throw NumericError("sttm: phi left the grid");
  for (int i = 0; i < model.n_regions(); ++i)
    for (int t = 0; t < model.n_years; ++t) {
      if (y(i, t) > 0.0 && zeta(i, t) != y(i, t))
        throw NumericError("sttm: y > 0 but zeta != y");
      if (y(i, t) == 0.0 && zeta(i, t) > 0.0)
        throw NumericError("sttm: y = 0 but zeta > 0");
      if (y(i, t) < 0.0) throw NumericError("sttm: negative y");
    }
}

ConditionalNormal sttm_conditional_moments(const SttmState& state,
                                           const SttmModel& model, int region,
                                           int t) {
  const arma::mat& prec = model.grid->entry(state.phi_index).inv;
  const double pii = prec(region, region);
  const arma::vec resid = state.zeta.col(t) - state.xi.col(t);
  const double cross =
      arma::dot(prec.row(region).t(), resid) - pii * resid(region);
  ConditionalNormal out;
  out.mean = state.xi(region, t) - cross / pii;
  out.var = state.sigma2_d / pii;
  return out;
}

namespace {

// log of the STTM full conditional of one cell's density value: a normal
// density above zero, the censored-mass CDF at zero.
double meld_log_density(double v, const ConditionalNormal& cn) {
  if (v > 0.0) return normal_log_pdf(v, cn.mean, cn.var);
  return normal_log_cdf((0.0 - cn.mean) / std::sqrt(cn.var));
}

}  // namespace

void meld_update_y(SttmState& state, const SttmModel& model,
                   const ReservoirHandle& reservoirs, int region, int t,
                   RngStream& rng, SttmCounters& counters) {
  if (!model.surveyed(region, t))
    throw DomainError("meld_update_y: cell was not surveyed");
  const bool is_aerial = region < model.n_aerial;
  const DensityReservoir& res = is_aerial ? reservoirs.aerial : reservoirs.ground;
  const int cell = res.cell_of(is_aerial ? region : region - model.n_aerial, t);
  if (cell < 0) throw ConfigError("meld_update_y: empty reservoir for cell");
  const auto& pool = res.draws(cell);

  const double y_star = pool[rng.uniform_index(pool.size())];
  const ConditionalNormal cn = sttm_conditional_moments(state, model, region, t);
  const double log_ratio =
      meld_log_density(y_star, cn) - meld_log_density(state.y(region, t), cn);

  if (is_aerial)
    ++counters.meld_prop_aerial;
  else
    ++counters.meld_prop_ground;

  if (std::log(rng.uniform()) < log_ratio) {
    state.y(region, t) = y_star;
    // Keep the pair (y, zeta) on the tobit support: zeta pins to y above
    // zero and is refreshed from its censored conditional otherwise.
    if (y_star > 0.0)
      state.zeta(region, t) = y_star;
    else
      state.zeta(region, t) =
          sample_truncated_normal(cn.mean, cn.var, -arma::datum::inf, 0.0, rng);
    if (is_aerial)
      ++counters.meld_acc_aerial;
    else
      ++counters.meld_acc_ground;
  }
}

void gibbs_zeta_latent(SttmState& state, const SttmModel& model, RngStream& rng) {
  for (int t = 0; t < model.n_years; ++t) {
    for (int i = 0; i < model.n_regions(); ++i) {
      if (model.surveyed(i, t)) {
        if (state.y(i, t) > 0.0) continue;  // zeta is pinned to y
        const ConditionalNormal cn = sttm_conditional_moments(state, model, i, t);
        state.zeta(i, t) =
            sample_truncated_normal(cn.mean, cn.var, -arma::datum::inf, 0.0, rng);
      } else {
        const ConditionalNormal cn = sttm_conditional_moments(state, model, i, t);
        state.zeta(i, t) = cn.mean + std::sqrt(cn.var) * rng.normal();
        state.y(i, t) = std::max(state.zeta(i, t), 0.0);
      }
    }
  }
}

void gibbs_xi(SttmState& state, const SttmModel& model, RngStream& rng) {
  const int T = model.n_years;
  const arma::mat q_tau = model.tau_precision(state.sigma2_tau_a, state.sigma2_tau_g);
  const arma::mat data_prec =
      model.grid->entry(state.phi_index).inv / state.sigma2_d;
  const double a0 = state.alpha0;

  for (int t = 0; t < T; ++t) {
    arma::mat prec = data_prec + q_tau;
    if (t < T - 1) prec += (a0 * a0) * q_tau;

    const arma::vec prev = t == 0 ? arma::vec(model.x0 * state.gamma)
                                  : arma::vec(state.xi.col(t - 1));
    const arma::vec mean_fwd = a0 * prev + state.alpha1 * model.pdsi.col(t);
    arma::vec b = data_prec * state.zeta.col(t) + q_tau * mean_fwd;
    if (t < T - 1)
      b += a0 * (q_tau * (state.xi.col(t + 1) -
                          state.alpha1 * model.pdsi.col(t + 1)));

    arma::mat chol;
    try {
      chol = cholesky_lower(prec);
    } catch (const NotPositiveDefiniteError& e) {
      throw NumericError(std::string("gibbs_xi: combined precision not PD: ") +
                         e.what());
    }
    state.xi.col(t) = mvn_sample_precision_chol(chol, b, rng);
  }
}

void gibbs_gamma_alpha(SttmState& state, const SttmModel& model, RngStream& rng) {
  const arma::mat q_tau = model.tau_precision(state.sigma2_tau_a, state.sigma2_tau_g);

  // gamma | rest: enters only through xi_1 ~ N(a0 X0 gamma + a1 W_0, Sigma_tau)
  {
    const arma::mat a = state.alpha0 * model.x0;
    const arma::vec r = state.xi.col(0) - state.alpha1 * model.pdsi.col(0);
    arma::mat prec = a.t() * q_tau * a;
    prec.diag() += 1.0 / model.priors.gamma_var;
    arma::vec b = a.t() * (q_tau * r);
    arma::mat chol;
    try {
      chol = cholesky_lower(prec);
    } catch (const NotPositiveDefiniteError&) {
      // collinear design; ridge jitter keeps the draw defined
      prec.diag() += 1e-8;
      chol = cholesky_lower(prec);
    }
    state.gamma = mvn_sample_precision_chol(chol, b, rng);
  }

  // alpha | rest: bivariate normal truncated componentwise to (-1, 1),
  // realized as two exact scalar conditional truncated-normal draws.
  {
    arma::mat lambda(2, 2, arma::fill::zeros);
    arma::vec b(2, arma::fill::zeros);
    for (int t = 0; t < model.n_years; ++t) {
      const arma::vec prev = t == 0 ? arma::vec(model.x0 * state.gamma)
                                    : arma::vec(state.xi.col(t - 1));
      arma::mat u(model.n_regions(), 2);
      u.col(0) = prev;
      u.col(1) = model.pdsi.col(t);
      const arma::mat qu = q_tau * u;
      lambda += u.t() * qu;
      b += qu.t() * state.xi.col(t);
    }
    const double det = lambda(0, 0) * lambda(1, 1) - lambda(0, 1) * lambda(1, 0);
    if (!(det > 0.0) || !(lambda(0, 0) > 0.0)) {
      lambda.diag() += 1e-8;
    }
    arma::mat cov = arma::inv_sympd(lambda);
    arma::vec mu = cov * b;

    // alpha0 | alpha1
    double cmean = mu(0) + cov(0, 1) / cov(1, 1) * (state.alpha1 - mu(1));
    double cvar = cov(0, 0) - cov(0, 1) * cov(0, 1) / cov(1, 1);
    state.alpha0 = sample_truncated_normal(cmean, std::max(cvar, 1e-300), -1.0,
                                           1.0, rng);
    // alpha1 | alpha0
    cmean = mu(1) + cov(0, 1) / cov(0, 0) * (state.alpha0 - mu(0));
    cvar = cov(1, 1) - cov(0, 1) * cov(0, 1) / cov(0, 0);
    state.alpha1 = sample_truncated_normal(cmean, std::max(cvar, 1e-300), -1.0,
                                           1.0, rng);
  }
}

void gibbs_variances(SttmState& state, const SttmModel& model, RngStream& rng) {
  const int T = model.n_years;
  const int n = model.n_regions();
  const SttmPriors& pr = model.priors;

  // sigma2_d | rest
  {
    const arma::mat& r_inv = model.grid->entry(state.phi_index).inv;
    double quad = 0.0;
    for (int t = 0; t < T; ++t) {
      const arma::vec e = state.zeta.col(t) - state.xi.col(t);
      quad += arma::dot(e, r_inv * e);
    }
    state.sigma2_d = sample_inverse_gamma(pr.ig_shape + 0.5 * double(n) * T,
                                          pr.ig_scale + 0.5 * quad, rng);
  }

  // innovation variances | rest
  {
    double quad_a = 0.0, quad_g = 0.0;
    for (int t = 0; t < T; ++t) {
      const arma::vec prev = t == 0 ? arma::vec(model.x0 * state.gamma)
                                    : arma::vec(state.xi.col(t - 1));
      const arma::vec u = state.xi.col(t) - state.alpha0 * prev -
                          state.alpha1 * model.pdsi.col(t);
      const arma::vec ua = u.head(model.n_aerial);
      if (model.tau_structure == TauStructure::icar)
        quad_a += arma::dot(ua, model.q_icar * ua);
      else
        quad_a += arma::dot(ua, ua);
      if (model.n_ground > 0) {
        const arma::vec ug = u.tail(model.n_ground);
        quad_g += arma::dot(ug, ug);
      }
    }
    // ICAR contributes rank(Q) = n_aerial - 1 residual dimensions per year.
    const double count_a = model.tau_structure == TauStructure::icar
                               ? double(model.n_aerial - 1)
                               : double(model.n_aerial);
    state.sigma2_tau_a = sample_inverse_gamma(
        pr.ig_shape + 0.5 * count_a * T, pr.ig_scale + 0.5 * quad_a, rng);
    if (model.n_ground > 0)
      state.sigma2_tau_g = sample_inverse_gamma(
          pr.ig_shape + 0.5 * double(model.n_ground) * T,
          pr.ig_scale + 0.5 * quad_g, rng);
  }
}

void mh_phi(SttmState& state, const SttmModel& model, RngStream& rng,
            SttmCounters& counters) {
  const int k = int(model.grid->size());
  if (k == 1) return;
  int prop;
  if (model.phi_proposal == PhiProposal::uniform) {
    prop = int(rng.uniform_index(std::uint64_t(k)));
  } else {
    prop = state.phi_index + (rng.bernoulli(0.5) ? 1 : -1);
  }
  ++counters.phi_prop;
  if (prop < 0 || prop >= k) return;  // off-grid neighbor: reject
  if (prop == state.phi_index) {
    ++counters.phi_acc;
    return;
  }

  const auto& cur = model.grid->entry(state.phi_index);
  const auto& cand = model.grid->entry(prop);
  double dll = -0.5 * double(model.n_years) * (cand.logdet - cur.logdet);
  double dquad = 0.0;
  for (int t = 0; t < model.n_years; ++t) {
    const arma::vec e = state.zeta.col(t) - state.xi.col(t);
    dquad += arma::dot(e, cand.inv * e) - arma::dot(e, cur.inv * e);
  }
  dll -= 0.5 * dquad / state.sigma2_d;

  if (std::log(rng.uniform()) < dll) {
    state.phi_index = prop;
    ++counters.phi_acc;
  }
}

void sttm_step(SttmState& state, const SttmModel& model,
               const ReservoirHandle& reservoirs, RngStream& rng,
               SttmCounters& counters) {
  for (int t = 0; t < model.n_years; ++t)
    for (int i = 0; i < model.n_regions(); ++i)
      if (model.surveyed(i, t))
        meld_update_y(state, model, reservoirs, i, t, rng, counters);
  gibbs_zeta_latent(state, model, rng);
  gibbs_xi(state, model, rng);
  gibbs_gamma_alpha(state, model, rng);
  gibbs_variances(state, model, rng);
  mh_phi(state, model, rng, counters);
}

SttmRun run_sttm(const SttmModel& model, const ReservoirHandle& reservoirs,
                 const McmcControl& control, RngStream& rng) {
  model.validate();
  control.validate();

  SttmState state = SttmState::init(model, reservoirs);

  SttmRun out;
  for (arma::uword k = 0; k < state.gamma.n_elem; ++k) {
    const std::string suffix = k < model.x0_names.size() ? model.x0_names[k]
                                                         : std::to_string(k);
    out.params.names.push_back("gamma_" + suffix);
  }
  out.params.names.push_back("alpha_ar");
  out.params.names.push_back("alpha_pdsi");
  out.params.names.push_back("sigma2_d");
  out.params.names.push_back("sigma2_tau_aerial");
  out.params.names.push_back("sigma2_tau_ground");
  out.params.names.push_back("phi");
  out.params.values.set_size(control.retained(), out.params.names.size());

  long row = 0;
  for (long iter = 0; iter < control.iterations; ++iter) {
    sttm_step(state, model, reservoirs, rng, out.counters);
    if (iter < control.burn_in) continue;
    if ((iter - control.burn_in) % control.thin == 0 && row < control.retained()) {
      state.check(model);
      arma::uword j = 0;
      for (arma::uword k = 0; k < state.gamma.n_elem; ++k)
        out.params.values(row, j++) = state.gamma(k);
      out.params.values(row, j++) = state.alpha0;
      out.params.values(row, j++) = state.alpha1;
      out.params.values(row, j++) = state.sigma2_d;
      out.params.values(row, j++) = state.sigma2_tau_a;
      out.params.values(row, j++) = state.sigma2_tau_g;
      out.params.values(row, j++) = model.grid->phi(state.phi_index);
      out.y_draws.push_back(state.y);
      ++row;
    }
  }
  out.params.values.resize(row, out.params.values.n_cols);
  return out;
}

}  // namespace meld
