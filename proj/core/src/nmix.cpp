#include "surveymeld/nmix.hpp"

#include <cmath>

#include "surveymeld/distributions.hpp"
#include "surveymeld/errors.hpp"

namespace meld {

namespace {

long lek_max_count(const GroundLek& lek) {
  long m = 0;
  for (long f : lek.counts) m = std::max(m, f);
  return m;
}

// Poisson log-pmf parameterized by log-mean; tolerates overflowed means.
double pois_ll(long n, double log_mu) {
  const double mu = std::exp(log_mu);
  if (!std::isfinite(mu)) return -arma::datum::inf;
  return double(n) * log_mu - mu - std::lgamma(double(n) + 1.0);
}

}  // namespace

long NmixState::walk_width() const {
  return std::max<long>(1, std::lround(adapt_n.step(0)));
}

NmixState NmixState::init(const GroundDataset& data, RngStream&) {
  NmixState s;
  s.eta.zeros(data.w.n_cols);
  s.p = 0.5;
  s.N.resize(data.leks.size());
  for (std::size_t l = 0; l < data.leks.size(); ++l)
    s.N[l] = lek_max_count(data.leks[l]);
  s.adapt_eta = RwAdapter(s.eta.n_elem, 0.3);
  s.adapt_n = RwAdapter(1, 3.0);
  s.refresh_caches(data);
  return s;
}

void NmixState::refresh_caches(const GroundDataset& data) {
  log_mu.set_size(data.cells.size());
  for (std::size_t c = 0; c < data.cells.size(); ++c) {
    const auto& [i, t] = data.cells[c];
    log_mu(c) = arma::dot(data.w.slice(t).row(i), eta);
  }
}

void NmixState::check(const GroundDataset& data) const {
  if (!(p > 0.0 && p < 1.0)) throw NumericError("nmix: p left (0,1)");
  for (std::size_t l = 0; l < data.leks.size(); ++l)
    if (N[l] < lek_max_count(data.leks[l]))
      throw NumericError("nmix: latent abundance below the max flush count");
}

void nmix_step(NmixState& state, const GroundDataset& data,
               const NmixPriors& priors, NProposal proposal, RngStream& rng,
               bool adapting) {
  const std::size_t n_cells = data.cells.size();

  // --- N per lek: discrete MH ---------------------------------------------------
  for (std::size_t c = 0; c < n_cells; ++c) {
    const double lmu = state.log_mu(c);
    const double mu = std::exp(lmu);
    for (int l_idx : data.cell_leks[c]) {
      const GroundLek& lek = data.leks[l_idx];
      const long n_cur = state.N[l_idx];
      long n_prop;
      if (proposal == NProposal::walk) {
        const long w = state.walk_width();
        const long u = 1 + long(rng.uniform_index(std::uint64_t(w)));
        n_prop = rng.bernoulli(0.5) ? n_cur + u : n_cur - u;
      } else {
        if (!std::isfinite(mu)) continue;
        n_prop = sample_poisson(mu, rng);
      }
      if (n_prop < 0) {
        state.adapt_n.record(0, false, adapting);
        continue;
      }
      double dll = 0.0;
      for (long f : lek.counts)
        dll += binomial_log_pmf(f, n_prop, state.p) -
               binomial_log_pmf(f, n_cur, state.p);
      if (proposal == NProposal::walk)
        dll += pois_ll(n_prop, lmu) - pois_ll(n_cur, lmu);
      const bool acc = std::log(rng.uniform()) < dll;
      if (acc) state.N[l_idx] = n_prop;
      state.adapt_n.record(0, acc, adapting);
    }
  }

  // --- p: Beta conjugate Gibbs ---------------------------------------------------
  {
    double a = 1.0, b = 1.0;
    for (std::size_t l = 0; l < data.leks.size(); ++l) {
      for (long f : data.leks[l].counts) {
        a += double(f);
        b += double(state.N[l] - f);
      }
    }
    state.p = sample_beta(a, b, rng);
  }

  // --- eta: element-wise normal random walk --------------------------------------
  arma::vec sum_n(n_cells, arma::fill::zeros);
  arma::vec n_leks(n_cells, arma::fill::zeros);
  for (std::size_t c = 0; c < n_cells; ++c)
    for (int l_idx : data.cell_leks[c]) {
      sum_n(c) += double(state.N[l_idx]);
      n_leks(c) += 1.0;
    }
  auto pois_block = [](double lmu, double s, double cnt) {
    if (cnt == 0.0) return 0.0;
    const double mu = std::exp(lmu);
    if (!std::isfinite(mu)) return -arma::datum::inf;
    return s * lmu - cnt * mu;
  };
  for (arma::uword j = 0; j < state.eta.n_elem; ++j) {
    const double cur = state.eta(j);
    const double prop = cur + state.adapt_eta.step(j) * rng.normal();
    double dll = (cur * cur - prop * prop) / (2.0 * priors.eta_var);
    for (std::size_t c = 0; c < n_cells; ++c) {
      if (n_leks(c) == 0.0) continue;
      const auto& [i, t] = data.cells[c];
      const double x = data.w(i, j, t);
      if (x == 0.0) continue;
      const double lmu_new = state.log_mu(c) + (prop - cur) * x;
      dll += pois_block(lmu_new, sum_n(c), n_leks(c)) -
             pois_block(state.log_mu(c), sum_n(c), n_leks(c));
    }
    const bool acc = std::log(rng.uniform()) < dll;
    if (acc) {
      for (std::size_t c = 0; c < n_cells; ++c) {
        const auto& [i, t] = data.cells[c];
        state.log_mu(c) += (prop - cur) * data.w(i, j, t);
      }
      state.eta(j) = prop;
    }
    state.adapt_eta.record(j, acc, adapting);
  }

  state.adapt_eta.end_iteration(adapting);
  state.adapt_n.end_iteration(adapting);
  ++state.iteration;
}

double derive_density_ground(const NmixState& state, const GroundDataset& data,
                             int cell) {
  const auto& [site, t] = data.cells.at(cell);
  double total = 0.0;
  for (int l_idx : data.cell_leks[cell]) total += double(state.N[l_idx]);
  return 2.0 * total / data.areas(site);
}

double derive_density_ground(const NmixState& state, const GroundDataset& data,
                             int site, int t) {
  const int cell = data.cell_index(site, t);
  if (cell < 0)
    throw DataError("derive_density_ground: cell (" + std::to_string(site) +
                    ", " + std::to_string(t) + ") was not surveyed");
  return derive_density_ground(state, data, cell);
}

NmixRun run_nmix(const GroundDataset& data, const NmixPriors& priors,
                 const McmcControl& control, NProposal proposal, RngStream& rng) {
  control.validate();
  if (data.cells.empty())
    throw ConfigError("run_nmix: no surveyed ground cells");

  NmixState state = NmixState::init(data, rng);

  NmixRun out;
  out.reservoir =
      DensityReservoir(data.cells, data.n_ground, data.n_years, data.first_year);
  for (const auto& n : data.w_names) out.params.names.push_back("eta_" + n);
  out.params.names.push_back("p_attend");
  out.params.values.set_size(control.retained(), out.params.names.size());

  long row = 0;
  for (long iter = 0; iter < control.iterations; ++iter) {
    const bool adapting = iter < control.burn_in;
    nmix_step(state, data, priors, proposal, rng, adapting);
    if (iter % 500 == 0) state.check(data);
    if (iter < control.burn_in) continue;
    for (int c = 0; c < int(data.cells.size()); ++c)
      out.reservoir.add(c, derive_density_ground(state, data, c));
    if ((iter - control.burn_in) % control.thin == 0 && row < control.retained()) {
      arma::uword j = 0;
      for (arma::uword k = 0; k < state.eta.n_elem; ++k)
        out.params.values(row, j++) = state.eta(k);
      out.params.values(row, j++) = state.p;
      ++row;
    }
  }
  state.check(data);
  out.params.values.resize(row, out.params.values.n_cols);
  out.accept_eta = state.adapt_eta.rates();
  out.accept_n = state.adapt_n.rates()(0);
  return out;
}

}  // namespace meld
