#include "surveymeld/simulate.hpp"

#include <cmath>

#include "surveymeld/adsm.hpp"
#include "surveymeld/distributions.hpp"
#include "surveymeld/errors.hpp"

namespace meld {

void TruthSpec::ensure_defaults() {
  const int p = n_eco() + n_static + 1;
  if (beta_rho.n_elem == 0) {
    beta_rho.set_size(n_eco() + 2);
    beta_rho.fill(1.2);
    beta_rho(n_eco()) = 0.05;        // count: larger groups easier to spot
    beta_rho(n_eco() + 1) = -0.004;  // distance decay per meter
  }
  if (beta_lambda.n_elem == 0) {
    beta_lambda.zeros(p);
    for (int k = 0; k < n_eco(); ++k) beta_lambda(k) = 1.6;  // mean lek ~ 5
    beta_lambda(n_eco()) = 0.2;
    beta_lambda(p - 1) = 0.05;
  }
  if (beta_psi.n_elem == 0) beta_psi.zeros(p);
  if (eta.n_elem == 0) {
    eta.zeros(p);
    for (int k = 0; k < n_eco(); ++k) eta(k) = 1.5;  // mean lek ~ 4.5 males
    eta(n_eco()) = 0.3;
    eta(p - 1) = 0.05;
  }
  if (gamma.n_elem == 0) {
    gamma.zeros(n_eco() + n_static);
    for (int k = 0; k < n_eco(); ++k) gamma(k) = 1.0 + 0.25 * k;
    gamma(n_eco()) = 0.3;
  }
}

void TruthSpec::validate() const {
  if (n_side < 2) throw ConfigError("truth: n_side must be >= 2");
  if (n_years < 1) throw ConfigError("truth: need at least one year");
  if (!(alpha0 > -1.0 && alpha0 < 1.0) || !(alpha1 > -1.0 && alpha1 < 1.0))
    throw ConfigError("truth: alpha components must lie in (-1,1)");
  if (!(sigma2_d > 0.0 && sigma2_tau_a > 0.0 && sigma2_tau_g > 0.0))
    throw ConfigError("truth: variances must be positive");
  if (!(phi > 0.0)) throw ConfigError("truth: phi must be positive");
  if (!(p_attend > 0.0 && p_attend < 1.0))
    throw ConfigError("truth: attendance probability must lie in (0,1)");
  if (!(p_omega > 0.0 && p_omega < 1.0))
    throw ConfigError("truth: p_omega must lie in (0,1)");
  if (!(lambda0 > 0.0)) throw ConfigError("truth: lambda0 must be positive");
  if (M < 1) throw ConfigError("truth: M must be >= 1");
  if (int(beta_rho.n_elem) != n_eco() + 2)
    throw ConfigError("truth: beta_rho must have n_eco + 2 entries");
  if (int(beta_lambda.n_elem) != n_eco() + n_static + 1)
    throw ConfigError("truth: beta_lambda must have n_eco + n_static + 1 entries");
  if (int(eta.n_elem) != n_eco() + n_static + 1)
    throw ConfigError("truth: eta must have n_eco + n_static + 1 entries");
  if (int(gamma.n_elem) != n_eco() + n_static)
    throw ConfigError("truth: gamma must have n_eco + n_static entries");
}

std::pair<SurveyGeometry, IdMaps> simulate_geometry(int n_side, int n_ground,
                                                    double block_km,
                                                    double area_s,
                                                    double area_ground,
                                                    RngStream& rng) {
  if (n_side < 2) throw ConfigError("simulate_geometry: n_side must be >= 2");
  const int n_aerial = n_side * n_side;
  const double block_m = block_km * 1000.0;

  SurveyGeometry g;
  IdMaps ids;
  g.n_aerial = n_aerial;
  g.n_ground = n_ground;
  g.block_area_aerial = area_s;
  g.centroids.set_size(n_aerial + n_ground, 2);
  g.adjacency.zeros(n_aerial, n_aerial);
  g.areas_ground.set_size(n_ground);

  for (int r = 0; r < n_side; ++r) {
    for (int c = 0; c < n_side; ++c) {
      const int i = r * n_side + c;
      g.centroids(i, 0) = (c + 0.5) * block_m;
      g.centroids(i, 1) = (r + 0.5) * block_m;
      if (c + 1 < n_side) {
        g.adjacency(i, i + 1) = 1.0;
        g.adjacency(i + 1, i) = 1.0;
      }
      if (r + 1 < n_side) {
        g.adjacency(i, i + n_side) = 1.0;
        g.adjacency(i + n_side, i) = 1.0;
      }
      ids.aerial_ids.push_back(i + 1);
      ids.aerial_row[i + 1] = i;
    }
  }
  const double extent = n_side * block_m;
  for (int s = 0; s < n_ground; ++s) {
    g.centroids(n_aerial + s, 0) = extent * rng.uniform();
    g.centroids(n_aerial + s, 1) = extent * rng.uniform();
    g.areas_ground(s) = area_ground;
    const long id = 10000 + s + 1;
    ids.ground_ids.push_back(id);
    ids.ground_row[id] = s;
  }
  g.validate();
  return {std::move(g), std::move(ids)};
}

namespace {

CovariateTable simulate_covariates(const TruthSpec& truth,
                                   const SurveyGeometry& geometry,
                                   RngStream& rng) {
  CovariateTable table;
  const int n_aerial = geometry.n_aerial;
  const double xmax = geometry.centroids.col(0).subvec(0, n_aerial - 1).max();

  // Ecoregions and climate divisions by lattice thirds (west to east).
  static const char* kEco[3] = {"west", "central", "east"};
  table.ecoregion.resize(n_aerial);
  table.block_division.resize(n_aerial);
  for (int i = 0; i < n_aerial; ++i) {
    const int third =
        std::min(2, int(3.0 * geometry.centroids(i, 0) / (xmax * 1.0001)));
    table.ecoregion[i] = kEco[third];
    table.block_division[i] = third + 1;
  }

  table.static_names = {"development", "crp", "grass_patch", "shrub", "woodland"};
  table.static_names.resize(truth.n_static);
  table.statics.set_size(n_aerial, truth.n_static);
  for (int k = 0; k < truth.n_static; ++k)
    for (int i = 0; i < n_aerial; ++i) table.statics(i, k) = rng.normal();

  // PDSI: an AR(1) series per division covering first_year-1 .. last year.
  for (long div = 1; div <= 3; ++div) {
    double x = rng.normal();
    for (int j = 0; j <= truth.n_years; ++j) {
      table.pdsi[{div, truth.first_year - 1 + j}] = x;
      x = 0.7 * x + std::sqrt(1.0 - 0.7 * 0.7) * rng.normal();
    }
  }

  // Overlap: each site weighted over its two nearest blocks.
  table.overlap.resize(geometry.n_ground);
  for (int s = 0; s < geometry.n_ground; ++s) {
    arma::vec d(n_aerial);
    for (int i = 0; i < n_aerial; ++i) {
      const double dx = geometry.centroids(n_aerial + s, 0) - geometry.centroids(i, 0);
      const double dy = geometry.centroids(n_aerial + s, 1) - geometry.centroids(i, 1);
      d(i) = std::sqrt(dx * dx + dy * dy);
    }
    const arma::uvec order = arma::sort_index(d);
    table.overlap[s] = {{int(order(0)), 0.7}, {int(order(1)), 0.3}};
  }
  return table;
}

// Innovation draw for the xi transition: constrained ICAR (sum-to-zero
// eigenbasis) or iid, per the configured structure.
struct InnovationSampler {
  TauStructure structure;
  arma::mat eigvec;  // ICAR basis
  arma::vec eigval;
  int n_aerial;

  arma::vec draw_aerial(double sigma2, RngStream& rng) const {
    arma::vec out(n_aerial, arma::fill::zeros);
    if (structure == TauStructure::diagonal) {
      for (int i = 0; i < n_aerial; ++i)
        out(i) = std::sqrt(sigma2) * rng.normal();
      return out;
    }
    for (int k = 0; k < n_aerial; ++k) {
      if (eigval(k) < 1e-10) continue;  // null space: sum-to-zero constraint
      out += eigvec.col(k) * (std::sqrt(sigma2 / eigval(k)) * rng.normal());
    }
    return out;
  }
};

}  // namespace

SimulatedSurveys simulate_surveys(const TruthSpec& truth, RngStream& rng) {
  TruthSpec t = truth;
  t.ensure_defaults();
  t.validate();
  const int n_aerial = t.n_side * t.n_side;
  arma::imat aerial_mask(n_aerial, t.n_years, arma::fill::ones);
  arma::imat ground_mask(std::max(t.n_ground, 1), t.n_years, arma::fill::ones);
  if (t.n_ground == 0) ground_mask.zeros();
  return simulate_surveys(t, aerial_mask, ground_mask, rng);
}

SimulatedSurveys simulate_surveys(const TruthSpec& truth,
                                  const arma::imat& aerial_mask,
                                  const arma::imat& ground_mask, RngStream& rng) {
  TruthSpec spec = truth;
  spec.ensure_defaults();
  spec.validate();

  SimulatedSurveys out;
  auto [geometry, ids] =
      simulate_geometry(spec.n_side, spec.n_ground, spec.block_km, spec.area_s,
                        spec.area_ground, rng);
  out.geometry = std::move(geometry);
  out.ids = std::move(ids);
  out.covariates = simulate_covariates(spec, out.geometry, rng);
  out.designs = assemble_designs(out.covariates, out.geometry, spec.first_year,
                                 spec.n_years);

  const int n = out.geometry.n_regions();
  const int T = spec.n_years;
  const int n_aerial = out.geometry.n_aerial;

  // --- latent density field ---------------------------------------------------
  InnovationSampler innov;
  innov.structure = spec.tau_structure;
  innov.n_aerial = n_aerial;
  if (spec.tau_structure == TauStructure::icar) {
    const arma::mat q = icar_precision(out.geometry.adjacency);
    arma::eig_sym(innov.eigval, innov.eigvec, q);
  }

  const arma::mat dist = out.geometry.pairwise_distances();
  const SpdMatrix corr = exp_correlation(dist, spec.phi);
  const arma::mat chol_r = cholesky(corr);

  SimTruthRecord& rec = out.truth;
  rec.xi.set_size(n, T);
  rec.zeta.set_size(n, T);
  rec.y.set_size(n, T);

  arma::vec prev = out.designs.x0 * spec.gamma;  // xi_0
  for (int t = 0; t < T; ++t) {
    arma::vec mean = spec.alpha0 * prev + spec.alpha1 * out.designs.pdsi.col(t);
    arma::vec xi_t = mean;
    xi_t.head(n_aerial) += innov.draw_aerial(spec.sigma2_tau_a, rng);
    for (int i = n_aerial; i < n; ++i)
      xi_t(i) += std::sqrt(spec.sigma2_tau_g) * rng.normal();
    rec.xi.col(t) = xi_t;

    arma::vec z(n);
    for (int i = 0; i < n; ++i) z(i) = rng.normal();
    rec.zeta.col(t) = xi_t + std::sqrt(spec.sigma2_d) * (chol_r * z);
    for (int i = 0; i < n; ++i) rec.y(i, t) = std::max(rec.zeta(i, t), 0.0);
    prev = xi_t;
  }

  // --- aerial dataset -----------------------------------------------------------
  // Group allocation targets the realized field: psi_it is rescaled so the
  // expected summed group size matches y_it * S, then groups draw sizes from
  // the ZTP mixture. The residual gap is recorded, not hidden.
  AerialDataset& air = out.aerial;
  air.n_aerial = n_aerial;
  air.first_year = spec.first_year;
  air.n_years = T;
  air.surveyed = aerial_mask;
  air.M = spec.M;
  air.nu_d = spec.nu_d;
  air.area_s = spec.area_s;
  air.x_rho = out.designs.x_rho;
  air.x_lambda = out.designs.aerial_xl;
  air.x_names = out.designs.xl_names;

  rec.aerial_density.set_size(n_aerial, T);
  rec.aerial_density.fill(arma::datum::nan);
  double gap_sq = 0.0;
  int gap_n = 0;
  long next_group_id = 1;
  for (int i = 0; i < n_aerial; ++i) {
    for (int t = 0; t < T; ++t) {
      if (!aerial_mask(i, t)) continue;
      const double lam_it =
          std::exp(arma::dot(out.designs.aerial_xl.slice(t).row(i), spec.beta_lambda));
      const double mean_size = spec.p_omega * ztp_mean(lam_it) +
                               (1.0 - spec.p_omega) * ztp_mean(spec.lambda0);
      const double target = rec.y(i, t) * spec.area_s;
      const double psi =
          std::clamp(target / (double(spec.M) * mean_size), 0.0, 0.98);
      long members = 0;
      for (int m = 0; m < spec.M; ++m) members += rng.bernoulli(psi) ? 1 : 0;

      double realized = 0.0;
      for (long m = 0; m < members; ++m) {
        const int omega = rng.bernoulli(spec.p_omega) ? 1 : 0;
        const long count = sample_ztp(omega ? lam_it : spec.lambda0, rng);
        const double d = spec.nu_d * rng.uniform();
        const int side = rng.bernoulli(0.5) ? 1 : 0;
        realized += double(count);
        const int b = visibility_B(d, side, 1);
        const double rho =
            logistic(detection_logit(spec.beta_rho, out.designs.x_rho.row(i),
                                     count, d));
        int v = 0;
        for (int o = 0; o < b; ++o) v += rng.bernoulli(rho) ? 1 : 0;
        if (v >= 1) {
          AerialGroup grp;
          grp.block = i;
          grp.t = t;
          grp.group_id = next_group_id++;
          grp.v = v;
          grp.d = d;
          grp.side = side;
          grp.count = count;
          air.groups.push_back(grp);
        }
      }
      rec.aerial_density(i, t) = realized / spec.area_s;
      const double gap = rec.aerial_density(i, t) - rec.y(i, t);
      gap_sq += gap * gap;
      ++gap_n;
    }
  }
  rec.aerial_quantization_rmse = gap_n ? std::sqrt(gap_sq / gap_n) : 0.0;
  air.finalize();

  // --- ground dataset -------------------------------------------------------------
  GroundDataset& grd = out.ground;
  grd.n_ground = out.geometry.n_ground;
  grd.first_year = spec.first_year;
  grd.n_years = T;
  grd.surveyed = ground_mask;
  grd.areas = out.geometry.areas_ground;
  grd.w = out.designs.ground_w;
  grd.w_names = out.designs.xl_names;

  rec.ground_density.set_size(std::max(grd.n_ground, 1), T);
  rec.ground_density.fill(arma::datum::nan);
  long next_lek_id = 1;
  for (int s = 0; s < grd.n_ground; ++s) {
    for (int t = 0; t < T; ++t) {
      if (!ground_mask(s, t)) continue;
      const double mu =
          std::exp(arma::dot(out.designs.ground_w.slice(t).row(s), spec.eta));
      long total = 0;
      for (int l = 0; l < spec.leks_per_site; ++l) {
        const long n_males = mu > 0.0 ? sample_poisson(mu, rng) : 0;
        total += n_males;
        GroundLek lek;
        lek.site = s;
        lek.t = t;
        lek.lek_id = next_lek_id++;
        const int visits = 2 + int(rng.uniform_index(2));  // J in {2, 3}
        for (int j = 0; j < visits; ++j) {
          long f = 0;
          for (long b = 0; b < n_males; ++b)
            f += rng.bernoulli(spec.p_attend) ? 1 : 0;
          lek.counts.push_back(f);
        }
        grd.leks.push_back(std::move(lek));
      }
      rec.ground_density(s, t) = 2.0 * double(total) / grd.areas(s);
    }
  }
  grd.finalize();
  return out;
}

AerialDataset apply_scenario_mask(const AerialDataset& data,
                                  const std::set<int>& missing_years) {
  AerialDataset out = data;
  for (int year : missing_years) {
    const int t = year - data.first_year;
    if (t < 0 || t >= data.n_years)
      throw ConfigError("scenario mask: year " + std::to_string(year) +
                        " outside the dataset range");
    out.surveyed.col(t).zeros();
  }
  std::vector<AerialGroup> kept;
  for (const AerialGroup& g : out.groups)
    if (!missing_years.count(data.first_year + g.t)) kept.push_back(g);
  out.groups = std::move(kept);
  out.finalize();
  return out;
}

}  // namespace meld
