#include "surveymeld/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "surveymeld/csv.hpp"
#include "surveymeld/errors.hpp"

namespace meld {

void ChainBundle::validate() const {
  if (chains.size() < 2)
    throw ConfigError("diagnostics: need at least 2 chains");
  for (const auto& c : chains) {
    if (c.n_elem != chains.front().n_elem)
      throw ConfigError("diagnostics: chains must have equal lengths");
    if (c.n_elem < 10) throw ConfigError("diagnostics: need >= 10 retained draws");
  }
}

RhatResult rhat(const ChainBundle& bundle) {
  bundle.validate();
  // Split each chain in half.
  std::vector<arma::vec> halves;
  for (const auto& c : bundle.chains) {
    const arma::uword h = c.n_elem / 2;
    halves.push_back(c.head(h));
    halves.push_back(c.tail(h));
  }
  const double m = double(halves.size());
  const double n = double(halves.front().n_elem);

  arma::vec means(halves.size());
  arma::vec vars(halves.size());
  for (std::size_t j = 0; j < halves.size(); ++j) {
    means(j) = arma::mean(halves[j]);
    vars(j) = arma::var(halves[j]);  // n-1 denominator
  }
  const double w = arma::mean(vars);
  RhatResult out;
  if (!(w > 0.0)) {
    out.value = 1.0;
    out.degenerate = true;
    return out;
  }
  const double b = n * arma::var(means);
  const double var_plus = (n - 1.0) / n * w + b / n;
  out.value = std::sqrt(var_plus / w);
  (void)m;
  return out;
}

EssResult ess(const arma::vec& draws) {
  EssResult out;
  const arma::uword n = draws.n_elem;
  if (n < 100) throw ConfigError("ess: need >= 100 draws");
  const double mean = arma::mean(draws);
  const arma::vec centered = draws - mean;
  const double c0 = arma::dot(centered, centered) / double(n);
  if (!(c0 > 0.0)) {
    out.value = double(n);
    out.degenerate = true;
    return out;
  }
  // Geyer initial positive sequence: sum paired autocorrelations until a
  // pair sum turns negative.
  double rho_sum = 0.0;
  for (arma::uword k = 1; k + 1 < n; k += 2) {
    double ck = 0.0, ck1 = 0.0;
    for (arma::uword i = 0; i + k < n; ++i) ck += centered(i) * centered(i + k);
    for (arma::uword i = 0; i + k + 1 < n; ++i)
      ck1 += centered(i) * centered(i + k + 1);
    ck /= double(n) * c0;
    ck1 /= double(n) * c0;
    const double pair = ck + ck1;
    if (pair <= 0.0) break;
    rho_sum += pair;
    if (k > 1000) break;
  }
  out.value = double(n) / (1.0 + 2.0 * rho_sum);
  return out;
}

Summary summarize(const arma::vec& draws, const std::vector<double>& levels) {
  Summary s;
  if (draws.n_elem == 0) return s;
  s.mean = arma::mean(draws);
  s.sd = draws.n_elem > 1 ? arma::stddev(draws) : 0.0;
  arma::vec sorted = arma::sort(draws);
  auto quantile = [&](double q) {
    const double pos = q * double(sorted.n_elem - 1);
    const arma::uword lo = arma::uword(std::floor(pos));
    const arma::uword hi = std::min(lo + 1, sorted.n_elem - 1);
    const double frac = pos - double(lo);
    return (1.0 - frac) * sorted(lo) + frac * sorted(hi);
  };
  for (double level : levels) {
    const double tail = (1.0 - level) / 2.0;
    s.intervals.emplace_back(quantile(tail), quantile(1.0 - tail));
  }
  return s;
}

void write_diagnostics_csv(const std::string& path,
                           const std::vector<DiagnosticsRow>& rows) {
  CsvTable t({"parameter", "rhat", "ess", "mean", "sd", "ci_lo", "ci_hi",
              "acceptance_rate"});
  for (const auto& r : rows)
    t.append_row({r.parameter, CsvTable::format_double(r.rhat),
                  CsvTable::format_double(r.ess), CsvTable::format_double(r.mean),
                  CsvTable::format_double(r.sd), CsvTable::format_double(r.ci_lo),
                  CsvTable::format_double(r.ci_hi),
                  std::isnan(r.acceptance_rate)
                      ? std::string("")
                      : CsvTable::format_double(r.acceptance_rate)});
  t.write_file(path);
}

}  // namespace meld
