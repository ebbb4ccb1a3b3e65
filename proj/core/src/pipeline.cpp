#include "surveymeld/pipeline.hpp"

#include <atomic>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <numeric>
#include <thread>

#include <json.hpp>

#include "surveymeld/adsm.hpp"
#include "surveymeld/csv.hpp"
#include "surveymeld/errors.hpp"
#include "surveymeld/nmix.hpp"
#include "surveymeld/version.hpp"

namespace meld {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Stream-id registry: one stream per (submodel, chain), plus a per-scenario
// offset so refits never collide with the reference fit.
constexpr std::uint64_t kStreamAdsm = 100;
constexpr std::uint64_t kStreamNmix = 200;
constexpr std::uint64_t kStreamSttm = 300;
constexpr std::uint64_t kStreamSim = 400;

std::uint64_t fnv1a_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return 0;
  std::uint64_t h = 1469598103934665603ULL;
  char buf[4096];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i)
      h = (h ^ std::uint8_t(buf[i])) * 1099511628211ULL;
    if (!in) break;
  }
  return h;
}

int resolve_workers(int configured) {
  if (configured > 0) return configured;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 2 : int(hw);
}

void run_jobs(std::vector<std::function<void()>> jobs, int workers) {
  if (workers <= 1 || jobs.size() <= 1) {
    for (auto& j : jobs) j();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::future<void>> pool;
  const int n = std::min<int>(workers, int(jobs.size()));
  for (int w = 0; w < n; ++w) {
    pool.push_back(std::async(std::launch::async, [&]() {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= jobs.size()) return;
        jobs[k]();
      }
    }));
  }
  for (auto& f : pool) f.get();  // propagates the first exception
}

void write_param_draws_csv(const std::string& path,
                           const std::vector<ParamDraws>& chains) {
  std::vector<std::string> cols = {"chain", "iteration"};
  for (const auto& n : chains.front().names) cols.push_back(n);
  CsvTable t(cols);
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const ParamDraws& d = chains[c];
    for (arma::uword r = 0; r < d.values.n_rows; ++r) {
      std::vector<std::string> row = {std::to_string(c), std::to_string(r)};
      for (arma::uword j = 0; j < d.values.n_cols; ++j)
        row.push_back(CsvTable::format_double(d.values(r, j)));
      t.append_row(row);
    }
  }
  t.write_file(path);
}

struct ParamDrawsFile {
  std::vector<std::string> names;
  std::vector<arma::mat> chains;
};

ParamDrawsFile read_param_draws_csv(const std::string& path) {
  CsvTable t = CsvTable::read_file(path);
  ParamDrawsFile out;
  const auto& cols = t.columns();
  if (cols.size() < 3 || cols[0] != "chain" || cols[1] != "iteration")
    throw DataError("param draws: unexpected schema in " + path);
  out.names.assign(cols.begin() + 2, cols.end());
  std::map<long, std::vector<std::vector<double>>> per_chain;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const long chain = t.cell_long(r, "chain");
    std::vector<double> row;
    for (const auto& n : out.names) row.push_back(t.cell_double(r, n));
    per_chain[chain].push_back(std::move(row));
  }
  for (const auto& [chain, rows] : per_chain) {
    arma::mat m(rows.size(), out.names.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t j = 0; j < out.names.size(); ++j) m(r, j) = rows[r][j];
    out.chains.push_back(std::move(m));
  }
  return out;
}

void write_density_draws_csv(const std::string& path, const FitOutputs& fit) {
  CsvTable t({"chain", "iteration", "region_id", "year", "density"});
  const int n = fit.n_aerial + fit.n_ground;
  for (std::size_t c = 0; c < fit.y_chains.size(); ++c) {
    for (std::size_t k = 0; k < fit.y_chains[c].size(); ++k) {
      const arma::mat& y = fit.y_chains[c][k];
      for (int i = 0; i < n; ++i) {
        const long id = i < fit.n_aerial ? fit.ids.aerial_ids[i]
                                         : fit.ids.ground_ids[i - fit.n_aerial];
        for (int tt = 0; tt < fit.n_years; ++tt)
          t.append_row({std::to_string(c), std::to_string(k), std::to_string(id),
                        std::to_string(fit.first_year + tt),
                        CsvTable::format_double(y(i, tt))});
      }
    }
  }
  t.write_file(path);
}

constexpr char kDrawMagic[8] = {'S', 'M', 'D', 'R', 'A', 'W', '0', '1'};

void write_density_draws_binary(const std::string& path, const FitOutputs& fit) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write file: " + path);
  out.write(kDrawMagic, sizeof(kDrawMagic));
  json schema = {{"columns", {"chain", "iteration", "region_id", "year", "density"}},
                 {"layout", "chain-major dense fields"},
                 {"first_year", fit.first_year},
                 {"n_years", fit.n_years}};
  const std::string s = schema.dump();
  const std::uint64_t slen = s.size();
  out.write(reinterpret_cast<const char*>(&slen), sizeof(slen));
  out.write(s.data(), std::streamsize(s.size()));
  const std::uint64_t n_regions = std::uint64_t(fit.n_aerial + fit.n_ground);
  const std::uint64_t n_chains = fit.y_chains.size();
  out.write(reinterpret_cast<const char*>(&n_regions), sizeof(n_regions));
  out.write(reinterpret_cast<const char*>(&n_chains), sizeof(n_chains));
  for (std::uint64_t i = 0; i < n_regions; ++i) {
    const std::int64_t id = i < std::uint64_t(fit.n_aerial)
                                ? fit.ids.aerial_ids[i]
                                : fit.ids.ground_ids[i - fit.n_aerial];
    out.write(reinterpret_cast<const char*>(&id), sizeof(id));
  }
  for (std::uint64_t c = 0; c < n_chains; ++c) {
    const std::uint64_t n_draws = fit.y_chains[c].size();
    out.write(reinterpret_cast<const char*>(&n_draws), sizeof(n_draws));
    for (const arma::mat& y : fit.y_chains[c])
      out.write(reinterpret_cast<const char*>(y.memptr()),
                std::streamsize(y.n_elem * sizeof(double)));
  }
  if (!out) throw DataError("write failed: " + path);
}

struct DensityDrawsFile {
  std::vector<long> region_ids;
  int first_year = 0;
  int n_years = 0;
  // pooled draws across chains: [region][year] -> samples
  std::vector<std::vector<std::vector<double>>> draws;
};

DensityDrawsFile read_density_draws_csv(const std::string& path) {
  CsvTable t = CsvTable::read_file(path);
  DensityDrawsFile out;
  std::map<long, int> row_of;
  int ymin = 0, ymax = 0;
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const long id = t.cell_long(r, "region_id");
    if (!row_of.count(id)) {
      row_of[id] = 0;  // assign later in sorted order
    }
    const int year = int(t.cell_long(r, "year"));
    if (r == 0) {
      ymin = ymax = year;
    } else {
      ymin = std::min(ymin, year);
      ymax = std::max(ymax, year);
    }
  }
  int idx = 0;
  for (auto& [id, row] : row_of) {
    row = idx++;
    out.region_ids.push_back(id);
  }
  out.first_year = ymin;
  out.n_years = ymax - ymin + 1;
  out.draws.assign(out.region_ids.size(),
                   std::vector<std::vector<double>>(out.n_years));
  for (std::size_t r = 0; r < t.n_rows(); ++r) {
    const int row = row_of.at(t.cell_long(r, "region_id"));
    const int tt = int(t.cell_long(r, "year")) - ymin;
    out.draws[row][tt].push_back(t.cell_double(r, "density"));
  }
  return out;
}

DensityDrawsFile read_density_draws_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kDrawMagic, sizeof(kDrawMagic)) != 0)
    throw DataError("not a density draw binary: " + path);
  std::uint64_t slen = 0;
  in.read(reinterpret_cast<char*>(&slen), sizeof(slen));
  std::string schema(slen, '\0');
  in.read(schema.data(), std::streamsize(slen));
  const json meta = json::parse(schema);
  DensityDrawsFile out;
  out.first_year = meta.at("first_year").get<int>();
  out.n_years = meta.at("n_years").get<int>();
  std::uint64_t n_regions = 0, n_chains = 0;
  in.read(reinterpret_cast<char*>(&n_regions), sizeof(n_regions));
  in.read(reinterpret_cast<char*>(&n_chains), sizeof(n_chains));
  for (std::uint64_t i = 0; i < n_regions; ++i) {
    std::int64_t id = 0;
    in.read(reinterpret_cast<char*>(&id), sizeof(id));
    out.region_ids.push_back(long(id));
  }
  out.draws.assign(n_regions, std::vector<std::vector<double>>(out.n_years));
  for (std::uint64_t c = 0; c < n_chains; ++c) {
    std::uint64_t n_draws = 0;
    in.read(reinterpret_cast<char*>(&n_draws), sizeof(n_draws));
    arma::mat y(n_regions, out.n_years);
    for (std::uint64_t k = 0; k < n_draws; ++k) {
      in.read(reinterpret_cast<char*>(y.memptr()),
              std::streamsize(y.n_elem * sizeof(double)));
      if (!in) throw DataError("truncated density draw binary: " + path);
      for (std::uint64_t i = 0; i < n_regions; ++i)
        for (int tt = 0; tt < out.n_years; ++tt)
          out.draws[i][tt].push_back(y(i, tt));
    }
  }
  return out;
}

DensityDrawsFile read_density_draws(const std::string& fit_dir) {
  const std::string bin = fit_dir + "/draws_density.bin";
  if (fs::exists(bin)) return read_density_draws_binary(bin);
  const std::string csv = fit_dir + "/draws_density.csv";
  if (fs::exists(csv)) return read_density_draws_csv(csv);
  throw DataError("no density draw file under " + fit_dir);
}

}  // namespace

LoadedInputs load_inputs(const FitConfig& config) {
  LoadedInputs in;
  auto [geometry, ids] = load_geometry(config.geometry_csv, config.adjacency_csv);
  in.geometry = std::move(geometry);
  in.ids = std::move(ids);
  in.covariates =
      load_covariates(config.covariates_csv, config.pdsi_csv, config.overlap_csv,
                      config.division_map_csv, in.geometry, in.ids);

  // Year range comes from the survey masks; both surveys must agree.
  MaskInfo am = load_mask(config.aerial_mask_csv, in.ids.aerial_row,
                          in.geometry.n_aerial);
  MaskInfo gm = load_mask(config.ground_mask_csv, in.ids.ground_row,
                          in.geometry.n_ground);
  if (am.first_year != gm.first_year || am.n_years != gm.n_years)
    throw DataError("masks: aerial and ground year ranges differ");

  in.designs = assemble_designs(in.covariates, in.geometry, am.first_year,
                                am.n_years);
  in.aerial = load_aerial(config.aerial_detections_csv, config.aerial_mask_csv,
                          in.ids, in.designs, config.M, config.nu_d,
                          config.area_s);
  in.ground = load_ground(config.ground_counts_csv, config.ground_mask_csv,
                          in.ids, in.geometry, in.designs);
  return in;
}

arma::mat FitOutputs::posterior_mean_y() const {
  arma::mat mean(n_aerial + n_ground, n_years, arma::fill::zeros);
  long count = 0;
  for (const auto& chain : y_chains)
    for (const arma::mat& y : chain) {
      mean += y;
      ++count;
    }
  if (count > 0) mean /= double(count);
  return mean;
}

FitOutputs fit_in_memory(const FitConfig& config, const LoadedInputs& inputs) {
  return fit_in_memory(config, inputs, 0);
}

FitOutputs fit_in_memory(const FitConfig& config, const LoadedInputs& inputs,
                         std::uint64_t stream_offset) {
  config.validate();
  const int chains = config.chains;
  const int workers = resolve_workers(config.threads);

  FitOutputs fit;
  fit.ids = inputs.ids;
  fit.n_aerial = inputs.geometry.n_aerial;
  fit.n_ground = inputs.geometry.n_ground;
  fit.first_year = inputs.aerial.first_year;
  fit.n_years = inputs.aerial.n_years;

  // --- stage 1: both submodels, all chains, concurrently ---------------------
  McmcControl s1{config.stage1_iterations, config.stage1_burnin, config.thin};
  std::vector<AdsmRun> adsm_runs(chains);
  std::vector<NmixRun> nmix_runs(chains);
  {
    std::vector<std::function<void()>> jobs;
    for (int c = 0; c < chains; ++c) {
      jobs.push_back([&, c]() {
        RngStream rng(config.seed, stream_offset + kStreamAdsm + std::uint64_t(c));
        adsm_runs[c] = run_adsm(inputs.aerial, config.adsm_priors, s1, rng);
      });
      jobs.push_back([&, c]() {
        RngStream rng(config.seed, stream_offset + kStreamNmix + std::uint64_t(c));
        nmix_runs[c] =
            run_nmix(inputs.ground, config.nmix_priors, s1, config.n_proposal, rng);
      });
    }
    run_jobs(std::move(jobs), workers);
  }

  // Pool the per-chain reservoirs in chain order.
  fit.reservoirs.aerial = DensityReservoir(
      inputs.aerial.cells, inputs.aerial.n_aerial, inputs.aerial.n_years,
      inputs.aerial.first_year);
  fit.reservoirs.ground = DensityReservoir(
      inputs.ground.cells, inputs.ground.n_ground, inputs.ground.n_years,
      inputs.ground.first_year);
  for (int c = 0; c < chains; ++c) {
    for (int cell = 0; cell < adsm_runs[c].reservoir.n_cells(); ++cell)
      for (double v : adsm_runs[c].reservoir.draws(cell))
        fit.reservoirs.aerial.add(cell, v);
    for (int cell = 0; cell < nmix_runs[c].reservoir.n_cells(); ++cell)
      for (double v : nmix_runs[c].reservoir.draws(cell))
        fit.reservoirs.ground.add(cell, v);
    fit.adsm_chains.push_back(std::move(adsm_runs[c].params));
    fit.nmix_chains.push_back(std::move(nmix_runs[c].params));
    fit.accept_beta_lambda.push_back(adsm_runs[c].accept_beta_lambda);
    fit.accept_beta_rho.push_back(adsm_runs[c].accept_beta_rho);
    fit.accept_eta.push_back(nmix_runs[c].accept_eta);
    fit.accept_lambda0.push_back(adsm_runs[c].accept_lambda0);
  }
  fit.reservoirs.validate_floor(std::size_t(config.reservoir_floor));

  // --- stage 2 ----------------------------------------------------------------
  SttmModel model;
  model.n_aerial = inputs.geometry.n_aerial;
  model.n_ground = inputs.geometry.n_ground;
  model.n_years = inputs.aerial.n_years;
  model.first_year = inputs.aerial.first_year;
  model.tau_structure = config.tau_structure;
  if (config.tau_structure == TauStructure::icar)
    model.q_icar = icar_precision(inputs.geometry.adjacency);
  model.x0 = inputs.designs.x0;
  model.x0_names = inputs.designs.x0_names;
  model.pdsi = inputs.designs.pdsi;
  model.surveyed.zeros(model.n_regions(), model.n_years);
  for (int i = 0; i < model.n_aerial; ++i)
    for (int t = 0; t < model.n_years; ++t)
      model.surveyed(i, t) = inputs.aerial.surveyed(i, t);
  for (int s = 0; s < model.n_ground; ++s)
    for (int t = 0; t < model.n_years; ++t)
      model.surveyed(model.n_aerial + s, t) = inputs.ground.surveyed(s, t);
  model.priors = config.sttm_priors;
  model.priors.ig_scale = config.ig_scale_effective();
  model.phi_proposal = config.phi_proposal;

  PhiGrid grid = PhiGrid::build(inputs.geometry, config.phi_support(), workers);
  model.grid = &grid;
  model.validate();

  McmcControl s2{config.stage2_iterations, config.stage2_burnin, config.thin};
  std::vector<SttmRun> sttm_runs(chains);
  {
    std::vector<std::function<void()>> jobs;
    for (int c = 0; c < chains; ++c) {
      jobs.push_back([&, c]() {
        RngStream rng(config.seed, stream_offset + kStreamSttm + std::uint64_t(c));
        sttm_runs[c] = run_sttm(model, fit.reservoirs, s2, rng);
      });
    }
    run_jobs(std::move(jobs), workers);
  }
  for (int c = 0; c < chains; ++c) {
    fit.sttm_chains.push_back(std::move(sttm_runs[c].params));
    fit.y_chains.push_back(std::move(sttm_runs[c].y_draws));
    fit.sttm_counters.push_back(sttm_runs[c].counters);
  }

  // --- diagnostics --------------------------------------------------------------
  if (config.diagnostics) {
    auto add_rows = [&](const std::vector<ParamDraws>& chains_draws,
                        const std::function<double(const std::string&)>& acc) {
      const auto& names = chains_draws.front().names;
      for (std::size_t j = 0; j < names.size(); ++j) {
        ChainBundle bundle;
        arma::vec pooled;
        for (const auto& pd : chains_draws) {
          bundle.chains.push_back(pd.values.col(j));
          pooled = arma::join_cols(pooled, arma::vec(pd.values.col(j)));
        }
        DiagnosticsRow row;
        row.parameter = names[j];
        const RhatResult r = rhat(bundle);
        row.rhat = r.value;
        double e = 0.0;
        for (const auto& ch : bundle.chains) e += ess(ch).value;
        row.ess = e;
        const Summary s = summarize(pooled, {config.ci_level});
        row.mean = s.mean;
        row.sd = s.sd;
        row.ci_lo = s.intervals[0].first;
        row.ci_hi = s.intervals[0].second;
        row.acceptance_rate = acc(names[j]);
        fit.diagnostics.push_back(row);
        fit.max_rhat = std::max(fit.max_rhat, row.rhat);
      }
    };

    auto adsm_acc = [&](const std::string& name) -> double {
      const auto& names = fit.adsm_chains.front().names;
      const arma::uword p_lambda = fit.accept_beta_lambda.front().n_elem;
      const arma::uword p_rho = fit.accept_beta_rho.front().n_elem;
      for (std::size_t j = 0; j < names.size(); ++j) {
        if (names[j] != name) continue;
        if (j < p_lambda) {
          double r = 0.0;
          for (const auto& v : fit.accept_beta_lambda) r += v(j);
          return r / double(fit.accept_beta_lambda.size());
        }
        if (j < p_lambda + p_rho) {
          double r = 0.0;
          for (const auto& v : fit.accept_beta_rho) r += v(j - p_lambda);
          return r / double(fit.accept_beta_rho.size());
        }
        if (name == "lambda0") {
          double r = 0.0;
          for (double v : fit.accept_lambda0) r += v;
          return r / double(fit.accept_lambda0.size());
        }
      }
      return arma::datum::nan;
    };
    auto nmix_acc = [&](const std::string& name) -> double {
      const auto& names = fit.nmix_chains.front().names;
      for (std::size_t j = 0; j < names.size(); ++j) {
        if (names[j] != name) continue;
        if (j < fit.accept_eta.front().n_elem) {
          double r = 0.0;
          for (const auto& v : fit.accept_eta) r += v(j);
          return r / double(fit.accept_eta.size());
        }
      }
      return arma::datum::nan;
    };
    auto no_acc = [](const std::string&) { return arma::datum::nan; };

    add_rows(fit.adsm_chains, adsm_acc);
    add_rows(fit.nmix_chains, nmix_acc);
    add_rows(fit.sttm_chains, no_acc);
  }
  return fit;
}

namespace {

void persist_fit(const FitConfig& config, const LoadedInputs& inputs,
                 FitOutputs& fit) {
  fs::create_directories(config.out_dir);
  fit.out_dir = config.out_dir;

  if (config.draw_format == "binary") {
    fit.reservoirs.aerial.save_binary(config.out_dir + "/reservoir_aerial.bin",
                                      fit.ids.aerial_ids);
    fit.reservoirs.ground.save_binary(config.out_dir + "/reservoir_ground.bin",
                                      fit.ids.ground_ids);
    write_density_draws_binary(config.out_dir + "/draws_density.bin", fit);
  } else {
    fit.reservoirs.aerial.save_csv(config.out_dir + "/reservoir_aerial.csv",
                                   fit.ids.aerial_ids);
    fit.reservoirs.ground.save_csv(config.out_dir + "/reservoir_ground.csv",
                                   fit.ids.ground_ids);
    write_density_draws_csv(config.out_dir + "/draws_density.csv", fit);
  }
  write_param_draws_csv(config.out_dir + "/draws_adsm_params.csv", fit.adsm_chains);
  write_param_draws_csv(config.out_dir + "/draws_nmix_params.csv", fit.nmix_chains);
  write_param_draws_csv(config.out_dir + "/draws_sttm_params.csv", fit.sttm_chains);

  if (config.diagnostics)
    write_diagnostics_csv(config.out_dir + "/diagnostics.csv", fit.diagnostics);

  // Acceptance ledger.
  {
    CsvTable t({"update", "rate"});
    auto mean_of = [](const std::vector<arma::vec>& rows, arma::uword j) {
      double r = 0.0;
      for (const auto& v : rows) r += v(j);
      return r / double(rows.size());
    };
    const auto& anames = fit.adsm_chains.front().names;
    for (arma::uword j = 0; j < fit.accept_beta_lambda.front().n_elem; ++j)
      t.append_row({anames[j], CsvTable::format_double(mean_of(fit.accept_beta_lambda, j))});
    const arma::uword off = fit.accept_beta_lambda.front().n_elem;
    for (arma::uword j = 0; j < fit.accept_beta_rho.front().n_elem; ++j)
      t.append_row({anames[off + j],
                    CsvTable::format_double(mean_of(fit.accept_beta_rho, j))});
    double l0 = 0.0;
    for (double v : fit.accept_lambda0) l0 += v;
    t.append_row({"lambda0", CsvTable::format_double(l0 / double(fit.accept_lambda0.size()))});
    const auto& nnames = fit.nmix_chains.front().names;
    for (arma::uword j = 0; j < fit.accept_eta.front().n_elem; ++j)
      t.append_row({nnames[j], CsvTable::format_double(mean_of(fit.accept_eta, j))});
    double ma = 0.0, mg = 0.0, ph = 0.0;
    for (const auto& c : fit.sttm_counters) {
      ma += c.aerial_rate();
      mg += c.ground_rate();
      ph += c.phi_prop ? double(c.phi_acc) / double(c.phi_prop) : 0.0;
    }
    const double nc = double(fit.sttm_counters.size());
    t.append_row({"meld_aerial", CsvTable::format_double(ma / nc)});
    t.append_row({"meld_ground", CsvTable::format_double(mg / nc)});
    t.append_row({"phi", CsvTable::format_double(ph / nc)});
    t.write_file(config.out_dir + "/acceptance.csv");
  }

  // Run manifest: resolved config, input hashes, versions. Deliberately free
  // of timestamps so a rerun is byte-identical.
  json manifest;
  manifest["version"] = kVersion;
  manifest["seed"] = config.seed;
  json cfg;
  for (const auto& [k, v] : config.resolved()) cfg[k] = v;
  manifest["config"] = cfg;
  json hashes;
  for (const std::string& p :
       {config.geometry_csv, config.adjacency_csv, config.covariates_csv,
        config.pdsi_csv, config.overlap_csv, config.aerial_detections_csv,
        config.aerial_mask_csv, config.ground_counts_csv, config.ground_mask_csv})
    if (!p.empty()) hashes[p] = fnv1a_file(p);
  manifest["input_hashes"] = hashes;
  manifest["data"] = {{"n_aerial", inputs.geometry.n_aerial},
                      {"n_ground", inputs.geometry.n_ground},
                      {"first_year", fit.first_year},
                      {"n_years", fit.n_years},
                      {"n_detections", inputs.aerial.groups.size()},
                      {"n_leks", inputs.ground.leks.size()}};
  manifest["max_rhat"] = fit.max_rhat;
  std::ofstream mf(config.out_dir + "/manifest.json");
  mf << manifest.dump(2) << "\n";
}

}  // namespace

FitOutputs cmd_fit(const FitConfig& config) {
  LoadedInputs inputs = load_inputs(config);
  FitOutputs fit = fit_in_memory(config, inputs);
  persist_fit(config, inputs, fit);
  return fit;
}

void cmd_simulate(const SimConfig& config) {
  RngStream rng(config.seed, kStreamSim);
  SimulatedSurveys sim = simulate_surveys(config.truth, rng);
  if (!config.aerial_missing_years.empty())
    sim.aerial = apply_scenario_mask(sim.aerial, config.aerial_missing_years);

  fs::create_directories(config.out_dir);
  const std::string d = config.out_dir + "/";
  write_geometry(d + "geometry.csv", d + "adjacency.csv", sim.geometry, sim.ids);
  write_covariates(d + "covariates.csv", d + "pdsi.csv", d + "overlap.csv",
                   sim.covariates, sim.ids, sim.aerial.first_year,
                   sim.aerial.n_years);
  write_mask(d + "aerial_mask.csv", sim.aerial.surveyed, sim.ids.aerial_ids,
             sim.aerial.first_year);
  write_mask(d + "ground_mask.csv", sim.ground.surveyed, sim.ids.ground_ids,
             sim.ground.first_year);
  write_aerial_detections(d + "aerial_detections.csv", sim.aerial, sim.ids);
  write_ground_counts(d + "ground_counts.csv", sim.ground, sim.ids);

  // Truth record for recovery scoring.
  json truth;
  auto mat_to_json = [](const arma::mat& m) {
    json rows = json::array();
    for (arma::uword i = 0; i < m.n_rows; ++i) {
      json row = json::array();
      for (arma::uword j = 0; j < m.n_cols; ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  auto vec_to_json = [](const arma::vec& v) {
    json out = json::array();
    for (arma::uword i = 0; i < v.n_elem; ++i) out.push_back(v(i));
    return out;
  };
  const TruthSpec& t = config.truth;
  truth["parameters"] = {
      {"beta_rho", vec_to_json(t.beta_rho)},
      {"beta_lambda", vec_to_json(t.beta_lambda)},
      {"beta_psi_note", "superseded by the density-matching allocation"},
      {"lambda0", t.lambda0},
      {"p_omega", t.p_omega},
      {"eta", vec_to_json(t.eta)},
      {"p_attend", t.p_attend},
      {"gamma", vec_to_json(t.gamma)},
      {"alpha0", t.alpha0},
      {"alpha1", t.alpha1},
      {"sigma2_d", t.sigma2_d},
      {"sigma2_tau_a", t.sigma2_tau_a},
      {"sigma2_tau_g", t.sigma2_tau_g},
      {"phi", t.phi}};
  truth["fields"] = {{"xi", mat_to_json(sim.truth.xi)},
                     {"zeta", mat_to_json(sim.truth.zeta)},
                     {"y", mat_to_json(sim.truth.y)},
                     {"aerial_density", mat_to_json(sim.truth.aerial_density)},
                     {"ground_density", mat_to_json(sim.truth.ground_density)}};
  truth["aerial_quantization_rmse"] = sim.truth.aerial_quantization_rmse;
  std::ofstream tf(d + "truth.json");
  tf << truth.dump(2) << "\n";
}

std::vector<ScenarioSpec> builtin_scenarios() {
  // Missing-aerial-year presets mirroring the published sensitivity design.
  return {
      {"scenario1", {2005, 2006, 2007, 2008, 2009, 2010, 2011, 2013, 2015, 2017, 2019, 2021}},
      {"scenario2", {2005, 2006, 2007, 2008, 2009, 2010, 2011, 2015, 2017, 2019, 2021}},
      {"scenario3", {2005, 2006, 2007, 2008, 2009, 2010, 2011, 2014, 2015, 2018, 2019}},
      {"scenario4", {2005, 2006, 2007, 2008, 2009, 2010, 2011, 2013, 2016, 2019}},
  };
}

arma::mat load_reference_density_means(const std::string& fit_dir,
                                       const std::vector<long>& aerial_ids,
                                       int first_year, int n_years) {
  const DensityDrawsFile file = read_density_draws(fit_dir);
  std::map<long, std::size_t> row_of;
  for (std::size_t i = 0; i < file.region_ids.size(); ++i)
    row_of[file.region_ids[i]] = i;
  arma::mat means(aerial_ids.size(), n_years);
  for (std::size_t i = 0; i < aerial_ids.size(); ++i) {
    const auto it = row_of.find(aerial_ids[i]);
    if (it == row_of.end())
      throw DataError("reference fit lacks draws for region " +
                      std::to_string(aerial_ids[i]));
    for (int tt = 0; tt < n_years; ++tt) {
      const int src_t = first_year + tt - file.first_year;
      if (src_t < 0 || src_t >= file.n_years)
        throw DataError("reference fit lacks year " +
                        std::to_string(first_year + tt));
      const auto& v = file.draws[it->second][src_t];
      if (v.empty())
        throw DataError("reference fit has no draws for region " +
                        std::to_string(aerial_ids[i]));
      means(i, tt) =
          std::accumulate(v.begin(), v.end(), 0.0) / double(v.size());
    }
  }
  return means;
}

ScenarioReport cmd_sensitivity(const FitConfig& config,
                               const std::vector<ScenarioSpec>& scenarios,
                               const std::string& reference_fit_dir,
                               int workers) {
  if (reference_fit_dir.empty())
    throw ConfigError("sensitivity: a completed full-data reference fit is required");
  LoadedInputs inputs = load_inputs(config);
  const arma::mat reference = load_reference_density_means(
      reference_fit_dir, inputs.ids.aerial_ids, inputs.aerial.first_year,
      inputs.aerial.n_years);

  ScenarioReport report;
  report.rows.resize(scenarios.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    jobs.push_back([&, s]() {
      LoadedInputs masked = inputs;
      masked.aerial = apply_scenario_mask(inputs.aerial, scenarios[s].missing_years);
      FitConfig sub = config;
      sub.out_dir = config.out_dir + "/" + scenarios[s].name;
      FitOutputs fit = fit_in_memory(sub, masked, 1000 * (std::uint64_t(s) + 1));
      const arma::mat mean =
          fit.posterior_mean_y().rows(0, inputs.geometry.n_aerial - 1);
      double abs_sum = 0.0, sq_sum = 0.0;
      long n = 0;
      for (arma::uword i = 0; i < mean.n_rows; ++i)
        for (arma::uword t = 0; t < mean.n_cols; ++t) {
          const double dlt = mean(i, t) - reference(i, t);
          abs_sum += std::fabs(dlt);
          sq_sum += dlt * dlt;
          ++n;
        }
      ScenarioResult& row = report.rows[s];
      row.name = scenarios[s].name;
      row.missing_years = scenarios[s].missing_years;
      row.bias_per_100km2 = 100.0 * abs_sum / double(n);
      row.rmse_per_100km2 = 100.0 * std::sqrt(sq_sum / double(n));

      fs::create_directories(sub.out_dir);
      CsvTable means_csv({"region_id", "year", "posterior_mean_density"});
      for (arma::uword i = 0; i < mean.n_rows; ++i)
        for (arma::uword t = 0; t < mean.n_cols; ++t)
          means_csv.append_row(
              {std::to_string(inputs.ids.aerial_ids[i]),
               std::to_string(inputs.aerial.first_year + int(t)),
               CsvTable::format_double(mean(i, t))});
      means_csv.write_file(sub.out_dir + "/density_means.csv");
    });
  }
  run_jobs(std::move(jobs), workers);

  fs::create_directories(config.out_dir);
  CsvTable t({"scenario", "missing_aerial_years", "bias_per_100km2",
              "rmse_per_100km2"});
  for (const auto& row : report.rows) {
    std::string years;
    for (int y : row.missing_years)
      years += (years.empty() ? "" : ";") + std::to_string(y);
    t.append_row({row.name, years, CsvTable::format_double(row.bias_per_100km2),
                  CsvTable::format_double(row.rmse_per_100km2)});
  }
  t.write_file(config.out_dir + "/sensitivity.csv");
  return report;
}

void cmd_predict(const std::string& fit_dir, const std::string& targets_csv,
                 const std::string& out_csv, double level) {
  const DensityDrawsFile file = read_density_draws(fit_dir);
  std::map<long, std::size_t> row_of;
  for (std::size_t i = 0; i < file.region_ids.size(); ++i)
    row_of[file.region_ids[i]] = i;

  std::vector<std::pair<long, int>> targets;
  if (targets_csv.empty()) {
    for (std::size_t i = 0; i < file.region_ids.size(); ++i)
      for (int tt = 0; tt < file.n_years; ++tt)
        targets.emplace_back(file.region_ids[i], file.first_year + tt);
  } else {
    CsvTable t = CsvTable::read_file(targets_csv);
    for (std::size_t r = 0; r < t.n_rows(); ++r)
      targets.emplace_back(t.cell_long(r, "region_id"),
                           int(t.cell_long(r, "year")));
  }

  CsvTable out({"region_id", "year", "mean", "sd", "ci_lo", "ci_hi", "p_zero"});
  for (const auto& [id, year] : targets) {
    const auto it = row_of.find(id);
    if (it == row_of.end())
      throw DataError("predict: unknown region_id " + std::to_string(id));
    const int tt = year - file.first_year;
    if (tt < 0 || tt >= file.n_years)
      throw DataError("predict: year " + std::to_string(year) +
                      " outside the fitted range");
    const auto& v = file.draws[it->second][tt];
    if (v.empty())
      throw DataError("predict: no draws for region " + std::to_string(id));
    const Summary s = summarize(arma::vec(v), {level});
    long zeros = 0;
    for (double x : v) zeros += x == 0.0 ? 1 : 0;
    out.append_row({std::to_string(id), std::to_string(year),
                    CsvTable::format_double(s.mean), CsvTable::format_double(s.sd),
                    CsvTable::format_double(s.intervals[0].first),
                    CsvTable::format_double(s.intervals[0].second),
                    CsvTable::format_double(double(zeros) / double(v.size()))});
  }
  out.write_file(out_csv);
}

void cmd_diagnose(const std::string& fit_dir, const std::string& out_csv) {
  std::vector<DiagnosticsRow> rows;
  for (const std::string stem :
       {"draws_adsm_params", "draws_nmix_params", "draws_sttm_params"}) {
    const std::string path = fit_dir + "/" + stem + ".csv";
    if (!fs::exists(path)) continue;
    const ParamDrawsFile file = read_param_draws_csv(path);
    if (file.chains.size() < 2)
      throw ConfigError("diagnose: need >= 2 chains in " + path);
    for (std::size_t j = 0; j < file.names.size(); ++j) {
      ChainBundle bundle;
      arma::vec pooled;
      for (const auto& m : file.chains) {
        bundle.chains.push_back(m.col(j));
        pooled = arma::join_cols(pooled, arma::vec(m.col(j)));
      }
      DiagnosticsRow row;
      row.parameter = file.names[j];
      row.rhat = rhat(bundle).value;
      double e = 0.0;
      for (const auto& ch : bundle.chains) e += ess(ch).value;
      row.ess = e;
      const Summary s = summarize(pooled, {0.90});
      row.mean = s.mean;
      row.sd = s.sd;
      row.ci_lo = s.intervals[0].first;
      row.ci_hi = s.intervals[0].second;
      rows.push_back(row);
    }
  }
  if (rows.empty()) throw DataError("diagnose: no parameter draw files in " + fit_dir);
  write_diagnostics_csv(out_csv, rows);
}

}  // namespace meld
