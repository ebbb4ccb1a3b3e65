#include "surveymeld/config.hpp"

#include <fstream>
#include <sstream>

#include "surveymeld/csv.hpp"
#include "surveymeld/errors.hpp"

namespace meld {

namespace {
std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}
}  // namespace

KvFile KvFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

KvFile KvFile::parse_string(const std::string& text) {
  KvFile kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    if (kv.values_.count(key))
      throw ConfigError("config: duplicate key '" + key + "'");
    kv.values_[key] = value;
  }
  return kv;
}

bool KvFile::has(const std::string& key) const { return values_.count(key) > 0; }

std::string KvFile::get_string(const std::string& key, const std::string& fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KvFile::get_double(const std::string& key, double fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad numeric value for '" + key + "'");
  }
}

long KvFile::get_long(const std::string& key, long fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    std::size_t pos = 0;
    const long v = std::stol(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument(it->second);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: bad integer value for '" + key + "'");
  }
}

bool KvFile::get_bool(const std::string& key, bool fallback) {
  consumed_.insert(key);
  const auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError("config: bad boolean value for '" + key + "'");
}

std::vector<double> KvFile::get_doubles(const std::string& key) {
  consumed_.insert(key);
  std::vector<double> out;
  const auto it = values_.find(key);
  if (it == values_.end()) return out;
  std::istringstream ss(it->second);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    tok = trim(tok);
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("config: bad numeric list for '" + key + "'");
    }
  }
  return out;
}

std::vector<int> KvFile::get_ints(const std::string& key) {
  std::vector<int> out;
  for (double v : get_doubles(key)) out.push_back(int(v));
  return out;
}

void KvFile::check_consumed() const {
  std::string unknown;
  for (const auto& [k, v] : values_)
    if (!consumed_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  if (!unknown.empty())
    throw ConfigError("config: unknown keys: " + unknown);
}

void FitConfig::validate() const {
  if (stage1_burnin < 0 || stage1_burnin >= stage1_iterations)
    throw ConfigError("config: stage1 burn-in must be in [0, iterations)");
  if (stage2_burnin < 0 || stage2_burnin >= stage2_iterations)
    throw ConfigError("config: stage2 burn-in must be in [0, iterations)");
  if (diagnostics && chains < 2)
    throw ConfigError("config: diagnostics require >= 2 chains");
  if (chains < 1) throw ConfigError("config: chains must be >= 1");
  if (thin < 1) throw ConfigError("config: thin must be >= 1");
  if (M < 1) throw ConfigError("config: M must be >= 1");
  if (!(nu_d > 0.0)) throw ConfigError("config: nu_d must be positive");
  if (!(area_s > 0.0)) throw ConfigError("config: area S must be positive");
  if (phi_grid_size < 1) throw ConfigError("config: phi grid needs >= 1 point");
  if (!(phi_grid_start > 0.0) || !(phi_grid_step > 0.0))
    throw ConfigError("config: phi grid start/step must be positive");
  if (!(ci_level > 0.0 && ci_level < 1.0))
    throw ConfigError("config: ci_level must lie in (0,1)");
  if (ig_parameterization != "shape_scale" && ig_parameterization != "shape_rate")
    throw ConfigError("config: ig_parameterization must be shape_scale or shape_rate");
  if (draw_format != "csv" && draw_format != "binary")
    throw ConfigError("config: draw_format must be csv or binary");
  if (!(adsm_priors.beta_rho_var > 0.0) || !(adsm_priors.beta_psi_var > 0.0) ||
      !(adsm_priors.beta_lambda_var > 0.0) || !(nmix_priors.eta_var > 0.0) ||
      !(sttm_priors.gamma_var > 0.0))
    throw ConfigError("config: prior variances must be positive");
  if (!(adsm_priors.lambda0_shape > 0.0) || !(adsm_priors.lambda0_scale > 0.0))
    throw ConfigError("config: lambda0 prior shape/scale must be positive");
  if (!(sttm_priors.ig_shape > 0.0) || !(sttm_priors.ig_scale > 0.0))
    throw ConfigError("config: inverse-gamma shape/scale must be positive");
  if (reservoir_floor < 1)
    throw ConfigError("config: reservoir floor must be >= 1");
}

std::vector<double> FitConfig::phi_support() const {
  std::vector<double> s;
  for (int k = 0; k < phi_grid_size; ++k)
    s.push_back(phi_grid_start + phi_grid_step * k);
  return s;
}

double FitConfig::ig_scale_effective() const {
  return ig_parameterization == "shape_scale" ? sttm_priors.ig_scale
                                              : 1.0 / sttm_priors.ig_scale;
}

namespace {
std::string tau_name(TauStructure t) {
  return t == TauStructure::icar ? "icar" : "diagonal";
}
std::string nprop_name(NProposal p) {
  return p == NProposal::walk ? "walk" : "prior";
}
std::string phiprop_name(PhiProposal p) {
  return p == PhiProposal::uniform ? "uniform" : "neighbor";
}
}  // namespace

std::vector<std::pair<std::string, std::string>> FitConfig::resolved() const {
  auto d = [](double v) { return CsvTable::format_double(v); };
  std::vector<std::pair<std::string, std::string>> out = {
      {"geometry", geometry_csv},
      {"adjacency", adjacency_csv},
      {"covariates", covariates_csv},
      {"pdsi", pdsi_csv},
      {"overlap", overlap_csv},
      {"division_map", division_map_csv},
      {"aerial_detections", aerial_detections_csv},
      {"aerial_mask", aerial_mask_csv},
      {"ground_counts", ground_counts_csv},
      {"ground_mask", ground_mask_csv},
      {"out_dir", out_dir},
      {"M", std::to_string(M)},
      {"nu_d", d(nu_d)},
      {"area_s", d(area_s)},
      {"beta_rho_var", d(adsm_priors.beta_rho_var)},
      {"beta_psi_var", d(adsm_priors.beta_psi_var)},
      {"beta_lambda_var", d(adsm_priors.beta_lambda_var)},
      {"lambda0_shape", d(adsm_priors.lambda0_shape)},
      {"lambda0_scale", d(adsm_priors.lambda0_scale)},
      {"eta_var", d(nmix_priors.eta_var)},
      {"gamma_var", d(sttm_priors.gamma_var)},
      {"ig_shape", d(sttm_priors.ig_shape)},
      {"ig_scale", d(sttm_priors.ig_scale)},
      {"ig_parameterization", ig_parameterization},
      {"phi_grid_start", d(phi_grid_start)},
      {"phi_grid_step", d(phi_grid_step)},
      {"phi_grid_size", std::to_string(phi_grid_size)},
      {"stage1_iterations", std::to_string(stage1_iterations)},
      {"stage1_burnin", std::to_string(stage1_burnin)},
      {"stage2_iterations", std::to_string(stage2_iterations)},
      {"stage2_burnin", std::to_string(stage2_burnin)},
      {"thin", std::to_string(thin)},
      {"chains", std::to_string(chains)},
      {"seed", std::to_string(seed)},
      {"threads", std::to_string(threads)},
      {"tau_structure", tau_name(tau_structure)},
      {"n_proposal", nprop_name(n_proposal)},
      {"phi_proposal", phiprop_name(phi_proposal)},
      {"draw_format", draw_format},
      {"reservoir_floor", std::to_string(reservoir_floor)},
      {"diagnostics", diagnostics ? "true" : "false"},
      {"ci_level", d(ci_level)},
  };
  return out;
}

FitConfig parse_fit_config(const std::string& path) {
  KvFile kv = KvFile::parse_file(path);
  return parse_fit_config_kv(kv);
}

FitConfig parse_fit_config_kv(KvFile& kv) {
  FitConfig c;
  c.geometry_csv = kv.get_string("geometry", "");
  c.adjacency_csv = kv.get_string("adjacency", "");
  c.covariates_csv = kv.get_string("covariates", "");
  c.pdsi_csv = kv.get_string("pdsi", "");
  c.overlap_csv = kv.get_string("overlap", "");
  c.division_map_csv = kv.get_string("division_map", "");
  c.aerial_detections_csv = kv.get_string("aerial_detections", "");
  c.aerial_mask_csv = kv.get_string("aerial_mask", "");
  c.ground_counts_csv = kv.get_string("ground_counts", "");
  c.ground_mask_csv = kv.get_string("ground_mask", "");
  c.out_dir = kv.get_string("out_dir", c.out_dir);

  c.M = int(kv.get_long("M", c.M));
  c.nu_d = kv.get_double("nu_d", c.nu_d);
  c.area_s = kv.get_double("area_s", c.area_s);

  c.adsm_priors.beta_rho_var = kv.get_double("beta_rho_var", c.adsm_priors.beta_rho_var);
  c.adsm_priors.beta_psi_var = kv.get_double("beta_psi_var", c.adsm_priors.beta_psi_var);
  c.adsm_priors.beta_lambda_var =
      kv.get_double("beta_lambda_var", c.adsm_priors.beta_lambda_var);
  c.adsm_priors.lambda0_shape =
      kv.get_double("lambda0_shape", c.adsm_priors.lambda0_shape);
  c.adsm_priors.lambda0_scale =
      kv.get_double("lambda0_scale", c.adsm_priors.lambda0_scale);
  c.nmix_priors.eta_var = kv.get_double("eta_var", c.nmix_priors.eta_var);
  c.sttm_priors.gamma_var = kv.get_double("gamma_var", c.sttm_priors.gamma_var);
  c.sttm_priors.ig_shape = kv.get_double("ig_shape", c.sttm_priors.ig_shape);
  c.sttm_priors.ig_scale = kv.get_double("ig_scale", c.sttm_priors.ig_scale);
  c.ig_parameterization =
      kv.get_string("ig_parameterization", c.ig_parameterization);

  c.phi_grid_start = kv.get_double("phi_grid_start", c.phi_grid_start);
  c.phi_grid_step = kv.get_double("phi_grid_step", c.phi_grid_step);
  c.phi_grid_size = int(kv.get_long("phi_grid_size", c.phi_grid_size));

  c.stage1_iterations = kv.get_long("stage1_iterations", c.stage1_iterations);
  c.stage1_burnin = kv.get_long("stage1_burnin", c.stage1_burnin);
  c.stage2_iterations = kv.get_long("stage2_iterations", c.stage2_iterations);
  c.stage2_burnin = kv.get_long("stage2_burnin", c.stage2_burnin);
  c.thin = int(kv.get_long("thin", c.thin));
  c.chains = int(kv.get_long("chains", c.chains));
  c.seed = std::uint64_t(kv.get_long("seed", long(c.seed)));
  c.threads = int(kv.get_long("threads", c.threads));

  const std::string tau = kv.get_string("tau_structure", "icar");
  if (tau == "icar")
    c.tau_structure = TauStructure::icar;
  else if (tau == "diagonal")
    c.tau_structure = TauStructure::diagonal;
  else
    throw ConfigError("config: tau_structure must be icar or diagonal");

  const std::string np = kv.get_string("n_proposal", "walk");
  if (np == "walk")
    c.n_proposal = NProposal::walk;
  else if (np == "prior")
    c.n_proposal = NProposal::prior;
  else
    throw ConfigError("config: n_proposal must be walk or prior");

  const std::string pp = kv.get_string("phi_proposal", "uniform");
  if (pp == "uniform")
    c.phi_proposal = PhiProposal::uniform;
  else if (pp == "neighbor")
    c.phi_proposal = PhiProposal::neighbor;
  else
    throw ConfigError("config: phi_proposal must be uniform or neighbor");

  c.draw_format = kv.get_string("draw_format", c.draw_format);
  c.reservoir_floor = kv.get_long("reservoir_floor", c.reservoir_floor);
  c.diagnostics = kv.get_bool("diagnostics", c.diagnostics);
  c.ci_level = kv.get_double("ci_level", c.ci_level);

  kv.check_consumed();
  c.validate();
  return c;
}

SimConfig parse_sim_config(const std::string& path) {
  KvFile kv = KvFile::parse_file(path);
  SimConfig sc;
  TruthSpec& t = sc.truth;
  t.n_side = int(kv.get_long("n_side", t.n_side));
  t.n_ground = int(kv.get_long("n_ground", t.n_ground));
  t.block_km = kv.get_double("block_km", t.block_km);
  t.n_years = int(kv.get_long("n_years", t.n_years));
  t.first_year = int(kv.get_long("first_year", t.first_year));
  t.n_static = int(kv.get_long("n_static", t.n_static));
  t.leks_per_site = int(kv.get_long("leks_per_site", t.leks_per_site));
  t.M = int(kv.get_long("M", t.M));
  t.nu_d = kv.get_double("nu_d", t.nu_d);
  t.area_s = kv.get_double("area_s", t.area_s);
  t.area_ground = kv.get_double("area_ground", t.area_ground);
  t.lambda0 = kv.get_double("lambda0", t.lambda0);
  t.p_omega = kv.get_double("p_omega", t.p_omega);
  t.p_attend = kv.get_double("p_attend", t.p_attend);
  t.alpha0 = kv.get_double("alpha0", t.alpha0);
  t.alpha1 = kv.get_double("alpha1", t.alpha1);
  t.sigma2_d = kv.get_double("sigma2_d", t.sigma2_d);
  t.sigma2_tau_a = kv.get_double("sigma2_tau_a", t.sigma2_tau_a);
  t.sigma2_tau_g = kv.get_double("sigma2_tau_g", t.sigma2_tau_g);
  t.phi = kv.get_double("phi", t.phi);
  const std::string tau = kv.get_string("tau_structure", "icar");
  if (tau == "icar")
    t.tau_structure = TauStructure::icar;
  else if (tau == "diagonal")
    t.tau_structure = TauStructure::diagonal;
  else
    throw ConfigError("config: tau_structure must be icar or diagonal");

  auto set_vec = [&](const char* key, arma::vec& v) {
    const auto vals = kv.get_doubles(key);
    if (!vals.empty()) v = arma::vec(vals);
  };
  set_vec("beta_rho", t.beta_rho);
  set_vec("beta_lambda", t.beta_lambda);
  set_vec("beta_psi", t.beta_psi);
  set_vec("eta", t.eta);
  set_vec("gamma", t.gamma);

  for (int y : kv.get_ints("aerial_missing_years")) sc.aerial_missing_years.insert(y);
  sc.out_dir = kv.get_string("out_dir", sc.out_dir);
  sc.seed = std::uint64_t(kv.get_long("seed", long(sc.seed)));
  kv.check_consumed();
  t.ensure_defaults();
  t.validate();
  return sc;
}

}  // namespace meld
