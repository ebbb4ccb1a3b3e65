// surveymeld: staged fitting of melded aerial/ground abundance surveys.
//
// Subcommands: fit, simulate, sensitivity, predict, diagnose.
// Exit codes: 0 success, 2 configuration, 3 data validation, 4 numerical.

#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "surveymeld/errors.hpp"
#include "surveymeld/pipeline.hpp"
#include "surveymeld/version.hpp"

namespace {

constexpr const char* kEnvPrefix = "SURVEYMELD_";

std::optional<std::string> env_value(const char* name) {
  const std::string full = std::string(kEnvPrefix) + name;
  const char* v = std::getenv(full.c_str());
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

// Environment variables mirror the flags (SURVEYMELD_SEED, _CHAINS, _OUT,
// _THREADS, _CONFIG); explicit flags win.
struct CommonArgs {
  std::string config_path;
  std::optional<long> seed;
  std::optional<int> chains;
  std::optional<std::string> out;
  std::optional<int> threads;

  void register_on(CLI::App* cmd, bool config_required) {
    auto* c = cmd->add_option("--config", config_path, "path to the run config");
    if (config_required && !env_value("CONFIG")) c->required();
    cmd->add_option("--seed", seed, "RNG seed override");
    cmd->add_option("--chains", chains, "chain count override");
    cmd->add_option("--out", out, "output directory override");
    cmd->add_option("--threads", threads, "worker thread override");
  }

  void resolve() {
    if (config_path.empty())
      if (auto v = env_value("CONFIG")) config_path = *v;
    if (!seed)
      if (auto v = env_value("SEED")) seed = std::stol(*v);
    if (!chains)
      if (auto v = env_value("CHAINS")) chains = std::stoi(*v);
    if (!out)
      if (auto v = env_value("OUT")) out = *v;
    if (!threads)
      if (auto v = env_value("THREADS")) threads = std::stoi(*v);
  }

  void apply(meld::FitConfig& cfg) const {
    if (seed) cfg.seed = std::uint64_t(*seed);
    if (chains) cfg.chains = *chains;
    if (out) cfg.out_dir = *out;
    if (threads) cfg.threads = *threads;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Bayesian melding of aerial and ground abundance surveys"};
  app.set_version_flag("--version", meld::kVersion);
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "run the two-stage sampler");
  CommonArgs fit_args;
  fit_args.register_on(fit, true);

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate synthetic survey data");
  CommonArgs sim_args;
  sim_args.register_on(sim, true);

  // sensitivity
  auto* sens = app.add_subcommand(
      "sensitivity", "refit under missing-aerial-year scenarios and score them");
  CommonArgs sens_args;
  sens_args.register_on(sens, true);
  std::vector<std::string> scenario_names;
  std::string reference_dir;
  int sens_workers = 1;
  sens->add_option("--scenario", scenario_names,
                   "scenario1..4 or custom name=yr1;yr2;... (repeatable)");
  sens->add_option("--reference", reference_dir,
                   "directory of the completed full-data fit")->required();
  sens->add_option("--workers", sens_workers, "concurrent scenario refits");

  // predict
  auto* pred = app.add_subcommand("predict", "summarize density draws per cell");
  std::string pred_fit_dir, pred_targets, pred_out = "predictions.csv";
  double pred_level = 0.90;
  pred->add_option("--fit", pred_fit_dir, "fit output directory")->required();
  pred->add_option("--targets", pred_targets,
                   "CSV of region_id,year targets (default: all cells)");
  pred->add_option("--out-file", pred_out, "output CSV path");
  pred->add_option("--level", pred_level, "credible-interval level");

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "recompute the diagnostics table");
  std::string diag_fit_dir, diag_out = "diagnostics.csv";
  diag->add_option("--fit", diag_fit_dir, "fit output directory")->required();
  diag->add_option("--out-file", diag_out, "output CSV path");

  CLI11_PARSE(app, argc, argv);

  if (fit->parsed()) {
    fit_args.resolve();
    meld::FitConfig cfg = meld::parse_fit_config(fit_args.config_path);
    fit_args.apply(cfg);
    cfg.validate();
    const meld::FitOutputs out = meld::cmd_fit(cfg);
    std::cout << "fit complete: " << out.out_dir << " (max rhat "
              << out.max_rhat << ")\n";
    return 0;
  }

  if (sim->parsed()) {
    sim_args.resolve();
    meld::SimConfig cfg = meld::parse_sim_config(sim_args.config_path);
    if (sim_args.seed) cfg.seed = std::uint64_t(*sim_args.seed);
    if (sim_args.out) cfg.out_dir = *sim_args.out;
    meld::cmd_simulate(cfg);
    std::cout << "simulated dataset written to " << cfg.out_dir << "\n";
    return 0;
  }

  if (sens->parsed()) {
    sens_args.resolve();
    meld::FitConfig cfg = meld::parse_fit_config(sens_args.config_path);
    sens_args.apply(cfg);
    cfg.validate();

    std::vector<meld::ScenarioSpec> scenarios;
    const auto builtin = meld::builtin_scenarios();
    if (scenario_names.empty()) {
      scenarios = builtin;
    } else {
      for (const std::string& name : scenario_names) {
        const auto eq = name.find('=');
        if (eq == std::string::npos) {
          bool found = false;
          for (const auto& b : builtin)
            if (b.name == name) {
              scenarios.push_back(b);
              found = true;
            }
          if (!found)
            throw meld::ConfigError("unknown scenario preset: " + name);
        } else {
          meld::ScenarioSpec spec;
          spec.name = name.substr(0, eq);
          std::string years = name.substr(eq + 1);
          std::size_t pos = 0;
          while (pos < years.size()) {
            const auto semi = years.find(';', pos);
            const std::string tok = years.substr(
                pos, semi == std::string::npos ? std::string::npos : semi - pos);
            if (!tok.empty()) spec.missing_years.insert(std::stoi(tok));
            if (semi == std::string::npos) break;
            pos = semi + 1;
          }
          scenarios.push_back(spec);
        }
      }
    }
    const meld::ScenarioReport report =
        meld::cmd_sensitivity(cfg, scenarios, reference_dir, sens_workers);
    for (const auto& row : report.rows)
      std::cout << row.name << ": bias " << row.bias_per_100km2 << ", rmse "
                << row.rmse_per_100km2 << " (per 100 km^2)\n";
    return 0;
  }

  if (pred->parsed()) {
    meld::cmd_predict(pred_fit_dir, pred_targets, pred_out, pred_level);
    std::cout << "predictions written to " << pred_out << "\n";
    return 0;
  }

  if (diag->parsed()) {
    meld::cmd_diagnose(diag_fit_dir, diag_out);
    std::cout << "diagnostics written to " << diag_out << "\n";
    return 0;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const meld::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const meld::DataError& e) {
    std::cerr << "data validation error: " << e.what() << "\n";
    return 3;
  } catch (const meld::NumericError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
