#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "surveymeld/adsm.hpp"
#include "surveymeld/nmix.hpp"
#include "surveymeld/simulate.hpp"
#include "surveymeld/sttm.hpp"

namespace meld {

// `key = value` configuration text with consumption tracking so unknown
// keys are reported instead of silently ignored.
class KvFile {
 public:
  static KvFile parse_file(const std::string& path);
  static KvFile parse_string(const std::string& text);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback);
  double get_double(const std::string& key, double fallback);
  long get_long(const std::string& key, long fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::vector<double> get_doubles(const std::string& key);  // empty if absent
  std::vector<int> get_ints(const std::string& key);

  // Throws ConfigError naming any key never read.
  void check_consumed() const;

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> consumed_;
};

struct FitConfig {
  // input files
  std::string geometry_csv, adjacency_csv;
  std::string covariates_csv, pdsi_csv, overlap_csv, division_map_csv;
  std::string aerial_detections_csv, aerial_mask_csv;
  std::string ground_counts_csv, ground_mask_csv;
  std::string out_dir = "out";

  // survey constants
  int M = 20;
  double nu_d = 600.0;
  double area_s = 36.0;

  // priors
  AdsmPriors adsm_priors;
  NmixPriors nmix_priors;
  SttmPriors sttm_priors;
  std::string ig_parameterization = "shape_scale";  // or shape_rate

  // phi grid
  double phi_grid_start = 1.0;
  double phi_grid_step = 1000.0;
  int phi_grid_size = 100;

  // iterations
  long stage1_iterations = 60000;
  long stage1_burnin = 10000;
  long stage2_iterations = 70000;
  long stage2_burnin = 10000;
  int thin = 10;
  int chains = 2;
  std::uint64_t seed = 1;
  int threads = 0;  // 0: hardware concurrency

  // switches
  TauStructure tau_structure = TauStructure::icar;
  NProposal n_proposal = NProposal::walk;
  PhiProposal phi_proposal = PhiProposal::uniform;
  std::string draw_format = "csv";  // or binary
  long reservoir_floor = 1000;
  bool diagnostics = true;
  double ci_level = 0.90;

  void validate() const;
  std::vector<double> phi_support() const;
  // Inverse-gamma scale after applying the parameterization switch.
  double ig_scale_effective() const;

  // Resolved key/value echo, deterministic order, for the run manifest.
  std::vector<std::pair<std::string, std::string>> resolved() const;
};

FitConfig parse_fit_config(const std::string& path);
FitConfig parse_fit_config_kv(KvFile& kv);

struct SimConfig {
  TruthSpec truth;
  std::string out_dir = "sim";
  std::uint64_t seed = 1;
  std::set<int> aerial_missing_years;
};

SimConfig parse_sim_config(const std::string& path);

}  // namespace meld
