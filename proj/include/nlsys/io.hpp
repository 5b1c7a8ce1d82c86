#pragma once

#include "nlsys/coupling.hpp"
#include "nlsys/groundstate.hpp"
#include "nlsys/pde.hpp"

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <vector>

// single-header nlohmann/json from vendor/
#include "json.hpp"

namespace nlsys::io {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Eigen::MatrixXd read_matrix(const std::filesystem::path& path);
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);

void write_profile(const std::filesystem::path& path, const groundstate::RadialProfile& profile);
groundstate::RadialProfile read_profile(const std::filesystem::path& path);

void write_checkpoint(const std::filesystem::path& path, const pde::SystemState& state);
pde::SystemState read_checkpoint(const std::filesystem::path& path);

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

std::string config_hash_hex(const nlohmann::json& j);

struct PotentialConfig {
  std::string type = "constant";  // constant | gaussian_well
  double value = 1.0;
  double floor = 1.0;
  double depth = 0.0;
  double width = 1.0;
  bool operator==(const PotentialConfig&) const = default;
};

struct ExperimentConfig {
  // problem
  int dim = 1;
  double p = 2.0;
  Eigen::MatrixXd beta;   // inline entries; empty when beta_file is used
  std::string beta_file;
  std::vector<PotentialConfig> potentials{PotentialConfig{}};
  double rho = 0.0;
  // decomposition (block labels are 1-based in the file)
  std::vector<int> boundaries{0, 1};
  std::vector<int> q_plus{1};
  std::vector<int> q_minus;
  // solver
  double L = 15.0;
  int n = 1025;
  long max_iter = 5'000'000;
  double tol = 1e-8;
  int sym_m = 6;
  bool apply_symmetry = true;
  double seed_radius = 0.0;
  double seed_separation = 8.0;
  std::string seed_checkpoint;
  double shoot_step = 1e-3;
  double shoot_rmax = 25.0;
  bool cstar_estimate = true;
  double cstar = 0.0;
  unsigned long long rng_seed = 123u;
  // outputs
  std::string out_dir = "run";
  bool out_checkpoint = true;
  bool out_convergence = true;
  bool out_reports = true;

  bool operator==(const ExperimentConfig& o) const;
};

nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Materialize the runtime objects a subcommand needs.
Eigen::MatrixXd resolve_matrix(const ExperimentConfig& cfg,
                               const std::filesystem::path& config_dir);
pde::Potential to_potential(const PotentialConfig& cfg);
pde::SystemSpec to_system_spec(const ExperimentConfig& cfg, const Eigen::MatrixXd& beta);
coupling::SignPartition to_sign_partition(const ExperimentConfig& cfg);

}  // namespace nlsys::io
