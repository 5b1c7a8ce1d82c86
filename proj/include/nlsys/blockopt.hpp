#pragma once

#include "nlsys/coupling.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlsys::blockopt {

struct NonPositiveFormError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Block constant μ_h = (sup F)^{-1/(p-1)} where F(s) = Σ β_ij s_i^p s_j^p on
/// the nonnegative unit sphere.
struct MuResult {
  double mu = 0.0;
  Eigen::VectorXd argmin;  // unit vector attaining the quotient infimum
  int block = 0;
  double multistart_spread = 0.0;  // max-min of μ over restarts
};

MuResult compute_mu(const Eigen::MatrixXd& block_beta, double p, int restarts = 32,
                    std::uint64_t seed = 0x9e3779b9, int block_index = 0);

/// Rescales the argmin so that Σ t_i^2 = Σ β_ij t_i^p t_j^p = μ_h.
Eigen::VectorXd synchronized_coefficients(const Eigen::MatrixXd& block_beta, double p,
                                          const MuResult& mu);
Eigen::VectorXd synchronized_coefficients(const Eigen::MatrixXd& block_beta, double p);

struct ConditionNError : std::runtime_error {
  int block;
  ConditionNError(int h, const std::string& msg) : std::runtime_error(msg), block(h) {}
};

struct NewtonDivergedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Solution of the per-block stationarity system
///   s_h^2 A_h = Σ_k s_h^p s_k^p B_hk,   s in (0,∞)^q.
struct NehariScaling {
  Eigen::VectorXd s;
  Eigen::VectorXd block_norms;   // A_h = ||ū_h||^2
  Eigen::MatrixXd interactions;  // B_hk = Σ_{(i,j) in I_h×I_k} β_ij ∫ |u_i|^p |u_j|^p
  double p = 2.0;

  /// Relative residual of each stationarity equation.
  Eigen::VectorXd residuals() const;
};

NehariScaling nehari_project(const Eigen::VectorXd& block_norms,
                             const Eigen::MatrixXd& interactions, double p,
                             const Eigen::VectorXd& start = Eigen::VectorXd());

struct NotOnNehariError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// (p-1)/(2p) Σ s_h^2 A_h, cross-checked against the two-term functional.
double energy_on_nehari(const NehariScaling& scaling);

struct EmptyQError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BoundReport {
  struct Candidate {
    int k = 0;        // deleted-from-sum block, 0-based
    double value = 0; // a_k μ_k + Σ_{h≠k} b_h μ_h
  };
  std::vector<Candidate> per_candidate;
  std::vector<double> a;  // 1 or 12, by block sign
  std::vector<double> b;  // 6 or 12
  int argmin_k = 0;       // smallest index wins ties
  double bound = 0.0;     // min candidate × ||ω||²  (q=1: μ_1||ω||² or 10 μ_1||ω||²)
  bool equality = false;  // q=1 cooperative case is an equality, all others strict
  double simplified = 0.0;           // corollary value with μ* = max μ_h (q ≥ 2)
  bool simplified_applicable = false;
};

BoundReport bound_report(const Eigen::VectorXd& mu, const coupling::SignPartition& signs,
                         double omega_norm_sq);

struct CompactnessReport {
  std::vector<bool> pass;
  Eigen::VectorXd thresholds;  // c_sub[h] + (m or 2m) μ_h (p-1)/(2p) ||ω||²
  double c_full = 0.0;
  int m = 5;
  std::string note;  // the inputs are numerical estimates; only they are certified
};

CompactnessReport compactness_check(double c_full, const Eigen::VectorXd& c_sub,
                                    const Eigen::VectorXd& mu, int m, double p,
                                    double omega_norm_sq, const coupling::SignPartition& signs);

}  // namespace nlsys::blockopt
