#pragma once

#include "nlsys/blockopt.hpp"
#include "nlsys/coupling.hpp"
#include "nlsys/grid.hpp"
#include "nlsys/groundstate.hpp"
#include "nlsys/symmetry.hpp"

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlsys::pde {

struct GridMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bounded radial potential with a declared exterior floor.
struct Potential {
  enum class Kind { Constant, GaussianWell };
  Kind kind = Kind::Constant;
  double value = 1.0;  // Constant
  double floor = 1.0;  // GaussianWell: V = floor + depth e^{-r²/width²}
  double depth = 0.0;
  double width = 1.0;

  double eval_r2(double r2) const {
    return kind == Kind::Constant ? value : floor + depth * std::exp(-r2 / (width * width));
  }
  double sup_abs() const {
    return kind == Kind::Constant ? std::abs(value) : std::abs(floor) + std::abs(depth);
  }
  /// inf over |x| >= rho (monotone families only, which both kinds are)
  double exterior_floor(double rho) const {
    if (kind == Kind::Constant) return value;
    return depth >= 0.0 ? floor : floor + depth * std::exp(-rho * rho / (width * width));
  }
  bool is_one() const { return kind == Kind::Constant && value == 1.0; }
};

struct SystemSpec {
  int dim = 1;
  double p = 2.0;
  int ell = 1;
  coupling::CouplingMatrix beta;
  std::vector<Potential> potentials;  // size ell
  double rho = 0.0;                   // exterior radius of the declared floors
  Eigen::VectorXd sigma;              // declared σ_i
  double lambda_bound = 1.0;          // Λ >= sup |V_i|

  bool autonomous() const;
  void validate() const;

  static SystemSpec make(int dim, double p, coupling::CouplingMatrix beta,
                         std::vector<Potential> potentials, double rho = 0.0);
};

enum class SymTag { None, Invariant, ThetaEquivariant };

struct SystemState {
  grid::BoxGrid box;
  std::vector<Eigen::ArrayXd> fields;  // one flattened grid function per component
  std::vector<SymTag> tags;
  int sym_m = 0;  // rotation fold used by the tagged projections

  int ell() const { return static_cast<int>(fields.size()); }
};

double energy(const SystemState& state, const SystemSpec& spec);
std::vector<Eigen::ArrayXd> gradient(const SystemState& state, const SystemSpec& spec);
/// L² norm of the discrete equation defect per component, normalized by the
/// component H¹ norm (0 for a vanishing component).
Eigen::VectorXd residual(const SystemState& state, const SystemSpec& spec);

/// H¹ norms (with the potential weight) per component and the block sums /
/// interaction integrals the constraint step needs.
struct BlockQuantities {
  Eigen::VectorXd component_norm_sq;  // ∫ |∇u_i|² + V_i u_i²
  Eigen::VectorXd block_norm_sq;      // A_h
  Eigen::MatrixXd interactions;       // B_hk
};
BlockQuantities block_quantities(const SystemState& state, const SystemSpec& spec,
                                 const coupling::BlockDecomposition& decomp);

struct SeedBump {
  int component = 0;
  Eigen::VectorXd center;
  double sign = 1.0;
  double amplitude = 1.0;
};

struct SolverConfig {
  double L = 15.0;
  int n = 1025;
  long max_iter = 5'000'000;
  double tol = 1e-8;
  int sym_m = 6;
  bool apply_symmetry = true;     // project tagged components every iteration
  double seed_radius = 0.0;       // orbit radius of automatic seeds (0: centered)
  double seed_separation = 8.0;   // 1D spacing between block seed centers
  std::vector<SeedBump> seeds;    // overrides automatic seeding when nonempty
  std::shared_ptr<const groundstate::RadialProfile> profile;  // bump shape
  int log_every = 2000;
};

enum class SolveStatus { Converged, MaxIterations, BlockCollapse, ConditionNFails };

struct IterationRecord {
  long iter = 0;
  double energy = 0.0;
  double residual = 0.0;
  double step = 0.0;
};

struct SolveResult {
  SystemState state;
  SolveStatus status = SolveStatus::MaxIterations;
  long iterations = 0;
  double final_energy = 0.0;
  Eigen::VectorXd residuals;
  Eigen::VectorXd component_norms_sq;
  std::vector<IterationRecord> log;
  int collapsed_component = -1;
  double equivariance_error = 0.0;
};

/// Nehari-retracted gradient flow: descend, project the tagged components,
/// rescale the blocks onto the constraint set; stop on residual < tol.
SolveResult solve_system(const SystemSpec& spec, const coupling::BlockDecomposition& decomp,
                         const SolverConfig& cfg);

/// Initial state assembled from translated bumps (explicit list or the
/// per-block orbit geometry), symmetrized for its tags.
SystemState seed_state(const SystemSpec& spec, const coupling::BlockDecomposition& decomp,
                       const SolverConfig& cfg);

struct RadiiOutOfBoxError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TailSeries {
  Eigen::VectorXd radii;
  Eigen::MatrixXd xi;  // ell × radii: ξ_i(r) = ∫_{|x|>r} (|∇u_i|² + u_i²)
  double fitted_theta = 0.0;
  double fit_r_lo = 0.0, fit_r_hi = 0.0;
};

TailSeries tail_norms(const SystemState& state, const Eigen::VectorXd& radii);
TailSeries tail_norms(const SystemState& state, const Eigen::VectorXd& radii, double fit_r_lo,
                      double fit_r_hi);

struct WindowBelowNoiseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateFitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DecayFit {
  struct Component {
    double rate = 0.0;       // μ̂_i
    double prefactor = 0.0;  // Ĉ_i
    double rms = 0.0;
    double sqrt_sigma = 0.0;
    double threshold = 0.0;  // min(√σ_i, 1 when V ≡ 1) - tolerance
    bool pass = false;
    int annuli = 0;
  };
  std::vector<Component> components;
  double r_lo = 0.0, r_hi = 0.0;
  double noise_floor = 0.0;
  double tolerance = 0.0;
};

/// Envelope decay: per component regress log max_{|x| in annulus} |u_i|
/// against the annulus radius over [r_lo, r_hi].
DecayFit fit_decay(const SystemState& state, double r_lo, double r_hi, const SystemSpec& spec,
                   double tolerance = 0.05, double noise_floor = 1e-9);

/// Same fit on a sampled radial function (profile tables, counterexample data).
DecayFit fit_decay_samples(const Eigen::ArrayXd& radii, const Eigen::ArrayXd& values,
                           double sqrt_sigma, bool v_is_one, double r_lo, double r_hi,
                           double tolerance = 0.05, double noise_floor = 1e-9);

/// Fills one component from a radial profile centered at `center`. The width
/// scale s deposits amplitude·s·w(s·r), the exact rescaling that maps the
/// unit-floor bump onto the constant-potential-s² problem.
void deposit_bump(SystemState& state, int component, const groundstate::RadialProfile& profile,
                  const Eigen::VectorXd& center, double amplitude, double width_scale = 1.0);

}  // namespace nlsys::pde
