#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <vector>

namespace nlsys::groundstate {

struct NoBracketError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SubcriticalityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShootingConfig {
  double step = 1e-3;          // radial sample spacing, also the RK4 step
  double r_max = 25.0;         // outer radius of the stored profile
  double tail_tol = 1e-10;     // required smallness of the stored tail
  double match_value = 1e-6;   // hand over to the asymptotic tail below this value
  int max_bracket_doublings = 40;
  int max_bisections = 200;
};

/// Sampled positive radial ground state of  -Δw + w = |w|^{2p-2} w  on R^N.
struct RadialProfile {
  int dimension = 0;
  double exponent = 0.0;  // p
  Eigen::ArrayXd radii;   // uniform grid starting at 0
  Eigen::ArrayXd values;  // w(r_k), strictly positive and decreasing
  Eigen::ArrayXd slopes;  // w'(r_k)
  double norm_sq = 0.0;       // ∫ (|∇w|^2 + w^2) over R^N
  double l2p_norm_pow = 0.0;  // ∫ w^{2p}
  double center_value = 0.0;  // w(0)

  double step() const { return radii.size() > 1 ? radii[1] - radii[0] : 0.0; }
  double r_max() const { return radii.size() ? radii[radii.size() - 1] : 0.0; }

  /// Local cubic (4-point Lagrange) interpolation; zero beyond the grid.
  double value_at(double r) const;
};

/// Shooting solver with bisection on w(0).  Requires p > 1 and, for N >= 3,
/// p < N/(N-2).
RadialProfile solve_radial_ground_state(int dim, double p, const ShootingConfig& cfg = {});

struct SigmaTooSmallError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct BoundaryFailsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Comparison-function certificate:  w(x) <= t e^{-mu |x|} for |x| >= rho,
/// checked on the sample set.  The multiplier t obeys
///   t > (C / (sigma - mu^2)) e^{(mu - delta) rho}
/// and dominates w on |x| = rho.
struct BarrierCertificate {
  double mu = 0.0;
  double delta = 0.0;
  double rho = 0.0;
  double sigma = 0.0;    // inf of V outside B_rho, taken over the samples
  double epsilon = 0.0;  // sigma - mu^2
  double t = 0.0;
  double r_lo = 0.0;  // verified interval
  double r_hi = 0.0;
  double sample_spacing = 0.0;  // resolution the verification was run at
  long samples_checked = 0;
  bool pass = false;
  double first_violation_r = std::numeric_limits<double>::quiet_NaN();
};

BarrierCertificate barrier_certificate(const Eigen::ArrayXd& xs, const Eigen::ArrayXd& w,
                                       const std::function<double(double)>& V,
                                       const Eigen::ArrayXd& f, double mu, double delta,
                                       double rho, double C);

struct SampleInsideUnitBallError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CounterexampleSample {
  double x = 0.0;
  double w = 0.0;  // |x|^{-2/3}
  double c = 0.0;  // |x|^{-1/3} - (10/9) |x|^{-7/3}
};

/// One-dimensional power-decay solution of -w'' + w = c w^{1/2} for |x| > 1.
std::vector<CounterexampleSample> sublinear_counterexample(const Eigen::ArrayXd& xs);

}  // namespace nlsys::groundstate
