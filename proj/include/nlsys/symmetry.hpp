#pragma once

#include "nlsys/grid.hpp"
#include "nlsys/groundstate.hpp"

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <vector>

namespace nlsys::symmetry {

/// Element of the order-2m group generated by the m-fold simultaneous
/// rotation of both complex coordinates and the coordinate swap
/// τ(z1, z2, y) = (z2, z1, y). The two generators commute.
struct GroupElement {
  int rot = 0;       // rotation by 2π rot / m
  bool swap = false; // τ factor
  bool operator==(const GroupElement& o) const { return rot == o.rot && swap == o.swap; }
};

double compute_dm(int m);  // |1 - e^{2πi/m}| = 2 sin(π/m)

struct SymmetryGroup {
  int m = 0;
  std::vector<GroupElement> elements;  // 2m elements, rotations first
  bool flagged_small = false;          // m < 5: allowed for exploration only
  double dm = 0.0;

  GroupElement compose(const GroupElement& a, const GroupElement& b) const;
  GroupElement inverse(const GroupElement& a) const;
  int theta(const GroupElement& g) const { return g.swap ? -1 : 1; }
  /// φ_h: trivial on cooperative blocks, θ on sign-changing ones.
  int phi(const GroupElement& g, bool plus_block) const { return plus_block ? 1 : theta(g); }

  Eigen::Vector4d apply4(const GroupElement& g, const Eigen::Vector4d& x) const;
  Eigen::Vector2d apply2(int rot, const Eigen::Vector2d& x) const;

  std::vector<Eigen::Vector4d> orbit4(const Eigen::Vector4d& x, double tol = 1e-9) const;

  static Eigen::Vector4d anchor_plus();   // (1/√2, 1/√2, 0) in C×C coordinates
  static Eigen::Vector4d anchor_minus();  // (1, 0, 0)
};

SymmetryGroup group_elements(int m);

/// Group average (1/|G|) Σ φ(g) f(g^{-1} x) of a grid function. dim = 4 uses
/// the full order-2m group; dim = 2 is the planar analog (rotations only,
/// cooperative blocks only). Rotated points are read with multilinear
/// interpolation, so equivariance holds to interpolation accuracy only.
Eigen::ArrayXd project_equivariant(const Eigen::ArrayXd& field, const grid::BoxGrid& box,
                                   const SymmetryGroup& group, bool plus_block);

/// Max-norm violation of u(gx) = φ(g) u(x) sampled over the grid (strided),
/// reading u(gx) by interpolation.
double equivariance_error(const Eigen::ArrayXd& field, const grid::BoxGrid& box,
                          const SymmetryGroup& group, bool plus_block, int sample_stride = 1);

/// Multilinear interpolation of a grid function at an off-grid point
/// (zero outside the box).
double interpolate(const Eigen::ArrayXd& field, const grid::BoxGrid& box,
                   const Eigen::VectorXd& x);

struct TestFunctionConfig {
  double quad_step = 0.0;       // 0: 0.05 in 2D, 0.5 in 4D
  double support_radius = 0.0;  // 0: min(profile reach, 14 in 2D / 10 in 4D)
};

/// Normalized multi-bump test function σ = t Σ_g φ(g) ω(· - R g ζ) with t
/// fixed by ||σ||² = ∫ |σ|^{2p}. Norms are evaluated on a lattice restricted
/// to the union of the bump supports; omega_ref_norm_sq is ∫ω^{2p} for a
/// single bump under the identical lattice so that interaction quantities are
/// differences of like-quadrature numbers.
struct TestFunction {
  bool plus_block = true;
  double R = 0.0;
  int m = 0;
  double p = 2.0;
  double t_hr = 1.0;
  std::vector<Eigen::VectorXd> centers;
  std::vector<int> signs;
  std::shared_ptr<const groundstate::RadialProfile> profile;

  double raw_norm_sq = 0.0;        // ||σ̂||² (via the bump equation identity)
  double raw_l2p_pow = 0.0;        // ∫ |σ̂|^{2p}
  double norm_sq = 0.0;            // ||σ||² = t² ||σ̂||²
  double l2p_pow = 0.0;            // ∫ |σ|^{2p}
  double omega_ref_norm_sq = 0.0;  // single-bump reference, same lattice
  double quad_step = 0.0;
  bool overlap_warning = false;

  int orbit_size() const { return static_cast<int>(centers.size()); }
  double eval(const Eigen::VectorXd& x) const;
};

struct OverlapCollapse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

TestFunction build_test_function(bool plus_block, double R, const SymmetryGroup& group,
                                 std::shared_ptr<const groundstate::RadialProfile> profile,
                                 double p, const TestFunctionConfig& cfg = {});

/// Degenerate single-bump variant (orbit of size 1): zero-gap reference case.
TestFunction single_bump_test_function(std::shared_ptr<const groundstate::RadialProfile> profile,
                                       double p, const TestFunctionConfig& cfg = {});

struct NegativeGapWarning {
  bool triggered = false;
  double R = 0.0;
};

struct TestFunctionEnergy {
  double J = 0.0;
  double asymptote = 0.0;  // |orbit| μ_h (p-1)/(2p) ||ω||²
  double gap = 0.0;        // asymptote - J
  double mu = 0.0;
};

/// Block functional at t̄ σ for synchronized coefficients t̄ (Σ t̄² and the
/// block form both equal μ_h).
TestFunctionEnergy test_function_energy(const TestFunction& tf, const Eigen::VectorXd& tbar,
                                        const Eigen::MatrixXd& block_beta, double p);

struct SweepRow {
  double R, J, asymptote, gap;
};

std::vector<SweepRow> test_function_sweep(bool plus_block, const std::vector<double>& rs,
                                          const SymmetryGroup& group,
                                          std::shared_ptr<const groundstate::RadialProfile> profile,
                                          const Eigen::MatrixXd& block_beta, double p,
                                          const TestFunctionConfig& cfg = {});

}  // namespace nlsys::symmetry
