#include "doctest.h"

#include "nlsys/groundstate.hpp"
#include "nlsys/numerics.hpp"
#include "nlsys/pde.hpp"
#include "nlsys/symmetry.hpp"

#include <cmath>
#include <memory>
#include <random>

using namespace nlsys;
using symmetry::GroupElement;
using symmetry::SymmetryGroup;

TEST_CASE("group: element count, signs, composition laws") {
  for (int m : {5, 6, 8}) {
    CAPTURE(m);
    const SymmetryGroup g = symmetry::group_elements(m);
    CHECK(static_cast<int>(g.elements.size()) == 2 * m);
    int plus = 0, minus = 0;
    for (const auto& e : g.elements) (g.theta(e) == 1 ? plus : minus)++;
    CHECK(plus == m);
    CHECK(minus == m);

    // closure, associativity on the table, inverses, theta multiplicativity
    auto find = [&](const GroupElement& e) {
      for (const auto& x : g.elements)
        if (x == e) return true;
      return false;
    };
    for (const auto& a : g.elements) {
      CHECK(find(g.inverse(a)));
      const GroupElement id = g.compose(a, g.inverse(a));
      CHECK(id.rot == 0);
      CHECK_FALSE(id.swap);
      for (const auto& b : g.elements) {
        CHECK(find(g.compose(a, b)));
        CHECK(g.theta(g.compose(a, b)) == g.theta(a) * g.theta(b));
        for (const auto& c : g.elements) {
          const GroupElement ab_c = g.compose(g.compose(a, b), c);
          const GroupElement a_bc = g.compose(a, g.compose(b, c));
          CHECK(ab_c == a_bc);
        }
      }
    }
  }
  // the swap is an involution
  const SymmetryGroup g = symmetry::group_elements(6);
  const GroupElement tau{0, true};
  CHECK(g.compose(tau, tau) == GroupElement{0, false});
  CHECK(symmetry::group_elements(3).flagged_small);
  CHECK_THROWS_AS(symmetry::group_elements(1), std::invalid_argument);
}

TEST_CASE("group: orbit sizes of the two anchors") {
  const SymmetryGroup g = symmetry::group_elements(6);
  CHECK(g.orbit4(SymmetryGroup::anchor_minus()).size() == 12);
  CHECK(g.orbit4(SymmetryGroup::anchor_plus()).size() == 6);
  const SymmetryGroup g5 = symmetry::group_elements(5);
  CHECK(g5.orbit4(SymmetryGroup::anchor_minus()).size() == 10);
  CHECK(g5.orbit4(SymmetryGroup::anchor_plus()).size() == 5);
}

TEST_CASE("chord lengths d_m") {
  CHECK(symmetry::compute_dm(6) == 1.0);  // exact
  CHECK(std::abs(symmetry::compute_dm(5) - std::sqrt(10.0 - 2.0 * std::sqrt(5.0)) / 2.0) < 1e-12);
  CHECK(std::abs(symmetry::compute_dm(4) - std::sqrt(2.0)) < 1e-15);
  for (int m = 2; m < 64; ++m) CHECK(symmetry::compute_dm(m + 1) < symmetry::compute_dm(m));
}

TEST_CASE("planar projector: averaging fixes invariant fields, near-idempotent") {
  const grid::BoxGrid box{2, 8.0, 129};
  const SymmetryGroup g = symmetry::group_elements(6);

  Eigen::ArrayXd f(box.points()), radial(box.points());
  grid::for_each_point(box, [&](long flat, const std::array<int, 4>&,
                                const std::array<double, 4>& c) {
    f[flat] = std::exp(-((c[0] - 2) * (c[0] - 2) + c[1] * c[1])) +
              0.5 * std::exp(-((c[0] + 1) * (c[0] + 1) + (c[1] - 1.5) * (c[1] - 1.5)) / 2.0);
    radial[flat] = std::exp(-(c[0] * c[0] + c[1] * c[1]) / 3.0);
  });

  const Eigen::ArrayXd pr = symmetry::project_equivariant(radial, box, g, true);
  CHECK((pr - radial).abs().maxCoeff() < 5e-3);  // interpolation tolerance at h = 0.125

  const Eigen::ArrayXd pf = symmetry::project_equivariant(f, box, g, true);
  const Eigen::ArrayXd ppf = symmetry::project_equivariant(pf, box, g, true);
  const double asym = (pf - f).abs().maxCoeff();
  CHECK(asym > 0.1);                                         // input genuinely asymmetric
  CHECK((ppf - pf).abs().maxCoeff() < 1e-10 + 0.02 * asym);  // idempotent up to interpolation
  CHECK(symmetry::equivariance_error(pf, box, g, true, 3) < 8e-3);

  // sign-changing blocks are undefined in the planar analog
  CHECK_THROWS_AS(symmetry::project_equivariant(f, box, g, false), std::invalid_argument);
}

TEST_CASE("4D projector: equivariance, idempotence, sign change") {
  const grid::BoxGrid box{4, 6.0, 25};
  const SymmetryGroup g = symmetry::group_elements(5);
  Eigen::ArrayXd f(box.points());
  grid::for_each_point(box, [&](long flat, const std::array<int, 4>&,
                                const std::array<double, 4>& c) {
    const double d1 = (c[0] - 1.5) * (c[0] - 1.5) + c[1] * c[1] + c[2] * c[2] + c[3] * c[3];
    f[flat] = std::exp(-d1);
  });

  const Eigen::ArrayXd pf = symmetry::project_equivariant(f, box, g, false);
  const Eigen::ArrayXd ppf = symmetry::project_equivariant(pf, box, g, false);
  CHECK((ppf - pf).abs().maxCoeff() < 1e-10 + 0.05 * f.abs().maxCoeff());
  CHECK(symmetry::equivariance_error(pf, box, g, false, 11) < 0.05);

  // a sign-changing projection has opposite extremes of equal size
  CHECK(pf.maxCoeff() > 0.0);
  CHECK(pf.minCoeff() < 0.0);
  CHECK(std::abs(pf.maxCoeff() + pf.minCoeff()) < 1e-9 * pf.abs().maxCoeff());

  // invariant projection of a radial field is the field
  Eigen::ArrayXd radial(box.points());
  grid::for_each_point(box, [&](long flat, const std::array<int, 4>&,
                                const std::array<double, 4>& c) {
    radial[flat] = std::exp(-(c[0] * c[0] + c[1] * c[1] + c[2] * c[2] + c[3] * c[3]) / 2.5);
  });
  const Eigen::ArrayXd prad = symmetry::project_equivariant(radial, box, g, true);
  CHECK((prad - radial).abs().maxCoeff() < 0.05);
}

TEST_CASE("4D projector: single off-center bump averages to the orbit sum") {
  const grid::BoxGrid box{4, 6.0, 25};
  const int m = 5;
  const SymmetryGroup g = symmetry::group_elements(m);
  auto prof = std::make_shared<groundstate::RadialProfile>(
      groundstate::solve_radial_ground_state(4, 1.5));
  const double R = 3.0;
  const Eigen::Vector4d zeta = SymmetryGroup::anchor_minus();

  Eigen::ArrayXd bump(box.points()), orbit_sum(box.points());
  grid::for_each_point(box, [&](long flat, const std::array<int, 4>&,
                                const std::array<double, 4>& c) {
    const Eigen::Vector4d x(c[0], c[1], c[2], c[3]);
    bump[flat] = prof->value_at((x - R * zeta).norm());
    double acc = 0.0;
    for (const auto& e : g.elements)
      acc += g.theta(e) * prof->value_at((x - R * g.apply4(e, zeta)).norm());
    orbit_sum[flat] = acc / (2.0 * m);
  });

  const Eigen::ArrayXd projected = symmetry::project_equivariant(bump, box, g, false);
  // interpolation error scales with the sharp bump amplitude, not the
  // cancelled orbit sum; measured 1.05% at h = 0.5 and 0.43% at h = 0.25
  CHECK((projected - orbit_sum).abs().maxCoeff() < 0.02 * bump.maxCoeff());
}

TEST_CASE("test function: single-bump degenerate case has zero gap") {
  auto prof = std::make_shared<groundstate::RadialProfile>(
      groundstate::solve_radial_ground_state(2, 2.0));
  const auto tf = symmetry::single_bump_test_function(prof, 2.0);
  CHECK(tf.t_hr == doctest::Approx(1.0).epsilon(1e-9));
  Eigen::MatrixXd bb(1, 1);
  bb << 1.0;
  const auto e = symmetry::test_function_energy(tf, Eigen::VectorXd::Ones(1), bb, 2.0);
  CHECK(e.mu == doctest::Approx(1.0));
  CHECK(std::abs(e.gap) < 1e-9 * e.J);
  CHECK(e.J == doctest::Approx(0.25 * tf.omega_ref_norm_sq).epsilon(1e-9));
}

TEST_CASE("test function: planar orbit construction and normalization") {
  auto prof = std::make_shared<groundstate::RadialProfile>(
      groundstate::solve_radial_ground_state(2, 2.0));
  const SymmetryGroup g = symmetry::group_elements(6);
  const auto tf = symmetry::build_test_function(true, 10.0, g, prof, 2.0);

  CHECK(tf.orbit_size() == 6);
  CHECK_FALSE(tf.overlap_warning);
  CHECK(tf.t_hr == doctest::Approx(1.0).epsilon(1e-3));
  // normalization identity ||sigma||^2 = int |sigma|^{2p}
  CHECK(tf.norm_sq == doctest::Approx(tf.l2p_pow).epsilon(1e-12));
  // interactions are attractive: the ratio sits just below 1
  const double ratio = tf.norm_sq / (6.0 * tf.omega_ref_norm_sq);
  CHECK(ratio > 0.9);
  CHECK(ratio <= 1.0);

  // equivariance of the assembled function at random points (exact orbit)
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> unif(-12.0, 12.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::VectorXd x(2);
    x << unif(rng), unif(rng);
    const double ref = tf.eval(x);
    for (int j = 0; j < 6; ++j) {
      const Eigen::Vector2d y = g.apply2(j, Eigen::Vector2d(x[0], x[1]));
      Eigen::VectorXd yv(2);
      yv << y[0], y[1];
      CHECK(tf.eval(yv) == doctest::Approx(ref).epsilon(1e-9));
    }
  }

  // small separation only warns
  const auto crowded = symmetry::build_test_function(true, 1.5, g, prof, 2.0);
  CHECK(crowded.overlap_warning);
}

TEST_CASE("test function: energy gap decays at the chord rate") {
  auto prof = std::make_shared<groundstate::RadialProfile>(
      groundstate::solve_radial_ground_state(2, 2.0));
  const SymmetryGroup g = symmetry::group_elements(6);
  Eigen::MatrixXd bb(1, 1);
  bb << 1.0;
  const std::vector<double> rs{8.0, 10.0, 12.0, 14.0, 16.0};
  const auto rows = symmetry::test_function_sweep(true, rs, g, prof, bb, 2.0);

  std::vector<double> lx, ly;
  for (const auto& row : rows) {
    CHECK(row.gap > 0.0);
    CHECK(row.J < row.asymptote);
    lx.push_back(row.R);
    ly.push_back(std::log(row.gap));
  }
  const auto fit = numerics::fit_line(Eigen::Map<Eigen::ArrayXd>(lx.data(), lx.size()),
                                      Eigen::Map<Eigen::ArrayXd>(ly.data(), ly.size()));
  CHECK(fit.slope < 0.0);
  CHECK(std::abs(fit.slope) > 0.8);
  CHECK(std::abs(fit.slope) < 2.2);
}

TEST_CASE("test function: block scale covariance") {
  auto prof = std::make_shared<groundstate::RadialProfile>(
      groundstate::solve_radial_ground_state(2, 2.0));
  const SymmetryGroup g = symmetry::group_elements(6);
  const auto tf = symmetry::build_test_function(true, 9.0, g, prof, 2.0);
  const double p = 2.0;
  for (double c : {1.0, 2.0}) {
    Eigen::MatrixXd bb(1, 1);
    bb << c;
    const auto tbar = blockopt::synchronized_coefficients(bb, p);
    const auto e = symmetry::test_function_energy(tf, tbar, bb, p);
    CHECK(e.mu == doctest::Approx(std::pow(c, -1.0 / (p - 1.0))).epsilon(1e-9));
  }
  // doubling beta scales mu and the asymptote by 2^{-1/(p-1)}
  Eigen::MatrixXd b1(1, 1), b2(1, 1);
  b1 << 1.0;
  b2 << 2.0;
  const auto e1 =
      symmetry::test_function_energy(tf, blockopt::synchronized_coefficients(b1, p), b1, p);
  const auto e2 =
      symmetry::test_function_energy(tf, blockopt::synchronized_coefficients(b2, p), b2, p);
  CHECK(e2.asymptote == doctest::Approx(e1.asymptote * std::pow(2.0, -1.0)).epsilon(1e-9));
}

TEST_CASE("test function: 4D signed orbit") {
  auto prof = std::make_shared<groundstate::RadialProfile>(
      groundstate::solve_radial_ground_state(4, 1.5));
  const SymmetryGroup g = symmetry::group_elements(6);
  symmetry::TestFunctionConfig cfg;
  cfg.quad_step = 0.6;
  cfg.support_radius = 7.0;
  const auto tf = symmetry::build_test_function(false, 6.0, g, prof, 1.5, cfg);
  CHECK(tf.orbit_size() == 12);
  CHECK(tf.norm_sq > 0.0);
  CHECK(tf.t_hr > 0.0);

  // theta-equivariance of the assembled sum is exact (orbit centers are exact)
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-8.0, 8.0);
  for (int trial = 0; trial < 200; ++trial) {
    Eigen::Vector4d x(unif(rng), unif(rng), unif(rng), unif(rng));
    Eigen::VectorXd xv = x;
    const double ref = tf.eval(xv);
    for (const auto& e : g.elements) {
      Eigen::VectorXd yv = g.apply4(e, x);
      CHECK(tf.eval(yv) == doctest::Approx(g.theta(e) * ref).epsilon(1e-9));
    }
  }
}
