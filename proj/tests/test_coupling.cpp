#include "doctest.h"

#include "nlsys/coupling.hpp"
#include "nlsys/groundstate.hpp"

#include <cmath>
#include <random>

using namespace nlsys;
using coupling::B3Report;
using coupling::BlockDecomposition;
using coupling::CouplingMatrix;
using coupling::SignPartition;
using coupling::ValidationError;

namespace {

SignPartition all_plus(int q) {
  SignPartition s;
  for (int h = 0; h < q; ++h) s.plus.push_back(h);
  return s;
}

// Examples-style 2q x 2q matrix: 2x2 diagonal blocks filled with lambda,
// every cross entry equal to `cross` (negative).
Eigen::MatrixXd paired_block_matrix(int q, double lambda, double cross) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(2 * q, 2 * q, cross);
  for (int h = 0; h < q; ++h) m.block(2 * h, 2 * h, 2, 2).setConstant(lambda);
  return m;
}

std::vector<int> paired_boundaries(int q) {
  std::vector<int> b;
  for (int h = 0; h <= q; ++h) b.push_back(2 * h);
  return b;
}

// Reachability oracle: boolean transitive closure of the positive-edge graph.
bool connected_oracle(const Eigen::MatrixXd& beta, const std::vector<int>& block) {
  const int n = static_cast<int>(block.size());
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      reach[a][b] = a == b || beta(block[a], block[b]) > 0.0;
  for (int k = 0; k < n; ++k)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        if (reach[a][k] && reach[k][b]) reach[a][b] = true;
  for (int b = 0; b < n; ++b)
    if (!reach[0][b]) return false;
  return true;
}

}  // namespace

TEST_CASE("block structure: smallest competitive case") {
  Eigen::MatrixXd m(2, 2);
  m << 1, -1, -1, 1;
  const auto decomp =
      coupling::validate_block_structure(CouplingMatrix::from(m), {0, 1, 2}, all_plus(2));
  CHECK(decomp.q() == 2);
  CHECK(decomp.blocks[0] == std::vector<int>{0});
  CHECK(decomp.blocks[1] == std::vector<int>{1});
  CHECK(decomp.block_of(1) == 1);
}

TEST_CASE("block structure: paired-block template validates for any q") {
  for (int q : {2, 3, 5}) {
    const auto m = CouplingMatrix::from(paired_block_matrix(q, 3.0, -0.25));
    const auto decomp = coupling::validate_block_structure(m, paired_boundaries(q), all_plus(q));
    CHECK(decomp.q() == q);
    for (int h = 0; h < q; ++h) CHECK(coupling::check_graph_connected(decomp, m, h));
  }
}

TEST_CASE("block structure: violations identify the first bad entry") {
  SUBCASE("cross entry must be negative") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 0.5, 0.5, 1;
    try {
      coupling::validate_block_structure(CouplingMatrix::from(m), {0, 1, 2}, all_plus(2));
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(e.code == ValidationError::Code::CrossBlockNonNegative);
      CHECK(e.i == 0);
      CHECK(e.j == 1);
    }
  }
  SUBCASE("nonsymmetric") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 0.5, 0.4, 1;
    CHECK_THROWS_AS(CouplingMatrix::from(m), ValidationError);
  }
  SUBCASE("nonpositive diagonal") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 1, 1, 0;
    try {
      coupling::validate_block_structure(CouplingMatrix::from(m), {0, 2}, all_plus(1));
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(e.code == ValidationError::Code::DiagonalNotPositive);
      CHECK(e.i == 1);
    }
  }
  SUBCASE("negative intra-block entry") {
    Eigen::MatrixXd m(2, 2);
    m << 1, -1, -1, 1;
    try {
      coupling::validate_block_structure(CouplingMatrix::from(m), {0, 2}, all_plus(1));
      FAIL("expected a validation error");
    } catch (const ValidationError& e) {
      CHECK(e.code == ValidationError::Code::IntraBlockNegative);
    }
  }
  SUBCASE("bad boundaries") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 1, 1, 1;
    CHECK_THROWS_AS(
        coupling::validate_block_structure(CouplingMatrix::from(m), {0, 1}, all_plus(1)),
        ValidationError);
    CHECK_THROWS_AS(
        coupling::validate_block_structure(CouplingMatrix::from(m), {0, 2, 2}, all_plus(2)),
        ValidationError);
  }
  SUBCASE("bad sign partition") {
    Eigen::MatrixXd m(2, 2);
    m << 1, 1, 1, 1;
    SignPartition s;
    s.plus = {0};
    s.minus = {0};
    CHECK_THROWS_AS(coupling::validate_block_structure(CouplingMatrix::from(m), {0, 2}, s),
                    ValidationError);
  }
}

TEST_CASE("connectivity: handmade cases") {
  // path 0-1-2 and an isolated vertex variant
  Eigen::MatrixXd path(3, 3);
  path << 1, 2, 0, 2, 1, 3, 0, 3, 1;
  auto m = CouplingMatrix::from(path);
  auto decomp = coupling::validate_block_structure(m, {0, 3}, all_plus(1));
  CHECK(coupling::check_graph_connected(decomp, m, 0));

  Eigen::MatrixXd isolated(3, 3);
  isolated << 1, 2, 0, 2, 1, 0, 0, 0, 1;
  m = CouplingMatrix::from(isolated);
  decomp = coupling::validate_block_structure(m, {0, 3}, all_plus(1));
  CHECK_FALSE(coupling::check_graph_connected(decomp, m, 0));

  // singleton block
  Eigen::MatrixXd single(1, 1);
  single << 2.0;
  m = CouplingMatrix::from(single);
  decomp = coupling::validate_block_structure(m, {0, 1}, all_plus(1));
  CHECK(coupling::check_graph_connected(decomp, m, 0));
}

TEST_CASE("connectivity agrees with the transitive-closure oracle") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 5);  // block sizes up to 6
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) m(i, j) = m(j, i) = unif(rng) < 0.45 ? unif(rng) : 0.0;
    const auto cm = CouplingMatrix::from(m);
    const auto decomp = coupling::validate_block_structure(cm, {0, n}, all_plus(1));
    CHECK(coupling::check_graph_connected(decomp, cm, 0) == connected_oracle(m, decomp.blocks[0]));
  }
}

TEST_CASE("b3: paired-block arithmetic") {
  SignPartition signs = all_plus(2);
  SUBCASE("lambda = 100 passes") {
    const auto m = CouplingMatrix::from(paired_block_matrix(2, 100.0, -0.5));
    const auto decomp = coupling::validate_block_structure(m, paired_boundaries(2), signs);
    const auto rep = coupling::check_b3(decomp, m, 2.0, 1.0);
    REQUIRE(rep.per_block.size() == 2);
    CHECK(rep.per_block[0].lhs == doctest::Approx(6.25).epsilon(1e-12));
    CHECK(rep.per_block[0].rhs == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.all_pass());
  }
  SUBCASE("lambda = 16 fails") {
    const auto m = CouplingMatrix::from(paired_block_matrix(2, 16.0, -0.5));
    const auto decomp = coupling::validate_block_structure(m, paired_boundaries(2), signs);
    const auto rep = coupling::check_b3(decomp, m, 2.0, 1.0);
    CHECK(rep.per_block[0].lhs == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(rep.per_block[0].rhs == doctest::Approx(2.0).epsilon(1e-12));
    CHECK_FALSE(rep.all_pass());
  }
}

TEST_CASE("b3: the sufficient lambda threshold passes every block") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> unif(0.05, 1.0);
  for (double p : {1.5, 2.0}) {
    for (int q : {2, 3, 4}) {
      const double cstar = 0.8;
      const double lambda = std::pow(4.0, (2 * p - 1) / (p - 1)) * (q - 1) * cstar * 1.0001;
      Eigen::MatrixXd m = paired_block_matrix(q, lambda, 0.0);
      for (int i = 0; i < 2 * q; ++i)
        for (int j = i + 1; j < 2 * q; ++j)
          if (i / 2 != j / 2) m(i, j) = m(j, i) = -unif(rng);  // |cross| <= 1
      const auto cm = CouplingMatrix::from(m);
      const auto decomp = coupling::validate_block_structure(cm, paired_boundaries(q), all_plus(q));
      CHECK(coupling::check_b3(decomp, cm, p, cstar).all_pass());
    }
  }
}

TEST_CASE("b3: vacuous singletons, ties, empty edge sets") {
  Eigen::MatrixXd m(3, 3);
  m << 1, -0.5, -0.5, -0.5, 1, 0, -0.5, 0, 1;  // block {0} and block {1,2} with no edge
  const auto cm = CouplingMatrix::from(m);
  const auto decomp = coupling::validate_block_structure(cm, {0, 1, 3}, all_plus(2));
  CHECK_THROWS_AS(coupling::check_b3(decomp, cm, 2.0, 1.0), coupling::EmptyEdgeSetError);

  // tie reported as failure: lambda = 16, cross = -0.25 gives lhs = rhs = 1
  const auto m2 = CouplingMatrix::from(paired_block_matrix(2, 16.0, -0.25));
  const auto d2 = coupling::validate_block_structure(m2, paired_boundaries(2), all_plus(2));
  const auto rep = coupling::check_b3(d2, m2, 2.0, 1.0);
  CHECK(rep.per_block[0].tie);
  CHECK_FALSE(rep.per_block[0].pass);

  // singleton blocks are vacuous passes
  Eigen::MatrixXd m3(2, 2);
  m3 << 1, -1, -1, 1;
  const auto cm3 = CouplingMatrix::from(m3);
  const auto d3 = coupling::validate_block_structure(cm3, {0, 1, 2}, all_plus(2));
  const auto rep3 = coupling::check_b3(d3, cm3, 2.0, 1.0);
  CHECK(rep3.per_block[0].vacuous);
  CHECK(rep3.all_pass());
}

TEST_CASE("b3: pass flags are monotone in cstar") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int q = 2 + static_cast<int>(rng() % 2);
    const double lambda = 1.0 + 40.0 * unif(rng);
    Eigen::MatrixXd m = paired_block_matrix(q, lambda, -unif(rng));
    const auto cm = CouplingMatrix::from(m);
    const auto decomp = coupling::validate_block_structure(cm, paired_boundaries(q), all_plus(q));
    const double c_hi = 2.0 * unif(rng) + 0.1;
    const double c_lo = c_hi * unif(rng);
    const auto hi = coupling::check_b3(decomp, cm, 2.0, c_hi);
    const auto lo = coupling::check_b3(decomp, cm, 2.0, c_lo);
    for (size_t k = 0; k < hi.per_block.size(); ++k)
      if (hi.per_block[k].pass) CHECK(lo.per_block[k].pass);
  }
}

TEST_CASE("b3: outcome is stable under within-block relabeling") {
  Eigen::MatrixXd m(5, 5);
  m << 4, 1, 0, -0.3, -0.2,
       1, 2, 3, -0.1, -0.4,
       0, 3, 5, -0.2, -0.2,
      -0.3, -0.1, -0.2, 6, 2,
      -0.2, -0.4, -0.2, 2, 3;
  const std::vector<int> bounds{0, 3, 5};
  const auto cm = CouplingMatrix::from(m);
  const auto decomp = coupling::validate_block_structure(cm, bounds, all_plus(2));
  const auto base = coupling::check_b3(decomp, cm, 1.7, 0.5);
  const bool base_b2 = coupling::check_graph_connected(decomp, cm, 0);

  // permute the first block {0,1,2}
  for (auto perm : {std::vector<int>{1, 2, 0, 3, 4}, std::vector<int>{2, 0, 1, 3, 4}}) {
    Eigen::MatrixXd pm(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) pm(i, j) = m(perm[i], perm[j]);
    const auto cpm = CouplingMatrix::from(pm);
    const auto pdec = coupling::validate_block_structure(cpm, bounds, all_plus(2));
    CHECK(pdec.q() == decomp.q());
    CHECK(coupling::check_graph_connected(pdec, cpm, 0) == base_b2);
    const auto rep = coupling::check_b3(pdec, cpm, 1.7, 0.5);
    for (size_t k = 0; k < rep.per_block.size(); ++k) {
      CHECK(rep.per_block[k].pass == base.per_block[k].pass);
      CHECK(rep.per_block[k].lhs == doctest::Approx(base.per_block[k].lhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("cstar estimate: trivial case closed form") {
  const auto omega = groundstate::solve_radial_ground_state(1, 2.0);
  const auto est = coupling::estimate_cstar(2.0, 1, all_plus(1), omega);
  CHECK(est.mode == coupling::CstarEstimate::Mode::ExactTrivialCase);
  CHECK(est.s_phi == doctest::Approx(std::sqrt(16.0 / 3.0)).epsilon(1e-4));
  CHECK(est.d_phi == doctest::Approx(4.0 / 3.0).epsilon(1e-4));
  // the trivial-case value collapses to 2^{-p}
  CHECK(est.cstar == doctest::Approx(0.25).epsilon(1e-9));
  CHECK(std::abs(est.cstar - est.recompute()) < 1e-12 * est.cstar);
}

TEST_CASE("cstar estimate: equivariant cases are flagged upper bounds") {
  const auto omega = groundstate::solve_radial_ground_state(2, 2.0);
  SignPartition mixed;
  mixed.plus = {0};
  mixed.minus = {1};
  const auto est = coupling::estimate_cstar(2.0, 2, mixed, omega);
  CHECK(est.mode == coupling::CstarEstimate::Mode::UpperBoundEstimate);
  CHECK_FALSE(est.note.empty());
  CHECK(std::abs(est.cstar - est.recompute()) < 1e-12 * est.cstar);

  const auto trivial = coupling::estimate_cstar(2.0, 1, all_plus(1), omega);
  CHECK(est.d_phi >= trivial.d_phi);  // candidate-set inclusion

  // profile solved for a different exponent is rejected
  CHECK_THROWS_AS(coupling::estimate_cstar(1.5, 1, all_plus(1), omega),
                  coupling::ProfileMissingError);
}
