#pragma once

#include "nlsys/groundstate.hpp"

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace nlsys::coupling {

/// Symmetric ℓ×ℓ interaction matrix (β_ij).
struct CouplingMatrix {
  Eigen::MatrixXd entries;

  int ell() const { return static_cast<int>(entries.rows()); }

  /// Validates squareness and symmetry (exact entries expected).
  static CouplingMatrix from(Eigen::MatrixXd m);
};

/// Partition of the block labels {0,…,q-1} into cooperative (plus) and
/// sign-changing (minus) blocks.
struct SignPartition {
  std::vector<int> plus;
  std::vector<int> minus;

  int q() const { return static_cast<int>(plus.size() + minus.size()); }
  bool is_plus(int h) const;
  void validate(int q_expected) const;
};

struct BlockDecomposition {
  std::vector<int> boundaries;            // 0 = l_0 < … < l_q = ell
  std::vector<std::vector<int>> blocks;   // I_h as 0-based component indices
  SignPartition signs;

  int q() const { return static_cast<int>(blocks.size()); }
  int block_of(int component) const;
};

struct ValidationError : std::runtime_error {
  enum class Code {
    NotSymmetric,
    DiagonalNotPositive,
    IntraBlockNegative,
    CrossBlockNonNegative,
    BadBoundaries,
    BadSignPartition,
  };
  Code code;
  int i = -1;  // first offending entry, 0-based
  int j = -1;

  ValidationError(Code c, const std::string& msg, int i_ = -1, int j_ = -1)
      : std::runtime_error(msg), code(c), i(i_), j(j_) {}
};

/// Checks the sign pattern of the block decomposition: positive diagonal,
/// nonnegative inside blocks, strictly negative across blocks.
BlockDecomposition validate_block_structure(const CouplingMatrix& beta,
                                            const std::vector<int>& boundaries,
                                            const SignPartition& signs);

/// Connectivity of the intra-block graph with edges {i,j}, β_ij > 0.
bool check_graph_connected(const BlockDecomposition& decomp, const CouplingMatrix& beta, int h);

enum class CstarProvenance { UserSupplied, EstimatedUpperBound };

struct EmptyEdgeSetError : std::runtime_error {
  int block;
  EmptyEdgeSetError(int h, const std::string& msg) : std::runtime_error(msg), block(h) {}
};

struct B3BlockRecord {
  int block = 0;  // 0-based
  bool vacuous = false;
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
  bool tie = false;  // |lhs-rhs| within tie tolerance; reported as fail
};

struct B3Report {
  std::vector<B3BlockRecord> per_block;
  double cstar_used = 0.0;
  CstarProvenance provenance = CstarProvenance::UserSupplied;

  bool all_pass() const;
};

/// Per-block inequality of the third structural hypothesis; blocks of size 1
/// pass vacuously, ties count as failures.
B3Report check_b3(const BlockDecomposition& decomp, const CouplingMatrix& beta, double p,
                  double cstar, CstarProvenance provenance = CstarProvenance::UserSupplied);

struct ProfileMissingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CstarEstimate {
  double s_phi = 0.0;
  double d_phi = 0.0;
  double cstar = 0.0;
  double p = 0.0;
  enum class Mode { ExactTrivialCase, UpperBoundEstimate } mode = Mode::ExactTrivialCase;
  std::string note;

  /// Definitional identity  cstar = (p d_phi / ((p-1) s_phi^{p/(p-1)}))^p.
  double recompute() const;
};

/// Exact in the all-trivial q=1 case; otherwise a non-rigorous upper bound
/// built from disjointly supported bump candidates (upper bound on d_phi) and
/// the radial Sobolev-type quotient (lower bound on S_phi).
CstarEstimate estimate_cstar(double p, int q, const SignPartition& signs,
                             const groundstate::RadialProfile& omega);

}  // namespace nlsys::coupling
