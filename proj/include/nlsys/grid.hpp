#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>

namespace nlsys::grid {

/// Uniform Cartesian box [-L, L]^dim with n points per axis (boundary
/// included). Flattening is row-major with axis 0 slowest; for dim = 4 this
/// makes the (x1,x2)-plane index the major one, which the symmetry gathers
/// rely on.
struct BoxGrid {
  int dim = 1;
  double L = 10.0;
  int n = 101;

  double h() const { return 2.0 * L / (n - 1); }

  long points() const {
    long p = 1;
    for (int d = 0; d < dim; ++d) p *= n;
    return p;
  }

  long stride(int axis) const {
    long s = 1;
    for (int d = axis + 1; d < dim; ++d) s *= n;
    return s;
  }

  double axis_coord(int i) const { return -L + i * h(); }

  void validate() const {
    if (dim < 1 || dim > 4) throw std::invalid_argument("grid dimension must be 1..4");
    if (n < 3) throw std::invalid_argument("grid needs at least 3 points per axis");
    if (L <= 0.0) throw std::invalid_argument("grid half-width must be positive");
  }

  bool operator==(const BoxGrid& o) const { return dim == o.dim && L == o.L && n == o.n; }
};

/// Visits every grid point with its flat index, per-axis indices and |x|^2.
template <class Fn>
void for_each_point(const BoxGrid& g, Fn&& fn) {
  const int n = g.n;
  std::array<int, 4> idx{0, 0, 0, 0};
  std::array<double, 4> c{0, 0, 0, 0};
  long flat = 0;
  // nested loops up to dim; unused axes stay at a single iteration
  const int dim = g.dim;
  for (idx[0] = 0; idx[0] < (dim > 0 ? n : 1); ++idx[0]) {
    c[0] = g.axis_coord(idx[0]);
    for (idx[1] = 0; idx[1] < (dim > 1 ? n : 1); ++idx[1]) {
      c[1] = dim > 1 ? g.axis_coord(idx[1]) : 0.0;
      for (idx[2] = 0; idx[2] < (dim > 2 ? n : 1); ++idx[2]) {
        c[2] = dim > 2 ? g.axis_coord(idx[2]) : 0.0;
        for (idx[3] = 0; idx[3] < (dim > 3 ? n : 1); ++idx[3]) {
          c[3] = dim > 3 ? g.axis_coord(idx[3]) : 0.0;
          fn(flat, idx, c);
          ++flat;
        }
      }
    }
  }
}

}  // namespace nlsys::grid
