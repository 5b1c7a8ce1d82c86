#include "nlsys/symmetry.hpp"

#include "nlsys/blockopt.hpp"
#include "nlsys/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nlsys::symmetry {

double compute_dm(int m) {
  if (m < 1) throw std::invalid_argument("compute_dm: m must be >= 1");
  // 2 sin(pi/m); the angles with exactly representable values are returned
  // in closed form so that e.g. d_6 is the exact chord length 1
  switch (m) {
    case 1: return 0.0;
    case 2: return 2.0;
    case 4: return std::sqrt(2.0);
    case 6: return 1.0;
    default: return 2.0 * std::sin(M_PI / m);
  }
}

SymmetryGroup group_elements(int m) {
  if (m < 2) throw std::invalid_argument("group_elements: m must be >= 2");
  SymmetryGroup g;
  g.m = m;
  g.flagged_small = m < 5;
  g.dm = compute_dm(m);
  g.elements.reserve(2 * m);
  for (int j = 0; j < m; ++j) g.elements.push_back({j, false});
  for (int j = 0; j < m; ++j) g.elements.push_back({j, true});
  return g;
}

GroupElement SymmetryGroup::compose(const GroupElement& a, const GroupElement& b) const {
  // the rotation acts diagonally on both planes, so it commutes with τ
  return {(a.rot + b.rot) % m, a.swap != b.swap};
}

GroupElement SymmetryGroup::inverse(const GroupElement& a) const {
  return {(m - a.rot) % m, a.swap};
}

Eigen::Vector2d SymmetryGroup::apply2(int rot, const Eigen::Vector2d& x) const {
  const double ang = 2.0 * M_PI * rot / m;
  const double c = std::cos(ang), s = std::sin(ang);
  return {c * x[0] - s * x[1], s * x[0] + c * x[1]};
}

Eigen::Vector4d SymmetryGroup::apply4(const GroupElement& g, const Eigen::Vector4d& x) const {
  Eigen::Vector2d z1 = x.head<2>(), z2 = x.tail<2>();
  if (g.swap) std::swap(z1, z2);
  Eigen::Vector4d out;
  out.head<2>() = apply2(g.rot, z1);
  out.tail<2>() = apply2(g.rot, z2);
  return out;
}

std::vector<Eigen::Vector4d> SymmetryGroup::orbit4(const Eigen::Vector4d& x, double tol) const {
  std::vector<Eigen::Vector4d> orbit;
  for (const auto& g : elements) {
    const Eigen::Vector4d y = apply4(g, x);
    bool dup = false;
    for (const auto& z : orbit)
      if ((z - y).norm() < tol) {
        dup = true;
        break;
      }
    if (!dup) orbit.push_back(y);
  }
  return orbit;
}

Eigen::Vector4d SymmetryGroup::anchor_plus() {
  const double r = 1.0 / std::sqrt(2.0);
  return {r, 0.0, r, 0.0};
}

Eigen::Vector4d SymmetryGroup::anchor_minus() { return {1.0, 0.0, 0.0, 0.0}; }

namespace {

// Bilinear stencil of one rotated 2D node; idx[0] < 0 marks "outside the box".
struct PlaneStencil {
  int idx[4];
  double w[4];
};

std::vector<PlaneStencil> rotation_stencils(const grid::BoxGrid& box, double angle) {
  const int n = box.n;
  const double h = box.h();
  const double c = std::cos(angle), s = std::sin(angle);
  std::vector<PlaneStencil> out(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const double x0 = box.axis_coord(i);
    for (int j = 0; j < n; ++j) {
      const double x1 = box.axis_coord(j);
      const double y0 = c * x0 - s * x1;
      const double y1 = s * x0 + c * x1;
      PlaneStencil& st = out[static_cast<size_t>(i) * n + j];
      const double u = (y0 + box.L) / h;
      const double v = (y1 + box.L) / h;
      if (u < 0.0 || v < 0.0 || u > n - 1 || v > n - 1) {
        st.idx[0] = -1;
        continue;
      }
      int iu = std::min(static_cast<int>(u), n - 2);
      int iv = std::min(static_cast<int>(v), n - 2);
      const double fu = u - iu, fv = v - iv;
      st.idx[0] = iu * n + iv;
      st.idx[1] = iu * n + iv + 1;
      st.idx[2] = (iu + 1) * n + iv;
      st.idx[3] = (iu + 1) * n + iv + 1;
      st.w[0] = (1 - fu) * (1 - fv);
      st.w[1] = (1 - fu) * fv;
      st.w[2] = fu * (1 - fv);
      st.w[3] = fu * fv;
    }
  }
  return out;
}

// out[a,b] += sign * Σ w_u w_v F[Sa.idx[u], Sb.idx[v]]  (plane-major layout)
void gather4(Eigen::ArrayXd& out, const Eigen::ArrayXd& field,
             const std::vector<PlaneStencil>& st, long n2, double sign, bool swap) {
  for (long a = 0; a < n2; ++a) {
    const PlaneStencil& raw_sa = st[a];
    for (long b = 0; b < n2; ++b) {
      const PlaneStencil& sa = swap ? st[b] : raw_sa;  // first-axis stencil
      const PlaneStencil& sb = swap ? raw_sa : st[b];
      if (sa.idx[0] < 0 || sb.idx[0] < 0) continue;
      double acc = 0.0;
      for (int u = 0; u < 4; ++u) {
        const double wu = sa.w[u];
        const double* base = field.data() + static_cast<long>(sa.idx[u]) * n2;
        double inner = 0.0;
        for (int v = 0; v < 4; ++v) inner += sb.w[v] * base[sb.idx[v]];
        acc += wu * inner;
      }
      out[a * n2 + b] += sign * acc;
    }
  }
}

}  // namespace

double interpolate(const Eigen::ArrayXd& field, const grid::BoxGrid& box,
                   const Eigen::VectorXd& x) {
  const int n = box.n;
  const double h = box.h();
  int cell[4] = {0, 0, 0, 0};
  double frac[4] = {0, 0, 0, 0};
  for (int d = 0; d < box.dim; ++d) {
    const double u = (x[d] + box.L) / h;
    if (u < 0.0 || u > n - 1) return 0.0;
    cell[d] = std::min(static_cast<int>(u), n - 2);
    frac[d] = u - cell[d];
  }
  double acc = 0.0;
  const int corners = 1 << box.dim;
  for (int c = 0; c < corners; ++c) {
    long flat = 0;
    double w = 1.0;
    for (int d = 0; d < box.dim; ++d) {
      const int bit = (c >> d) & 1;
      flat = flat * n + cell[d] + bit;
      w *= bit ? frac[d] : 1.0 - frac[d];
    }
    acc += w * field[flat];
  }
  return acc;
}

Eigen::ArrayXd project_equivariant(const Eigen::ArrayXd& field, const grid::BoxGrid& box,
                                   const SymmetryGroup& group, bool plus_block) {
  box.validate();
  if (field.size() != box.points())
    throw std::invalid_argument("project_equivariant: field/grid size mismatch");

  if (box.dim == 2) {
    if (!plus_block)
      throw std::invalid_argument(
          "project_equivariant: the planar analog supports cooperative blocks only");
    const long n2 = box.points();
    Eigen::ArrayXd out = Eigen::ArrayXd::Zero(n2);
    for (int j = 0; j < group.m; ++j) {
      const auto st = rotation_stencils(box, -2.0 * M_PI * j / group.m);
      for (long a = 0; a < n2; ++a) {
        if (st[a].idx[0] < 0) continue;
        double acc = 0.0;
        for (int u = 0; u < 4; ++u) acc += st[a].w[u] * field[st[a].idx[u]];
        out[a] += acc;
      }
    }
    return out / group.m;
  }

  if (box.dim != 4)
    throw std::invalid_argument("project_equivariant: grid must be 2- or 4-dimensional");
  const long n2 = static_cast<long>(box.n) * box.n;
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(field.size());
  for (int j = 0; j < group.m; ++j) {
    // stencils of the inverse rotation, shared by the τ-coset
    const auto st = rotation_stencils(box, -2.0 * M_PI * j / group.m);
    gather4(out, field, st, n2, 1.0, false);
    gather4(out, field, st, n2, plus_block ? 1.0 : -1.0, true);
  }
  return out / (2.0 * group.m);
}

double equivariance_error(const Eigen::ArrayXd& field, const grid::BoxGrid& box,
                          const SymmetryGroup& group, bool plus_block, int sample_stride) {
  box.validate();
  double err = 0.0;
  const double interior = box.L - box.h();  // skip points whose orbit leaves the box
  grid::for_each_point(box, [&](long flat, const std::array<int, 4>& idx,
                                const std::array<double, 4>& c) {
    if (flat % sample_stride != 0) return;
    Eigen::VectorXd x(box.dim);
    double r = 0.0;
    for (int d = 0; d < box.dim; ++d) {
      x[d] = c[d];
      r += c[d] * c[d];
    }
    if (std::sqrt(r) > interior) return;
    if (box.dim == 2) {
      for (int j = 0; j < group.m; ++j) {
        Eigen::Vector2d y = group.apply2(j, Eigen::Vector2d(x[0], x[1]));
        if (std::abs(y[0]) > box.L || std::abs(y[1]) > box.L) continue;
        err = std::max(err, std::abs(interpolate(field, box, y) - field[flat]));
      }
    } else {
      Eigen::Vector4d x4(x[0], x[1], x[2], x[3]);
      for (const auto& g : group.elements) {
        Eigen::Vector4d y = group.apply4(g, x4);
        bool inside = true;
        for (int d = 0; d < 4; ++d) inside = inside && std::abs(y[d]) <= box.L;
        if (!inside) continue;
        const double expect = group.phi(g, plus_block) * field[flat];
        err = std::max(err, std::abs(interpolate(field, box, y) - expect));
      }
    }
  });
  return err;
}

double TestFunction::eval(const Eigen::VectorXd& x) const {
  double acc = 0.0;
  for (size_t b = 0; b < centers.size(); ++b)
    acc += signs[b] * profile->value_at((x - centers[b]).norm());
  return t_hr * acc;
}

namespace {

// Lattice accumulation of the three quadratures a test function needs:
//   A   = Σ_b sign_b ∫ ω_b^{2p-1} σ̂      (= ||σ̂||² via the bump equation)
//   P   = ∫ |σ̂|^{2p}
//   ref = ∫ ω_{b0}^{2p}                   (single bump, same lattice)
struct QuadratureResult {
  double a = 0.0, p = 0.0, ref = 0.0;
};

QuadratureResult lattice_quadrature(const std::vector<Eigen::VectorXd>& centers,
                                    const std::vector<int>& signs,
                                    const groundstate::RadialProfile& w, double p, double step,
                                    double pad, int dim) {
  Eigen::VectorXd lo = centers[0], hi = centers[0];
  for (const auto& c : centers) {
    lo = lo.cwiseMin(c);
    hi = hi.cwiseMax(c);
  }
  lo.array() -= pad;
  hi.array() += pad;
  const bool restrict_to_balls = dim >= 3;  // full box in 2D, union of balls in 4D
  const double pad2 = pad * pad;

  std::array<long, 4> counts{1, 1, 1, 1};
  for (int d = 0; d < dim; ++d)
    counts[d] = static_cast<long>(std::floor((hi[d] - lo[d]) / step)) + 1;

  QuadratureResult q;
  std::vector<double> vals(centers.size());
  Eigen::VectorXd x(dim);
  std::array<long, 4> it{0, 0, 0, 0};
  for (it[0] = 0; it[0] < counts[0]; ++it[0]) {
    x[0] = lo[0] + it[0] * step;
    for (it[1] = 0; it[1] < counts[1]; ++it[1]) {
      if (dim > 1) x[1] = lo[1] + it[1] * step;
      for (it[2] = 0; it[2] < counts[2]; ++it[2]) {
        if (dim > 2) x[2] = lo[2] + it[2] * step;
        for (it[3] = 0; it[3] < counts[3]; ++it[3]) {
          if (dim > 3) x[3] = lo[3] + it[3] * step;
          if (restrict_to_balls) {
            bool near = false;
            for (const auto& c : centers)
              if ((x - c).squaredNorm() <= pad2) {
                near = true;
                break;
              }
            if (!near) continue;
          }
          double sig = 0.0;
          for (size_t b = 0; b < centers.size(); ++b) {
            vals[b] = w.value_at((x - centers[b]).norm());
            sig += signs[b] * vals[b];
          }
          for (size_t b = 0; b < centers.size(); ++b)
            if (vals[b] > 0.0) q.a += signs[b] * std::pow(vals[b], 2.0 * p - 1.0) * sig;
          q.p += std::pow(sig * sig, p);
          if (vals[0] > 0.0) q.ref += std::pow(vals[0], 2.0 * p);
        }
      }
    }
  }
  const double cell = std::pow(step, dim);
  q.a *= cell;
  q.p *= cell;
  q.ref *= cell;
  return q;
}

TestFunction finish_build(TestFunction tf, const TestFunctionConfig& cfg) {
  const auto& w = *tf.profile;
  const int dim = w.dimension;
  const double step = cfg.quad_step > 0.0 ? cfg.quad_step : (dim == 2 ? 0.05 : 0.5);
  const double pad =
      cfg.support_radius > 0.0 ? cfg.support_radius : std::min(w.r_max(), dim == 2 ? 14.0 : 10.0);

  const auto q = lattice_quadrature(tf.centers, tf.signs, w, tf.p, step, pad, dim);
  if (!(q.a > 0.0) || !(q.p > 0.0))
    throw OverlapCollapse("bump overlap destroyed the normalization quadrature");
  tf.raw_norm_sq = q.a;
  tf.raw_l2p_pow = q.p;
  tf.omega_ref_norm_sq = q.ref;
  tf.quad_step = step;
  tf.t_hr = std::pow(q.a / q.p, 1.0 / (2.0 * tf.p - 2.0));
  tf.norm_sq = tf.t_hr * tf.t_hr * q.a;
  tf.l2p_pow = std::pow(tf.t_hr, 2.0 * tf.p) * q.p;

  double min_sep = std::numeric_limits<double>::infinity();
  for (size_t a = 0; a < tf.centers.size(); ++a)
    for (size_t b = a + 1; b < tf.centers.size(); ++b)
      min_sep = std::min(min_sep, (tf.centers[a] - tf.centers[b]).norm());
  tf.overlap_warning = tf.centers.size() > 1 && min_sep < 4.0;
  return tf;
}

}  // namespace

TestFunction build_test_function(bool plus_block, double R, const SymmetryGroup& group,
                                 std::shared_ptr<const groundstate::RadialProfile> profile,
                                 double p, const TestFunctionConfig& cfg) {
  if (!profile) throw std::invalid_argument("build_test_function: profile missing");
  if (R <= 1.0) throw std::invalid_argument("build_test_function: needs R > 1");
  const int dim = profile->dimension;

  TestFunction tf;
  tf.plus_block = plus_block;
  tf.R = R;
  tf.m = group.m;
  tf.p = p;
  tf.profile = std::move(profile);

  if (dim == 2) {
    if (!plus_block)
      throw std::invalid_argument("build_test_function: 2D analog supports cooperative blocks only");
    for (int j = 0; j < group.m; ++j) {
      const Eigen::Vector2d c = R * group.apply2(j, Eigen::Vector2d(1.0, 0.0));
      tf.centers.push_back(c);
      tf.signs.push_back(1);
    }
  } else if (dim == 4) {
    if (plus_block) {
      const Eigen::Vector4d anchor = SymmetryGroup::anchor_plus();
      for (int j = 0; j < group.m; ++j) {
        tf.centers.push_back(R * group.apply4({j, false}, anchor));
        tf.signs.push_back(1);
      }
    } else {
      const Eigen::Vector4d anchor = SymmetryGroup::anchor_minus();
      for (const auto& g : group.elements) {
        tf.centers.push_back(R * group.apply4(g, anchor));
        tf.signs.push_back(group.theta(g));
      }
    }
  } else {
    throw std::invalid_argument("build_test_function: profile must be 2- or 4-dimensional");
  }
  return finish_build(std::move(tf), cfg);
}

TestFunction single_bump_test_function(std::shared_ptr<const groundstate::RadialProfile> profile,
                                       double p, const TestFunctionConfig& cfg) {
  if (!profile) throw std::invalid_argument("single_bump_test_function: profile missing");
  TestFunction tf;
  tf.plus_block = true;
  tf.R = 0.0;
  tf.m = 1;
  tf.p = p;
  tf.profile = std::move(profile);
  tf.centers.push_back(Eigen::VectorXd::Zero(tf.profile->dimension));
  tf.signs.push_back(1);
  return finish_build(std::move(tf), cfg);
}

TestFunctionEnergy test_function_energy(const TestFunction& tf, const Eigen::VectorXd& tbar,
                                        const Eigen::MatrixXd& block_beta, double p) {
  if (tbar.size() != block_beta.rows() || block_beta.rows() != block_beta.cols())
    throw std::invalid_argument("test_function_energy: block size mismatch");
  const Eigen::VectorXd tp = tbar.array().pow(p).matrix();
  const double t2 = tbar.squaredNorm();
  const double tf2 = tp.dot(block_beta * tp);
  if (std::abs(t2 - tf2) > 1e-8 * std::max(1.0, t2))
    throw std::invalid_argument("test_function_energy: coefficients are not synchronized");

  TestFunctionEnergy out;
  out.mu = t2;
  out.J = 0.5 * t2 * tf.norm_sq - tf2 * tf.l2p_pow / (2.0 * p);
  out.asymptote =
      tf.orbit_size() * out.mu * (p - 1.0) / (2.0 * p) * tf.omega_ref_norm_sq;
  out.gap = out.asymptote - out.J;
  return out;
}

std::vector<SweepRow> test_function_sweep(bool plus_block, const std::vector<double>& rs,
                                          const SymmetryGroup& group,
                                          std::shared_ptr<const groundstate::RadialProfile> profile,
                                          const Eigen::MatrixXd& block_beta, double p,
                                          const TestFunctionConfig& cfg) {
  const Eigen::VectorXd tbar = blockopt::synchronized_coefficients(block_beta, p);
  std::vector<SweepRow> rows;
  for (double R : rs) {
    const auto tf = build_test_function(plus_block, R, group, profile, p, cfg);
    const auto e = test_function_energy(tf, tbar, block_beta, p);
    rows.push_back({R, e.J, e.asymptote, e.gap});
  }
  return rows;
}

}  // namespace nlsys::symmetry
