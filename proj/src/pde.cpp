#include "nlsys/pde.hpp"

#include "nlsys/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nlsys::pde {

namespace {

// |u|^p and sign(u)|u|^{p-1} with fast paths for the common exponents.
struct PowKernel {
  double p;

  double abs_p(double u) const {
    if (p == 2.0) return u * u;
    const double a = std::abs(u);
    if (p == 1.5) return a * std::sqrt(a);
    return std::pow(a, p);
  }
  double signed_pm1(double u) const {
    if (p == 2.0) return u;
    const double a = std::abs(u);
    double v;
    if (p == 1.5)
      v = std::sqrt(a);
    else
      v = a == 0.0 ? 0.0 : std::pow(a, p - 1.0);
    return u < 0.0 ? -v : v;
  }
};

double kinetic_sum(const Eigen::ArrayXd& f, const grid::BoxGrid& g) {
  // Σ over grid links of (u_b - u_a)²; exterior neighbors are zero and the
  // stored boundary values already vanish, so only in-box links contribute.
  double acc = 0.0;
  const double* d = f.data();
  grid::for_each_point(g, [&](long flat, const std::array<int, 4>& idx,
                              const std::array<double, 4>&) {
    for (int ax = 0; ax < g.dim; ++ax) {
      if (idx[ax] + 1 >= g.n) continue;
      const double diff = d[flat + g.stride(ax)] - d[flat];
      acc += diff * diff;
    }
  });
  return acc;
}

Eigen::ArrayXd potential_grid(const SystemSpec& spec, int i, const grid::BoxGrid& box) {
  Eigen::ArrayXd v(box.points());
  grid::for_each_point(box, [&](long flat, const std::array<int, 4>&,
                                const std::array<double, 4>& c) {
    double r2 = 0.0;
    for (int d = 0; d < box.dim; ++d) r2 += c[d] * c[d];
    v[flat] = spec.potentials[i].eval_r2(r2);
  });
  return v;
}

void zero_boundary(Eigen::ArrayXd& f, const grid::BoxGrid& g) {
  double* d = f.data();
  grid::for_each_point(g, [&](long flat, const std::array<int, 4>& idx,
                              const std::array<double, 4>&) {
    for (int ax = 0; ax < g.dim; ++ax)
      if (idx[ax] == 0 || idx[ax] == g.n - 1) {
        d[flat] = 0.0;
        return;
      }
  });
}

void check_state(const SystemState& state, const SystemSpec& spec) {
  if (state.ell() != spec.ell)
    throw GridMismatchError("state and spec disagree on the component count");
  state.box.validate();
  if (state.box.dim != spec.dim) throw GridMismatchError("state and spec disagree on dimension");
  for (const auto& f : state.fields)
    if (f.size() != state.box.points()) throw GridMismatchError("field size does not match grid");
}

// Everything one iteration of the constrained flow touches, cached.
struct FieldCache {
  std::vector<Eigen::ArrayXd> P;  // |u_i|^p
  Eigen::VectorXd kin;            // Σ link diff² per component (unweighted)
  Eigen::VectorXd pot;            // cell · Σ V_i u_i²
  Eigen::MatrixXd S;              // cell · Σ P_i P_j

  void compute(const SystemState& st, const std::vector<Eigen::ArrayXd>& vgrid, double p,
               double cell) {
    const int ell = st.ell();
    const PowKernel pk{p};
    P.resize(ell);
    kin.resize(ell);
    pot.resize(ell);
    for (int i = 0; i < ell; ++i) {
      const Eigen::ArrayXd& u = st.fields[i];
      Eigen::ArrayXd& pi = P[i];
      pi.resize(u.size());
      for (Eigen::Index k = 0; k < u.size(); ++k) pi[k] = pk.abs_p(u[k]);
      kin[i] = kinetic_sum(u, st.box);
      pot[i] = cell * (vgrid[i] * u.square()).sum();
    }
    S.resize(ell, ell);
    for (int i = 0; i < ell; ++i)
      for (int j = i; j < ell; ++j) S(i, j) = S(j, i) = cell * (P[i] * P[j]).sum();
  }

  // rescaling u_i -> s_i u_i updates the cache algebraically
  void rescale(SystemState& st, const Eigen::VectorXd& s_per_component, double p) {
    const int ell = st.ell();
    for (int i = 0; i < ell; ++i) {
      const double s = s_per_component[i];
      if (s == 1.0) continue;
      st.fields[i] *= s;
      P[i] *= std::pow(s, p);
      kin[i] *= s * s;
      pot[i] *= s * s;
    }
    for (int i = 0; i < ell; ++i)
      for (int j = 0; j < ell; ++j)
        S(i, j) *= std::pow(s_per_component[i] * s_per_component[j], p);
  }

  double energy_value(const SystemSpec& spec, double kinw) const {
    double e = 0.0;
    for (int i = 0; i < spec.ell; ++i) e += 0.5 * (kin[i] * kinw + pot[i]);
    e -= (spec.beta.entries.array() * S.array()).sum() / (2.0 * spec.p);
    return e;
  }
};

Eigen::VectorXd component_norm_sq_from(const FieldCache& c, double kinw) {
  return (c.kin.array() * kinw + c.pot.array()).matrix();
}

void block_sums(const FieldCache& c, const SystemSpec& spec,
                const coupling::BlockDecomposition& decomp, double kinw, Eigen::VectorXd& A,
                Eigen::MatrixXd& B) {
  const int q = decomp.q();
  A = Eigen::VectorXd::Zero(q);
  B = Eigen::MatrixXd::Zero(q, q);
  const Eigen::VectorXd comp = component_norm_sq_from(c, kinw);
  for (int h = 0; h < q; ++h) {
    for (int i : decomp.blocks[h]) A[h] += comp[i];
    for (int k = 0; k < q; ++k)
      for (int i : decomp.blocks[h])
        for (int j : decomp.blocks[k]) B(h, k) += spec.beta.entries(i, j) * c.S(i, j);
  }
}

void gradient_into(const SystemState& state, const SystemSpec& spec,
                   const std::vector<Eigen::ArrayXd>& vgrid, const FieldCache& cache,
                   std::vector<Eigen::ArrayXd>& out) {
  const grid::BoxGrid& g = state.box;
  const double h2 = g.h() * g.h();
  const int ell = spec.ell;
  const PowKernel pk{spec.p};
  out.resize(ell);

  for (int i = 0; i < ell; ++i) {
    out[i].resize(g.points());
    double* gi = out[i].data();
    const double* u = state.fields[i].data();
    const double* v = vgrid[i].data();
    const auto& beta = spec.beta.entries;

    grid::for_each_point(g, [&](long flat, const std::array<int, 4>& idx,
                                const std::array<double, 4>&) {
      for (int ax = 0; ax < g.dim; ++ax)
        if (idx[ax] == 0 || idx[ax] == g.n - 1) {
          gi[flat] = 0.0;  // Dirichlet boundary stays pinned
          return;
        }
      double lap = -2.0 * g.dim * u[flat];
      for (int ax = 0; ax < g.dim; ++ax) {
        const long s = g.stride(ax);
        lap += u[flat - s] + u[flat + s];
      }
      double coupling_sum = 0.0;
      for (int j = 0; j < ell; ++j) coupling_sum += beta(i, j) * cache.P[j][flat];
      gi[flat] = -lap / h2 + v[flat] * u[flat] - coupling_sum * pk.signed_pm1(u[flat]);
    });
  }
}

}  // namespace

bool SystemSpec::autonomous() const {
  return std::all_of(potentials.begin(), potentials.end(),
                     [](const Potential& v) { return v.is_one(); });
}

void SystemSpec::validate() const {
  if (dim < 1 || dim > 4) throw std::invalid_argument("spec: dimension must be 1..4");
  if (p <= 1.0) throw std::invalid_argument("spec: needs p > 1");
  if (dim >= 3 && p >= static_cast<double>(dim) / (dim - 2))
    throw std::invalid_argument("spec: needs p < N/(N-2)");
  if (beta.ell() != ell || static_cast<int>(potentials.size()) != ell)
    throw std::invalid_argument("spec: component count mismatch");
  for (int i = 0; i < ell; ++i)
    if (!(sigma[i] > 0.0)) throw std::invalid_argument("spec: exterior floors must be positive");
}

SystemSpec SystemSpec::make(int dim, double p, coupling::CouplingMatrix beta,
                            std::vector<Potential> potentials, double rho) {
  SystemSpec spec;
  spec.dim = dim;
  spec.p = p;
  spec.ell = beta.ell();
  spec.beta = std::move(beta);
  if (potentials.size() == 1 && spec.ell > 1)
    potentials.resize(spec.ell, potentials.front());
  spec.potentials = std::move(potentials);
  spec.rho = rho;
  spec.sigma.resize(spec.ell);
  spec.lambda_bound = 0.0;
  for (int i = 0; i < spec.ell; ++i) {
    spec.sigma[i] = spec.potentials[i].exterior_floor(rho);
    spec.lambda_bound = std::max(spec.lambda_bound, spec.potentials[i].sup_abs());
  }
  spec.validate();
  return spec;
}

double energy(const SystemState& state, const SystemSpec& spec) {
  check_state(state, spec);
  const double h = state.box.h();
  const double cell = std::pow(h, spec.dim);
  std::vector<Eigen::ArrayXd> vgrid(spec.ell);
  for (int i = 0; i < spec.ell; ++i) vgrid[i] = potential_grid(spec, i, state.box);
  FieldCache cache;
  cache.compute(state, vgrid, spec.p, cell);
  return cache.energy_value(spec, cell / (h * h));
}

std::vector<Eigen::ArrayXd> gradient(const SystemState& state, const SystemSpec& spec) {
  check_state(state, spec);
  const double h = state.box.h();
  const double cell = std::pow(h, spec.dim);
  std::vector<Eigen::ArrayXd> vgrid(spec.ell);
  for (int i = 0; i < spec.ell; ++i) vgrid[i] = potential_grid(spec, i, state.box);
  FieldCache cache;
  cache.compute(state, vgrid, spec.p, cell);
  std::vector<Eigen::ArrayXd> out;
  gradient_into(state, spec, vgrid, cache, out);
  return out;
}

Eigen::VectorXd residual(const SystemState& state, const SystemSpec& spec) {
  const auto g = gradient(state, spec);
  const double h = state.box.h();
  const double cell = std::pow(h, spec.dim);
  Eigen::VectorXd res(spec.ell);
  for (int i = 0; i < spec.ell; ++i) {
    const double gnorm = std::sqrt(cell * g[i].square().sum());
    const double unorm = std::sqrt(cell / (h * h) * kinetic_sum(state.fields[i], state.box) +
                                   cell * state.fields[i].square().sum());
    res[i] = unorm > 0.0 ? gnorm / unorm : 0.0;
  }
  return res;
}

BlockQuantities block_quantities(const SystemState& state, const SystemSpec& spec,
                                 const coupling::BlockDecomposition& decomp) {
  check_state(state, spec);
  const double h = state.box.h();
  const double cell = std::pow(h, spec.dim);
  std::vector<Eigen::ArrayXd> vgrid(spec.ell);
  for (int i = 0; i < spec.ell; ++i) vgrid[i] = potential_grid(spec, i, state.box);
  FieldCache cache;
  cache.compute(state, vgrid, spec.p, cell);
  BlockQuantities out;
  out.component_norm_sq = component_norm_sq_from(cache, cell / (h * h));
  block_sums(cache, spec, decomp, cell / (h * h), out.block_norm_sq, out.interactions);
  return out;
}

void deposit_bump(SystemState& state, int component, const groundstate::RadialProfile& profile,
                  const Eigen::VectorXd& center, double amplitude, double width_scale) {
  if (center.size() != state.box.dim)
    throw std::invalid_argument("deposit_bump: center dimension mismatch");
  if (!(width_scale > 0.0)) throw std::invalid_argument("deposit_bump: width scale must be positive");
  double* u = state.fields[component].data();
  grid::for_each_point(state.box, [&](long flat, const std::array<int, 4>&,
                                      const std::array<double, 4>& c) {
    double r2 = 0.0;
    for (int d = 0; d < state.box.dim; ++d) {
      const double dx = c[d] - center[d];
      r2 += dx * dx;
    }
    u[flat] += amplitude * width_scale * profile.value_at(width_scale * std::sqrt(r2));
  });
  zero_boundary(state.fields[component], state.box);
}

SystemState seed_state(const SystemSpec& spec, const coupling::BlockDecomposition& decomp,
                       const SolverConfig& cfg) {
  if (!cfg.profile) throw std::invalid_argument("seed_state: bump profile required");
  SystemState st;
  st.box = grid::BoxGrid{spec.dim, cfg.L, cfg.n};
  st.box.validate();
  st.fields.assign(spec.ell, Eigen::ArrayXd::Zero(st.box.points()));
  st.sym_m = cfg.sym_m;
  st.tags.assign(spec.ell, SymTag::None);

  const bool symmetric = cfg.apply_symmetry && spec.dim >= 2 && cfg.sym_m >= 2;
  for (int h = 0; h < decomp.q(); ++h) {
    const bool plus = decomp.signs.is_plus(h);
    for (int i : decomp.blocks[h]) {
      if (!symmetric)
        st.tags[i] = SymTag::None;
      else if (plus)
        st.tags[i] = SymTag::Invariant;
      else if (spec.dim == 4)
        st.tags[i] = SymTag::ThetaEquivariant;
      else
        throw std::invalid_argument("sign-changing blocks need the 4-dimensional grid");
    }
  }

  if (!cfg.seeds.empty()) {
    for (const auto& s : cfg.seeds)
      deposit_bump(st, s.component, *cfg.profile, s.center, s.sign * s.amplitude);
  } else {
    const symmetry::SymmetryGroup group =
        symmetric ? symmetry::group_elements(cfg.sym_m) : symmetry::SymmetryGroup{};
    for (int h = 0; h < decomp.q(); ++h) {
      const bool plus = decomp.signs.is_plus(h);
      const auto& block = decomp.blocks[h];
      Eigen::MatrixXd bb(block.size(), block.size());
      for (size_t a = 0; a < block.size(); ++a)
        for (size_t b = 0; b < block.size(); ++b) bb(a, b) = spec.beta.entries(block[a], block[b]);
      const Eigen::VectorXd tbar = blockopt::synchronized_coefficients(bb, spec.p);

      std::vector<std::pair<Eigen::VectorXd, double>> bumps;  // center, sign
      if (spec.dim == 1) {
        Eigen::VectorXd c(1);
        c[0] = (h - 0.5 * (decomp.q() - 1)) * cfg.seed_separation;
        bumps.emplace_back(c, 1.0);
      } else if (plus) {
        if (cfg.seed_radius > 0.0 && symmetric) {
          if (spec.dim == 2) {
            for (int j = 0; j < group.m; ++j) {
              Eigen::VectorXd c = cfg.seed_radius * group.apply2(j, Eigen::Vector2d(1.0, 0.0));
              bumps.emplace_back(c, 1.0);
            }
          } else {
            for (int j = 0; j < group.m; ++j) {
              Eigen::VectorXd c =
                  cfg.seed_radius * group.apply4({j, false}, symmetry::SymmetryGroup::anchor_plus());
              bumps.emplace_back(c, 1.0);
            }
          }
        } else {
          bumps.emplace_back(Eigen::VectorXd::Zero(spec.dim), 1.0);
        }
      } else {
        const double R = cfg.seed_radius > 0.0 ? cfg.seed_radius : 0.5 * cfg.L;
        for (const auto& g : group.elements) {
          Eigen::VectorXd c = R * group.apply4(g, symmetry::SymmetryGroup::anchor_minus());
          bumps.emplace_back(c, static_cast<double>(group.theta(g)));
        }
      }
      for (size_t a = 0; a < block.size(); ++a) {
        // matching the seed tail to the declared exterior floor avoids the
        // slow regrowth of an undersized tail near the continuum edge
        const double width = std::sqrt(spec.sigma[block[a]]);
        for (const auto& [center, sign] : bumps)
          deposit_bump(st, block[a], *cfg.profile, center, sign * tbar[a], width);
      }
    }
  }

  if (symmetric) {
    const symmetry::SymmetryGroup group = symmetry::group_elements(cfg.sym_m);
    for (int i = 0; i < spec.ell; ++i) {
      if (st.tags[i] == SymTag::None) continue;
      st.fields[i] =
          symmetry::project_equivariant(st.fields[i], st.box, group, st.tags[i] == SymTag::Invariant);
      zero_boundary(st.fields[i], st.box);
    }
  }
  return st;
}

SolveResult solve_system(const SystemSpec& spec, const coupling::BlockDecomposition& decomp,
                         const SolverConfig& cfg) {
  spec.validate();
  SolveResult result;
  result.state = seed_state(spec, decomp, cfg);
  SystemState& st = result.state;
  const grid::BoxGrid box = st.box;
  const double h = box.h();
  const double cell = std::pow(h, spec.dim);
  const double kinw = cell / (h * h);

  std::vector<Eigen::ArrayXd> vgrid(spec.ell);
  for (int i = 0; i < spec.ell; ++i) vgrid[i] = potential_grid(spec, i, box);

  const bool any_tag = std::any_of(st.tags.begin(), st.tags.end(),
                                   [](SymTag t) { return t != SymTag::None; });
  symmetry::SymmetryGroup group;
  if (any_tag) group = symmetry::group_elements(cfg.sym_m);

  auto project = [&](SystemState& s) {
    if (!any_tag) return;
    for (int i = 0; i < spec.ell; ++i) {
      if (s.tags[i] == SymTag::None) continue;
      s.fields[i] = symmetry::project_equivariant(s.fields[i], box, group,
                                                  s.tags[i] == SymTag::Invariant);
      zero_boundary(s.fields[i], box);
    }
  };

  FieldCache cache;
  cache.compute(st, vgrid, spec.p, cell);

  auto retract = [&](SystemState& s, FieldCache& c) {
    Eigen::VectorXd A;
    Eigen::MatrixXd B;
    block_sums(c, spec, decomp, kinw, A, B);
    const auto scaling = blockopt::nehari_project(A, B, spec.p);
    Eigen::VectorXd per_comp(spec.ell);
    for (int i = 0; i < spec.ell; ++i) per_comp[i] = scaling.s[decomp.block_of(i)];
    c.rescale(s, per_comp, spec.p);
  };

  try {
    retract(st, cache);
  } catch (const blockopt::ConditionNError&) {
    result.status = SolveStatus::ConditionNFails;
    return result;
  }

  double J = cache.energy_value(spec, kinw);
  const double lambda_max = 4.0 * spec.dim / (h * h) + spec.lambda_bound;
  double tau = 0.9 / lambda_max;
  const double energy_slack_scale = any_tag ? 1e-4 : 1e-12;

  std::vector<Eigen::ArrayXd> grad;
  SystemState trial = st;
  FieldCache trial_cache;

  long iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    gradient_into(st, spec, vgrid, cache, grad);

    double res = 0.0;
    const Eigen::VectorXd comp_norm = component_norm_sq_from(cache, kinw);
    for (int i = 0; i < spec.ell; ++i) {
      const double gnorm =
          std::sqrt(cell * grad[i].square().sum());
      const double unorm =
          std::sqrt(kinw * cache.kin[i] + cell * st.fields[i].square().sum());
      res = std::max(res, unorm > 0.0 ? gnorm / unorm : 0.0);
    }
    if (iter % cfg.log_every == 0) result.log.push_back({iter, J, res, tau});
    if (res < cfg.tol) {
      result.status = SolveStatus::Converged;
      break;
    }

    // collapse of a block component means loss of full nontriviality
    int collapsed = -1;
    for (int i = 0; i < spec.ell; ++i)
      if (std::sqrt(comp_norm[i]) < 1e-8) collapsed = i;
    if (collapsed >= 0) {
      result.status = SolveStatus::BlockCollapse;
      result.collapsed_component = collapsed;
      break;
    }

    bool accepted = false;
    const double slack = energy_slack_scale * (1.0 + std::abs(J));
    for (int halve = 0; halve < 40 && !accepted; ++halve) {
      for (int i = 0; i < spec.ell; ++i) trial.fields[i] = st.fields[i] - tau * grad[i];
      project(trial);
      trial_cache.compute(trial, vgrid, spec.p, cell);
      try {
        retract(trial, trial_cache);
      } catch (const blockopt::ConditionNError&) {
        result.status = SolveStatus::ConditionNFails;
        result.iterations = iter;
        result.final_energy = J;
        result.residuals = residual(st, spec);
        result.component_norms_sq = comp_norm;
        return result;
      }
      const double Jt = trial_cache.energy_value(spec, kinw);
      if (Jt <= J + slack) {
        for (int i = 0; i < spec.ell; ++i) std::swap(st.fields[i], trial.fields[i]);
        std::swap(cache, trial_cache);
        J = Jt;
        accepted = true;
      } else {
        tau *= 0.5;
      }
    }
    if (!accepted) {
      result.status = SolveStatus::MaxIterations;  // stalled at the arithmetic floor
      break;
    }
  }
  if (iter >= cfg.max_iter) result.status = SolveStatus::MaxIterations;

  result.iterations = iter;
  result.final_energy = J;
  result.residuals = residual(st, spec);
  result.component_norms_sq = component_norm_sq_from(cache, kinw);
  if (any_tag) {
    double err = 0.0;
    for (int i = 0; i < spec.ell; ++i)
      if (st.tags[i] != SymTag::None)
        err = std::max(err, symmetry::equivariance_error(st.fields[i], box, group,
                                                         st.tags[i] == SymTag::Invariant, 7));
    result.equivariance_error = err;
  }
  return result;
}

namespace {

Eigen::ArrayXd h1_density(const Eigen::ArrayXd& f, const grid::BoxGrid& g) {
  // |∇u|² + u² with central differences; exterior neighbors are zero
  Eigen::ArrayXd e(f.size());
  const double inv2h = 1.0 / (2.0 * g.h());
  const double* d = f.data();
  grid::for_each_point(g, [&](long flat, const std::array<int, 4>& idx,
                              const std::array<double, 4>&) {
    double acc = d[flat] * d[flat];
    for (int ax = 0; ax < g.dim; ++ax) {
      const long s = g.stride(ax);
      const double um = idx[ax] > 0 ? d[flat - s] : 0.0;
      const double up = idx[ax] + 1 < g.n ? d[flat + s] : 0.0;
      const double der = (up - um) * inv2h;
      acc += der * der;
    }
    e[flat] = acc;
  });
  return e;
}

}  // namespace

TailSeries tail_norms(const SystemState& state, const Eigen::VectorXd& radii) {
  const double lo = radii.size() ? radii.minCoeff() : 0.0;
  const double hi = radii.size() ? radii.maxCoeff() : 0.0;
  return tail_norms(state, radii, lo, hi);
}

TailSeries tail_norms(const SystemState& state, const Eigen::VectorXd& radii, double fit_r_lo,
                      double fit_r_hi) {
  state.box.validate();
  for (Eigen::Index k = 0; k < radii.size(); ++k)
    if (radii[k] < 0.0 || radii[k] > state.box.L + 1e-12)
      throw RadiiOutOfBoxError("tail radius outside the grid box");

  const int ell = state.ell();
  const double cell = std::pow(state.box.h(), state.box.dim);
  TailSeries out;
  out.radii = radii;
  out.xi = Eigen::MatrixXd::Zero(ell, radii.size());

  for (int i = 0; i < ell; ++i) {
    const Eigen::ArrayXd dens = h1_density(state.fields[i], state.box);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(radii.size());
    const double* d = dens.data();
    grid::for_each_point(state.box, [&](long flat, const std::array<int, 4>&,
                                        const std::array<double, 4>& c) {
      double r2 = 0.0;
      for (int dd = 0; dd < state.box.dim; ++dd) r2 += c[dd] * c[dd];
      const double r = std::sqrt(r2);
      for (Eigen::Index k = 0; k < radii.size(); ++k)
        if (r >= radii[k]) acc[k] += d[flat];
    });
    out.xi.row(i) = cell * acc.transpose();
  }

  // fitted ϑ from log Σ_i ξ_i(r) over the requested window
  std::vector<double> xs, ys;
  for (Eigen::Index k = 0; k < radii.size(); ++k) {
    const double total = out.xi.col(k).sum();
    if (total > 0.0 && radii[k] >= fit_r_lo - 1e-12 && radii[k] <= fit_r_hi + 1e-12) {
      xs.push_back(radii[k]);
      ys.push_back(std::log(total));
    }
  }
  if (xs.size() >= 2) {
    const auto fit = numerics::fit_line(Eigen::Map<Eigen::ArrayXd>(xs.data(), xs.size()),
                                        Eigen::Map<Eigen::ArrayXd>(ys.data(), ys.size()));
    out.fitted_theta = -fit.slope;
    out.fit_r_lo = xs.front();
    out.fit_r_hi = xs.back();
  }
  return out;
}

DecayFit fit_decay(const SystemState& state, double r_lo, double r_hi, const SystemSpec& spec,
                   double tolerance, double noise_floor) {
  check_state(state, spec);
  if (!(r_hi > r_lo)) throw std::invalid_argument("fit_decay: empty window");
  const double h = state.box.h();
  const double bin_width = std::max(2.0 * h, (r_hi - r_lo) / 40.0);
  const int bins = std::max(1, static_cast<int>(std::floor((r_hi - r_lo) / bin_width)));

  DecayFit out;
  out.r_lo = r_lo;
  out.r_hi = r_hi;
  out.noise_floor = noise_floor;
  out.tolerance = tolerance;

  for (int i = 0; i < spec.ell; ++i) {
    Eigen::VectorXd maxima = Eigen::VectorXd::Zero(bins);
    const double* d = state.fields[i].data();
    grid::for_each_point(state.box, [&](long flat, const std::array<int, 4>&,
                                        const std::array<double, 4>& c) {
      double r2 = 0.0;
      for (int dd = 0; dd < state.box.dim; ++dd) r2 += c[dd] * c[dd];
      const double r = std::sqrt(r2);
      if (r < r_lo || r >= r_lo + bins * bin_width) return;
      const int b = static_cast<int>((r - r_lo) / bin_width);
      maxima[b] = std::max(maxima[b], std::abs(d[flat]));
    });

    std::vector<double> xs, ys;
    for (int b = 0; b < bins; ++b)
      if (maxima[b] > noise_floor) {
        xs.push_back(r_lo + (b + 0.5) * bin_width);
        ys.push_back(std::log(maxima[b]));
      }
    if (xs.empty()) throw WindowBelowNoiseError("fit window lies below the noise floor");
    if (xs.size() < 4) throw DegenerateFitError("fewer than 4 usable annuli");

    const auto fit = numerics::fit_line(Eigen::Map<Eigen::ArrayXd>(xs.data(), xs.size()),
                                        Eigen::Map<Eigen::ArrayXd>(ys.data(), ys.size()));
    DecayFit::Component comp;
    comp.rate = -fit.slope;
    comp.prefactor = std::exp(fit.intercept);
    comp.rms = fit.rms_residual;
    comp.sqrt_sigma = std::sqrt(spec.sigma[i]);
    const double target =
        spec.potentials[i].is_one() ? std::min(comp.sqrt_sigma, 1.0) : comp.sqrt_sigma;
    comp.threshold = target - tolerance;
    comp.pass = comp.rate >= comp.threshold;
    comp.annuli = static_cast<int>(xs.size());
    out.components.push_back(comp);
  }
  return out;
}

DecayFit fit_decay_samples(const Eigen::ArrayXd& radii, const Eigen::ArrayXd& values,
                           double sqrt_sigma, bool v_is_one, double r_lo, double r_hi,
                           double tolerance, double noise_floor) {
  if (radii.size() != values.size()) throw std::invalid_argument("fit_decay_samples: size mismatch");
  std::vector<double> xs, ys;
  for (Eigen::Index k = 0; k < radii.size(); ++k) {
    if (radii[k] < r_lo || radii[k] > r_hi) continue;
    if (std::abs(values[k]) <= noise_floor) continue;
    xs.push_back(radii[k]);
    ys.push_back(std::log(std::abs(values[k])));
  }
  DecayFit out;
  out.r_lo = r_lo;
  out.r_hi = r_hi;
  out.noise_floor = noise_floor;
  out.tolerance = tolerance;
  if (xs.empty()) throw WindowBelowNoiseError("fit window lies below the noise floor");
  if (xs.size() < 4) throw DegenerateFitError("fewer than 4 usable samples");
  const auto fit = numerics::fit_line(Eigen::Map<Eigen::ArrayXd>(xs.data(), xs.size()),
                                      Eigen::Map<Eigen::ArrayXd>(ys.data(), ys.size()));
  DecayFit::Component comp;
  comp.rate = -fit.slope;
  comp.prefactor = std::exp(fit.intercept);
  comp.rms = fit.rms_residual;
  comp.sqrt_sigma = sqrt_sigma;
  comp.threshold = (v_is_one ? std::min(sqrt_sigma, 1.0) : sqrt_sigma) - tolerance;
  comp.pass = comp.rate >= comp.threshold;
  comp.annuli = static_cast<int>(xs.size());
  out.components.push_back(comp);
  return out;
}

}  // namespace nlsys::pde
