#include "nlsys/blockopt.hpp"

#include "nlsys/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace nlsys::blockopt {

namespace {

double form_value(const Eigen::MatrixXd& beta, const Eigen::VectorXd& s, double p) {
  const Eigen::VectorXd sp = s.array().pow(p).matrix();
  return sp.dot(beta * sp);
}

Eigen::VectorXd form_gradient(const Eigen::MatrixXd& beta, const Eigen::VectorXd& s, double p) {
  const Eigen::VectorXd sp = s.array().pow(p).matrix();
  const Eigen::VectorXd bsp = beta * sp;
  Eigen::VectorXd g(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    g[i] = 2.0 * p * std::pow(s[i], p - 1.0) * bsp[i];
  return g;
}

// One projected-ascent run on the nonnegative unit sphere.
double ascend(const Eigen::MatrixXd& beta, double p, Eigen::VectorXd& s) {
  s = s.cwiseMax(0.0);
  double nrm = s.norm();
  if (nrm <= 0.0) {
    s.setConstant(1.0 / std::sqrt(static_cast<double>(s.size())));
    nrm = 1.0;
  } else {
    s /= nrm;
  }
  double f = form_value(beta, s, p);
  double step = 0.1;
  for (int it = 0; it < 2000; ++it) {
    const Eigen::VectorXd g = form_gradient(beta, s, p);
    bool improved = false;
    for (int halve = 0; halve < 60; ++halve) {
      Eigen::VectorXd cand = (s + step * g).cwiseMax(0.0);
      const double cn = cand.norm();
      if (cn <= 0.0) break;
      cand /= cn;
      const double fc = form_value(beta, cand, p);
      if (fc > f) {
        const double rel = (fc - f) / std::max(1.0, std::abs(f));
        s = cand;
        f = fc;
        step *= 1.5;
        improved = rel > 1e-15;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  return f;
}

}  // namespace

MuResult compute_mu(const Eigen::MatrixXd& block_beta, double p, int restarts,
                    std::uint64_t seed, int block_index) {
  const Eigen::Index n = block_beta.rows();
  if (n < 1 || block_beta.cols() != n) throw std::invalid_argument("compute_mu: bad block");
  if (p <= 1.0) throw std::invalid_argument("compute_mu: needs p > 1");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(block_beta(i, i) > 0.0))
      throw std::invalid_argument("compute_mu: diagonal must be positive");
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && block_beta(i, j) < 0.0)
        throw std::invalid_argument("compute_mu: off-diagonal must be nonnegative");
  }

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Deterministic starts (uniform direction and every basis vector, to catch
  // boundary maxima of decoupled blocks) plus the random restarts.
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(Eigen::VectorXd::Constant(n, 1.0));
  for (Eigen::Index i = 0; i < n; ++i) starts.push_back(Eigen::VectorXd::Unit(n, i));
  for (int r = 0; r < restarts; ++r) {
    Eigen::VectorXd s(n);
    for (Eigen::Index i = 0; i < n; ++i) s[i] = std::abs(normal(rng)) + 1e-3;
    starts.push_back(s);
  }

  double best_f = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_s;
  double mu_min = std::numeric_limits<double>::infinity();
  double mu_max = -std::numeric_limits<double>::infinity();
  for (auto& s0 : starts) {
    Eigen::VectorXd s = s0;
    const double f = ascend(block_beta, p, s);
    if (f > 0.0) {
      const double mu_run = std::pow(f, -1.0 / (p - 1.0));
      mu_min = std::min(mu_min, mu_run);
      mu_max = std::max(mu_max, mu_run);
    }
    if (f > best_f) {
      best_f = f;
      best_s = s;
    }
  }
  if (!(best_f > 0.0))
    throw NonPositiveFormError("interaction form not positive anywhere on the sphere");

  MuResult out;
  out.mu = std::pow(best_f, -1.0 / (p - 1.0));
  out.argmin = best_s;
  out.block = block_index;
  out.multistart_spread = (mu_max > mu_min) ? mu_max - mu_min : 0.0;
  return out;
}

Eigen::VectorXd synchronized_coefficients(const Eigen::MatrixXd& block_beta, double p,
                                          const MuResult& mu) {
  // One scaling fixes both identities: with |s| = 1 and F(s) maximal,
  // t = sqrt(μ) s gives Σ t² = μ and F(t) = μ^p F_max = μ.
  return std::sqrt(mu.mu) * mu.argmin;
}

Eigen::VectorXd synchronized_coefficients(const Eigen::MatrixXd& block_beta, double p) {
  return synchronized_coefficients(block_beta, p, compute_mu(block_beta, p));
}

Eigen::VectorXd NehariScaling::residuals() const {
  const Eigen::Index q = s.size();
  Eigen::VectorXd res(q);
  const Eigen::VectorXd sp = s.array().pow(p).matrix();
  for (Eigen::Index h = 0; h < q; ++h) {
    const double lhs = s[h] * s[h] * block_norms[h];
    const double rhs = sp[h] * sp.dot(interactions.row(h));
    res[h] = std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300);
  }
  return res;
}

NehariScaling nehari_project(const Eigen::VectorXd& block_norms,
                             const Eigen::MatrixXd& interactions, double p,
                             const Eigen::VectorXd& start) {
  const Eigen::Index q = block_norms.size();
  if (interactions.rows() != q || interactions.cols() != q)
    throw std::invalid_argument("nehari_project: dimension mismatch");
  if ((block_norms.array() <= 0.0).any())
    throw std::invalid_argument("nehari_project: block norms must be positive");
  for (Eigen::Index h = 0; h < q; ++h)
    if (!(interactions.row(h).sum() > 0.0))
      throw ConditionNError(static_cast<int>(h),
                            "admissibility condition fails: nonpositive interaction row sum");

  auto package = [&](const Eigen::VectorXd& s) {
    NehariScaling out;
    out.s = s;
    out.block_norms = block_norms;
    out.interactions = interactions;
    out.p = p;
    return out;
  };

  if (q == 1) {
    // stationarity reduces to s^{2p-2} = A/B with B > 0 by admissibility
    return package(Eigen::VectorXd::Constant(
        1, std::pow(block_norms[0] / interactions(0, 0), 1.0 / (2.0 * p - 2.0))));
  }

  if (p == 2.0 && start.size() == 0) {
    // the stationarity system is linear in x = s²
    const Eigen::VectorXd x = interactions.partialPivLu().solve(block_norms);
    if ((x.array() > 0.0).all()) return package(x.cwiseSqrt());
    throw NewtonDivergedError("linear scaling system has no positive solution");
  }

  // General exponent: damped Newton on the divided-out stationarity system
  //   F_h(s) = A_h - s_h^{p-2} Σ_k s_k^p B_hk,
  // which keeps the spurious root at s = 0 out of the basin.
  Eigen::VectorXd s = start.size() == q ? start : Eigen::VectorXd::Ones(q);
  if ((s.array() <= 0.0).any()) throw std::invalid_argument("nehari_project: start must be positive");

  auto system_residual = [&](const Eigen::VectorXd& v) {
    const Eigen::VectorXd vp = v.array().pow(p).matrix();
    Eigen::VectorXd f(q);
    for (Eigen::Index h = 0; h < q; ++h)
      f[h] = block_norms[h] - std::pow(v[h], p - 2.0) * vp.dot(interactions.row(h));
    return f;
  };

  Eigen::VectorXd f = system_residual(s);
  for (int it = 0; it < 400; ++it) {
    double scale = 0.0;
    for (Eigen::Index h = 0; h < q; ++h)
      scale = std::max(scale, std::abs(f[h]) / block_norms[h]);
    if (scale < 1e-13) return package(s);

    Eigen::MatrixXd J(q, q);
    const Eigen::VectorXd sp = s.array().pow(p).matrix();
    for (Eigen::Index h = 0; h < q; ++h) {
      const double row = sp.dot(interactions.row(h));
      for (Eigen::Index k = 0; k < q; ++k) {
        double v = -std::pow(s[h], p - 2.0) * p * std::pow(s[k], p - 1.0) * interactions(h, k);
        if (k == h) v -= (p - 2.0) * std::pow(s[h], p - 3.0) * row;
        J(h, k) = v;
      }
    }
    Eigen::VectorXd delta = J.partialPivLu().solve(-f);
    if (!delta.allFinite()) throw NewtonDivergedError("singular Newton system");

    // Damp the step so every coordinate stays positive and the residual drops.
    double lambda = 1.0;
    while (lambda > 1e-14 && ((s + lambda * delta).array() <= 0.0).any()) lambda *= 0.5;
    bool accepted = false;
    for (; lambda > 1e-14; lambda *= 0.5) {
      const Eigen::VectorXd cand = s + lambda * delta;
      if ((cand.array() <= 0.0).any()) continue;
      const Eigen::VectorXd fc = system_residual(cand);
      if (fc.norm() < f.norm() || fc.norm() <= f.norm() * (1.0 + 1e-14)) {
        s = cand;
        f = fc;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw NewtonDivergedError("damped Newton stalled");
  }
  throw NewtonDivergedError("Newton iteration limit reached");
}

double energy_on_nehari(const NehariScaling& scaling) {
  const double p = scaling.p;
  const Eigen::VectorXd& s = scaling.s;
  const Eigen::VectorXd sp = s.array().pow(p).matrix();
  const double quad = s.array().square().matrix().dot(scaling.block_norms);
  const double inter = sp.dot(scaling.interactions * sp);
  const double j_identity = (p - 1.0) / (2.0 * p) * quad;
  const double j_full = 0.5 * quad - inter / (2.0 * p);
  if (std::abs(j_identity - j_full) > 1e-10 * std::max(1.0, std::abs(j_identity)))
    throw NotOnNehariError("state does not satisfy the constraint identities");
  return j_identity;
}

BoundReport bound_report(const Eigen::VectorXd& mu, const coupling::SignPartition& signs,
                         double omega_norm_sq) {
  const int q = static_cast<int>(mu.size());
  if (q < 1 || signs.q() != q) throw EmptyQError("bound_report: empty or inconsistent Q");
  if ((mu.array() <= 0.0).any()) throw std::invalid_argument("bound_report: mu must be positive");

  BoundReport rep;
  rep.a.resize(q);
  rep.b.resize(q);
  for (int h = 0; h < q; ++h) {
    rep.a[h] = signs.is_plus(h) ? 1.0 : 12.0;
    rep.b[h] = signs.is_plus(h) ? 6.0 : 12.0;
  }

  if (q == 1) {
    const bool plus = signs.is_plus(0);
    rep.per_candidate.push_back({0, plus ? mu[0] : 10.0 * mu[0]});
    rep.argmin_k = 0;
    rep.bound = rep.per_candidate[0].value * omega_norm_sq;
    rep.equality = plus;
    return rep;
  }

  double best = std::numeric_limits<double>::infinity();
  for (int k = 0; k < q; ++k) {
    double v = rep.a[k] * mu[k];
    for (int h = 0; h < q; ++h)
      if (h != k) v += rep.b[h] * mu[h];
    rep.per_candidate.push_back({k, v});
    if (v < best) {  // strict: smallest k wins ties
      best = v;
      rep.argmin_k = k;
    }
  }
  rep.bound = best * omega_norm_sq;
  rep.equality = false;

  const double mu_star = mu.maxCoeff();
  const double np = static_cast<double>(signs.plus.size());
  const double nm = static_cast<double>(signs.minus.size());
  rep.simplified = (np > 0 ? (6.0 * np + 12.0 * nm - 5.0) : 12.0 * nm) * mu_star * omega_norm_sq;
  rep.simplified_applicable = true;
  return rep;
}

CompactnessReport compactness_check(double c_full, const Eigen::VectorXd& c_sub,
                                    const Eigen::VectorXd& mu, int m, double p,
                                    double omega_norm_sq, const coupling::SignPartition& signs) {
  const int q = static_cast<int>(mu.size());
  if (c_sub.size() != q || signs.q() != q)
    throw std::invalid_argument("compactness_check: dimension mismatch");
  if (m < 5) throw std::invalid_argument("compactness_check: needs m >= 5");

  CompactnessReport rep;
  rep.c_full = c_full;
  rep.m = m;
  rep.thresholds.resize(q);
  rep.pass.resize(q);
  const double unit = (p - 1.0) / (2.0 * p) * omega_norm_sq;
  for (int h = 0; h < q; ++h) {
    const double factor = signs.is_plus(h) ? static_cast<double>(m) : 2.0 * m;
    rep.thresholds[h] = c_sub[h] + factor * mu[h] * unit;
    rep.pass[h] = c_full < rep.thresholds[h];  // strict
  }
  rep.note =
      "inequality certified for the supplied level estimates only; the inputs "
      "are numerical upper bounds, not exact infima";
  return rep;
}

}  // namespace nlsys::blockopt
