#include "nlsys/groundstate.hpp"

#include "nlsys/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nlsys::groundstate {

namespace {

double nonlin(double w, double p) {
  // |w|^{2p-2} w, continuous at 0 for p > 1
  return numerics::signed_pow(w, 2.0 * p - 1.0);
}

struct Ode {
  int dim;
  double p;

  // s = (w, v) with v = w'; returns (w', v')
  void rhs(double r, double w, double v, double& dw, double& dv) const {
    dw = v;
    const double f = w - nonlin(w, p);
    if (r > 1e-12) {
      dv = f - (dim - 1) * v / r;
    } else {
      dv = f / dim;  // radial limit: N w''(0) = w(0) - w(0)^{2p-1}
    }
  }

  void rk4(double r, double h, double& w, double& v) const {
    double k1w, k1v, k2w, k2v, k3w, k3v, k4w, k4v;
    rhs(r, w, v, k1w, k1v);
    rhs(r + 0.5 * h, w + 0.5 * h * k1w, v + 0.5 * h * k1v, k2w, k2v);
    rhs(r + 0.5 * h, w + 0.5 * h * k2w, v + 0.5 * h * k2v, k3w, k3v);
    rhs(r + h, w + h * k3w, v + h * k3v, k4w, k4v);
    w += h / 6.0 * (k1w + 2.0 * k2w + 2.0 * k3w + k4w);
    v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
  }
};

enum class Fate { Crosses, FailsToDecay, Undecided };

// Integrate from the center and classify the trajectory: crossing zero means
// the amplitude is too large, turning back upward (or exceeding 2 w(0)) means
// it is too small.
Fate classify(const Ode& ode, double a, const ShootingConfig& cfg) {
  double w = a, v = 0.0, r = 0.0;
  const long steps = static_cast<long>(std::ceil(cfg.r_max / cfg.step));
  for (long k = 0; k < steps; ++k) {
    ode.rk4(r, cfg.step, w, v);
    r += cfg.step;
    if (w < -1e-12) return Fate::Crosses;
    if (w > 2.0 * a) return Fate::FailsToDecay;
    if (v > 0.0 && w > 0.0) return Fate::FailsToDecay;
  }
  return Fate::Undecided;  // still descending at r_max: treat as not yet crossed
}

// Modified-Bessel-type far field of the linearized equation:
//   g(r) = r^{-(N-1)/2} e^{-r} (1 + c1/r),  c1 = (N-1)(N-3)/8.
struct Tail {
  double a;   // (N-1)/2
  double c1;  // (N-1)(N-3)/8

  explicit Tail(int dim) : a(0.5 * (dim - 1)), c1((dim - 1) * (dim - 3) / 8.0) {}

  double g(double r) const { return std::pow(r, -a) * std::exp(-r) * (1.0 + c1 / r); }
  double dg(double r) const {
    const double e = std::exp(-r);
    const double poly = std::pow(r, -a) * (1.0 + c1 / r);
    const double dpoly = -a * std::pow(r, -a - 1.0) * (1.0 + c1 / r) + std::pow(r, -a) * (-c1 / (r * r));
    return e * (dpoly - poly);
  }
};

}  // namespace

double RadialProfile::value_at(double r) const {
  r = std::abs(r);
  const Eigen::Index n = radii.size();
  if (n == 0 || r > radii[n - 1]) return 0.0;
  const double h = step();
  if (h <= 0.0) return values[0];
  Eigen::Index k = static_cast<Eigen::Index>(std::floor(r / h));
  k = std::clamp<Eigen::Index>(k, 1, n - 3);
  // 4-point Lagrange on nodes k-1 .. k+2
  const double t = (r - radii[k]) / h;  // in [-1, 2] after clamping
  const double wm = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return wm * values[k - 1] + w0 * values[k] + w1 * values[k + 1] + w2 * values[k + 2];
}

RadialProfile solve_radial_ground_state(int dim, double p, const ShootingConfig& cfg) {
  if (dim < 1) throw std::invalid_argument("solve_radial_ground_state: dimension must be >= 1");
  if (p <= 1.0) throw SubcriticalityError("exponent must satisfy p > 1");
  if (dim >= 3 && p >= static_cast<double>(dim) / (dim - 2))
    throw SubcriticalityError("exponent must satisfy p < N/(N-2)");
  if (cfg.step <= 0.0 || cfg.r_max <= 1.0)
    throw std::invalid_argument("solve_radial_ground_state: bad grid");

  const Ode ode{dim, p};

  // Establish the bisection bracket starting from [1, 10].
  double lo = 1.0, hi = 10.0;
  Fate f_lo = classify(ode, lo, cfg);
  int guard = 0;
  while (f_lo == Fate::Crosses && guard++ < cfg.max_bracket_doublings) {
    lo *= 0.5;
    f_lo = classify(ode, lo, cfg);
  }
  if (f_lo == Fate::Crosses) throw NoBracketError("no undershoot amplitude found");
  Fate f_hi = classify(ode, hi, cfg);
  guard = 0;
  while (f_hi != Fate::Crosses && guard++ < cfg.max_bracket_doublings) {
    hi *= 2.0;
    f_hi = classify(ode, hi, cfg);
  }
  if (f_hi != Fate::Crosses) throw NoBracketError("no crossing amplitude found");

  for (int it = 0; it < cfg.max_bisections; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (classify(ode, mid, cfg) == Fate::Crosses)
      hi = mid;
    else
      lo = mid;
    if (hi - lo <= 8.0 * std::numeric_limits<double>::epsilon() * hi) break;
  }
  const double a = lo;  // undershoot side: positive until the handover point

  // Final pass: keep ODE samples down to match_value, then continue with the
  // far-field asymptote (the bisected trajectory is contaminated by the
  // bracket width amplified along the unstable direction beyond that point).
  const long steps = static_cast<long>(std::llround(cfg.r_max / cfg.step));
  RadialProfile prof;
  prof.dimension = dim;
  prof.exponent = p;
  prof.center_value = a;
  prof.radii = Eigen::ArrayXd::LinSpaced(steps + 1, 0.0, steps * cfg.step);
  prof.values = Eigen::ArrayXd::Zero(steps + 1);
  prof.slopes = Eigen::ArrayXd::Zero(steps + 1);

  double w = a, v = 0.0;
  prof.values[0] = w;
  long match = -1;
  for (long k = 1; k <= steps; ++k) {
    ode.rk4((k - 1) * cfg.step, cfg.step, w, v);
    prof.values[k] = w;
    prof.slopes[k] = v;
    if (w <= 0.0 || (v > 0.0 && k * cfg.step > 1.0))
      throw std::invalid_argument(
          "r_max too small: trajectory lost before the tail handover value");
    if (w < cfg.match_value && v < 0.0) {
      match = k;
      break;
    }
  }
  if (match < 0)
    throw std::invalid_argument("r_max too small: profile does not reach the handover value");

  const Tail tail(dim);
  const double rm = prof.radii[match];
  const double scale = prof.values[match] / tail.g(rm);
  for (long k = match; k <= steps; ++k) {
    const double r = prof.radii[k];
    prof.values[k] = scale * tail.g(r);
    prof.slopes[k] = scale * tail.dg(r);
  }
  if (prof.values[steps] > cfg.tail_tol)
    throw std::invalid_argument("r_max too small for the requested tail tolerance");

  // Norms: trapezoid with the r^{N-1} volume weight.
  const double area = numerics::sphere_area(dim);
  Eigen::ArrayXd wgt = prof.radii.pow(dim - 1);
  if (dim == 1) wgt = Eigen::ArrayXd::Ones(prof.radii.size());
  prof.norm_sq = area * numerics::trapezoid(
                            prof.radii, ((prof.slopes.square() + prof.values.square()) * wgt).eval());
  prof.l2p_norm_pow =
      area * numerics::trapezoid(prof.radii, (prof.values.pow(2.0 * p) * wgt).eval());
  return prof;
}

BarrierCertificate barrier_certificate(const Eigen::ArrayXd& xs, const Eigen::ArrayXd& w,
                                       const std::function<double(double)>& V,
                                       const Eigen::ArrayXd& f, double mu, double delta,
                                       double rho, double C) {
  if (xs.size() != w.size() || xs.size() != f.size() || xs.size() < 2)
    throw std::invalid_argument("barrier_certificate: mismatched samples");
  if (mu <= 0.0 || delta <= mu) throw std::invalid_argument("barrier_certificate: need 0 < mu < delta");

  BarrierCertificate cert;
  cert.mu = mu;
  cert.delta = delta;
  cert.rho = rho;

  double sigma = std::numeric_limits<double>::infinity();
  double spacing = 0.0;
  long outside = 0;
  for (Eigen::Index k = 0; k < xs.size(); ++k) {
    const double r = std::abs(xs[k]);
    if (k > 0) spacing = std::max(spacing, std::abs(xs[k] - xs[k - 1]));
    if (r >= rho) {
      sigma = std::min(sigma, V(xs[k]));
      ++outside;
    }
  }
  if (outside == 0) throw std::invalid_argument("barrier_certificate: no samples outside rho");
  cert.sigma = sigma;
  cert.epsilon = sigma - mu * mu;
  cert.sample_spacing = spacing;
  if (cert.epsilon <= 0.0) throw SigmaTooSmallError("exterior potential floor does not exceed mu^2");

  // Pick t above the comparison threshold and above w on the sphere |x| = rho;
  // the boundary value is read from the samples nearest to rho.
  const double t_eq = (C / cert.epsilon) * std::exp((mu - delta) * rho);
  double t_boundary = 0.0;
  for (Eigen::Index k = 0; k < xs.size(); ++k) {
    const double r = std::abs(xs[k]);
    if (r >= rho && r <= rho + std::max(spacing, 1e-12))
      t_boundary = std::max(t_boundary, w[k] * std::exp(mu * r));
  }
  double t = std::max(t_eq, t_boundary) * (1.0 + 1e-9);
  if (t <= 0.0) t = 1.0;  // zero data: any positive multiplier works
  if (!std::isfinite(t)) throw BoundaryFailsError("no admissible multiplier below overflow");
  cert.t = t;

  cert.pass = true;
  cert.r_lo = std::numeric_limits<double>::infinity();
  cert.r_hi = 0.0;
  for (Eigen::Index k = 0; k < xs.size(); ++k) {
    const double r = std::abs(xs[k]);
    if (r < rho) continue;
    cert.r_lo = std::min(cert.r_lo, r);
    cert.r_hi = std::max(cert.r_hi, r);
    ++cert.samples_checked;
    if (cert.pass && w[k] > t * std::exp(-mu * r)) {
      cert.pass = false;
      cert.first_violation_r = r;
    }
  }
  return cert;
}

std::vector<CounterexampleSample> sublinear_counterexample(const Eigen::ArrayXd& xs) {
  std::vector<CounterexampleSample> out;
  out.reserve(xs.size());
  for (Eigen::Index k = 0; k < xs.size(); ++k) {
    const double r = std::abs(xs[k]);
    if (r <= 1.0) throw SampleInsideUnitBallError("samples must satisfy |x| > 1");
    CounterexampleSample s;
    s.x = xs[k];
    s.w = std::pow(r, -2.0 / 3.0);
    s.c = std::pow(r, -1.0 / 3.0) - (10.0 / 9.0) * std::pow(r, -7.0 / 3.0);
    out.push_back(s);
  }
  return out;
}

}  // namespace nlsys::groundstate
