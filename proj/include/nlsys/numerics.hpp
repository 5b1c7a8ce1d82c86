#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace nlsys::numerics {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
  long samples = 0;
};

/// Ordinary least squares of y against x.
inline LinearFit fit_line(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need at least two matching samples");
  const double n = static_cast<double>(x.size());
  const double mx = x.mean();
  const double my = y.mean();
  const double sxx = ((x - mx) * (x - mx)).sum();
  if (sxx <= 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  const double sxy = ((x - mx) * (y - my)).sum();
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.rms_residual = std::sqrt(((y - (fit.intercept + fit.slope * x)).square()).sum() / n);
  fit.samples = x.size();
  return fit;
}

/// Composite trapezoid on a (possibly non-uniform) grid.
inline double trapezoid(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("trapezoid: need at least two matching samples");
  double acc = 0.0;
  for (Eigen::Index k = 0; k + 1 < x.size(); ++k)
    acc += 0.5 * (x[k + 1] - x[k]) * (y[k] + y[k + 1]);
  return acc;
}

/// Surface area of the unit sphere S^{N-1}; the N=1 value 2 counts the two half-lines.
inline double sphere_area(int dim) {
  if (dim < 1) throw std::invalid_argument("sphere_area: dimension must be >= 1");
  // 2 pi^{N/2} / Gamma(N/2)
  return 2.0 * std::pow(M_PI, 0.5 * dim) / std::tgamma(0.5 * dim);
}

/// Continuous extension of t -> |t|^{e-1} t by 0 at t = 0 (valid for e > 0).
inline double signed_pow(double t, double e) {
  if (t == 0.0) return 0.0;
  const double a = std::pow(std::abs(t), e);
  return t > 0.0 ? a : -a;
}

}  // namespace nlsys::numerics
