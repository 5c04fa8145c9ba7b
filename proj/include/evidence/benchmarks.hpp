#pragma once

// The two benchmark targets: the normal toy under Jeffreys' prior and the twisted
// ("banana") bivariate normal under a flat box prior, plus reference evidence.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "evidence/errors.hpp"
#include "evidence/model.hpp"

namespace evidence {

/// Summary statistics of n normal observations. Convention: sum (x_i - xbar)^2 = n * s2.
struct GaussianToyData {
  int n = 10;
  double xbar = 0.0;
  double s2 = 1.0;

  void validate() const {
    detail::require(n >= 2, "GaussianToyData: n must be >= 2");
    detail::require(s2 > 0.0 && std::isfinite(s2), "GaussianToyData: s2 must be positive");
    detail::require(std::isfinite(xbar), "GaussianToyData: xbar must be finite");
  }
};

struct BananaParams {
  double beta = 0.03;
  double sigma1_sq = 100.0;
  double lower = -40.0;  // same bounds on both axes
  double upper = 40.0;

  void validate() const {
    detail::require(sigma1_sq > 0.0, "BananaParams: sigma1_sq must be positive");
    detail::require(upper > lower, "BananaParams: degenerate box");
  }
  Box box() const {
    return Box(Eigen::Vector2d(lower, lower), Eigen::Vector2d(upper, upper));
  }
};

struct ReferenceEvidence {
  double value = 0.0;
  std::string method;      // grid | adaptive-quadrature | analytic
  std::string resolution;  // e.g. "1000x1000"
};

// ---------------------------------------------------------------- normal toy

/// Log-likelihood of the n observations given (theta, sigma^2); -inf for sigma^2 <= 0.
inline double gaussian_toy_log_likelihood(const Point& p, const GaussianToyData& d) {
  const double theta = p[0];
  const double var = p[1];
  if (!(var > 0.0)) return kNegInf;
  const double n = d.n;
  const double dev = d.xbar - theta;
  return -0.5 * n * std::log(2.0 * std::numbers::pi * var) - (n * d.s2 + n * dev * dev) / (2.0 * var);
}

/// Unnormalized posterior under Jeffreys' prior 1/sigma^2.
inline double gaussian_toy_log_posterior_unnorm(const Point& p, const GaussianToyData& d) {
  detail::require(p.size() == 2, "gaussian_toy_log_posterior_unnorm: point must be (theta, sigma^2)");
  const double ll = gaussian_toy_log_likelihood(p, d);
  if (ll == kNegInf) return kNegInf;
  return ll - std::log(p[1]);
}

/// Closed form: integrating theta gives sqrt(2 pi sigma^2 / n), leaving an inverse-gamma
/// kernel in sigma^2 with shape (n-1)/2 and scale n*s2/2.
inline double gaussian_toy_analytic_log_evidence(const GaussianToyData& d) {
  d.validate();
  const double n = d.n;
  const double a = 0.5 * (n - 1.0);
  return -a * std::log(2.0 * std::numbers::pi) - 0.5 * std::log(n) + std::lgamma(a) -
         a * std::log(0.5 * n * d.s2);
}

/// Nested 1-D adaptive quadrature of exp(log posterior): theta over a +-40 sd window
/// (the integrand is Gaussian in theta), sigma^2 over (0, inf).
inline double gaussian_toy_quadrature_evidence(const GaussianToyData& d) {
  d.validate();
  using boost::math::quadrature::exp_sinh;
  using boost::math::quadrature::gauss_kronrod;
  auto inner = [&](double var) {
    if (!(var > 0.0)) return 0.0;
    const double half = 40.0 * std::sqrt(var / d.n);
    auto f = [&](double theta) {
      return std::exp(gaussian_toy_log_posterior_unnorm(Point{{theta, var}}, d));
    };
    return gauss_kronrod<double, 61>::integrate(f, d.xbar - half, d.xbar + half, 10, 1e-13);
  };
  exp_sinh<double> outer;
  return outer.integrate(inner, 0.0, std::numeric_limits<double>::infinity(), 1e-12);
}

/// Analytic value, cross-checked against quadrature at 1e-4 relative.
inline ReferenceEvidence gaussian_toy_reference_evidence(const GaussianToyData& d) {
  const double analytic = std::exp(gaussian_toy_analytic_log_evidence(d));
  const double quad = gaussian_toy_quadrature_evidence(d);
  if (!(std::abs(quad - analytic) <= 1e-4 * analytic))
    throw ConsistencyError("gaussian_toy_reference_evidence: analytic and quadrature values disagree");
  return {analytic, "analytic", "closed-form"};
}

/// Improper Jeffreys-prior toy posterior as a ModelSpec (no prior sampler).
inline ModelSpec gaussian_toy_model(const GaussianToyData& d) {
  d.validate();
  ModelSpec m;
  m.dim = 2;
  m.log_prior = [](const Point& p) { return p[1] > 0.0 ? -std::log(p[1]) : kNegInf; };
  m.prior_normalized = false;
  m.log_likelihood = [d](const Point& p) { return gaussian_toy_log_likelihood(p, d); };
  return m;
}

/// The toy likelihood under a flat, normalized prior on a box in (theta, sigma^2).
inline ModelSpec gaussian_toy_box_model(const GaussianToyData& d, const Box& box) {
  d.validate();
  detail::require(box.dim() == 2, "gaussian_toy_box_model: box must be 2-D");
  detail::require(box.lower[1] >= 0.0, "gaussian_toy_box_model: sigma^2 range must be positive");
  ModelSpec m;
  m.dim = 2;
  const double log_height = -box.log_volume();
  m.log_prior = [box, log_height](const Point& p) { return box.contains(p) ? log_height : kNegInf; };
  m.prior_normalized = true;
  m.log_likelihood = [d](const Point& p) { return gaussian_toy_log_likelihood(p, d); };
  m.prior_sampler = [box](Rng& rng) { return box.sample_uniform(rng); };
  m.support = box;
  return m;
}

// -------------------------------------------------------------------- banana

/// log N2((t1, t2); 0, diag(sigma1_sq, 1)).
inline double untwisted_log_density(double t1, double t2, double sigma1_sq) {
  return -std::log(2.0 * std::numbers::pi) - 0.5 * std::log(sigma1_sq) - 0.5 * t1 * t1 / sigma1_sq -
         0.5 * t2 * t2;
}

/// Twist map (t1, t2) -> (t1, t2 + beta (t1^2 - sigma1_sq)); unit Jacobian.
inline Eigen::Vector2d banana_twist(const Point& p, const BananaParams& b) {
  return {p[0], p[1] + b.beta * (p[0] * p[0] - b.sigma1_sq)};
}

inline double banana_log_density(const Point& p, const BananaParams& b) {
  detail::require(p.size() == 2, "banana_log_density: point must be 2-D");
  const Eigen::Vector2d t = banana_twist(p, b);
  return untwisted_log_density(t[0], t[1], b.sigma1_sq);
}

inline ModelSpec banana_model(const BananaParams& b) {
  b.validate();
  const Box box = b.box();
  const double log_height = -box.log_volume();
  ModelSpec m;
  m.dim = 2;
  m.log_prior = [box, log_height](const Point& p) { return box.contains(p) ? log_height : kNegInf; };
  m.prior_normalized = true;
  m.log_likelihood = [b](const Point& p) { return banana_log_density(p, b); };
  m.prior_sampler = [box](Rng& rng) { return box.sample_uniform(rng); };
  m.support = box;
  return m;
}

namespace detail {

/// Pairwise summation in a fixed order; result depends only on the input order.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.subspan(0, half)) + pairwise_sum(v.subspan(half));
}

struct BananaGridSums {
  double mass;       // sum psi * cell area * prior height
  double theta1;     // first moments, unnormalized
  double theta2;
};

inline BananaGridSums banana_grid_sums(const BananaParams& b, int cells) {
  b.validate();
  require(cells >= 100, "banana grid: cells_per_axis must be >= 100");
  const double h = (b.upper - b.lower) / cells;
  const double log_height = -2.0 * std::log(b.upper - b.lower);
  std::vector<double> row_mass(cells), row_t1(cells), row_t2(cells);
  std::vector<double> mass(cells), t1m(cells), t2m(cells);
  for (int i = 0; i < cells; ++i) {
    const double t1 = b.lower + h * (i + 0.5);
    for (int j = 0; j < cells; ++j) {
      const double t2 = b.lower + h * (j + 0.5);
      const double v = std::exp(banana_log_density(Point{{t1, t2}}, b) + log_height);
      mass[j] = v;
      t1m[j] = v * t1;
      t2m[j] = v * t2;
    }
    row_mass[i] = pairwise_sum(mass);
    row_t1[i] = pairwise_sum(t1m);
    row_t2[i] = pairwise_sum(t2m);
  }
  const double area = h * h;
  return {pairwise_sum(row_mass) * area, pairwise_sum(row_t1) * area, pairwise_sum(row_t2) * area};
}

}  // namespace detail

/// Midpoint Riemann sum of psi * prior over the box.
inline double banana_grid_evidence(const BananaParams& b, int cells_per_axis) {
  return detail::banana_grid_sums(b, cells_per_axis).mass;
}

/// Nested adaptive Gauss-Kronrod; the inner theta2 integral is split at the ridge
/// theta2 = -beta (theta1^2 - sigma1_sq) so the narrow peak sits on a panel boundary.
inline double banana_quadrature_evidence(const BananaParams& b) {
  b.validate();
  using boost::math::quadrature::gauss_kronrod;
  const double log_height = -2.0 * std::log(b.upper - b.lower);
  auto inner = [&](double t1) {
    auto f = [&](double t2) { return std::exp(banana_log_density(Point{{t1, t2}}, b) + log_height); };
    const double ridge = std::clamp(-b.beta * (t1 * t1 - b.sigma1_sq), b.lower, b.upper);
    double total = 0.0;
    if (ridge > b.lower) total += gauss_kronrod<double, 61>::integrate(f, b.lower, ridge, 15, 1e-12);
    if (ridge < b.upper) total += gauss_kronrod<double, 61>::integrate(f, ridge, b.upper, 15, 1e-12);
    return total;
  };
  return gauss_kronrod<double, 61>::integrate(inner, b.lower, b.upper, 15, 1e-11);
}

/// Grid value, verified against adaptive quadrature at 1e-3 relative.
inline ReferenceEvidence banana_reference_evidence(const BananaParams& b, int cells_per_axis) {
  const double grid = banana_grid_evidence(b, cells_per_axis);
  const double quad = banana_quadrature_evidence(b);
  if (!(std::abs(grid - quad) <= 1e-3 * quad))
    throw ConsistencyError("banana_reference_evidence: grid and quadrature values disagree");
  return {grid, "grid", std::to_string(cells_per_axis) + "x" + std::to_string(cells_per_axis)};
}

/// Posterior means (E[theta1], E[theta2]) under psi * prior / Z by the same midpoint grid.
inline std::pair<double, double> banana_reference_moments(const BananaParams& b, int cells_per_axis) {
  const auto s = detail::banana_grid_sums(b, cells_per_axis);
  if (!(s.mass > 0.0)) throw DegenerateSample("banana_reference_moments: zero mass on grid");
  return {s.theta1 / s.mass, s.theta2 / s.mass};
}

}  // namespace evidence
