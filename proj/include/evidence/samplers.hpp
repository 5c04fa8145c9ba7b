#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "evidence/benchmarks.hpp"
#include "evidence/errors.hpp"
#include "evidence/log_math.hpp"
#include "evidence/model.hpp"

namespace evidence {

/// An MCMC transition that leaves `target` invariant.
struct MarkovKernelSpec {
  LogDensity target;
  std::function<Point(const Point&, Rng&)> step;
};

/// Chain of the mixture Gibbs sampler; labels[t] is 1 (posterior kernel) or 2 (phi draw).
struct LabeledChain {
  std::vector<Point> points;
  std::vector<std::uint8_t> labels;

  std::size_t size() const { return points.size(); }
};

struct ConstrainedWalkConfig {
  int n_steps = 50;
  double step_variance = 0.1;
  int max_retries = 1;  // whole walks re-attempted from the start when no move was accepted

  void validate() const {
    detail::require(n_steps > 0, "ConstrainedWalkConfig: n_steps must be positive");
    detail::require(step_variance > 0.0, "ConstrainedWalkConfig: step_variance must be positive");
    detail::require(max_retries > 0, "ConstrainedWalkConfig: max_retries must be positive");
  }
};

struct WalkResult {
  Point point;
  double log_likelihood = kNegInf;
  int accepted = 0;  // 0 means the walker never left its start point
};

// ------------------------------------------------------------ normal toy Gibbs

namespace detail {

inline void toy_gibbs_sweep(Point& state, const GaussianToyData& d, Rng& rng) {
  const double n = d.n;
  std::normal_distribution<double> z(0.0, 1.0);
  state[0] = d.xbar + std::sqrt(state[1] / n) * z(rng);
  const double dev = d.xbar - state[0];
  const double scale = 0.5 * (n * d.s2 + n * dev * dev);
  std::gamma_distribution<double> g(0.5 * n, 1.0);
  state[1] = scale / g(rng);
}

}  // namespace detail

/// Gibbs sampler on (theta, sigma^2) under Jeffreys' prior:
/// theta | sigma^2 ~ N(xbar, sigma^2/n), sigma^2 | theta ~ InvGamma(n/2, (n s2 + n (xbar - theta)^2) / 2).
inline WeightedSample gibbs_toy_posterior(const GaussianToyData& d, std::size_t n_draws, std::size_t burn_in,
                                          std::uint64_t seed) {
  d.validate();
  detail::require(n_draws >= 1, "gibbs_toy_posterior: n_draws must be >= 1");
  Rng rng(seed);
  Point state{{d.xbar, d.s2}};
  for (std::size_t t = 0; t < burn_in; ++t) detail::toy_gibbs_sweep(state, d, rng);
  std::vector<Point> points;
  points.reserve(n_draws);
  for (std::size_t t = 0; t < n_draws; ++t) {
    detail::toy_gibbs_sweep(state, d, rng);
    points.push_back(state);
  }
  return WeightedSample(std::move(points), std::vector<double>(n_draws, 0.0), SampleSource::kPosteriorMcmc);
}

/// One full Gibbs sweep as a kernel invariant for the toy posterior.
inline MarkovKernelSpec gibbs_toy_kernel(const GaussianToyData& d) {
  d.validate();
  return {[d](const Point& p) { return gaussian_toy_log_posterior_unnorm(p, d); },
          [d](const Point& p, Rng& rng) {
            Point next = p;
            detail::toy_gibbs_sweep(next, d, rng);
            return next;
          }};
}

// ---------------------------------------------------- constrained prior walk

namespace detail {

inline WalkResult constrained_walk(const ModelSpec& model, const Point& start, double start_log_l,
                                   double log_l_threshold, const ConstrainedWalkConfig& cfg, Rng& rng,
                                   bool accept_ties = false) {
  std::normal_distribution<double> z(0.0, std::sqrt(cfg.step_variance));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  WalkResult out{start, start_log_l, 0};
  for (int attempt = 0; attempt < cfg.max_retries && out.accepted == 0; ++attempt) {
    Point current = start;
    double current_log_l = start_log_l;
    double current_log_prior = model.log_prior(start);
    int accepted = 0;
    for (int s = 0; s < cfg.n_steps; ++s) {
      Point proposal = current;
      for (Eigen::Index k = 0; k < proposal.size(); ++k) proposal[k] += z(rng);
      const double lp = model.log_prior(proposal);
      if (lp == kNegInf) continue;
      const double ll = model.log_likelihood(proposal);
      if (!(ll > log_l_threshold) && !(accept_ties && ll == log_l_threshold)) continue;
      // Flat prior: the ratio is 1 and this reduces to the constraint indicator.
      if (lp < current_log_prior && std::log(u(rng)) >= lp - current_log_prior) continue;
      current = std::move(proposal);
      current_log_l = ll;
      current_log_prior = lp;
      ++accepted;
    }
    out = {std::move(current), current_log_l, accepted};
  }
  return out;
}

}  // namespace detail

/// Random-walk Metropolis on the prior restricted to {L > threshold}. Rejected moves leave
/// the walker in place; a walk with zero acceptances returns `start` with accepted == 0.
inline WalkResult constrained_prior_walk(const ModelSpec& model, const Point& start, double log_l_threshold,
                                         const ConstrainedWalkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  detail::require(start.size() == model.dim, "constrained_prior_walk: start has wrong dimension");
  detail::require(model.log_prior(start) > kNegInf, "constrained_prior_walk: start outside prior support");
  const double start_log_l = model.log_likelihood(start);
  detail::require(start_log_l > log_l_threshold, "constrained_prior_walk: start violates the likelihood threshold");
  Rng rng(seed);
  WalkResult r = detail::constrained_walk(model, start, start_log_l, log_l_threshold, cfg, rng);
  if (!(r.log_likelihood > log_l_threshold) || model.log_prior(r.point) == kNegInf)
    throw ConsistencyError("constrained_prior_walk: returned point violates a constraint");
  return r;
}

// ------------------------------------------------------ mixture Gibbs sampler

/// Gibbs sampler on the mixture omega1 * pi L + phi. Each iteration draws the label from the
/// current point's responsibility, then either takes one `kernel` step (label 1) or draws
/// independently from phi (label 2). The chain starts from a phi draw.
inline LabeledChain mixture_gibbs_sampler(const ModelSpec& model, const Density& phi, double omega1,
                                          const MarkovKernelSpec& kernel, std::size_t iterations,
                                          std::uint64_t seed) {
  detail::require(omega1 > 0.0 && std::isfinite(omega1), "mixture_gibbs_sampler: omega1 must be positive");
  detail::require(iterations >= 1, "mixture_gibbs_sampler: T must be >= 1");
  detail::require(phi.dim == model.dim, "mixture_gibbs_sampler: phi dimension mismatch");
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double log_omega = std::log(omega1);

  LabeledChain chain;
  chain.points.reserve(iterations);
  chain.labels.reserve(iterations);
  Point current = phi.sample(rng);
  for (std::size_t t = 0; t < iterations; ++t) {
    const double a = log_omega + model.log_target(current);
    const double b = phi.log_pdf(current);
    if (a == kNegInf && b == kNegInf)
      throw DegenerateSample("mixture_gibbs_sampler: mixture density is zero at the current state");
    const double log_r = a - log_add_exp(a, b);
    const bool posterior_step = std::log(u(rng)) < log_r;
    current = posterior_step ? kernel.step(current, rng) : phi.sample(rng);
    chain.points.push_back(current);
    chain.labels.push_back(posterior_step ? 1 : 2);
  }
  return chain;
}

}  // namespace evidence
