#pragma once

#include <cmath>
#include <cstdint>
#include <algorithm>
#include <functional>
#include <limits>
#include <span>
#include <optional>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "evidence/errors.hpp"
#include "evidence/log_math.hpp"

namespace evidence {

/// A parameter value in model units. Length is the model dimension.
using Point = Eigen::VectorXd;

/// Every stochastic operation owns one of these, seeded from an explicit 64-bit seed.
using Rng = std::mt19937_64;

using LogDensity = std::function<double(const Point&)>;
using Sampler = std::function<Point(Rng&)>;

inline bool is_finite_point(const Point& p) { return p.allFinite(); }

/// Axis-aligned support box, open on every side.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Box(Eigen::VectorXd lo, Eigen::VectorXd hi) : lower(std::move(lo)), upper(std::move(hi)) {
    detail::require(lower.size() == upper.size() && lower.size() > 0, "Box: bound size mismatch");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      if (!(upper[i] > lower[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i]))
        throw ContractViolation("Box: degenerate or non-finite side");
    }
  }

  int dim() const { return static_cast<int>(lower.size()); }

  bool contains(const Point& p) const {
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      if (!(p[i] > lower[i] && p[i] < upper[i])) return false;
    }
    return true;
  }

  double log_volume() const { return (upper - lower).array().log().sum(); }

  Point sample_uniform(Rng& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Point p(lower.size());
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      // uniform_real_distribution can return the lower endpoint; redraw to stay in the open box.
      do {
        p[i] = lower[i] + (upper[i] - lower[i]) * u(rng);
      } while (!(p[i] > lower[i] && p[i] < upper[i]));
    }
    return p;
  }
};

/// A target for evidence estimation: prior times likelihood over a parameter space.
struct ModelSpec {
  int dim = 0;
  LogDensity log_prior;
  bool prior_normalized = false;
  LogDensity log_likelihood;
  Sampler prior_sampler;  // may be empty when the prior is improper
  std::optional<Box> support;

  /// log prior + log likelihood, short-circuiting the likelihood outside the prior support.
  double log_target(const Point& p) const {
    const double lp = log_prior(p);
    if (lp == kNegInf) return kNegInf;
    return lp + log_likelihood(p);
  }
};

/// A normalized density together with an exact sampler for it (proposal, instrumental φ).
struct Density {
  int dim = 0;
  LogDensity log_pdf;
  Sampler sample;
};

enum class SampleSource { kPosteriorMcmc, kPrior, kProposal, kNested };

inline std::string_view to_string(SampleSource s) {
  switch (s) {
    case SampleSource::kPosteriorMcmc: return "posterior-mcmc";
    case SampleSource::kPrior: return "prior";
    case SampleSource::kProposal: return "proposal";
    case SampleSource::kNested: return "nested";
  }
  return "unknown";
}

/// Points with log-weights. Equal-weight MCMC output carries log-weights of 0.
struct WeightedSample {
  std::vector<Point> points;
  std::vector<double> log_weights;
  SampleSource source = SampleSource::kProposal;

  WeightedSample() = default;
  WeightedSample(std::vector<Point> pts, std::vector<double> lw, SampleSource src)
      : points(std::move(pts)), log_weights(std::move(lw)), source(src) {
    validate();
  }

  std::size_t size() const { return points.size(); }

  void validate() const {
    if (points.empty() || points.size() != log_weights.size())
      throw ContractViolation("WeightedSample: points and log_weights must have equal nonzero length");
    for (double lw : log_weights) {
      if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity())
        throw ContractViolation("WeightedSample: log-weight is NaN or +inf");
    }
  }
};

struct EvidenceEstimate {
  double log_evidence = kNegInf;
  double std_error = 0.0;  // linear evidence scale
  double ess = 0.0;
  std::size_t n_draws = 0;

  double evidence() const { return std::exp(log_evidence); }
  double relative_error() const { return std_error / evidence(); }
};

/// A posterior expectation with its Monte Carlo standard error.
struct MomentEstimate {
  double value = 0.0;
  double std_error = 0.0;
};

namespace detail {

/// Mean and sample standard deviation of exp(lw - shift); the caller rescales by exp(shift).
struct ScaledMoments {
  double shift;
  double mean;
  double sd;
};

inline ScaledMoments scaled_moments(std::span<const double> log_values) {
  const double shift = *std::max_element(log_values.begin(), log_values.end());
  if (shift == kNegInf) return {kNegInf, 0.0, 0.0};
  const auto n = static_cast<double>(log_values.size());
  double mean = 0.0;
  for (double v : log_values) mean += std::exp(v - shift);
  mean /= n;
  double ss = 0.0;
  for (double v : log_values) {
    const double d = std::exp(v - shift) - mean;
    ss += d * d;
  }
  const double sd = log_values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return {shift, mean, sd};
}

}  // namespace detail

/// Mean-of-weights evidence: log(1/n sum exp(lw_i)) with the standard error of that mean.
inline EvidenceEstimate evidence_from_weights(const WeightedSample& sample) {
  sample.validate();
  // Sorted so the reductions do not depend on sample order.
  std::vector<double> sorted(sample.log_weights);
  std::sort(sorted.begin(), sorted.end());
  const std::span<const double> lw(sorted);
  const auto n = static_cast<double>(lw.size());
  const double lse = log_sum_exp(lw);
  if (lse == kNegInf) throw DegenerateSample("evidence_from_weights: every weight is zero");
  const auto m = detail::scaled_moments(lw);
  EvidenceEstimate est;
  est.log_evidence = lse - std::log(n);
  est.std_error = m.sd > 0.0 ? std::exp(m.shift + std::log(m.sd) - 0.5 * std::log(n)) : 0.0;
  est.ess = effective_sample_size(lw);
  est.n_draws = lw.size();
  return est;
}

/// Self-normalized importance estimate of E[f]; standard error sqrt(sum wbar^2 (f - mean)^2).
inline MomentEstimate weighted_moment(const WeightedSample& sample, const std::function<double(const Point&)>& f) {
  sample.validate();
  const double total = log_sum_exp(sample.log_weights);
  if (total == kNegInf) throw DegenerateSample("weighted_moment: every weight is zero");
  std::vector<double> w(sample.size()), fv(sample.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    w[i] = std::exp(sample.log_weights[i] - total);
    fv[i] = w[i] > 0.0 ? f(sample.points[i]) : 0.0;
    mean += w[i] * fv[i];
  }
  double var = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) var += w[i] * w[i] * (fv[i] - mean) * (fv[i] - mean);
  return {mean, std::sqrt(var)};
}

}  // namespace evidence
