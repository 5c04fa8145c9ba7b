#pragma once

// Nested sampling with a constrained random-walk replacement step.
//
// Each iteration removes the lowest-likelihood live point, records it as a dead point at
// level L_i with prior mass x_i, and replaces it by walking a copy of another live point
// under the constraint L > L_i. Evidence is the Riemann sum sum (x_{i-1} - x_i) L_i plus
// the live remainder x_K * mean(L_live).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <ostream>
#include <random>
#include <vector>

#include "evidence/errors.hpp"
#include "evidence/log_math.hpp"
#include "evidence/model.hpp"
#include "evidence/samplers.hpp"

namespace evidence {

enum class ShrinkageSchedule {
  kDeterministic,  // log x_i = -i / N
  kStochastic,     // x_i = t_i x_{i-1}, t_i ~ Beta(N, 1)
};

struct NestedConfig {
  int n_live = 1000;
  ConstrainedWalkConfig walk{};
  std::size_t max_iterations = 10000;
  bool stop_on_remaining = true;  // false reproduces a fixed iteration count
  double remaining_tol = 1e-8;
  ShrinkageSchedule schedule = ShrinkageSchedule::kDeterministic;

  void validate() const {
    detail::require(n_live >= 2, "NestedConfig: need at least 2 live points");
    detail::require(max_iterations >= 1, "NestedConfig: max_iterations must be >= 1");
    detail::require(remaining_tol > 0.0, "NestedConfig: remaining_tol must be positive");
    walk.validate();
  }
};

struct DeadPoint {
  Point point;
  double log_likelihood;
};

struct NestedTermination {
  std::size_t iterations = 0;
  double log_remaining = kNegInf;  // log(x_K * mean live likelihood)
  bool by_remaining_rule = false;
  std::size_t immobile_walks = 0;  // replacement walks that accepted no move
};

struct NestedRun {
  int n_live = 0;
  std::vector<DeadPoint> dead;
  std::vector<double> log_prior_mass;  // log x_i, one per dead point
  ShrinkageSchedule schedule = ShrinkageSchedule::kDeterministic;
  NestedTermination termination;
  std::vector<Point> live_points;
  std::vector<double> live_log_likelihoods;

  std::size_t size() const { return dead.size(); }

  /// log of the mean likelihood over the final live set, summed in sorted order so that the
  /// result does not depend on live-point labels.
  double log_mean_live_likelihood() const {
    std::vector<double> sorted(live_log_likelihoods);
    std::sort(sorted.begin(), sorted.end());
    return log_sum_exp(sorted) - std::log(static_cast<double>(sorted.size()));
  }
};

namespace detail {

inline double log_prior_mass_at(const NestedRun& run, std::size_t i) {
  return i == 0 ? 0.0 : run.log_prior_mass[i - 1];
}

/// log(x_{i-1} - x_i) for dead point i (1-based).
inline double log_shell_width(const NestedRun& run, std::size_t i) {
  return log_sub_exp(log_prior_mass_at(run, i - 1), log_prior_mass_at(run, i));
}

inline bool all_identical(const std::vector<Point>& pts) {
  for (std::size_t i = 1; i < pts.size(); ++i) {
    if (pts[i] != pts[0]) return false;
  }
  return true;
}

}  // namespace detail

inline NestedRun nested_sampling_run(const ModelSpec& model, const NestedConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  detail::require(static_cast<bool>(model.prior_sampler), "nested_sampling_run: model needs a prior sampler");
  Rng rng(seed);
  const auto n = static_cast<std::size_t>(cfg.n_live);
  const double nd = static_cast<double>(n);

  NestedRun run;
  run.n_live = cfg.n_live;
  run.schedule = cfg.schedule;
  run.live_points.reserve(n);
  run.live_log_likelihoods.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    Point p = model.prior_sampler(rng);
    run.live_log_likelihoods.push_back(model.log_likelihood(p));
    run.live_points.push_back(std::move(p));
  }
  run.dead.reserve(cfg.max_iterations);
  run.log_prior_mass.reserve(cfg.max_iterations);

  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<std::size_t> pick(0, n - 2);
  double log_x = 0.0;
  double log_z = kNegInf;
  for (std::size_t i = 1; i <= cfg.max_iterations; ++i) {
    auto& ll = run.live_log_likelihoods;
    const auto worst = static_cast<std::size_t>(std::min_element(ll.begin(), ll.end()) - ll.begin());
    const double level = ll[worst];
    if (!run.dead.empty() && level < run.dead.back().log_likelihood)
      throw ConsistencyError("nested_sampling_run: likelihood levels decreased");

    const double prev_log_x = log_x;
    if (cfg.schedule == ShrinkageSchedule::kDeterministic) {
      log_x = -static_cast<double>(i) / nd;
    } else {
      double v;
      do v = u(rng);
      while (v == 0.0);
      log_x = prev_log_x + std::log(v) / nd;
    }
    run.dead.push_back({run.live_points[worst], level});
    run.log_prior_mass.push_back(log_x);
    log_z = log_add_exp(log_z, log_sub_exp(prev_log_x, log_x) + level);

    // Replacement: walk from a uniformly chosen surviving live point. Moves onto the level
    // itself are allowed so that likelihood plateaus do not freeze the walkers.
    std::size_t start = pick(rng);
    if (start >= worst) ++start;
    const std::uint64_t walk_seed = rng();
    Rng walk_rng(walk_seed);
    WalkResult w = detail::constrained_walk(model, run.live_points[start], ll[start], level, cfg.walk, walk_rng, true);
    if (w.accepted == 0) {
      ++run.termination.immobile_walks;
      if (detail::all_identical(run.live_points))
        throw ConsistencyError("nested_sampling_run: constrained walk stuck, all live points identical");
    }
    run.live_points[worst] = std::move(w.point);
    ll[worst] = w.log_likelihood;
    run.termination.iterations = i;

    if (cfg.stop_on_remaining) {
      const double max_live = *std::max_element(ll.begin(), ll.end());
      if (log_x + max_live < std::log(cfg.remaining_tol) + log_z) {
        run.termination.by_remaining_rule = true;
        break;
      }
    }
  }
  run.termination.log_remaining = log_x + run.log_mean_live_likelihood();
  return run;
}

/// Riemann-sum evidence with the live remainder. The standard error uses the usual
/// sqrt(H / N) log-evidence spread, H the information of the posterior relative to the prior.
inline EvidenceEstimate nested_evidence(const NestedRun& run) {
  if (run.dead.empty()) throw ContractViolation("nested_evidence: run has no dead points");
  const std::size_t k = run.dead.size();
  std::vector<double> terms(k + 1);
  for (std::size_t i = 1; i <= k; ++i) terms[i - 1] = detail::log_shell_width(run, i) + run.dead[i - 1].log_likelihood;
  terms[k] = run.termination.log_remaining;
  const double log_z = log_sum_exp(terms);
  if (log_z == kNegInf) throw DegenerateSample("nested_evidence: every weight is zero");

  // H = sum p_i (log L_i - log Z), the remainder counted at the mean live likelihood.
  double info = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double lp = terms[i] - log_z;
    if (lp > kNegInf) info += std::exp(lp) * (run.dead[i].log_likelihood - log_z);
  }
  const double lp_rem = terms[k] - log_z;
  if (lp_rem > kNegInf) info += std::exp(lp_rem) * (run.log_mean_live_likelihood() - log_z);
  info = std::max(info, 0.0);

  EvidenceEstimate est;
  est.log_evidence = log_z;
  est.std_error = std::exp(log_z) * std::sqrt(info / static_cast<double>(run.n_live));
  terms.pop_back();
  est.ess = effective_sample_size(terms);
  est.n_draws = k;
  return est;
}

/// Summation over likelihood increments with L_0 = 0 below the first level:
/// x_0 L_1 + sum_{i=1}^{K-1} (L_{i+1} - L_i) x_i plus the same live remainder. Summation by
/// parts shows it differs from the Riemann form by -x_K L_K.
inline double nested_evidence_lebesgue(const NestedRun& run) {
  if (run.dead.empty()) throw ContractViolation("nested_evidence_lebesgue: run has no dead points");
  std::vector<double> terms;
  terms.reserve(run.dead.size() + 1);
  terms.push_back(run.dead.front().log_likelihood);
  for (std::size_t i = 1; i < run.dead.size(); ++i) {
    const double inc = log_sub_exp(run.dead[i].log_likelihood, run.dead[i - 1].log_likelihood);
    terms.push_back(inc + run.log_prior_mass[i - 1]);
  }
  terms.push_back(run.termination.log_remaining);
  std::sort(terms.begin(), terms.end());
  return std::exp(log_sum_exp(terms));
}

/// Normalized posterior weights w_i L_i / sum over the dead points.
inline std::vector<double> nested_posterior_weights(const NestedRun& run) {
  if (run.dead.empty()) throw ContractViolation("nested_posterior_weights: run has no dead points");
  std::vector<double> lw(run.dead.size());
  for (std::size_t i = 1; i <= run.dead.size(); ++i)
    lw[i - 1] = detail::log_shell_width(run, i) + run.dead[i - 1].log_likelihood;
  const double total = log_sum_exp(lw);
  if (total == kNegInf) throw DegenerateSample("nested_posterior_weights: every weight is zero");
  std::vector<double> w(lw.size());
  for (std::size_t i = 0; i < lw.size(); ++i) w[i] = std::exp(lw[i] - total);
  return w;
}

/// Self-normalized importance estimate of E[f] from the dead points.
inline MomentEstimate nested_posterior_estimates(const NestedRun& run, const std::function<double(const Point&)>& f) {
  const auto w = nested_posterior_weights(run);
  std::vector<double> fv(w.size());
  double mean = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    fv[i] = f(run.dead[i].point);
    mean += w[i] * fv[i];
  }
  double var = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) var += w[i] * w[i] * (fv[i] - mean) * (fv[i] - mean);
  return {mean, std::sqrt(var)};
}

/// Flat record: iteration,log_likelihood,log_prior_mass,theta_1,...,theta_d.
inline void write_nested_run(std::ostream& os, const NestedRun& run) {
  const auto d = run.dead.empty() ? 0 : run.dead.front().point.size();
  os << "iteration,log_likelihood,log_prior_mass";
  for (Eigen::Index j = 0; j < d; ++j) os << ",theta_" << (j + 1);
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < run.dead.size(); ++i) {
    os << (i + 1) << ',' << run.dead[i].log_likelihood << ',' << run.log_prior_mass[i];
    for (Eigen::Index j = 0; j < d; ++j) os << ',' << run.dead[i].point[j];
    os << '\n';
  }
}

}  // namespace evidence
