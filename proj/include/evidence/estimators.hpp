#pragma once

// Evidence and Bayes-factor estimators that post-process samples: plain importance
// sampling, the HPD-ellipse harmonic mean, bridge sampling and the mixture bridge.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "evidence/errors.hpp"
#include "evidence/log_math.hpp"
#include "evidence/model.hpp"
#include "evidence/samplers.hpp"

namespace evidence {

/// A ratio of normalizing constants (Bayes factor B12 = Z1 / Z2).
struct RatioEstimate {
  double log_value = 0.0;
  double std_error = 0.0;   // linear scale, delta method
  double covariance = 0.0;  // numerator/denominator covariance of the scaled means (shared-sample estimators)
  bool reliable = true;     // false when a side has fewer than two draws

  double value() const { return std::exp(log_value); }
};

namespace detail {

/// Log of the sample mean of exp(v_i). Sums in sorted order so the result does not depend
/// on the order of the input.
inline double log_mean_exp(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return log_sum_exp(v) - std::log(static_cast<double>(v.size()));
}

/// Squared coefficient of variation of exp(v_i); 0 for a single value.
inline double squared_cv(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto m = scaled_moments(v);
  if (m.mean == 0.0) return std::numeric_limits<double>::infinity();
  return (m.sd * m.sd) / (m.mean * m.mean);
}

/// Sample covariance of exp(a_i - shift_a) and exp(b_i - shift_b) divided by the product of means.
inline double relative_covariance(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  if (n < 2) return 0.0;
  const double sa = *std::max_element(a.begin(), a.end());
  const double sb = *std::max_element(b.begin(), b.end());
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += std::exp(a[i] - sa);
    mb += std::exp(b[i] - sb);
  }
  ma /= n;
  mb /= n;
  double c = 0.0;
  for (std::size_t i = 0; i < n; ++i) c += (std::exp(a[i] - sa) - ma) * (std::exp(b[i] - sb) - mb);
  return c / (n - 1.0) / (ma * mb);
}

inline double ratio_std_error(double log_value, double rel_var) {
  return rel_var > 0.0 ? std::exp(log_value) * std::sqrt(rel_var) : 0.0;
}

/// Log importance weights log target - log proposal for n proposal draws.
inline std::vector<double> importance_log_weights(const LogDensity& log_target, const Density& proposal,
                                                  std::size_t n, Rng& rng) {
  std::vector<double> lw(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point p = proposal.sample(rng);
    const double lq = proposal.log_pdf(p);
    if (lq == kNegInf || std::isnan(lq))
      throw ContractViolation("importance sampling: proposal density is zero at one of its own draws");
    lw[i] = log_target(p) - lq;
  }
  return lw;
}

}  // namespace detail

// ------------------------------------------------------- importance sampling

/// Ratio of two independent importance-sampling evidence estimates, each the mean of
/// pi_k L_k / proposal_k over draws from proposal_k.
inline RatioEstimate importance_bayes_factor(const ModelSpec& model1, const ModelSpec& model2,
                                             const Density& proposal1, const Density& proposal2, std::size_t n1,
                                             std::size_t n2, std::uint64_t seed1, std::uint64_t seed2) {
  detail::require(n1 >= 1 && n2 >= 1, "importance_bayes_factor: draw counts must be positive");
  Rng rng1(seed1);
  Rng rng2(seed2);
  auto t1 = [&](const Point& p) { return model1.log_target(p); };
  auto t2 = [&](const Point& p) { return model2.log_target(p); };
  const auto lw1 = detail::importance_log_weights(t1, proposal1, n1, rng1);
  const auto lw2 = detail::importance_log_weights(t2, proposal2, n2, rng2);
  const double num = detail::log_mean_exp(lw1);
  const double den = detail::log_mean_exp(lw2);
  if (num == kNegInf) throw DegenerateSample("importance_bayes_factor: every numerator weight is zero");
  if (den == kNegInf) throw DegenerateSample("importance_bayes_factor: every denominator weight is zero");
  RatioEstimate r;
  r.log_value = num - den;
  r.std_error = detail::ratio_std_error(r.log_value, detail::squared_cv(lw1) / n1 + detail::squared_cv(lw2) / n2);
  r.reliable = n1 >= 2 && n2 >= 2;
  return r;
}

/// Single-seed form: both sides draw from streams seeded with `seed` (common random numbers).
inline RatioEstimate importance_bayes_factor(const ModelSpec& model1, const ModelSpec& model2,
                                             const Density& proposal1, const Density& proposal2, std::size_t n1,
                                             std::size_t n2, std::uint64_t seed) {
  return importance_bayes_factor(model1, model2, proposal1, proposal2, n1, n2, seed, seed);
}

// ---------------------------------------------------------------- HPD ellipse

/// Ellipse {x : (x - c)^T S^{-1} (x - c) <= 1} carrying the uniform density on it.
class HpdEllipse {
 public:
  HpdEllipse(Eigen::VectorXd center, const Eigen::MatrixXd& shape) : center_(std::move(center)), shape_(shape) {
    detail::require(shape_.rows() == center_.size() && shape_.cols() == center_.size(),
                    "HpdEllipse: shape must be d x d");
    llt_.compute(shape_);
    if (llt_.info() != Eigen::Success)
      throw DegenerateSample("HpdEllipse: shape matrix is not positive definite");
    const double d = static_cast<double>(center_.size());
    const double log_det = 2.0 * llt_.matrixL().toDenseMatrix().diagonal().array().log().sum();
    log_volume_ = 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0) + 0.5 * log_det;
  }

  int dim() const { return static_cast<int>(center_.size()); }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::MatrixXd& shape() const { return shape_; }
  double log_volume() const { return log_volume_; }

  double mahalanobis_sq(const Point& x) const {
    const Eigen::VectorXd z = llt_.matrixL().solve(x - center_);
    return z.squaredNorm();
  }

  bool contains(const Point& x) const { return mahalanobis_sq(x) <= 1.0; }

  double log_density(const Point& x) const { return contains(x) ? -log_volume_ : kNegInf; }

  /// Uniform draw: random direction, radius U^{1/d}, mapped through the Cholesky factor.
  Point sample(Rng& rng) const {
    std::normal_distribution<double> z(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::VectorXd dir(center_.size());
    double norm = 0.0;
    do {
      for (Eigen::Index i = 0; i < dir.size(); ++i) dir[i] = z(rng);
      norm = dir.norm();
    } while (norm == 0.0);
    const double radius = std::pow(u(rng), 1.0 / static_cast<double>(dir.size()));
    return center_ + llt_.matrixL() * (dir * (radius / norm));
  }

  Density density() const {
    return {dim(), [e = *this](const Point& x) { return e.log_density(x); },
            [e = *this](Rng& rng) { return e.sample(rng); }};
  }

 private:
  Eigen::VectorXd center_;
  Eigen::MatrixXd shape_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double log_volume_ = 0.0;
};

/// Ellipse around the `level` fraction of sample points with the highest log_target:
/// centered at their mean, shaped by their covariance scaled up until all of them are inside.
inline HpdEllipse hpd_ellipse(const WeightedSample& sample, const LogDensity& log_target, double level = 0.10) {
  sample.validate();
  detail::require(level > 0.0 && level < 1.0, "hpd_ellipse: level must lie in (0, 1)");
  const auto d = static_cast<std::size_t>(sample.points.front().size());
  detail::require(sample.size() >= 10 * d, "hpd_ellipse: need at least 10 * dim sample points");

  const std::size_t n = sample.size();
  std::vector<double> lt(n);
  for (std::size_t i = 0; i < n; ++i) lt[i] = log_target(sample.points[i]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lt[a] > lt[b]; });
  const std::size_t keep =
      std::max<std::size_t>(d + 1, static_cast<std::size_t>(std::llround(level * static_cast<double>(n))));

  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (std::size_t k = 0; k < keep; ++k) mean += sample.points[order[k]];
  mean /= static_cast<double>(keep);
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t k = 0; k < keep; ++k) {
    const Eigen::VectorXd c = sample.points[order[k]] - mean;
    cov += c * c.transpose();
  }
  cov /= static_cast<double>(keep - 1);

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success || !(llt.matrixL().toDenseMatrix().diagonal().minCoeff() > 1e-150))
    throw DegenerateSample("hpd_ellipse: retained covariance is singular; use a larger sample or add jitter");
  double max_m = 0.0;
  for (std::size_t k = 0; k < keep; ++k) {
    const Eigen::VectorXd z = llt.matrixL().solve(sample.points[order[k]] - mean);
    max_m = std::max(max_m, z.squaredNorm());
  }
  // Inflate by a few ulps so the boundary point tests inside after rounding.
  return HpdEllipse(mean, cov * (max_m * (1.0 + 1e-12)));
}

// ------------------------------------------------------------ harmonic mean

/// 1 / mean(phi / pi L) over a posterior sample. phi must be normalized; lighter tails than
/// the posterior keep the variance finite.
inline EvidenceEstimate harmonic_mean_evidence(const WeightedSample& posterior_sample, const LogDensity& log_phi,
                                               const LogDensity& log_prior_times_lik) {
  posterior_sample.validate();
  const std::size_t n = posterior_sample.size();
  std::vector<double> lr(n);
  for (std::size_t t = 0; t < n; ++t) {
    const Point& p = posterior_sample.points[t];
    const double lt = log_prior_times_lik(p);
    if (lt == kNegInf || std::isnan(lt))
      throw ContractViolation("harmonic_mean_evidence: posterior density is zero at a sampled point");
    lr[t] = log_phi(p) - lt;
  }
  std::sort(lr.begin(), lr.end());
  const double log_mean = detail::log_mean_exp(lr);
  if (log_mean == kNegInf)
    throw DegenerateSample("harmonic_mean_evidence: phi is zero on the whole sample");
  EvidenceEstimate est;
  est.log_evidence = -log_mean;
  est.std_error = detail::ratio_std_error(est.log_evidence, detail::squared_cv(lr) / static_cast<double>(n));
  est.ess = effective_sample_size(lr);
  est.n_draws = n;
  return est;
}

// ----------------------------------------------------------- bridge sampling

enum class AlphaMode { kGeometricSingleSample, kSingleProposal, kGeneralAlpha, kIterativeOptimal };

struct BridgeConfig {
  AlphaMode alpha_mode = AlphaMode::kIterativeOptimal;
  std::size_t n1 = 0;  // 0: use the size of sample1
  std::size_t n2 = 0;  // 0: use the size of sample2
  double tol = 1e-10;
  int max_iter = 1000;

  void validate() const {
    detail::require(tol > 0.0, "BridgeConfig: tol must be positive");
    detail::require(max_iter >= 1, "BridgeConfig: max_iter must be >= 1");
  }
};

/// mean over a pi_2 sample of pi~_1 / pi~_2, estimating Z1 / Z2.
inline RatioEstimate bridge_geometric(const WeightedSample& sample2, const LogDensity& log_pi1_unnorm,
                                      const LogDensity& log_pi2_unnorm) {
  sample2.validate();
  std::vector<double> lr(sample2.size());
  for (std::size_t i = 0; i < sample2.size(); ++i) {
    const double l2 = log_pi2_unnorm(sample2.points[i]);
    if (l2 == kNegInf) throw ContractViolation("bridge_geometric: pi2 is zero at a sample point");
    lr[i] = log_pi1_unnorm(sample2.points[i]) - l2;
  }
  RatioEstimate r;
  r.log_value = detail::log_mean_exp(lr);
  if (r.log_value == kNegInf) throw DegenerateSample("bridge_geometric: pi1 is zero on the whole sample");
  r.std_error = detail::ratio_std_error(r.log_value, detail::squared_cv(lr) / static_cast<double>(lr.size()));
  r.reliable = lr.size() >= 2;
  return r;
}

/// One shared sample from `proposal`: mean(pi~_1 / q) / mean(pi~_2 / q).
inline RatioEstimate bridge_single_proposal(const Density& proposal, const LogDensity& log_pi1_unnorm,
                                            const LogDensity& log_pi2_unnorm, std::size_t n, std::uint64_t seed) {
  detail::require(n >= 1, "bridge_single_proposal: n must be positive");
  Rng rng(seed);
  std::vector<double> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point p = proposal.sample(rng);
    const double lq = proposal.log_pdf(p);
    if (lq == kNegInf) throw ContractViolation("bridge_single_proposal: proposal is zero at its own draw");
    a[i] = log_pi1_unnorm(p) - lq;
    b[i] = log_pi2_unnorm(p) - lq;
  }
  const double num = detail::log_mean_exp(a);
  const double den = detail::log_mean_exp(b);
  if (num == kNegInf || den == kNegInf)
    throw DegenerateSample("bridge_single_proposal: a self-importance mean is zero");
  RatioEstimate r;
  r.log_value = num - den;
  r.covariance = detail::relative_covariance(a, b);
  const double nn = static_cast<double>(n);
  const double rel_var = (detail::squared_cv(a) + detail::squared_cv(b) - 2.0 * r.covariance) / nn;
  r.std_error = detail::ratio_std_error(r.log_value, std::max(rel_var, 0.0));
  r.reliable = n >= 2;
  return r;
}

namespace detail {

inline std::vector<double> eval_all(const std::vector<Point>& pts, const LogDensity& f) {
  std::vector<double> out(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) out[i] = f(pts[i]);
  return out;
}

}  // namespace detail

/// [n2^-1 sum pi~_1(theta_2i) alpha(theta_2i)] / [n1^-1 sum pi~_2(theta_1i) alpha(theta_1i)] = Z1 / Z2
/// for samples theta_1i ~ pi_1 and theta_2i ~ pi_2 and any positive alpha.
inline RatioEstimate bridge_general_alpha(const WeightedSample& sample1, const WeightedSample& sample2,
                                          const LogDensity& log_alpha, const LogDensity& log_pi1_unnorm,
                                          const LogDensity& log_pi2_unnorm) {
  sample1.validate();
  sample2.validate();
  std::vector<double> num(sample2.size()), den(sample1.size());
  for (std::size_t i = 0; i < sample2.size(); ++i) {
    const double la = log_alpha(sample2.points[i]);
    if (!std::isfinite(la)) throw ContractViolation("bridge_general_alpha: alpha must be positive and finite");
    num[i] = log_pi1_unnorm(sample2.points[i]) + la;
  }
  for (std::size_t i = 0; i < sample1.size(); ++i) {
    const double la = log_alpha(sample1.points[i]);
    if (!std::isfinite(la)) throw ContractViolation("bridge_general_alpha: alpha must be positive and finite");
    den[i] = log_pi2_unnorm(sample1.points[i]) + la;
  }
  const double ln = detail::log_mean_exp(num);
  const double ld = detail::log_mean_exp(den);
  if (ld == kNegInf) throw DegenerateSample("bridge_general_alpha: denominator is zero");
  if (ln == kNegInf) throw DegenerateSample("bridge_general_alpha: numerator is zero");
  RatioEstimate r;
  r.log_value = ln - ld;
  r.std_error = detail::ratio_std_error(
      r.log_value, detail::squared_cv(num) / static_cast<double>(num.size()) +
                       detail::squared_cv(den) / static_cast<double>(den.size()));
  r.reliable = num.size() >= 2 && den.size() >= 2;
  return r;
}

struct IterativeBridgeResult {
  double log_value = 0.0;
  std::vector<double> trace;  // B^(0), B^(1), ..., linear scale
  int iterations = 0;

  double value() const { return std::exp(log_value); }
};

/// Fixed-point iteration on alpha(theta) = 1 / (n1 pi~_1(theta) / B + n2 pi~_2(theta)).
/// Without `initial_B` the start is the alpha == 1 estimate.
inline IterativeBridgeResult bridge_iterative_optimal(const WeightedSample& sample1, const WeightedSample& sample2,
                                                      const LogDensity& log_pi1_unnorm,
                                                      const LogDensity& log_pi2_unnorm, const BridgeConfig& cfg,
                                                      std::optional<double> initial_B = std::nullopt) {
  cfg.validate();
  sample1.validate();
  sample2.validate();
  const double log_n1 = std::log(static_cast<double>(cfg.n1 ? cfg.n1 : sample1.size()));
  const double log_n2 = std::log(static_cast<double>(cfg.n2 ? cfg.n2 : sample2.size()));
  // Densities on each sample; pi_k evaluated once.
  const auto l1_s1 = detail::eval_all(sample1.points, log_pi1_unnorm);
  const auto l2_s1 = detail::eval_all(sample1.points, log_pi2_unnorm);
  const auto l1_s2 = detail::eval_all(sample2.points, log_pi1_unnorm);
  const auto l2_s2 = detail::eval_all(sample2.points, log_pi2_unnorm);

  double log_b;
  if (initial_B) {
    detail::require(*initial_B > 0.0 && std::isfinite(*initial_B), "bridge_iterative_optimal: initial_B must be positive");
    log_b = std::log(*initial_B);
  } else {
    const double ln = detail::log_mean_exp(l1_s2);
    const double ld = detail::log_mean_exp(l2_s1);
    if (ln == kNegInf || ld == kNegInf)
      throw DegenerateSample("bridge_iterative_optimal: alpha == 1 start is degenerate");
    log_b = ln - ld;
  }

  IterativeBridgeResult out;
  out.trace.push_back(std::exp(log_b));
  std::vector<double> num(l1_s2.size()), den(l1_s1.size());
  for (int it = 1; it <= cfg.max_iter; ++it) {
    for (std::size_t j = 0; j < num.size(); ++j)
      num[j] = l1_s2[j] - log_add_exp(log_n1 + l1_s2[j] - log_b, log_n2 + l2_s2[j]);
    for (std::size_t i = 0; i < den.size(); ++i)
      den[i] = l2_s1[i] - log_add_exp(log_n1 + l1_s1[i] - log_b, log_n2 + l2_s1[i]);
    const double ln = detail::log_mean_exp(num);
    const double ld = detail::log_mean_exp(den);
    if (ln == kNegInf || ld == kNegInf || std::isnan(ln) || std::isnan(ld))
      throw DegenerateSample("bridge_iterative_optimal: bridge sums vanished");
    const double next = ln - ld;
    out.trace.push_back(std::exp(next));
    const double change = std::abs(std::expm1(next - log_b));
    log_b = next;
    if (change < cfg.tol) {
      out.log_value = log_b;
      out.iterations = it;
      return out;
    }
  }
  throw ConvergenceError("bridge_iterative_optimal: no convergence within max_iter", out.trace);
}

// ------------------------------------------------------------ mixture bridge

/// (1/omega1) sum r_t / sum (1 - r_t), r_t = omega1 pi L / (omega1 pi L + phi) at each chain point.
/// Standard error by a 20-block delete-one jackknife (the chain is dependent).
inline EvidenceEstimate mixture_bridge_evidence(const LabeledChain& chain, double omega1, const LogDensity& log_phi,
                                                const LogDensity& log_pi_times_lik) {
  detail::require(chain.size() >= 1, "mixture_bridge_evidence: empty chain");
  detail::require(omega1 > 0.0 && std::isfinite(omega1), "mixture_bridge_evidence: omega1 must be positive");
  const std::size_t n = chain.size();
  const double log_omega = std::log(omega1);
  std::vector<double> log_r(n), log_q(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double a = log_omega + log_pi_times_lik(chain.points[t]);
    const double b = log_phi(chain.points[t]);
    const double mix = log_add_exp(a, b);
    if (mix == kNegInf) throw DegenerateSample("mixture_bridge_evidence: mixture density zero at a chain point");
    log_r[t] = a - mix;
    log_q[t] = b - mix;
  }
  auto log_sum_sorted = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return log_sum_exp(v);
  };
  const double lr = log_sum_sorted(log_r);
  const double lq = log_sum_sorted(log_q);
  if (lq == kNegInf)
    throw DegenerateSample("mixture_bridge_evidence: no mass attributed to phi; use a smaller omega1");
  EvidenceEstimate est;
  est.log_evidence = lr - lq - log_omega;
  est.n_draws = n;
  est.ess = effective_sample_size(log_q);

  const std::size_t blocks = std::min<std::size_t>(20, n);
  if (blocks >= 2) {
    std::vector<double> br(blocks), bq(blocks);
    for (std::size_t g = 0; g < blocks; ++g) {
      const std::size_t lo = g * n / blocks, hi = (g + 1) * n / blocks;
      br[g] = log_sum_sorted({log_r.begin() + lo, log_r.begin() + hi});
      bq[g] = log_sum_sorted({log_q.begin() + lo, log_q.begin() + hi});
    }
    std::vector<double> loo(blocks);
    std::vector<double> rest_r, rest_q;
    for (std::size_t g = 0; g < blocks; ++g) {
      rest_r.clear();
      rest_q.clear();
      for (std::size_t h = 0; h < blocks; ++h) {
        if (h == g) continue;
        rest_r.push_back(br[h]);
        rest_q.push_back(bq[h]);
      }
      const double q = log_sum_exp(rest_q);
      loo[g] = q == kNegInf ? std::numeric_limits<double>::infinity()
                            : std::exp(log_sum_exp(rest_r) - q - log_omega);
    }
    const double mean = std::accumulate(loo.begin(), loo.end(), 0.0) / blocks;
    double ss = 0.0;
    for (double v : loo) ss += (v - mean) * (v - mean);
    est.std_error = std::sqrt((blocks - 1.0) / blocks * ss);
  }
  return est;
}

/// Mean responsibility (1/T) sum r_t; estimates omega1 Z / (omega1 Z + 1).
inline double mixture_label_probability(const LabeledChain& chain, double omega1, const LogDensity& log_phi,
                                        const LogDensity& log_pi_times_lik) {
  detail::require(chain.size() >= 1, "mixture_label_probability: empty chain");
  const double log_omega = std::log(omega1);
  double sum = 0.0;
  for (const Point& p : chain.points) {
    const double a = log_omega + log_pi_times_lik(p);
    sum += std::exp(a - log_add_exp(a, log_phi(p)));
  }
  return sum / static_cast<double>(chain.size());
}

}  // namespace evidence
