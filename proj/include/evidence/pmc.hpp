#pragma once

// Population Monte Carlo with a multivariate Student-t mixture proposal. Each iteration
// draws from the current mixture, importance-weights the draws against the target, and
// refits weights, means and scales by a Rao-Blackwellized EM step in which the
// component labels are replaced by their responsibilities.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "evidence/errors.hpp"
#include "evidence/log_math.hpp"
#include "evidence/model.hpp"

namespace evidence {

class MixtureProposal {
 public:
  static constexpr double kPruneFloor = 1e-4;

  MixtureProposal() = default;

  MixtureProposal(std::vector<double> weights, std::vector<Eigen::VectorXd> means,
                  std::vector<Eigen::MatrixXd> scales, double dof)
      : weights_(std::move(weights)), means_(std::move(means)), scales_(std::move(scales)), dof_(dof) {
    detail::require(!weights_.empty(), "MixtureProposal: need at least one component");
    detail::require(weights_.size() == means_.size() && means_.size() == scales_.size(),
                    "MixtureProposal: component field sizes differ");
    detail::require(dof_ > 0.0, "MixtureProposal: dof must be positive");
    dim_ = static_cast<int>(means_.front().size());
    factorize();
    validate();
  }

  int n_components() const { return static_cast<int>(weights_.size()); }
  int dim() const { return dim_; }
  double dof() const { return dof_; }
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<Eigen::VectorXd>& means() const { return means_; }
  const std::vector<Eigen::MatrixXd>& scales() const { return scales_; }

  /// Simplex and positive-definiteness checks.
  void validate() const {
    double sum = 0.0;
    for (double w : weights_) {
      if (!(w >= 0.0)) throw ConsistencyError("MixtureProposal: negative weight");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw ConsistencyError("MixtureProposal: weights do not sum to 1");
    for (std::size_t d = 0; d < scales_.size(); ++d) {
      if (scales_[d].rows() != dim_ || scales_[d].cols() != dim_ || means_[d].size() != dim_)
        throw ConsistencyError("MixtureProposal: component dimension mismatch");
      if (llt_[d].info() != Eigen::Success) throw ConsistencyError("MixtureProposal: scale matrix not SPD");
    }
  }

  /// Squared Mahalanobis distance of x to component d.
  double mahalanobis_sq(int d, const Point& x) const {
    return llt_[d].matrixL().solve(x - means_[d]).squaredNorm();
  }

  double component_log_pdf(int d, const Point& x) const {
    return log_norm_[d] - 0.5 * (dof_ + dim_) * std::log1p(mahalanobis_sq(d, x) / dof_);
  }

  /// log q(x) = log sum_d w_d t_nu(x; mu_d, Sigma_d).
  double log_pdf(const Point& x) const {
    std::vector<double> terms(weights_.size());
    for (int d = 0; d < n_components(); ++d) terms[d] = std::log(weights_[d]) + component_log_pdf(d, x);
    return log_sum_exp(terms);
  }

  /// Per-component responsibilities w_d q_d(x) / q(x).
  std::vector<double> responsibilities(const Point& x) const {
    std::vector<double> terms(weights_.size());
    for (int d = 0; d < n_components(); ++d) terms[d] = std::log(weights_[d]) + component_log_pdf(d, x);
    const double total = log_sum_exp(terms);
    for (double& t : terms) t = std::exp(t - total);
    return terms;
  }

  Point sample(Rng& rng) const {
    std::discrete_distribution<int> pick(weights_.begin(), weights_.end());
    const int d = pick(rng);
    return sample_component(d, rng);
  }

  Point sample_component(int d, Rng& rng) const {
    std::normal_distribution<double> z(0.0, 1.0);
    std::chi_squared_distribution<double> chi(dof_);
    Eigen::VectorXd v(dim_);
    for (int j = 0; j < dim_; ++j) v[j] = z(rng);
    const double scale = std::sqrt(dof_ / chi(rng));
    return means_[d] + llt_[d].matrixL() * (v * scale);
  }

  Density density() const {
    return {dim_, [q = *this](const Point& x) { return q.log_pdf(x); }, [q = *this](Rng& rng) { return q.sample(rng); }};
  }

  /// Flat record: header line "mixture <components> <dim> <dof>", then one line per component
  /// with the weight, the mean, and the scale matrix in row-major order.
  void write(std::ostream& os) const {
    os << std::setprecision(17) << "mixture " << n_components() << ' ' << dim_ << ' ' << dof_ << '\n';
    for (int d = 0; d < n_components(); ++d) {
      os << weights_[d];
      for (int j = 0; j < dim_; ++j) os << ' ' << means_[d][j];
      for (int r = 0; r < dim_; ++r)
        for (int c = 0; c < dim_; ++c) os << ' ' << scales_[d](r, c);
      os << '\n';
    }
  }

  static MixtureProposal read(std::istream& is) {
    std::string tag;
    int k = 0, dim = 0;
    double dof = 0.0;
    if (!(is >> tag >> k >> dim >> dof) || tag != "mixture" || k < 1 || dim < 1)
      throw ContractViolation("MixtureProposal::read: malformed header");
    std::vector<double> w(k);
    std::vector<Eigen::VectorXd> mu(k, Eigen::VectorXd(dim));
    std::vector<Eigen::MatrixXd> sig(k, Eigen::MatrixXd(dim, dim));
    for (int d = 0; d < k; ++d) {
      is >> w[d];
      for (int j = 0; j < dim; ++j) is >> mu[d][j];
      for (int r = 0; r < dim; ++r)
        for (int c = 0; c < dim; ++c) is >> sig[d](r, c);
      if (!is) throw ContractViolation("MixtureProposal::read: truncated component record");
    }
    return MixtureProposal(std::move(w), std::move(mu), std::move(sig), dof);
  }

 private:
  void factorize() {
    llt_.clear();
    log_norm_.clear();
    const double nu = dof_;
    const double d = dim_;
    for (const auto& s : scales_) {
      llt_.emplace_back(s);
      double log_det = 0.0;
      if (llt_.back().info() == Eigen::Success)
        log_det = 2.0 * llt_.back().matrixL().toDenseMatrix().diagonal().array().log().sum();
      log_norm_.push_back(std::lgamma(0.5 * (nu + d)) - std::lgamma(0.5 * nu) -
                          0.5 * d * std::log(nu * std::numbers::pi) - 0.5 * log_det);
    }
  }

  std::vector<double> weights_;
  std::vector<Eigen::VectorXd> means_;
  std::vector<Eigen::MatrixXd> scales_;
  double dof_ = 1.0;
  int dim_ = 0;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llt_;
  std::vector<double> log_norm_;
};

struct PmcConfig {
  int n_components = 9;
  double dof = 9.0;
  std::size_t n_per_iteration = 5000;
  int n_iterations = 10;
  std::size_t n_final = 50000;
  Eigen::MatrixXd init_mean_cov = Eigen::Vector2d(200.0, 50.0).asDiagonal().toDenseMatrix() / 5.0;
  Eigen::MatrixXd init_scale = Eigen::Vector2d(200.0, 50.0).asDiagonal().toDenseMatrix() / 5.0;

  void validate() const {
    detail::require(n_components >= 1, "PmcConfig: n_components must be >= 1");
    detail::require(dof > 0.0, "PmcConfig: dof must be positive");
    detail::require(n_per_iteration >= 1 && n_final >= 1, "PmcConfig: sample sizes must be positive");
    detail::require(n_iterations >= 0, "PmcConfig: n_iterations must be >= 0");
    detail::require(init_mean_cov.rows() == init_mean_cov.cols() && init_scale.rows() == init_mean_cov.rows() &&
                        init_scale.cols() == init_scale.rows(),
                    "PmcConfig: initial covariances must be square and of equal size");
  }
};

struct PmcIterationDiagnostics {
  double normalized_perplexity = 0.0;  // exp(entropy of normalized weights) / n
  double ess = 0.0;
  double log_evidence = kNegInf;
  int pruned = 0;
};

struct PmcStep {
  MixtureProposal proposal;
  WeightedSample sample;
  PmcIterationDiagnostics diagnostics;
};

/// Equal weights, means drawn i.i.d. from N(0, init_mean_cov), every scale = init_scale.
inline MixtureProposal pmc_init(const PmcConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  const auto dim = cfg.init_mean_cov.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(cfg.init_mean_cov);
  if (llt.info() != Eigen::Success) throw ContractViolation("pmc_init: init_mean_cov is not SPD");
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Eigen::VectorXd> means;
  for (int d = 0; d < cfg.n_components; ++d) {
    Eigen::VectorXd v(dim);
    for (Eigen::Index j = 0; j < dim; ++j) v[j] = z(rng);
    means.push_back(llt.matrixL() * v);
  }
  return MixtureProposal(std::vector<double>(cfg.n_components, 1.0 / cfg.n_components), std::move(means),
                         std::vector<Eigen::MatrixXd>(cfg.n_components, cfg.init_scale), cfg.dof);
}

namespace detail {

inline double normalized_perplexity(const std::vector<double>& log_weights) {
  const double total = log_sum_exp(log_weights);
  double entropy = 0.0;
  for (double lw : log_weights) {
    if (lw == kNegInf) continue;
    const double w = std::exp(lw - total);
    entropy -= w * (lw - total);
  }
  return std::exp(entropy) / static_cast<double>(log_weights.size());
}

inline WeightedSample draw_weighted(const MixtureProposal& q, const ModelSpec& model, std::size_t n, Rng& rng,
                                    std::vector<double>* log_q = nullptr) {
  std::vector<Point> pts(n);
  std::vector<double> lw(n);
  if (log_q) log_q->resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i] = q.sample(rng);
    const double lq = q.log_pdf(pts[i]);
    lw[i] = model.log_target(pts[i]) - lq;
    if (log_q) (*log_q)[i] = lq;
  }
  return WeightedSample(std::move(pts), std::move(lw), SampleSource::kProposal);
}

}  // namespace detail

/// One draw-weight-refit cycle. Components whose weight falls under the prune floor, or
/// whose refitted scale is not positive definite, are dropped and the rest renormalized.
inline PmcStep pmc_iterate(const MixtureProposal& proposal, const ModelSpec& model, std::size_t n, std::uint64_t seed) {
  proposal.validate();
  detail::require(proposal.dim() == model.dim, "pmc_iterate: proposal/model dimension mismatch");
  detail::require(n >= 1, "pmc_iterate: n must be positive");
  Rng rng(seed);
  const int k = proposal.n_components();
  const int dim = proposal.dim();
  const double nu = proposal.dof();

  std::vector<double> log_q;
  WeightedSample sample = detail::draw_weighted(proposal, model, n, rng, &log_q);
  const double total = log_sum_exp(sample.log_weights);
  if (total == kNegInf) throw DegenerateSample("pmc_iterate: every importance weight is zero");

  std::vector<double> alpha(k, 0.0), gamma_mass(k, 0.0);
  std::vector<Eigen::VectorXd> mean_acc(k, Eigen::VectorXd::Zero(dim));
  // rho * wbar and gamma per point and component; kept for the second (scale) pass.
  std::vector<double> rw(static_cast<std::size_t>(k) * n, 0.0), gam(static_cast<std::size_t>(k) * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double lw = sample.log_weights[i];
    if (lw == kNegInf) continue;
    const double wbar = std::exp(lw - total);
    const Point& x = sample.points[i];
    for (int d = 0; d < k; ++d) {
      const double m2 = proposal.mahalanobis_sq(d, x);
      const double lqd = proposal.component_log_pdf(d, x);
      const double rho = std::exp(std::log(proposal.weights()[d]) + lqd - log_q[i]);
      const double g = (nu + dim) / (nu + m2);
      const std::size_t idx = static_cast<std::size_t>(d) * n + i;
      rw[idx] = wbar * rho;
      gam[idx] = g;
      alpha[d] += rw[idx];
      gamma_mass[d] += rw[idx] * g;
      mean_acc[d] += (rw[idx] * g) * x;
    }
  }

  std::vector<double> new_w;
  std::vector<Eigen::VectorXd> new_mu;
  std::vector<Eigen::MatrixXd> new_sigma;
  int pruned = 0;
  for (int d = 0; d < k; ++d) {
    if (alpha[d] < MixtureProposal::kPruneFloor || !(gamma_mass[d] > 0.0)) {
      ++pruned;
      continue;
    }
    const Eigen::VectorXd mu = mean_acc[d] / gamma_mass[d];
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t idx = static_cast<std::size_t>(d) * n + i;
      if (rw[idx] == 0.0) continue;
      const Eigen::VectorXd c = sample.points[i] - mu;
      sigma += (rw[idx] * gam[idx]) * (c * c.transpose());
    }
    sigma /= alpha[d];
    sigma = 0.5 * (sigma + sigma.transpose());
    Eigen::LLT<Eigen::MatrixXd> check(sigma);
    if (check.info() != Eigen::Success || !sigma.allFinite()) {
      ++pruned;
      continue;
    }
    new_w.push_back(alpha[d]);
    new_mu.push_back(mu);
    new_sigma.push_back(std::move(sigma));
  }
  if (new_w.empty()) throw DegenerateSample("pmc_iterate: every component was pruned");
  double wsum = 0.0;
  for (double w : new_w) wsum += w;
  for (double& w : new_w) w /= wsum;

  PmcIterationDiagnostics diag;
  diag.normalized_perplexity = detail::normalized_perplexity(sample.log_weights);
  diag.ess = effective_sample_size(sample.log_weights);
  diag.log_evidence = total - std::log(static_cast<double>(n));
  diag.pruned = pruned;
  return {MixtureProposal(std::move(new_w), std::move(new_mu), std::move(new_sigma), nu), std::move(sample), diag};
}

struct PmcResult {
  MixtureProposal proposal;
  WeightedSample final_sample;
  std::vector<PmcIterationDiagnostics> diagnostics;  // one per adaptive iteration, then the final sample
};

inline PmcResult pmc_run(const ModelSpec& model, const PmcConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  detail::require(cfg.init_mean_cov.rows() == model.dim, "pmc_run: config dimension differs from the model");
  Rng seeds(seed);
  MixtureProposal q = pmc_init(cfg, seeds());
  PmcResult out;
  for (int it = 0; it < cfg.n_iterations; ++it) {
    PmcStep step = pmc_iterate(q, model, cfg.n_per_iteration, seeds());
    out.diagnostics.push_back(step.diagnostics);
    q = std::move(step.proposal);
  }
  Rng rng(seeds());
  out.final_sample = detail::draw_weighted(q, model, cfg.n_final, rng);
  PmcIterationDiagnostics fin;
  const double total = log_sum_exp(out.final_sample.log_weights);
  if (total == kNegInf) throw DegenerateSample("pmc_run: final sample has no weight");
  fin.normalized_perplexity = detail::normalized_perplexity(out.final_sample.log_weights);
  fin.ess = effective_sample_size(out.final_sample.log_weights);
  fin.log_evidence = total - std::log(static_cast<double>(cfg.n_final));
  out.diagnostics.push_back(fin);
  out.proposal = std::move(q);
  return out;
}

/// Evidence from a sample weighted by normalized prior x likelihood / normalized proposal.
inline EvidenceEstimate pmc_evidence(const WeightedSample& sample) { return evidence_from_weights(sample); }

}  // namespace evidence
