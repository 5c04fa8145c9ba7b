#pragma once

// Seeded replication studies: every (run, estimator) pair is an independent task whose
// randomness derives from base_seed + run. Tasks execute on a small worker pool and rows
// are emitted in (run, estimator) order whatever the completion order.

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "evidence/evidence.hpp"
#include "evidence/harness/config.hpp"
#include "evidence/harness/references.hpp"

namespace evidence::harness {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ResultRow {
  int run = 0;
  std::string model;
  std::string estimator;
  std::uint64_t seed = 0;
  bool ok = true;
  double log_evidence = kNaN;
  double evidence = kNaN;
  double std_error = kNaN;
  double ess = kNaN;
  double n_draws = kNaN;
  double moment_1 = kNaN;
  double moment_2 = kNaN;
  double reference_evidence = kNaN;
  double reference_moment_1 = kNaN;
  double reference_moment_2 = kNaN;
  std::string error;
  double wall_seconds = 0.0;
};

inline const std::vector<std::string>& csv_columns() {
  static const std::vector<std::string> cols{
      "run",         "model",    "estimator",          "seed",
      "status",      "log_evidence", "evidence",       "std_error",
      "ess",         "n_draws",  "moment_1",           "moment_2",
      "reference_evidence", "reference_moment_1", "reference_moment_2", "error",
      "wall_seconds"};
  return cols;
}

namespace detail {

struct Outcome {
  EvidenceEstimate estimate;
  double moment_1 = kNaN;
  double moment_2 = kNaN;
};

inline std::pair<double, double> column_means(const WeightedSample& s) {
  double a = 0.0, b = 0.0;
  for (const auto& p : s.points) {
    a += p[0];
    b += p[1];
  }
  return {a / s.size(), b / s.size()};
}

inline LogDensity toy_target(const GaussianToyData& d) {
  return [d](const Point& p) { return gaussian_toy_log_posterior_unnorm(p, d); };
}

inline Outcome run_harmonic(const ExperimentConfig& c, std::uint64_t seed) {
  const auto& p = c.harmonic;
  const auto target = toy_target(c.toy);
  const auto sample = gibbs_toy_posterior(c.toy, p.draws, p.burn_in, seed);
  const auto ellipse = hpd_ellipse(sample, target, p.level);
  Outcome o;
  o.estimate = harmonic_mean_evidence(sample, [&](const Point& x) { return ellipse.log_density(x); }, target);
  std::tie(o.moment_1, o.moment_2) = column_means(sample);
  return o;
}

inline Outcome run_mixture_bridge(const ExperimentConfig& c, std::uint64_t seed, double reference) {
  const auto& p = c.mixture;
  const auto target = toy_target(c.toy);
  Rng seeds(seed);
  const auto pilot = gibbs_toy_posterior(c.toy, p.pilot_draws, p.burn_in, seeds());
  const auto ellipse = hpd_ellipse(pilot, target, p.level);
  const double omega1 = p.omega_fraction / reference;
  const auto chain = mixture_gibbs_sampler(gaussian_toy_model(c.toy), ellipse.density(), omega1,
                                           gibbs_toy_kernel(c.toy), p.draws, seeds());
  Outcome o;
  o.estimate =
      mixture_bridge_evidence(chain, omega1, [&](const Point& x) { return ellipse.log_density(x); }, target);
  std::tie(o.moment_1, o.moment_2) = column_means(pilot);
  return o;
}

/// Bridge between the unnormalized posterior and the normalized uniform density on the
/// HPD ellipse, so the ratio of normalizing constants is the evidence itself.
inline Outcome run_bridge_iterative(const ExperimentConfig& c, std::uint64_t seed) {
  const auto& p = c.bridge;
  const auto target = toy_target(c.toy);
  Rng seeds(seed);
  const auto post = gibbs_toy_posterior(c.toy, p.draws, p.burn_in, seeds());
  const auto ellipse = hpd_ellipse(post, target, p.level);
  Rng rng(seeds());
  std::vector<Point> pts(p.proposal_draws);
  for (auto& x : pts) x = ellipse.sample(rng);
  const WeightedSample prop(std::move(pts), std::vector<double>(p.proposal_draws, 0.0), SampleSource::kProposal);
  const LogDensity log_phi = [&](const Point& x) { return ellipse.log_density(x); };
  BridgeConfig cfg;
  cfg.tol = p.tol;
  cfg.max_iter = p.max_iter;
  const auto res = bridge_iterative_optimal(post, prop, target, log_phi, cfg);
  // Standard error from one more step at the converged alpha.
  const double n1 = static_cast<double>(post.size()), n2 = static_cast<double>(prop.size());
  const double log_b = res.log_value;
  const LogDensity log_alpha = [&](const Point& x) {
    return -log_add_exp(std::log(n1) + target(x) - log_b, std::log(n2) + log_phi(x));
  };
  const auto last = bridge_general_alpha(post, prop, log_alpha, target, log_phi);
  Outcome o;
  o.estimate.log_evidence = res.log_value;
  o.estimate.std_error = last.std_error;
  o.estimate.n_draws = post.size() + prop.size();
  o.estimate.ess = kNaN;
  std::tie(o.moment_1, o.moment_2) = column_means(post);
  return o;
}

inline Outcome run_nested(const ExperimentConfig& c, std::uint64_t seed) {
  const auto run = nested_sampling_run(banana_model(c.banana), c.nested, seed);
  Outcome o;
  o.estimate = nested_evidence(run);
  o.moment_1 = nested_posterior_estimates(run, [](const Point& x) { return x[0]; }).value;
  o.moment_2 = nested_posterior_estimates(run, [](const Point& x) { return x[1]; }).value;
  return o;
}

inline Outcome run_pmc(const ExperimentConfig& c, std::uint64_t seed) {
  const auto res = pmc_run(banana_model(c.banana), c.pmc, seed);
  Outcome o;
  o.estimate = pmc_evidence(res.final_sample);
  o.moment_1 = weighted_moment(res.final_sample, [](const Point& x) { return x[0]; }).value;
  o.moment_2 = weighted_moment(res.final_sample, [](const Point& x) { return x[1]; }).value;
  return o;
}

inline Outcome run_prior_is(const ExperimentConfig& c, std::uint64_t seed) {
  const auto model = banana_model(c.banana);
  Rng rng(seed);
  const std::size_t n = c.prior_is.draws;
  std::vector<Point> pts(n);
  std::vector<double> lw(n);
  for (std::size_t i = 0; i < n; ++i) {
    pts[i] = model.prior_sampler(rng);
    lw[i] = model.log_likelihood(pts[i]);
  }
  const WeightedSample s(std::move(pts), std::move(lw), SampleSource::kPrior);
  Outcome o;
  o.estimate = evidence_from_weights(s);
  o.moment_1 = weighted_moment(s, [](const Point& x) { return x[0]; }).value;
  o.moment_2 = weighted_moment(s, [](const Point& x) { return x[1]; }).value;
  return o;
}

inline std::string sanitize(std::string s) {
  for (char& ch : s)
    if (ch == ',' || ch == '\n' || ch == '\r' || ch == '"') ch = ';';
  return s;
}

}  // namespace detail

/// Reference for the configured model: the stored block when its parameters match,
/// otherwise a fresh computation.
inline ReferenceRecord reference_for(const ExperimentConfig& c, const std::filesystem::path& reference_file) {
  const auto refs = load_references(reference_file);
  const std::string params = c.model == "banana" ? banana_params(c.banana) : toy_params(c.toy);
  if (auto it = refs.find(c.model); it != refs.end() && it->second.params == params) return it->second;
  return c.model == "banana" ? compute_banana_reference(c.banana) : compute_toy_reference(c.toy);
}

inline ResultRow run_replicate(const ExperimentConfig& c, const std::string& estimator, int run,
                               const ReferenceRecord& ref) {
  ResultRow row;
  row.run = run;
  row.model = c.model;
  row.estimator = estimator;
  row.seed = c.seed_for_run(run);
  row.reference_evidence = ref.evidence;
  row.reference_moment_1 = ref.moment_1;
  row.reference_moment_2 = ref.moment_2;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    detail::Outcome o;
    if (estimator == "harmonic-hpd")
      o = detail::run_harmonic(c, row.seed);
    else if (estimator == "mixture-bridge")
      o = detail::run_mixture_bridge(c, row.seed, ref.evidence);
    else if (estimator == "bridge-iterative")
      o = detail::run_bridge_iterative(c, row.seed);
    else if (estimator == "nested")
      o = detail::run_nested(c, row.seed);
    else if (estimator == "pmc")
      o = detail::run_pmc(c, row.seed);
    else if (estimator == "prior-is")
      o = detail::run_prior_is(c, row.seed);
    else
      throw UsageError("unknown estimator '" + estimator + "'");
    row.log_evidence = o.estimate.log_evidence;
    row.evidence = o.estimate.evidence();
    row.std_error = o.estimate.std_error;
    row.ess = o.estimate.ess;
    row.n_draws = static_cast<double>(o.estimate.n_draws);
    row.moment_1 = o.moment_1;
    row.moment_2 = o.moment_2;
  } catch (const UsageError&) {
    throw;
  } catch (const std::exception& e) {
    row.ok = false;
    row.error = detail::sanitize(e.what());
  }
  row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

struct ExperimentResult {
  ReferenceRecord reference;
  std::vector<ResultRow> rows;  // run-major, estimators in configured order
};

inline ExperimentResult run_experiment(const ExperimentConfig& c, const std::filesystem::path& reference_file) {
  c.validate();
  ExperimentResult out;
  out.reference = reference_for(c, reference_file);
  const std::size_t n_est = c.estimators.size();
  const std::size_t n_tasks = static_cast<std::size_t>(c.runs) * n_est;
  out.rows.resize(n_tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      out.rows[t] = run_replicate(c, c.estimators[t % n_est], static_cast<int>(t / n_est), out.reference);
    }
  };
  const int n_workers = std::min<int>(c.workers, static_cast<int>(n_tasks));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  return out;
}

inline void write_csv(std::ostream& os, const std::vector<ResultRow>& rows) {
  const auto& cols = csv_columns();
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  auto num = [](double x) { return format_double(x); };
  for (const auto& r : rows) {
    os << r.run << ',' << r.model << ',' << r.estimator << ',' << r.seed << ',' << (r.ok ? "ok" : "error") << ','
       << num(r.log_evidence) << ',' << num(r.evidence) << ',' << num(r.std_error) << ',' << num(r.ess) << ','
       << num(r.n_draws) << ',' << num(r.moment_1) << ',' << num(r.moment_2) << ',' << num(r.reference_evidence)
       << ',' << num(r.reference_moment_1) << ',' << num(r.reference_moment_2) << ',' << r.error << ','
       << num(r.wall_seconds) << '\n';
  }
}

inline void write_csv(const std::filesystem::path& path, const std::vector<ResultRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  write_csv(out, rows);
}

}  // namespace evidence::harness
