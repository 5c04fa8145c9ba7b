#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "evidence/benchmarks.hpp"
#include "evidence/pmc.hpp"
#include "oracles.hpp"

using namespace evidence;

namespace {

const BananaParams kBanana{};

/// Bivariate Student-t density written out from its definition.
double t2_pdf(const Eigen::Vector2d& x, const Eigen::Vector2d& mu, const Eigen::Matrix2d& s, double nu) {
  const Eigen::Vector2d c = x - mu;
  const double m2 = c.dot(s.inverse() * c);
  return std::tgamma(0.5 * (nu + 2)) / (std::tgamma(0.5 * nu) * nu * std::numbers::pi * std::sqrt(s.determinant())) *
         std::pow(1.0 + m2 / nu, -0.5 * (nu + 2));
}

ModelSpec density_as_model(const Density& d) {
  ModelSpec m;
  m.dim = d.dim;
  m.log_prior = [](const Point&) { return 0.0; };
  m.log_likelihood = d.log_pdf;
  return m;
}

}  // namespace

TEST(PmcInit, EqualWeightsAndSharedScale) {
  const PmcConfig cfg;
  const auto q = pmc_init(cfg, 1);
  ASSERT_EQ(q.n_components(), 9);
  for (double w : q.weights()) EXPECT_DOUBLE_EQ(w, 1.0 / 9.0);
  for (const auto& s : q.scales()) EXPECT_TRUE(s.isApprox(cfg.init_scale));
  EXPECT_EQ(q.dof(), 9.0);
}

TEST(PmcInit, MeanSpreadMatchesStatedCovariance) {
  const PmcConfig cfg;
  std::vector<double> first, second;
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto q = pmc_init(cfg, s);
    for (const auto& m : q.means()) {
      first.push_back(m[0]);
      second.push_back(m[1]);
    }
  }
  EXPECT_NEAR(oracle::variance(first), 40.0, 4.0);
  EXPECT_NEAR(oracle::variance(second), 10.0, 1.0);
}

TEST(PmcInit, SameSeedSameProposal) {
  const PmcConfig cfg;
  const auto a = pmc_init(cfg, 77), b = pmc_init(cfg, 77), c = pmc_init(cfg, 78);
  for (int d = 0; d < 9; ++d) EXPECT_EQ(a.means()[d], b.means()[d]);
  EXPECT_NE(a.means()[0], c.means()[0]);
}

TEST(MixtureProposal, LogPdfMatchesDirectSummation) {
  const auto q = pmc_init(PmcConfig{}, 3);
  // Give the components distinct, correlated scales.
  std::vector<Eigen::MatrixXd> scales;
  for (int d = 0; d < 9; ++d) {
    Eigen::Matrix2d s;
    s << 5.0 + d, 0.3 * d, 0.3 * d, 2.0 + 0.5 * d;
    scales.push_back(s);
  }
  std::vector<double> w{0.05, 0.1, 0.2, 0.05, 0.1, 0.15, 0.1, 0.1, 0.15};
  const MixtureProposal mix(w, q.means(), scales, 9.0);
  Rng rng(4);
  for (int i = 0; i < 1000; ++i) {
    const Point x = mix.sample(rng);
    double direct = 0.0;
    for (int d = 0; d < 9; ++d) direct += w[d] * t2_pdf(x, q.means()[d], scales[d], 9.0);
    EXPECT_NEAR(mix.log_pdf(x), std::log(direct), 1e-10);
    const auto r = mix.responsibilities(x);
    double sum = 0.0;
    for (double v : r) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-12);
  }
}

TEST(MixtureProposal, ComponentSamplerMatchesStudentTMoments) {
  Eigen::Matrix2d s;
  s << 4.0, 1.0, 1.0, 2.0;
  const MixtureProposal q({1.0}, {Eigen::Vector2d(1.0, -2.0)}, {s}, 9.0);
  Rng rng(5);
  const int n = 200000;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  std::vector<Point> pts(n);
  for (auto& p : pts) {
    p = q.sample(rng);
    mean += p / n;
  }
  for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose() / (n - 1);
  EXPECT_NEAR(mean[0], 1.0, 0.02);
  EXPECT_NEAR(mean[1], -2.0, 0.02);
  // Covariance of a t_nu is nu / (nu - 2) times the scale.
  const Eigen::Matrix2d expected = s * 9.0 / 7.0;
  EXPECT_NEAR(cov(0, 0), expected(0, 0), 0.05 * expected(0, 0));
  EXPECT_NEAR(cov(1, 1), expected(1, 1), 0.05 * expected(1, 1));
  EXPECT_NEAR(cov(0, 1), expected(0, 1), 0.05 * expected(0, 0));
}

TEST(MixtureProposal, RejectsInvalidParameters) {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(2, 2);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(2);
  EXPECT_THROW(MixtureProposal({0.5, 0.4}, {zero, zero}, {eye, eye}, 9.0), ConsistencyError);
  EXPECT_THROW(MixtureProposal({1.0}, {zero}, {-eye}, 9.0), ConsistencyError);
  EXPECT_THROW(MixtureProposal({1.0}, {zero}, {eye}, 0.0), ContractViolation);
}

TEST(MixtureProposal, WriteReadRoundTrip) {
  const auto q = pmc_run(banana_model(kBanana), [] {
    PmcConfig c;
    c.n_iterations = 3;
    c.n_per_iteration = 2000;
    c.n_final = 100;
    return c;
  }(), 9).proposal;
  std::stringstream ss;
  q.write(ss);
  const auto r = MixtureProposal::read(ss);
  ASSERT_EQ(r.n_components(), q.n_components());
  for (int d = 0; d < q.n_components(); ++d) {
    EXPECT_EQ(r.weights()[d], q.weights()[d]);
    EXPECT_EQ(r.means()[d], q.means()[d]);
    EXPECT_EQ(r.scales()[d], q.scales()[d]);
  }
  std::istringstream bad("mixture 2 2 9\n0.5 0 0 1 0 0 1\n");
  EXPECT_THROW(MixtureProposal::read(bad), ContractViolation);
}

TEST(PmcIterate, TargetEqualToOneComponentIsAFixedPoint) {
  Eigen::Matrix2d s;
  s << 3.0, 0.8, 0.8, 1.5;
  const Eigen::Vector2d mu(0.5, -1.0);
  const MixtureProposal target({1.0}, {mu}, {s}, 9.0);
  const MixtureProposal start({0.5, 0.5}, {mu, Eigen::Vector2d(60.0, 60.0)}, {s, s}, 9.0);
  const ModelSpec model = density_as_model(target.density());
  std::vector<double> m0, m1, s00, s01, s11;
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto step = pmc_iterate(start, model, 5000, 40 + r);
    ASSERT_EQ(step.proposal.n_components(), 1);  // the distant component is pruned
    EXPECT_EQ(step.diagnostics.pruned, 1);
    const auto& m = step.proposal.means()[0];
    const auto& c = step.proposal.scales()[0];
    m0.push_back(m[0]);
    m1.push_back(m[1]);
    s00.push_back(c(0, 0));
    s01.push_back(c(0, 1));
    s11.push_back(c(1, 1));
  }
  auto check = [](const std::vector<double>& v, double truth) {
    double mean = 0.0;
    for (double x : v) mean += x / v.size();
    EXPECT_NEAR(mean, truth, 3.0 * std::sqrt(oracle::variance(v) / v.size()));
  };
  check(m0, mu[0]);
  check(m1, mu[1]);
  check(s00, s(0, 0));
  check(s01, s(0, 1));
  check(s11, s(1, 1));
}

TEST(PmcIterate, SimplexAndSpdPreservedOnBanana) {
  const PmcConfig cfg;
  const ModelSpec model = banana_model(kBanana);
  auto q = pmc_init(cfg, 11);
  Rng seeds(12);
  for (int it = 0; it < 10; ++it) {
    const auto step = pmc_iterate(q, model, 5000, seeds());
    q = step.proposal;
    EXPECT_NO_THROW(q.validate());
    double sum = 0.0;
    for (double w : q.weights()) {
      EXPECT_GE(w, MixtureProposal::kPruneFloor / 2);
      sum += w;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_GT(step.diagnostics.normalized_perplexity, 0.0);
    EXPECT_LE(step.diagnostics.normalized_perplexity, 1.0 + 1e-12);
  }
}

TEST(PmcIterate, TargetMissedEntirelyIsDegenerate) {
  ModelSpec model = banana_model(kBanana);
  model.log_likelihood = [](const Point&) { return kNegInf; };
  EXPECT_THROW(pmc_iterate(pmc_init(PmcConfig{}, 1), model, 100, 2), DegenerateSample);
}

TEST(PmcEvidence, PriorAsProposalIsPlainPriorMonteCarlo) {
  const ModelSpec model = banana_model(kBanana);
  Rng rng(13);
  std::vector<Point> pts(20000);
  std::vector<double> as_proposal(pts.size()), as_prior(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    pts[i] = model.prior_sampler(rng);
    as_proposal[i] = model.log_target(pts[i]) - model.log_prior(pts[i]);
    as_prior[i] = model.log_likelihood(pts[i]);
  }
  const auto a = pmc_evidence(WeightedSample(pts, as_proposal, SampleSource::kProposal));
  const auto b = evidence_from_weights(WeightedSample(pts, as_prior, SampleSource::kPrior));
  EXPECT_NEAR(a.log_evidence, b.log_evidence, 1e-13);
  EXPECT_NEAR(a.std_error, b.std_error, 1e-12 * b.std_error);
}

TEST(PmcRun, BananaReplicationConfiguration) {
  const double grid = banana_grid_evidence(kBanana, 1000);
  const auto res = pmc_run(banana_model(kBanana), PmcConfig{}, 2024);
  ASSERT_EQ(res.diagnostics.size(), 11u);
  EXPECT_EQ(res.final_sample.size(), 50000u);
  const auto est = pmc_evidence(res.final_sample);
  EXPECT_NEAR(est.evidence(), grid, 3.0 * est.std_error);
  EXPECT_NEAR(est.evidence(), grid, 0.02 * grid);
  const auto m1 = weighted_moment(res.final_sample, [](const Point& p) { return p[0]; });
  EXPECT_NEAR(m1.value, 0.0, 3.0 * m1.std_error);
  EXPECT_GT(res.diagnostics[9].normalized_perplexity, res.diagnostics[0].normalized_perplexity);
}

TEST(PmcRun, Deterministic) {
  PmcConfig cfg;
  cfg.n_iterations = 2;
  cfg.n_per_iteration = 1000;
  cfg.n_final = 1000;
  const auto a = pmc_run(banana_model(kBanana), cfg, 5), b = pmc_run(banana_model(kBanana), cfg, 5);
  EXPECT_EQ(a.final_sample.log_weights, b.final_sample.log_weights);
}
