#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "evidence/benchmarks.hpp"
#include "evidence/estimators.hpp"
#include "evidence/samplers.hpp"
#include "oracles.hpp"

using namespace evidence;

namespace {

const GaussianToyData kToy{10, 0.0, 1.0};

/// c * exp(-(x - mu)^2 / (2 s^2)); normalizer c * sqrt(2 pi) * s.
struct Gauss1 {
  double log_c, mu, s;

  double log_unnorm(const Point& p) const { return log_c - 0.5 * (p[0] - mu) * (p[0] - mu) / (s * s); }
  double log_normalizer() const { return log_c + 0.5 * std::log(2.0 * std::numbers::pi) + std::log(s); }
  LogDensity fn() const {
    return [g = *this](const Point& p) { return g.log_unnorm(p); };
  }
  WeightedSample draws(std::size_t n, std::uint64_t seed) const {
    Rng rng(seed);
    std::normal_distribution<double> z(mu, s);
    std::vector<Point> pts(n);
    for (auto& p : pts) p = Point::Constant(1, z(rng));
    return WeightedSample(std::move(pts), std::vector<double>(n, 0.0), SampleSource::kPosteriorMcmc);
  }
};

Density student_t_1d(double center, double scale, double nu) {
  auto log_pdf = [=](const Point& p) {
    const double z = (p[0] - center) / scale;
    return std::lgamma(0.5 * (nu + 1)) - std::lgamma(0.5 * nu) - 0.5 * std::log(nu * std::numbers::pi) -
           std::log(scale) - 0.5 * (nu + 1) * std::log1p(z * z / nu);
  };
  auto sample = [=](Rng& rng) {
    std::student_t_distribution<double> t(nu);
    return Point::Constant(1, center + scale * t(rng));
  };
  return {1, log_pdf, sample};
}

Density normal_1d(double mu, double s) {
  return {1,
          [=](const Point& p) {
            return -0.5 * std::log(2.0 * std::numbers::pi) - std::log(s) - 0.5 * (p[0] - mu) * (p[0] - mu) / (s * s);
          },
          [=](Rng& rng) {
            std::normal_distribution<double> z(mu, s);
            return Point::Constant(1, z(rng));
          }};
}

/// Prior N(0, tau^2), one observation x ~ N(theta, 1): evidence N(x; 0, 1 + tau^2).
ModelSpec conjugate_model(double tau, double x) {
  ModelSpec m;
  m.dim = 1;
  m.log_prior = [tau](const Point& p) {
    return -0.5 * std::log(2.0 * std::numbers::pi * tau * tau) - 0.5 * p[0] * p[0] / (tau * tau);
  };
  m.prior_normalized = true;
  m.log_likelihood = [x](const Point& p) {
    return -0.5 * std::log(2.0 * std::numbers::pi) - 0.5 * (x - p[0]) * (x - p[0]);
  };
  return m;
}

double conjugate_log_evidence(double tau, double x) {
  const double v = 1.0 + tau * tau;
  return -0.5 * std::log(2.0 * std::numbers::pi * v) - 0.5 * x * x / v;
}

LogDensity toy_target() {
  return [](const Point& p) { return gaussian_toy_log_posterior_unnorm(p, kToy); };
}

double toy_z() { return std::exp(gaussian_toy_analytic_log_evidence(kToy)); }

}  // namespace

// ------------------------------------------------------------- importance BF

TEST(ImportanceBayesFactor, IdenticalSidesGiveExactlyOne) {
  const auto m = conjugate_model(2.0, 0.7);
  const auto q = student_t_1d(0.5, 2.0, 5.0);
  const auto r = importance_bayes_factor(m, m, q, q, 500, 500, 77);
  EXPECT_EQ(r.log_value, 0.0);
  EXPECT_EQ(r.value(), 1.0);
}

TEST(ImportanceBayesFactor, ConjugateModelsMatchAnalyticRatio) {
  const double x = 1.0;
  const auto m1 = conjugate_model(1.0, x), m2 = conjugate_model(5.0, x);
  const auto r = importance_bayes_factor(m1, m2, student_t_1d(0.5, 1.5, 4.0), student_t_1d(0.9, 1.5, 4.0), 20000,
                                         20000, 1, 2);
  const double truth = std::exp(conjugate_log_evidence(1.0, x) - conjugate_log_evidence(5.0, x));
  EXPECT_TRUE(r.reliable);
  EXPECT_NEAR(r.value(), truth, 3.0 * r.std_error);
}

TEST(ImportanceBayesFactor, SingleDrawIsFiniteButUnreliable) {
  const auto m1 = conjugate_model(1.0, 0.0), m2 = conjugate_model(3.0, 0.0);
  const auto q = normal_1d(0.0, 1.0);
  const auto r = importance_bayes_factor(m1, m2, q, q, 1, 1, 3, 4);
  EXPECT_TRUE(std::isfinite(r.log_value));
  EXPECT_FALSE(r.reliable);
}

TEST(ImportanceBayesFactor, InvalidProposalAndDegenerateNumerator) {
  const auto m = conjugate_model(1.0, 0.0);
  Density broken = normal_1d(0.0, 1.0);
  broken.log_pdf = [](const Point&) { return kNegInf; };
  EXPECT_THROW(importance_bayes_factor(m, m, broken, normal_1d(0.0, 1.0), 10, 10, 1), ContractViolation);
  ModelSpec dead = m;
  dead.log_likelihood = [](const Point&) { return kNegInf; };
  EXPECT_THROW(importance_bayes_factor(dead, m, normal_1d(0.0, 1.0), normal_1d(0.0, 1.0), 10, 10, 1),
               DegenerateSample);
}

// --------------------------------------------------------------- HPD ellipse

TEST(HpdEllipse, RetainedPointsInsideAndVolumeFormula) {
  const auto s = gibbs_toy_posterior(kToy, 10000, 100, 21);
  const auto e = hpd_ellipse(s, toy_target(), 0.10);
  std::vector<double> lt;
  for (const auto& p : s.points) lt.push_back(toy_target()(p));
  std::vector<double> sorted(lt);
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double cutoff = sorted[999];
  for (std::size_t i = 0; i < s.size(); ++i)
    if (lt[i] > cutoff) {
      EXPECT_TRUE(e.contains(s.points[i]));
    }
  EXPECT_NEAR(e.log_volume(), std::log(std::numbers::pi * std::sqrt(e.shape().determinant())), 1e-12);
}

TEST(HpdEllipse, UniformDensityIntegratesToOne) {
  const auto s = gibbs_toy_posterior(kToy, 10000, 100, 22);
  const auto e = hpd_ellipse(s, toy_target(), 0.10);
  // Midpoint grid over the bounding box of the ellipse.
  const double rx = std::sqrt(e.shape()(0, 0)), ry = std::sqrt(e.shape()(1, 1));
  const int cells = 2000;
  const double hx = 2.0 * rx / cells, hy = 2.0 * ry / cells;
  double total = 0.0;
  for (int i = 0; i < cells; ++i)
    for (int j = 0; j < cells; ++j) {
      const Point p{{e.center()[0] - rx + hx * (i + 0.5), e.center()[1] - ry + hy * (j + 0.5)}};
      total += std::exp(e.log_density(p));
    }
  EXPECT_NEAR(total * hx * hy, 1.0, 1e-3);
}

TEST(HpdEllipse, QuarterLevelOnStandardNormalHoldsAQuarter) {
  Rng rng(5);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<Point> pts(10000);
  for (auto& p : pts) p = Point{{z(rng), z(rng)}};
  const WeightedSample s(pts, std::vector<double>(pts.size(), 0.0), SampleSource::kProposal);
  const auto e = hpd_ellipse(s, [](const Point& p) { return -0.5 * p.squaredNorm(); }, 0.25);
  std::size_t inside = 0;
  for (const auto& p : pts) inside += e.contains(p);
  EXPECT_NEAR(static_cast<double>(inside) / pts.size(), 0.25, 0.03);
}

TEST(HpdEllipse, UniformSamplerStaysInside) {
  const auto e = HpdEllipse(Eigen::Vector2d(1.0, 2.0), (Eigen::Matrix2d() << 4.0, 1.0, 1.0, 0.5).finished());
  Rng rng(3);
  double m0 = 0.0;
  for (int i = 0; i < 20000; ++i) {
    const Point p = e.sample(rng);
    ASSERT_TRUE(e.contains(p));
    m0 += p[0];
  }
  EXPECT_NEAR(m0 / 20000, 1.0, 0.05);
}

TEST(HpdEllipse, SingularAndUndersizedSamples) {
  std::vector<Point> line;
  for (int i = 0; i < 100; ++i) line.push_back(Point{{double(i), 2.0 * i}});
  const WeightedSample s(line, std::vector<double>(100, 0.0), SampleSource::kProposal);
  EXPECT_THROW(hpd_ellipse(s, [](const Point& p) { return -p.squaredNorm(); }, 0.5), DegenerateSample);
  const WeightedSample tiny(std::vector<Point>(5, Point::Zero(2)), std::vector<double>(5, 0.0),
                            SampleSource::kProposal);
  EXPECT_THROW(hpd_ellipse(tiny, [](const Point&) { return 0.0; }, 0.5), ContractViolation);
}

// ------------------------------------------------------------- harmonic mean

TEST(HarmonicMean, NormalizedPosteriorAsPhiIsExact) {
  const auto s = gibbs_toy_posterior(kToy, 2000, 10, 1);
  const double log_z = gaussian_toy_analytic_log_evidence(kToy);
  const auto est = harmonic_mean_evidence(
      s, [log_z](const Point& p) { return gaussian_toy_log_posterior_unnorm(p, kToy) - log_z; }, toy_target());
  EXPECT_NEAR(est.log_evidence, log_z, 1e-12);
  EXPECT_LE(est.std_error, 1e-10 * std::exp(log_z));
}

TEST(HarmonicMean, HpdEllipseRecoversToyEvidence) {
  const auto s = gibbs_toy_posterior(kToy, 10000, 100, 31);
  const auto e = hpd_ellipse(s, toy_target(), 0.10);
  const auto est = harmonic_mean_evidence(s, [&](const Point& p) { return e.log_density(p); }, toy_target());
  EXPECT_NEAR(est.evidence(), toy_z(), 3.0 * est.std_error);
  EXPECT_LT(est.relative_error(), 0.1);
}

TEST(HarmonicMean, FatTailedPhiCollapsesEss) {
  const auto s = gibbs_toy_posterior(kToy, 10000, 100, 32);
  const auto e = hpd_ellipse(s, toy_target(), 0.10);
  const auto hpd = harmonic_mean_evidence(s, [&](const Point& p) { return e.log_density(p); }, toy_target());
  const Box box(Eigen::Vector2d(-4.0, 0.01), Eigen::Vector2d(4.0, 10.0));
  const auto wide = harmonic_mean_evidence(
      s, [&](const Point& p) { return box.contains(p) ? -box.log_volume() : kNegInf; }, toy_target());
  EXPECT_LT(wide.ess, 0.2 * hpd.ess);
}

TEST(HarmonicMean, PermutationInvariantAndErrorPaths) {
  auto s = gibbs_toy_posterior(kToy, 3000, 10, 33);
  const auto e = hpd_ellipse(s, toy_target(), 0.25);
  const auto phi = [&](const Point& p) { return e.log_density(p); };
  const auto a = harmonic_mean_evidence(s, phi, toy_target());
  Rng rng(1);
  std::shuffle(s.points.begin(), s.points.end(), rng);
  const auto b = harmonic_mean_evidence(s, phi, toy_target());
  EXPECT_EQ(a.log_evidence, b.log_evidence);
  EXPECT_EQ(a.std_error, b.std_error);

  WeightedSample bad = s;
  bad.points[0] = Point{{0.0, -1.0}};
  EXPECT_THROW(harmonic_mean_evidence(bad, phi, toy_target()), ContractViolation);
  EXPECT_THROW(harmonic_mean_evidence(s, [](const Point&) { return kNegInf; }, toy_target()), DegenerateSample);
}

// -------------------------------------------------------------------- bridge

TEST(BridgeGeometric, IdentityAndConstantMultiple) {
  const Gauss1 g{0.0, 0.3, 1.2};
  const auto s = g.draws(1000, 1);
  EXPECT_EQ(bridge_geometric(s, g.fn(), g.fn()).log_value, 0.0);
  for (double c : {1e-30, 0.37, 5.0, 1e40}) {
    const Gauss1 scaled{std::log(c), g.mu, g.s};
    const auto r = bridge_geometric(s, scaled.fn(), g.fn());
    EXPECT_NEAR(r.value(), c, 1e-12 * c);
    EXPECT_LE(r.std_error, 1e-12 * c);
  }
}

TEST(BridgeGeometric, GaussianPairMatchesAnalyticRatio) {
  const Gauss1 g1{0.5, 0.2, 1.0}, g2{-1.0, 0.0, 1.5};
  const auto r = bridge_geometric(g2.draws(20000, 2), g1.fn(), g2.fn());
  EXPECT_NEAR(r.value(), std::exp(g1.log_normalizer() - g2.log_normalizer()), 3.0 * r.std_error);
}

TEST(BridgeGeometric, ZeroDenominatorDensityThrows) {
  const Gauss1 g{0.0, 0.0, 1.0};
  EXPECT_THROW(bridge_geometric(g.draws(10, 1), g.fn(), [](const Point&) { return kNegInf; }), ContractViolation);
}

TEST(BridgeSingleProposal, IdentityIsExactlyOne) {
  const Gauss1 g{0.0, 0.0, 1.0};
  EXPECT_EQ(bridge_single_proposal(student_t_1d(0.0, 3.0, 3.0), g.fn(), g.fn(), 100, 4).log_value, 0.0);
}

TEST(BridgeSingleProposal, GaussianPairUnderStudentT) {
  const Gauss1 g1{0.5, 0.2, 1.0}, g2{-1.0, 0.0, 1.5};
  const auto r = bridge_single_proposal(student_t_1d(0.0, 2.5, 3.0), g1.fn(), g2.fn(), 20000, 5);
  EXPECT_NEAR(r.value(), std::exp(g1.log_normalizer() - g2.log_normalizer()), 3.0 * r.std_error);
  EXPECT_GT(r.covariance, 0.0);
}

TEST(BridgeSingleProposal, SharedSampleBeatsIndependentSamples) {
  const Gauss1 g1{0.0, 0.0, 1.0}, g2{0.0, 0.25, 1.1};
  const auto q = student_t_1d(0.0, 2.0, 4.0);
  auto as_model = [](const Gauss1& g) {
    ModelSpec m;
    m.dim = 1;
    m.log_prior = [](const Point&) { return 0.0; };
    m.log_likelihood = g.fn();
    return m;
  };
  std::vector<double> shared, independent;
  for (std::uint64_t r = 0; r < 100; ++r) {
    shared.push_back(bridge_single_proposal(q, g1.fn(), g2.fn(), 2000, 100 + r).log_value);
    independent.push_back(importance_bayes_factor(as_model(g1), as_model(g2), q, q, 2000, 2000, 500 + r, 900 + r).log_value);
  }
  EXPECT_LT(oracle::variance(shared), oracle::variance(independent));
}

// |pi1 - pi2| vanishes wherever the two targets coincide, so it cannot serve as an
// importance density for either of them.
TEST(BridgeSingleProposal, AbsoluteDifferenceProposalLosesSupport) {
  auto pi1 = [](double x) { return (x > 0.0 && x < 2.0) ? 0.5 : 0.0; };
  auto pi2 = [](double x) { return (x > 0.0 && x < 1.0) ? 0.5 : ((x >= 1.0 && x < 1.5) ? 1.0 : 0.0); };
  int covered_but_null = 0;
  for (double x = 0.01; x < 2.0; x += 0.01)
    if (pi1(x) > 0.0 && std::abs(pi1(x) - pi2(x)) == 0.0) ++covered_but_null;
  EXPECT_GT(covered_but_null, 0);
}

TEST(BridgeGeneralAlpha, IdentityAndAlphaOne) {
  const Gauss1 g{0.0, 0.0, 1.0};
  const auto s = g.draws(500, 1);
  const LogDensity one = [](const Point&) { return 0.0; };
  EXPECT_EQ(bridge_general_alpha(s, s, one, g.fn(), g.fn()).log_value, 0.0);

  const Gauss1 g1{0.5, 0.2, 1.0}, g2{-1.0, 0.0, 1.5};
  const auto r = bridge_general_alpha(g1.draws(20000, 2), g2.draws(20000, 3), one, g1.fn(), g2.fn());
  EXPECT_NEAR(r.value(), std::exp(g1.log_normalizer() - g2.log_normalizer()), 3.0 * r.std_error);
}

TEST(BridgeGeneralAlpha, NonPositiveAlphaRejected) {
  const Gauss1 g{0.0, 0.0, 1.0};
  const auto s = g.draws(10, 1);
  EXPECT_THROW(bridge_general_alpha(s, s, [](const Point&) { return kNegInf; }, g.fn(), g.fn()), ContractViolation);
}

TEST(BridgeGeneralAlpha, HarmonicAlphaBlowsUpOnSeparatedTargets) {
  const Gauss1 g1{0.0, 0.0, 1.0}, g2{0.0, 2.5, 1.0};
  const LogDensity harmonic = [&](const Point& p) { return -g1.log_unnorm(p) - g2.log_unnorm(p); };
  std::vector<double> h, opt;
  BridgeConfig cfg;
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto s1 = g1.draws(1000, 10 + 2 * r), s2 = g2.draws(1000, 11 + 2 * r);
    h.push_back(bridge_general_alpha(s1, s2, harmonic, g1.fn(), g2.fn()).log_value);
    opt.push_back(bridge_iterative_optimal(s1, s2, g1.fn(), g2.fn(), cfg).log_value);
  }
  EXPECT_GT(oracle::variance(h), 10.0 * oracle::variance(opt));
}

TEST(BridgeIterative, TrueRatioIsAFixedPointWithinMonteCarloError) {
  const Gauss1 g1{0.5, 0.2, 1.0}, g2{-1.0, 0.0, 1.5};
  const auto s1 = g1.draws(10000, 4), s2 = g2.draws(10000, 5);
  const double truth = std::exp(g1.log_normalizer() - g2.log_normalizer());
  BridgeConfig cfg;
  cfg.max_iter = 1;
  cfg.tol = 1.0;  // accept the first iterate
  const auto r = bridge_iterative_optimal(s1, s2, g1.fn(), g2.fn(), cfg, truth);
  ASSERT_EQ(r.trace.size(), 2u);
  const LogDensity alpha = [&](const Point& p) {
    return -log_add_exp(std::log(10000.0) + g1.log_unnorm(p) - std::log(truth), std::log(10000.0) + g2.log_unnorm(p));
  };
  const auto one_step = bridge_general_alpha(s1, s2, alpha, g1.fn(), g2.fn());
  EXPECT_NEAR(r.trace[1], one_step.value(), 1e-12 * truth);
  EXPECT_LT(std::abs(r.trace[1] / truth - 1.0), 3.0 * one_step.std_error / truth);
}

TEST(BridgeIterative, IdenticalTargetsConvergeInOneIteration) {
  const Gauss1 g{0.0, 0.0, 1.0};
  const auto s = g.draws(1000, 6);
  const auto r = bridge_iterative_optimal(s, s, g.fn(), g.fn(), BridgeConfig{});
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.value(), 1.0);
}

TEST(BridgeIterative, ContractsMonotonicallyAndBeatsAlphaOne) {
  const Gauss1 g1{0.5, 0.2, 1.0}, g2{-1.0, 1.0, 1.5};
  const double truth = std::exp(g1.log_normalizer() - g2.log_normalizer());
  std::vector<double> opt, flat;
  const LogDensity one = [](const Point&) { return 0.0; };
  for (std::uint64_t r = 0; r < 100; ++r) {
    const auto s1 = g1.draws(2000, 1000 + 2 * r), s2 = g2.draws(2000, 1001 + 2 * r);
    const auto it = bridge_iterative_optimal(s1, s2, g1.fn(), g2.fn(), BridgeConfig{}, 50.0 * truth);
    for (std::size_t k = 2; k < it.trace.size(); ++k)
      EXPECT_LE(std::abs(it.trace[k] - it.trace[k - 1]), std::abs(it.trace[k - 1] - it.trace[k - 2]) * (1 + 1e-9));
    opt.push_back(it.log_value);
    flat.push_back(bridge_general_alpha(s1, s2, one, g1.fn(), g2.fn()).log_value);
  }
  EXPECT_LE(oracle::variance(opt), oracle::variance(flat));
}

TEST(BridgeIterative, NonConvergenceCarriesTrace) {
  const Gauss1 g1{0.5, 0.2, 1.0}, g2{-1.0, 0.0, 1.5};
  BridgeConfig cfg;
  cfg.max_iter = 2;
  cfg.tol = 1e-15;
  try {
    bridge_iterative_optimal(g1.draws(100, 1), g2.draws(100, 2), g1.fn(), g2.fn(), cfg, 1e6);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_EQ(e.trace().size(), 3u);
  }
}

// ------------------------------------------------------------ mixture bridge

namespace {

struct MixtureSetup {
  ModelSpec model = gaussian_toy_model(kToy);
  HpdEllipse ellipse;

  explicit MixtureSetup(std::uint64_t seed)
      : ellipse(hpd_ellipse(gibbs_toy_posterior(kToy, 10000, 100, seed), toy_target(), 0.10)) {}

  EvidenceEstimate run(double omega, std::size_t t, std::uint64_t seed) const {
    const auto chain = mixture_gibbs_sampler(model, ellipse.density(), omega, gibbs_toy_kernel(kToy), t, seed);
    return mixture_bridge_evidence(chain, omega, [&](const Point& p) { return ellipse.log_density(p); },
                                   toy_target());
  }
};

}  // namespace

TEST(MixtureBridge, RecoversToyEvidence) {
  const MixtureSetup s(41);
  const double omega = 0.1 / toy_z();
  const auto est = s.run(omega, 10000, 42);
  EXPECT_NEAR(est.evidence(), toy_z(), 3.0 * est.std_error);
  const auto doubled = s.run(2.0 * omega, 10000, 43);
  EXPECT_NEAR(doubled.evidence(), toy_z(), 3.0 * doubled.std_error);
}

TEST(MixtureBridge, ConstantResponsibilityReducesToClosedForm) {
  // Every chain point identical: r_t = r for all t.
  const MixtureSetup s(44);
  LabeledChain chain;
  const Point p = s.ellipse.center();
  chain.points.assign(50, p);
  chain.labels.assign(50, 2);
  const double omega = 0.3 / toy_z();
  const double a = std::log(omega) + toy_target()(p);
  const double r = std::exp(a - log_add_exp(a, s.ellipse.log_density(p)));
  const auto est =
      mixture_bridge_evidence(chain, omega, [&](const Point& x) { return s.ellipse.log_density(x); }, toy_target());
  EXPECT_NEAR(est.evidence(), r / ((1.0 - r) * omega), 1e-12 * est.evidence());
}

TEST(MixtureBridge, NoPhiMassIsDegenerate) {
  LabeledChain chain;
  chain.points.assign(10, Point{{0.0, 1.0}});
  chain.labels.assign(10, 1);
  EXPECT_THROW(mixture_bridge_evidence(chain, 1.0, [](const Point&) { return kNegInf; }, toy_target()),
               DegenerateSample);
}

TEST(MixtureBridge, ReplicateIntervalsOverlapHarmonicMean) {
  std::vector<double> mb, hm;
  const double omega = 0.1 / toy_z();
  for (std::uint64_t r = 0; r < 20; ++r) {
    const auto sample = gibbs_toy_posterior(kToy, 10000, 100, 7000 + r);
    const auto e = hpd_ellipse(sample, toy_target(), 0.10);
    const auto phi = [&](const Point& p) { return e.log_density(p); };
    hm.push_back(harmonic_mean_evidence(sample, phi, toy_target()).evidence());
    const auto chain = mixture_gibbs_sampler(gaussian_toy_model(kToy), e.density(), omega, gibbs_toy_kernel(kToy),
                                             10000, 8000 + r);
    mb.push_back(mixture_bridge_evidence(chain, omega, phi, toy_target()).evidence());
  }
  std::sort(mb.begin(), mb.end());
  std::sort(hm.begin(), hm.end());
  // With 20 replicates the 95% interval is the [min, max] range.
  EXPECT_LE(std::max(mb.front(), hm.front()), std::min(mb.back(), hm.back()));
  EXPECT_NEAR(oracle::median(mb), toy_z(), 0.05 * toy_z());
  EXPECT_NEAR(oracle::median(hm), toy_z(), 0.05 * toy_z());
}
