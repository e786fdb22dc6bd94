#include <gtest/gtest.h>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <random>

#include "dmr/analytics.h"
#include "dmr/error.h"
#include "dmr/rng.h"
#include "dmr/sde.h"

namespace dmr {
namespace {

// RK4 on m1' = a - b m1, m2' = c1 m1 - c2 m2 (first and second moment ODEs).
std::pair<double, double> moment_ode(double y0, double a, double b, double c1, double c2, double t) {
  const int n = 20000;
  const double h = t / n;
  double m1 = y0, m2 = y0 * y0;
  const auto f = [&](double u1, double u2) { return std::pair{a - b * u1, c1 * u1 - c2 * u2}; };
  for (int i = 0; i < n; ++i) {
    const auto [k1a, k1b] = f(m1, m2);
    const auto [k2a, k2b] = f(m1 + 0.5 * h * k1a, m2 + 0.5 * h * k1b);
    const auto [k3a, k3b] = f(m1 + 0.5 * h * k2a, m2 + 0.5 * h * k2b);
    const auto [k4a, k4b] = f(m1 + h * k3a, m2 + h * k3b);
    m1 += h / 6.0 * (k1a + 2 * k2a + 2 * k3a + k4a);
    m2 += h / 6.0 * (k1b + 2 * k2b + 2 * k3b + k4b);
  }
  return {m1, m2};
}

double linear_m2_oracle(const InternalParams& p, double t) {
  const double s2 = p.sigma2 * p.sigma2;
  return moment_ode(p.y0, p.a2, p.b2, 2.0 * p.a2, 2.0 * p.b2 - s2, t).second;
}

double cir_m2_oracle(const InternalParams& p, double t) {
  const double s2 = p.sigma2 * p.sigma2;
  return moment_ode(p.y0, p.a2, p.b2, 2.0 * p.a2 + s2, 2.0 * p.b2, t).second;
}

TEST(Mean, ClosedFormExample) {
  const InternalParams p{1.0, 1.0, 0.5, 1.0, 2.0};
  EXPECT_NEAR(mean_internal(p, 1.0), 1.0 + std::exp(-1.0), 1e-15);
  EXPECT_DOUBLE_EQ(mean_internal(p, 0.0), 2.0);
}

TEST(Mean, MatchesOdeForRandomParams) {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.05, 3.0);
  for (int i = 0; i < 100; ++i) {
    const InternalParams p{u(gen), u(gen), 0.5, 0.75, u(gen)};
    const double t = u(gen);
    EXPECT_NEAR(mean_internal(p, t), moment_ode(p.y0, p.a2, p.b2, 0, 0, t).first, 1e-11);
  }
}

// Frozen values from an mpmath ODE integration at 30 digits.
TEST(SecondMoment, LinearBranchesAgainstFrozenOdeValues) {
  EXPECT_NEAR(second_moment_linear({1.0, 1.0, 0.5, 1.0, 2.0}, 1.0), 2.15696878473345478, 1e-13);
  EXPECT_NEAR(second_moment_linear({1.0, 1.0, 1.0, 1.0, 2.0}, 1.0), 3.47151776468576929, 1e-13);
  EXPECT_NEAR(second_moment_linear({1.0, 1.0, std::sqrt(2.0), 1.0, 2.0}, 1.0), 7.26424111765711536, 1e-12);
  EXPECT_NEAR(second_moment_linear({0.3, 0.7, 0.8, 1.0, 0.5}, 3.0), 0.343718207647741862, 1e-13);
}

TEST(SecondMoment, CirAgainstFrozenOdeValues) {
  EXPECT_NEAR(second_moment_cir({1.0, 2.0, 1.0, 0.5, 1.0}, 0.5), 0.633992670474005155, 1e-13);
  EXPECT_NEAR(second_moment_cir({1.0, 2.0, 1.0, 0.5, 1.0}, 10.0), 0.375000001545865216, 1e-13);
  EXPECT_NEAR(second_moment_cir({0.2, 1.5, 0.9, 0.5, 0.3}, 2.0), 0.0602279039778824794, 1e-14);
}

TEST(SecondMoment, RegimeGates) {
  EXPECT_THROW(second_moment_linear({1, 1, 0.5, 0.5, 1}, 1.0), Error);
  EXPECT_THROW(second_moment_cir({1, 1, 0.5, 1.0, 1}, 1.0), Error);
  EXPECT_FALSE(second_moment_closed_form({1, 1, 0.5, 0.75, 1}, 1.0).has_value());
}

TEST(SecondMomentProperty, LinearMatchesOdeIncludingNearDegenerate) {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> u(0.1, 2.0);
  for (int i = 0; i < 150; ++i) {
    InternalParams p{u(gen), u(gen), 0.0, 1.0, u(gen)};
    double s2 = u(gen);
    if (i % 3 == 1) s2 = p.b2 * (1.0 + (i % 2 ? 1e-11 : -1e-11));
    if (i % 3 == 2) s2 = 2.0 * p.b2 + (i % 2 ? 5e-10 : -5e-10);
    p.sigma2 = std::sqrt(s2);
    const double t = u(gen);
    const double oracle = linear_m2_oracle(p, t);
    EXPECT_NEAR(second_moment_linear(p, t), oracle, 1e-8 * std::max(1.0, oracle)) << "case " << i;
  }
}

TEST(SecondMomentProperty, CirMatchesOde) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.05, 2.5);
  for (int i = 0; i < 100; ++i) {
    const InternalParams p{u(gen), u(gen), u(gen), 0.5, u(gen)};
    const double t = u(gen);
    EXPECT_NEAR(second_moment_cir(p, t), cir_m2_oracle(p, t), 1e-9);
  }
}

TEST(SecondMoment, CirVarianceLimit) {
  const InternalParams p{1.0, 2.0, 1.0, 0.5, 1.0};
  EXPECT_DOUBLE_EQ(cir_limit_variance(p), 0.125);
  const double m = mean_internal(p, 50.0);
  EXPECT_NEAR(second_moment_cir(p, 50.0) - m * m, 0.125, 1e-12);
}

TEST(MomentCurve, CarriesSecondMomentOnlyWithClosedForm) {
  const double t[] = {0.0, 0.5, 1.0};
  EXPECT_TRUE(moment_curve({1, 1, 0.5, 1.0, 2}, t).second_moment.has_value());
  EXPECT_FALSE(moment_curve({1, 1, 0.5, 0.75, 2}, t).second_moment.has_value());
  const auto sigma_zero = moment_curve({1, 1, 1e-300, 1.0, 2}, t);
  for (std::size_t i = 0; i < 3; ++i)
    EXPECT_NEAR((*sigma_zero.second_moment)[i], sigma_zero.mean[i] * sigma_zero.mean[i], 1e-12);
}

// ---------------------------------------------------------------------------

TEST(Density, RegimeSelection) {
  EXPECT_EQ(stationary_density({1, 1, 1, 0.5, 1}).regime(), DensityRegime::Gamma);
  EXPECT_EQ(stationary_density({1, 1, 0.5, 1.0, 1}).regime(), DensityRegime::InverseGamma);
  EXPECT_EQ(stationary_density({1, 1, 0.5, 0.75, 1}).regime(), DensityRegime::Ckls);
  try {
    stationary_density({0.0, 1, 0.5, 0.5, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonErgodic);
  }
}

TEST(Density, GammaParameters) {
  const auto d = stationary_density({1.0, 1.0, 1.0, 0.5, 1.0});
  EXPECT_DOUBLE_EQ(d.shape(), 2.0);
  EXPECT_DOUBLE_EQ(d.scale_or_rate(), 2.0);
  // Mode (shape - 1) / rate.
  EXPECT_GT(d.pdf(0.5), d.pdf(0.49));
  EXPECT_GT(d.pdf(0.5), d.pdf(0.51));
}

TEST(Density, InverseGammaMeanIsLongRunMean) {
  const InternalParams p{1.0, 1.0, 0.5, 1.0, 2.0};
  const auto d = stationary_density(p);
  EXPECT_DOUBLE_EQ(d.shape(), 9.0);
  EXPECT_DOUBLE_EQ(d.scale_or_rate(), 8.0);
  EXPECT_NEAR(d.scale_or_rate() / (d.shape() - 1.0), 1.0, 1e-15);
  EXPECT_NEAR(d.mean_by_quadrature(), 1.0, 1e-10);
}

TEST(Density, CdfAgainstIncompleteGamma) {
  const auto g = stationary_density({1.0, 1.0, 1.0, 0.5, 1.0});
  const double gx[] = {0.3, 1.0, 2.0};
  const double frozen[] = {0.12190138224955764, 0.5939941502901616, 0.9084218055563291};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(g.cdf(gx[i]), boost::math::gamma_p(2.0, 2.0 * gx[i]), 1e-10);
    EXPECT_NEAR(g.cdf(gx[i]), frozen[i], 1e-10);
  }
  const auto ig = stationary_density({1.0, 1.0, 0.5, 1.0, 1.0});
  const double ix[] = {0.5, 1.0, 2.0};
  const double ifrozen[] = {0.021987253549058734, 0.5925473414375915, 0.9786365655120158};
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(ig.cdf(ix[i]), boost::math::gamma_q(9.0, 8.0 / ix[i]), 1e-10);
    EXPECT_NEAR(ig.cdf(ix[i]), ifrozen[i], 1e-10);
  }
}

TEST(Density, CdfSortedMatchesPointwise) {
  const auto d = stationary_density({1.0, 1.0, 0.5, 0.75, 1.0});
  const std::vector<double> xs{0.2, 0.5, 0.9, 1.0, 1.0, 1.7, 4.0};
  const auto c = d.cdf_sorted(xs);
  for (std::size_t i = 0; i < xs.size(); ++i) EXPECT_NEAR(c[i], d.cdf(xs[i]), 1e-9);
  for (std::size_t i = 1; i < xs.size(); ++i) EXPECT_GE(c[i], c[i - 1]);
}

TEST(Density, CklsNormalizerFrozen) {
  // mpmath quadrature at 30 digits.
  EXPECT_NEAR(ckls_normalizer({1.0, 1.0, 0.5, 0.75, 1.0}) / 88077812895602.7492578, 1.0, 1e-9);
  EXPECT_NEAR(ckls_normalizer({2.0, 1.5, 0.8, 0.6, 1.0}) / 10493097219036317.3017594, 1.0, 1e-9);
  EXPECT_NEAR(ckls_normalizer({0.5, 1.0, 1.0, 0.9, 1.0}) / 15311.7508532510, 1.0, 1e-9);
}

double boost_ckls_normalizer(const InternalParams& p) {
  const double s2 = p.sigma2 * p.sigma2;
  const double e1 = 1.0 - 2.0 * p.alpha2, e2 = 2.0 - 2.0 * p.alpha2;
  const auto log_k = [&](double y) {
    return -2.0 * p.alpha2 * std::log(y) + 2.0 / s2 * (p.a2 * std::pow(y, e1) / e1 - p.b2 * std::pow(y, e2) / e2);
  };
  const double shift = log_k(p.a2 / p.b2);
  const auto f = [&](double y) { return std::exp(log_k(y) - shift); };
  boost::math::quadrature::tanh_sinh<double> ts;
  boost::math::quadrature::exp_sinh<double> es;
  const double lower = ts.integrate(f, 0.0, 1.0);
  const double upper = es.integrate(f, 1.0, std::numeric_limits<double>::infinity());
  return std::exp(-shift) / (lower + upper);
}

TEST(DensityProperty, CklsNormalizerAgreesWithBoostAndIntegratesToOne) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.3, 2.0), al(0.55, 0.95), sg(0.3, 1.2);
  for (int i = 0; i < 25; ++i) {
    const InternalParams p{u(gen), u(gen), sg(gen), al(gen), 1.0};
    const auto d = stationary_density(p);
    EXPECT_NEAR(d.normalizer() / boost_ckls_normalizer(p), 1.0, 1e-8);
    EXPECT_NEAR(d.total_mass(), 1.0, 1e-9);
    EXPECT_NEAR(d.mean_by_quadrature(), p.a2 / p.b2, 1e-8 * p.a2 / p.b2);
  }
}

TEST(DensityProperty, ClosedFormsIntegrateToOneWithMeanAOverB) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(0.3, 2.0), sg(0.2, 1.0);
  for (int i = 0; i < 40; ++i) {
    const InternalParams p{u(gen), u(gen), sg(gen), i % 2 ? 0.5 : 1.0, 1.0};
    const auto d = stationary_density(p);
    EXPECT_NEAR(d.total_mass(), 1.0, 1e-9);
    EXPECT_NEAR(d.mean_by_quadrature(), p.a2 / p.b2, 1e-8 * p.a2 / p.b2);
  }
}

TEST(Density, RestrictedMeanFrozen) {
  // scipy conditional expectation of Gamma(2, rate 2) and Gamma(8, rate 8) above 0.2.
  EXPECT_NEAR(stationary_density({1.0, 1.0, 1.0, 0.5, 2.0}).restricted_mean(0.2), 1.0571428571428574, 1e-10);
  EXPECT_NEAR(stationary_density({1.0, 1.0, 0.5, 0.5, 2.0}).restricted_mean(0.2), 1.0002151202476668, 1e-10);
}

// ---------------------------------------------------------------------------

TEST(Scale, AgainstNestedQuadratureOracle) {
  // mpmath nested quadrature with c = 1.
  struct Case {
    InternalParams p;
    double at_half, at_two;
  } cases[] = {
      {{1, 1, 0.5, 0.5, 1}, -0.87880467303862120, 3.3323416820158644},
      {{1, 1, 0.5, 0.75, 1}, -1.0145548988296920, 2.5652363903066273},
      {{0.2, 1, 1, 0.5, 1}, -0.35052773847896248, 2.6314978193928093},
      {{1, 1, 0.5, 1.0, 1}, -1.2435758612004765, 2.1218720056507578},
  };
  for (const auto& c : cases) {
    EXPECT_NEAR(scale_function(c.p, 1.0, 0.5), c.at_half, 1e-10);
    EXPECT_NEAR(scale_function(c.p, 1.0, 2.0), c.at_two, 1e-10);
    EXPECT_EQ(scale_function(c.p, 1.0, 1.0), 0.0);
  }
}

TEST(Scale, DensityIsPositiveAndOneAtReference) {
  const InternalParams p{1, 1, 0.5, 0.75, 1};
  EXPECT_DOUBLE_EQ(scale_density(p, 1.0, 1.0), 1.0);
  for (double y : {1e-3, 0.1, 1.0, 10.0}) EXPECT_GT(scale_density(p, 1.0, y), 0.0);
}

TEST(Scale, LimitsMatchRegime) {
  // CIR with a2 < sigma^2/2: s(0+) finite.
  const auto hits = scale_limit({0.2, 1, 1, 0.5, 1}, 1.0, true);
  EXPECT_FALSE(hits.divergent);
  EXPECT_LT(hits.value, 0.0);
  // Feller condition holds: s(0+) = -inf.
  EXPECT_TRUE(scale_limit({1, 1, 1, 0.5, 1}, 1.0, true).divergent);
  EXPECT_TRUE(scale_limit({1, 1, 1, 0.5, 1}, 1.0, false).divergent);
}

struct ClassCase {
  InternalParams p;
  Verdict verdict;
  bool strictly_positive;
};

class Classification : public ::testing::TestWithParam<ClassCase> {};

TEST_P(Classification, VerdictAndNumericAgreement) {
  const auto c = classify_boundary(GetParam().p);
  EXPECT_EQ(c.verdict, GetParam().verdict) << c.rule;
  EXPECT_EQ(c.strictly_positive, GetParam().strictly_positive);
  EXPECT_TRUE(c.numeric_agrees) << c.rule << " s(0+)=" << c.s_at_zero << " s(inf)=" << c.s_at_infinity;
}

INSTANTIATE_TEST_SUITE_P(
    CaseSplits, Classification,
    ::testing::Values(ClassCase{{1.0, 1, 1, 0.5, 1}, Verdict::RecurrentOscillating, true},
                      ClassCase{{0.5, 1, 1, 0.5, 1}, Verdict::RecurrentOscillating, true},
                      ClassCase{{0.25, 1, 1, 0.5, 1}, Verdict::HitsZeroReflecting, false},
                      ClassCase{{0.0, 1, 1, 0.5, 1}, Verdict::ConvergesToZeroAS, false},
                      ClassCase{{1.0, 1, 1, 0.75, 1}, Verdict::RecurrentOscillating, true},
                      ClassCase{{0.01, 1, 1, 0.75, 1}, Verdict::RecurrentOscillating, true},
                      ClassCase{{0.0, 1, 1, 0.75, 1}, Verdict::ConvergesToZeroAS, false},
                      ClassCase{{1.0, 1, 1, 1.0, 1}, Verdict::RecurrentOscillating, true},
                      ClassCase{{0.0, 1, 1, 1.0, 1}, Verdict::ConvergesToZeroAS, false}));

TEST(Classification, LinearIsOutsideNearOriginTheorems) {
  EXPECT_FALSE(classify_boundary({1, 1, 1, 1.0, 1}).covered_by_near_origin_theorems);
  EXPECT_TRUE(classify_boundary({1, 1, 1, 0.75, 1}).covered_by_near_origin_theorems);
}

// ---------------------------------------------------------------------------

TEST(Generator, CoordinateAndQuadraticFunctions) {
  ModelParams mp;
  mp.external = {1.5, 2.0, 0.4, 0.75, 1.0};
  mp.internal = {0.7, 1.2, 0.6, 0.5, 1.0};
  const double x = 0.8, y = 1.3;
  const TestFunction fx = [](double, double) { return Jet{0, 1, 0, 0, 0}; };
  const TestFunction fy = [](double, double) { return Jet{0, 0, 1, 0, 0}; };
  const TestFunction fyy = [](double, double yy) { return Jet{yy * yy, 0, 2 * yy, 0, 2}; };
  EXPECT_DOUBLE_EQ(generator_apply(mp, fx, x, y), 1.5 * y - 2.0 * x);
  EXPECT_DOUBLE_EQ(generator_apply(mp, fy, x, y), 0.7 - 1.2 * y);
  EXPECT_NEAR(generator_apply(mp, fyy, x, y), 2 * y * (0.7 - 1.2 * y) + 0.36 * y, 1e-15);
}

TEST(Generator, LyapunovClosedForm) {
  ModelParams mp;
  const double k = 1.0, x = 2.0, y = 3.0;
  // -2 b2 y^2 - 2 b1 k^2 x^2 + 2 a1 k^2 x y + 2 a2 y + sigma1^2 k^2 x^{2a1} + sigma2^2 y^{2a2}
  const double expected = -2 * 1 * 9 - 2 * 2 * 4 + 2 * 1 * 6 + 2 * 3 + 0.25 * 2 + 0.25 * 3;
  const TestFunction V = [k](double xx, double yy) { return lyapunov_jet(k, xx, yy); };
  EXPECT_NEAR(generator_apply(mp, V, x, y), expected, 1e-13);
}

TEST(Lyapunov, GenericSetHasFiniteRadius) {
  const ModelParams mp;
  const auto s = find_lyapunov_radius(mp, 1.0, 0.5, 64);
  ASSERT_TRUE(s.r0.has_value());
  EXPECT_TRUE(s.scans.back().quadratic_part_negative);
  EXPECT_TRUE(lyapunov_negativity_scan(mp, 1.0, 4.0 * *s.r0, 64).all_nonpositive);
}

TEST(Lyapunov, PositiveDiagonalNeverBecomesNegative) {
  ModelParams mp;
  mp.external.a1 = 3.0;
  mp.external.b1 = 1.0;
  // Along x = y: -2 b2 + 2 k^2 (a1 - b1) = 14 > 0 for k = 2.
  const auto s = find_lyapunov_radius(mp, 2.0, 1.0, 32, 12);
  EXPECT_FALSE(s.r0.has_value());
  EXPECT_FALSE(s.scans.back().quadratic_part_negative);
  EXPECT_GT(s.scans.back().max_value, 0.0);
}

// ---------------------------------------------------------------------------

TEST(ExplicitSolution, ReducesToOdeWithoutNoise) {
  const InternalParams p{1.0, 1.0, 1e-300, 1.0, 2.0};
  const GridSpec g{2.0, 2000};
  const std::vector<double> b(g.n_points(), 0.0);
  const auto y = linear_explicit_solution(p, g, b);
  for (std::size_t n = 0; n < y.size(); n += 250) EXPECT_NEAR(y[n], mean_internal(p, g.time(n)), 1e-6);
}

TEST(ExplicitSolution, GeometricWhenAIsZero) {
  const InternalParams p{0.0, 0.7, 0.5, 1.0, 1.5};
  const GridSpec g{1.0, 100};
  std::vector<double> b(g.n_points(), 0.0);
  for (std::size_t n = 1; n < b.size(); ++n) b[n] = b[n - 1] + 0.1 * std::sin(static_cast<double>(n));
  const auto y = linear_explicit_solution(p, g, b);
  for (std::size_t n = 0; n < y.size(); ++n) {
    EXPECT_NEAR(y[n], 1.5 * std::exp(-(0.7 + 0.125) * g.time(n) + 0.5 * b[n]), 1e-14);
  }
}

TEST(ExplicitSolution, EulerConvergesOnSharedDriver) {
  const InternalParams p{1.0, 1.0, 0.5, 1.0, 2.0};
  const GridSpec g{1.0, 20000};
  const auto inc = brownian_increments(g, RngStream(9, 0));
  std::vector<double> b(g.n_points(), 0.0);
  for (std::size_t n = 0; n < inc.size(); ++n) b[n + 1] = b[n] + inc[n];
  const auto exact = linear_explicit_solution(p, g, b);
  const auto euler = euler_internal(p, g, inc);
  double gap = 0.0;
  for (std::size_t n = 0; n < exact.size(); ++n) gap = std::max(gap, std::abs(exact[n] - euler[n]));
  EXPECT_LT(gap, 0.02);
}

TEST(ExplicitSolution, Errors) {
  const GridSpec g{1.0, 4};
  EXPECT_THROW(linear_explicit_solution({1, 1, 0.5, 0.5, 1}, g, std::vector<double>(5, 0.0)), Error);
  EXPECT_THROW(linear_explicit_solution({1, 1, 0.5, 1.0, 1}, g, std::vector<double>(4, 0.0)), Error);
  EXPECT_THROW(linear_explicit_solution({1, 1, 0.5, 1.0, 1}, g, std::vector<double>{0.1, 0, 0, 0, 0}), Error);
}

}  // namespace
}  // namespace dmr
