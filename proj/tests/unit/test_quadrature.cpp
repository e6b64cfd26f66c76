#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "mfrnn/quadrature.hpp"
#include "mfrnn/rng.hpp"
#include "mfrnn/symbolic.hpp"

using namespace mfrnn;

namespace {

double double_factorial(int n) {
  double r = 1.0;
  for (int k = n; k > 1; k -= 2) r *= k;
  return r;
}

struct MeanSe {
  double mean;
  double se;
};

template <class F>
MeanSe mc_pair(F&& f, const GaussianPairSpec& pair, std::size_t n, std::uint64_t seed) {
  const auto draws = sample_pair(pair, n, seed);
  double s = 0.0, s2 = 0.0;
  for (const auto& [a, b] : draws) {
    const double v = f(a, b);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  return {mean, std::sqrt(var / (n - 1))};
}

}  // namespace

TEST(GaussHermite, WeightsSumToOneAndNodesAreSymmetric) {
  for (int order : {1, 2, 7, 64, 128}) {
    const auto& rule = gauss_hermite(order);
    ASSERT_EQ(rule.nodes.size(), static_cast<std::size_t>(order));
    const double total = std::accumulate(rule.weights.begin(), rule.weights.end(), 0.0);
    EXPECT_NEAR(total, 1.0, 1e-13) << order;
    for (int i = 0; i < order; ++i) EXPECT_EQ(rule.nodes[i], -rule.nodes[order - 1 - i]);
  }
}

TEST(Expect1, GaussHermiteIsExactForPolynomialsUpToDegree2nMinus1) {
  for (int order : {10, 20}) {
    for (int k = 0; k <= 2 * order - 1; ++k) {
      const double expected = k % 2 ? 0.0 : double_factorial(k - 1);
      const double got = expect1([k](double x) { return std::pow(x, k); }, 0.0, 1.0, order, QuadRule::gauss_hermite);
      EXPECT_NEAR(got, expected, 1e-12 * std::max(1.0, expected)) << "order=" << order << " k=" << k;
    }
  }
}

TEST(Expect1, DefaultRuleIntegratesMonomials) {
  for (int k = 0; k <= 30; ++k) {
    const double expected = k % 2 ? 0.0 : double_factorial(k - 1);
    const double got = expect1([k](double x) { return std::pow(x, k); }, 0.0, 1.0);
    EXPECT_NEAR(got, expected, 1e-12 * std::max(1.0, expected)) << "k=" << k;
  }
}

TEST(Expect1, DefaultRuleResolvesTanhAtLargeVariance) {
  // mpmath reference values (30-digit quadrature) of E[tanh(0.3 + sqrt(s2) z)^2].
  const std::vector<std::pair<double, double>> ref{
      {1.0, 0.41042727951312308825}, {5.0, 0.67102367456717166022}, {10.0, 0.75827664763205903133}};
  for (const auto& [s2, value] : ref) {
    const double got = expect1([](double x) { return std::tanh(x) * std::tanh(x); }, 0.3, s2);
    EXPECT_NEAR(got, value, 1e-13) << s2;
  }
}

TEST(Expect1, ShiftedQuarticIsExact) {
  const double mu = 0.7, s2 = 2.3;
  const double expected = std::pow(mu, 4) + 6 * mu * mu * s2 + 3 * s2 * s2;
  EXPECT_NEAR(expect1([](double x) { return x * x * x * x; }, mu, s2), expected, 1e-12 * expected);
}

TEST(Expect1, UnitSecondMoment) {
  EXPECT_NEAR(expect1([](double x) { return x * x; }, 0.0, 1.0), 1.0, 1e-14);
}

TEST(Expect1, SigmoidAtZeroMeanIsOneHalf) {
  EXPECT_NEAR(expect1(sigmoid, 0.0, 4.0), 0.5, 1e-14);
}

TEST(Expect1, ZeroVarianceReturnsPointValue) {
  EXPECT_EQ(expect1([](double x) { return std::tanh(x); }, 0.3, 0.0), std::tanh(0.3));
}

TEST(Expect1, TanhSquaredMatchesMonteCarloOracle) {
  const std::size_t n = 1000000;
  Engine eng = make_engine(20240611, 0);
  Normal normal(eng);
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = std::tanh(normal());
    s += t * t;
    s2 += t * t * t * t;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / (n - 1));
  const double q = expect1([](double x) { return std::tanh(x) * std::tanh(x); }, 0.0, 1.0);
  EXPECT_LT(std::abs(q - mean), 3 * se);
}

TEST(Expect1, NonFiniteIntegrandThrows) {
  try {
    expect1([](double x) { return std::exp(x * x); }, 0.0, 1000.0);
    FAIL() << "expected NonFiniteIntegrand";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonFiniteIntegrand);
  }
}

TEST(Expect1, NegativeVarianceRejected) {
  EXPECT_THROW(expect1(sigmoid, 0.0, -1.0), Error);
}

TEST(Expect2, PerfectCorrelationCollapses) {
  const auto g1 = [](double x) { return std::tanh(x); };
  const auto g2 = sigmoid;
  const double a = expect2(g1, g2, {0.4, 1.7, 1.0});
  const double b = expect1([&](double x) { return g1(x) * g2(x); }, 0.4, 1.7);
  EXPECT_NEAR(a, b, 1e-14);
}

TEST(Expect2, NearOneCorrelationMatchesCollapsedBranch) {
  const auto g = [](double x) { return std::tanh(x); };
  const double collapsed = expect2(g, g, {0.4, 1.7, 1.0});
  EXPECT_NEAR(expect2(g, g, {0.4, 1.7, 1.0 - 1e-9}), collapsed, 1e-8);
  EXPECT_NEAR(expect2(g, g, {0.4, 1.7, 1.0 - 1e-13}), collapsed, 1e-15);
}

TEST(Expect2, ZeroCorrelationFactorizes) {
  const auto g1 = [](double x) { return std::tanh(x); };
  const double a = expect2(g1, sigmoid, {0.4, 1.7, 0.0});
  EXPECT_NEAR(a, expect1(g1, 0.4, 1.7) * expect1(sigmoid, 0.4, 1.7), 1e-14);
}

TEST(Expect2, IsSymmetric) {
  const auto g1 = [](double x) { return std::tanh(x); };
  for (double c : {-0.8, -0.2, 0.3, 0.95}) {
    const GaussianPairSpec p{-0.3, 2.5, c};
    EXPECT_NEAR(expect2(g1, sigmoid, p), expect2(sigmoid, g1, p), 1e-12) << c;
  }
}

TEST(Expect2, BilinearIsExact) {
  // E[u_a u_b] = mu^2 + sigma2 c.
  const GaussianPairSpec p{0.6, 1.9, 0.37};
  EXPECT_NEAR(expect2([](double x) { return x; }, [](double x) { return x; }, p), 0.36 + 1.9 * 0.37, 1e-13);
}

TEST(Expect2, OddFunctionCorrelationIsNonNegative) {
  const auto g = [](double x) { return std::tanh(x); };
  EXPECT_GE(expect2(g, g, {1.0, 1.0, 0.5}), 0.0);
}

TEST(Expect2, InvalidCorrelationRejected) {
  EXPECT_THROW(expect2(sigmoid, sigmoid, {0.0, 1.0, 1.5}), Error);
}

TEST(Expect2, AgreesWithMonteCarloForBoundedNonlinearities) {
  const std::vector<std::pair<const char*, double (*)(double)>> fns{
      {"sigmoid", sigmoid},
      {"tanh", [](double x) { return std::tanh(x); }},
      {"sigmoid'", sigmoid_prime},
      {"tanh'", tanh_prime}};
  const GaussianPairSpec pair{0.5, 1.5, 0.6};
  std::uint64_t seed = 7;
  for (const auto& [name, g] : fns) {
    const double q = expect2(g, g, pair);
    const auto mc = mc_pair([g = g](double a, double b) { return g(a) * g(b); }, pair, 200000, seed++);
    EXPECT_LT(std::abs(q - mc.mean), 4 * mc.se) << name;
  }
}

TEST(SamplePair, ZeroVarianceGivesPointMass) {
  for (const auto& [a, b] : sample_pair({1.25, 0.0, 0.3}, 100, 1)) {
    EXPECT_EQ(a, 1.25);
    EXPECT_EQ(b, 1.25);
  }
}

TEST(SamplePair, UnitCorrelationGivesEqualCoordinates) {
  for (const auto& [a, b] : sample_pair({0.3, 2.0, 1.0}, 1000, 2)) EXPECT_EQ(a, b);
}

TEST(SamplePair, DeterministicGivenSeed) {
  EXPECT_EQ(sample_pair({0.0, 1.0, 0.2}, 50, 9), sample_pair({0.0, 1.0, 0.2}, 50, 9));
  EXPECT_NE(sample_pair({0.0, 1.0, 0.2}, 50, 9), sample_pair({0.0, 1.0, 0.2}, 50, 10));
}

TEST(SamplePair, SampleCorrelationWithinCltBound) {
  const std::size_t n = 1000000;
  const auto draws = sample_pair({0.0, 1.0, 0.3}, n, 3);
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  for (const auto& [a, b] : draws) {
    sa += a;
    sb += b;
    saa += a * a;
    sbb += b * b;
    sab += a * b;
  }
  const double ma = sa / n, mb = sb / n;
  const double r = (sab / n - ma * mb) / std::sqrt((saa / n - ma * ma) * (sbb / n - mb * mb));
  EXPECT_LT(std::abs(r - 0.3), 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Rng, DerivedSeedsDifferAcrossStreams) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(5, 3), derive_seed(5, 3));
}
