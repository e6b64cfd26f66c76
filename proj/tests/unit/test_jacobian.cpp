#include <gtest/gtest.h>

#include <cmath>

#include "mfrnn/architecture.hpp"
#include "mfrnn/fixed_point.hpp"
#include "mfrnn/jacobian.hpp"
#include "mfrnn/rng.hpp"
#include "mfrnn/verify.hpp"

using namespace mfrnn;

namespace {

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST(Contributions, LayoutPerArchitecture) {
  const InputStats in{1.0, 1.0};
  const std::map<std::string, std::vector<std::string>> expected{
      {"vanillaRNN", {"0", "f"}},
      {"minimalRNN", {"0", "f", "r"}},
      {"GRU", {"0", "f", "r2", "r2/r"}},
      {"peepholeLSTM", {"0", "i", "f", "r"}},
  };
  for (const auto& [name, labels] : expected) {
    const auto& arch = architecture(name);
    const auto t = random_theta(name, 2);
    const auto fp = analyze_fixed_point(t, arch, in, 1.0);
    const auto a = contribution_vector(t, arch, in, fp);
    EXPECT_EQ(a.labels, labels) << name;
    for (double m : a.mean) EXPECT_GE(m, 0.0) << name;
  }
}

TEST(Contributions, LstmHasFiveEntries) {
  const auto& arch = architecture("LSTM");
  const auto t = random_theta("LSTM", 2);
  SolveOptions so;
  so.cell.seed = 4;
  const auto fp = analyze_fixed_point(t, arch, {1.0, 1.0}, 1.0, so);
  const auto a = contribution_vector(t, arch, {1.0, 1.0}, fp, so);
  EXPECT_EQ(a.labels.size(), 5u);
  EXPECT_GT(a.se_total, 0.0);
}

TEST(JacobianMoments, FirstMomentEqualsChiAtUnitCorrelation) {
  const auto r = check_jacobian_chi_identity(3, 17, kDefaultOrder);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(JacobianMoments, DeterministicGatesGiveZeroSpread) {
  const auto& arch = architecture("peepholeLSTM");
  Hyperparameters t;
  for (const char* l : {"i", "f", "r", "o"}) t[l] = GateParams{};
  t["f"].mu = 2.0;
  const auto fp = analyze_fixed_point(t, arch, {1.0, 1.0}, 1.0);
  const auto m = jacobian_moments(t, arch, {1.0, 1.0}, fp);
  const double g = sigmoid_ref(2.0);
  EXPECT_NEAR(m.m1, g * g, 1e-14);
  EXPECT_NEAR(m.m2, g * g * g * g, 1e-14);
  EXPECT_NEAR(m.sigma, 0.0, 1e-14);
}

TEST(JacobianMoments, RulesCoincideForDeterministicEntries) {
  ContributionVector a;
  a.labels = {"0", "f"};
  a.mean = {0.5, 0.2};
  a.second = {{0.25, 0.1}, {0.1, 0.04}};
  const auto d = jacobian_moments(a, SecondMomentRule::documented);
  const auto f = jacobian_moments(a, SecondMomentRule::free);
  EXPECT_NEAR(d.m1, 0.7, 1e-15);
  // documented: 2 * 0.49 - 0.25; free: 0.49 + 0.49 - 0.25.
  EXPECT_NEAR(d.m2, 0.73, 1e-15);
  EXPECT_NEAR(f.m2, 0.73, 1e-15);
  EXPECT_NEAR(d.sigma, 0.73 - 0.49, 1e-15);
}

TEST(JacobianMoments, NegativeSpreadIsClampedAndRecorded) {
  ContributionVector a;
  a.labels = {"0", "f"};
  a.mean = {0.5, 0.2};
  // E[(sum a)^2] below (sum E a)^2 is inconsistent; the clamp reports the excess.
  a.second = {{0.25, 0.03}, {0.03, 0.04}};
  const auto m = jacobian_moments(a);
  EXPECT_EQ(m.sigma, 0.0);
  EXPECT_GT(m.clamp, 0.0);
}

TEST(IsometryGap, Classification) {
  JacobianMoments m;
  m.m1 = 1.0;
  m.sigma = 0.0;
  auto g = isometry_gap(m, 1.0);
  EXPECT_TRUE(g.critical);
  EXPECT_EQ(g.norm, 0.0);

  g = isometry_gap(m, 0.98);
  EXPECT_FALSE(g.critical);
  EXPECT_NEAR(g.chi, -0.02, 1e-15);

  m.m1 = 0.995;
  m.sigma = 0.004;
  g = isometry_gap(m, 1.003);
  EXPECT_TRUE(g.critical);
  EXPECT_NEAR(g.norm, std::sqrt(0.003 * 0.003 + 0.005 * 0.005 + 0.004 * 0.004), 1e-15);
  EXPECT_FALSE(isometry_gap(m, 1.003, 1e-3).critical);
}
