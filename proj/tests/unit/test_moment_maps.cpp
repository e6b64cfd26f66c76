#include <gtest/gtest.h>

#include <cmath>

#include "mfrnn/architecture.hpp"
#include "mfrnn/moment_maps.hpp"
#include "mfrnn/rng.hpp"
#include "mfrnn/verify.hpp"

using namespace mfrnn;

namespace {

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Hyperparameters uniform(const ArchitectureSpec& arch, GateParams g) {
  Hyperparameters t;
  for (const auto& gs : arch.gates) t[gs.label] = g;
  return t;
}

/// Variances in [0, 2], means in [-3, 3].
Hyperparameters wide_theta(const ArchitectureSpec& arch, std::uint64_t seed) {
  Engine eng(seed);
  std::uniform_real_distribution<double> var(0.0, 2.0), mean(-3.0, 3.0);
  Hyperparameters t;
  for (const auto& gs : arch.gates) t[gs.label] = GateParams{var(eng), var(eng), var(eng), mean(eng)};
  return t;
}

}  // namespace

TEST(PreActivation, SecondMomentOfLinearGate) {
  const auto& arch = architecture("vanillaRNN");
  Hyperparameters t;
  t["f"] = {1.0, 0.5, 0.1, 0.0};
  const auto st = preactivation_stats(t, arch, {0.3, 2.0, 1.0}, {1.0, 1.0});
  EXPECT_NEAR(st.at("f").q, 2.6, 1e-15);
  EXPECT_NEAR(st.at("f").sigma2, 2.6, 1e-15);
}

TEST(PreActivation, UnitCorrelationAtUnitStateAndInputCorrelation) {
  for (const auto& arch : registry()) {
    for (int d = 0; d < 5; ++d) {
      const auto t = wide_theta(arch, derive_seed(7, d));
      const auto st = preactivation_stats(t, arch, {0.2, 0.7, 1.0}, {1.3, 1.0});
      for (std::size_t k = 0; k < st.gates.size(); ++k) {
        if (st.gates[k].degenerate()) continue;
        EXPECT_NEAR(st.gates[k].correlation(), 1.0, 1e-14) << arch.name << " " << st.labels[k];
      }
    }
  }
}

TEST(PreActivation, ZeroVarianceGateHasNoCorrelation) {
  const auto& arch = architecture("vanillaRNN");
  Hyperparameters t;
  t["f"] = {0.0, 0.0, 0.0, 2.0};
  const auto st = preactivation_stats(t, arch, {0.3, 0.5, 0.2}, {1.0, 0.5});
  EXPECT_DOUBLE_EQ(st.at("f").q, 4.0);
  try {
    (void)st.at("f").correlation();
    FAIL() << "expected DegenerateCorrelation";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateCorrelation);
  }
}

TEST(StepMoments, VanillaMatchesReferenceIntegral) {
  const auto& arch = architecture("vanillaRNN");
  Hyperparameters t;
  t["f"] = {1.5, 0.5, 0.2, 0.3};
  const auto next = step_moments(t, arch, {0.25, 0.4, 1.0}, {1.0, 1.0}, nullptr, {128});
  // tests/oracles/gaussian_moments.py
  EXPECT_NEAR(next.mu, 0.559135291278335689, 1e-12);
  EXPECT_NEAR(next.q, 0.363622760175033712, 1e-12);
}

TEST(StepMoments, GruMatchesReferenceIntegral) {
  const auto& arch = architecture("GRU");
  Hyperparameters t;
  t["f"] = {0.8, 0.5, 0.1, 0.2};
  t["r"] = {0.6, 0.4, 0.2, -0.3};
  t["r2"] = {1.1, 0.7, 0.05, 0.1};
  const auto next = step_moments(t, arch, {0.1, 0.3, 1.0}, {1.0, 1.0}, nullptr, {128});
  // tests/oracles/gaussian_moments.py
  EXPECT_NEAR(next.mu, 0.0835143465806391054, 1e-12);
  EXPECT_NEAR(next.q, 0.191640716652902466, 1e-12);
}

TEST(StepMoments, PeepholeDeterministicGatesScaleSecondMoment) {
  const auto& arch = architecture("peepholeLSTM");
  for (double mu_f : {-2.0, 0.0, 1.5, 5.0}) {
    auto t = uniform(arch, {});
    t["f"].mu = mu_f;
    const MomentState prev{0.3, 0.5, 1.0};
    const auto next = step_moments(t, arch, prev, {1.0, 1.0});
    const double g = sigmoid_ref(mu_f);
    EXPECT_NEAR(next.q, g * g * prev.q, 1e-15);
    EXPECT_NEAR(next.mu, g * prev.mu, 1e-15);
  }
}

TEST(StepMoments, OutputSatisfiesMomentInvariants) {
  for (const auto& arch : registry()) {
    for (int d = 0; d < 4; ++d) {
      const auto t = wide_theta(arch, derive_seed(11, d));
      CellStateEnsemble cells;
      const CellStateEnsemble* cp = nullptr;
      const MomentState prev{0.1, 0.4, 0.3};
      const InputStats in{1.0, 0.4};
      if (arch.sampled_cell) {
        cells = correlated_cell_pairs(t, preactivation_stats(t, arch, prev, in), 100, 50, 3);
        cp = &cells;
      }
      const auto next = step_moments(t, arch, prev, in, cp);
      EXPECT_GE(next.q - next.mu * next.mu, -1e-15) << arch.name;
      EXPECT_LE(std::abs(next.c), 1.0 + 1e-12) << arch.name;
    }
  }
}

TEST(StepMoments, LstmWithoutCellEnsembleIsRejected) {
  const auto& arch = architecture("LSTM");
  try {
    (void)step_moments(uniform(arch, {1.0, 1.0, 0.0, 0.0}), arch, {0.0, 0.1, 1.0}, {1.0, 1.0});
    FAIL() << "expected MissingCellEnsemble";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingCellEnsemble);
  }
}

TEST(StepCorrelation, PeepholeMatchesReferenceIntegral) {
  const auto& arch = architecture("peepholeLSTM");
  Hyperparameters t;
  t["i"] = {0.5, 0.3, 0.1, 0.2};
  t["f"] = {0.7, 0.2, 0.1, 1.0};
  t["r"] = {0.9, 0.6, 0.2, -0.1};
  t["o"] = {0.3, 0.3, 0.3, 0.3};
  const double c = step_correlation(t, arch, {0.2, 0.5, 1.0}, 0.4, {1.0, 0.6}, nullptr, {128});
  // tests/oracles/peephole_correlation_step.py
  EXPECT_NEAR(c, 0.45205136414823943, 1e-10);
}

TEST(StepCorrelation, UnitCorrelationIsFixedAtUnitInputCorrelation) {
  const InputStats in{1.0, 1.0};
  for (const auto& arch : registry()) {
    for (int d = 0; d < 4; ++d) {
      const auto t = wide_theta(arch, derive_seed(21, d));
      const CellSampling cell{60, 60, 5};
      const MomentState s{0.1, 0.5, 1.0};
      const double m = step_correlation(t, arch, s, 1.0, in, arch.sampled_cell ? &cell : nullptr);
      EXPECT_NEAR(m, 1.0, 1e-12) << arch.name << " draw " << d;
    }
  }
}

TEST(StepCorrelation, PeepholeMapIsConvex) {
  const auto r = check_correlation_convexity(4, 99, kDefaultOrder);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(MeanFieldTrajectory, ConstantScheduleMatchesRepeatedSteps) {
  const auto& arch = architecture("minimalRNN");
  const auto t = wide_theta(arch, 4);
  const InputStats in{1.0, 0.3};
  const auto traj = mean_field_trajectory(t, arch, {0.0, 0.0, 1.0}, std::span<const InputStats>(&in, 1), 5);
  ASSERT_EQ(traj.size(), 6u);
  MomentState s{0.0, 0.0, 1.0};
  for (int k = 1; k <= 5; ++k) {
    s = step_moments(t, arch, s, in);
    EXPECT_DOUBLE_EQ(traj[k].q, s.q);
    EXPECT_DOUBLE_EQ(traj[k].mu, s.mu);
  }
}
