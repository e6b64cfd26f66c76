#include <gtest/gtest.h>

#include <cmath>

#include "mfrnn/architecture.hpp"
#include "mfrnn/moment_maps.hpp"
#include "mfrnn/simulator.hpp"
#include "mfrnn/verify.hpp"

using namespace mfrnn;

namespace {

Hyperparameters uniform(const ArchitectureSpec& arch, GateParams g) {
  Hyperparameters t;
  for (const auto& gs : arch.gates) t[gs.label] = g;
  return t;
}

std::span<const InputStats> constant(const InputStats& in) { return {&in, 1}; }

}  // namespace

TEST(Simulator, ZeroVarianceMatchesMeanField) {
  const auto r = check_zero_variance(16, 100, 3);
  EXPECT_TRUE(r.passed) << r.detail;
}

TEST(Simulator, JacobianMatchesFiniteDifferences) {
  for (const auto& arch : registry()) {
    SimulationConfig cfg;
    cfg.N = 32;
    cfg.seed = 6;
    JacobianOptions jo;
    jo.burn_in = 20;
    jo.check_finite_difference = true;
    const auto js = build_jacobian(uniform(arch, {1.2, 0.8, 0.1, 0.3}), arch, cfg, {1.0, 1.0}, jo);
    EXPECT_LT(js.fd_max_relative_error, 1e-4) << arch.name;
    EXPECT_EQ(js.J.rows(), 32);
  }
}

TEST(Simulator, DeterministicAcrossWorkerCounts) {
  const auto& arch = architecture("GRU");
  const auto t = random_theta("GRU", 1);
  SimulationConfig cfg;
  cfg.N = 64;
  cfg.T = 10;
  cfg.seed = 42;
  const InputStats in{1.0, 0.5};
  PairOptions one, many;
  one.replicas = many.replicas = 4;
  many.workers = 3;
  const auto a = simulate_pair(t, arch, cfg, constant(in), one);
  const auto b = simulate_pair(t, arch, cfg, constant(in), many);
  ASSERT_EQ(a.size(), 11u);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].q, b[k].q);
    EXPECT_EQ(a[k].c, b[k].c);
    EXPECT_EQ(a[k].se_c, b[k].se_c);
  }
  cfg.seed = 43;
  EXPECT_NE(simulate_pair(t, arch, cfg, constant(in), one)[5].q, a[5].q);
}

TEST(Simulator, InitialStateIsSharedByBothCopies) {
  const auto& arch = architecture("minimalRNN");
  SimulationConfig cfg;
  cfg.N = 512;
  cfg.T = 1;
  cfg.init_mean = 0.5;
  cfg.init_var = 0.2;
  const InputStats in{1.0, 0.0};
  const auto s = simulate_pair(random_theta("minimalRNN", 3), arch, cfg, constant(in));
  EXPECT_EQ(s[0].c, 1.0);
  EXPECT_NEAR(s[0].mu, 0.5, 5 * s[0].se_mu);
  EXPECT_NEAR(s[0].q, 0.45, 5 * s[0].se_q);
}

TEST(Simulator, BackendsAgreeInDistribution) {
  const auto& arch = architecture("peepholeLSTM");
  const auto t = random_theta("peepholeLSTM", 12);
  SimulationConfig cfg;
  cfg.N = 128;
  cfg.T = 8;
  cfg.seed = 5;
  const InputStats in{1.0, 0.3};
  PairOptions dense, proj;
  dense.backend = Backend::dense;
  dense.replicas = proj.replicas = 8;
  const auto a = simulate_pair(t, arch, cfg, constant(in), dense);
  const auto b = simulate_pair(t, arch, cfg, constant(in), proj);
  for (int k = 1; k <= cfg.T; ++k) {
    EXPECT_LT(std::abs(a[k].q - b[k].q), 4 * std::hypot(a[k].se_q, b[k].se_q)) << k;
    EXPECT_LT(std::abs(a[k].c - b[k].c), 4 * std::hypot(a[k].se_c, b[k].se_c)) << k;
  }
}

TEST(Simulator, TiedWeightsDepartFromUntiedPrediction) {
  // sigma^2 = 4 on every gate, forget bias 2, independent inputs.
  const auto& arch = architecture("peepholeLSTM");
  auto t = uniform(arch, {4.0, 0.5, 0.0, 0.0});
  t["f"].mu = 2.0;
  const InputStats in{1.0, 0.0};
  SimulationConfig cfg;
  cfg.N = 256;
  cfg.T = 40;
  cfg.seed = 8;
  const auto mf = mean_field_trajectory(t, arch, {0.0, 0.0, 1.0}, constant(in), cfg.T);
  auto worst = [&](bool tied) {
    PairOptions po;
    po.tied = tied;
    po.replicas = 16;
    const auto sim = simulate_pair(t, arch, cfg, constant(in), po);
    double z = 0.0;
    for (int k = 1; k <= cfg.T; ++k) z = std::max(z, std::abs(sim[k].q - mf[k].q) / sim[k].se_q);
    return z;
  };
  const double untied = worst(false), tied = worst(true);
  EXPECT_LT(untied, 4.0);
  EXPECT_GT(tied, 10.0);
}

TEST(Spectrum, KnownMatrices) {
  const auto eye = spectrum(Eigen::MatrixXd::Identity(5, 5));
  EXPECT_NEAR(eye.mean, 1.0, 1e-15);
  EXPECT_NEAR(eye.variance, 0.0, 1e-15);

  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = -1.0;
  const auto s = spectrum(d);
  ASSERT_EQ(s.values.size(), 2u);
  EXPECT_NEAR(s.values[0], 4.0, 1e-14);
  EXPECT_NEAR(s.values[1], 1.0, 1e-14);
  EXPECT_NEAR(s.mean, 2.5, 1e-14);
  EXPECT_NEAR(s.variance, 2.25, 1e-14);

  // A rotation keeps every singular value at 1.
  Eigen::MatrixXd r(2, 2);
  r << std::cos(0.3), -std::sin(0.3), std::sin(0.3), std::cos(0.3);
  EXPECT_NEAR(spectrum(3.0 * r).variance, 0.0, 1e-12);
}

TEST(Simulator, CellDistributionHasOneValuePerUnit) {
  const auto& arch = architecture("LSTM");
  SimulationConfig cfg;
  cfg.N = 50;
  cfg.T = 30;
  cfg.seed = 2;
  const auto cells = simulate_cell_distribution(uniform(arch, {1.0, 1.0, 0.1, 0.0}), arch, cfg, {1.0, 1.0});
  ASSERT_EQ(cells.size(), 50u);
  for (double c : cells) EXPECT_TRUE(std::isfinite(c));
}

TEST(Simulator, RejectsInvalidConfiguration) {
  const auto& arch = architecture("GRU");
  SimulationConfig cfg;
  cfg.N = 0;
  const InputStats in{1.0, 1.0};
  EXPECT_THROW((void)simulate_pair(random_theta("GRU", 1), arch, cfg, constant(in)), Error);
  cfg.N = 8;
  cfg.T = 5;
  std::vector<InputStats> short_schedule(3, in);
  EXPECT_THROW((void)simulate_pair(random_theta("GRU", 1), arch, cfg, short_schedule), Error);
}
