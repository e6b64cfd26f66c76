#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "mfrnn/core.hpp"

namespace mfrnn {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Worst observed statistic and the bound it is held to.
  double worst = 0.0;
  double limit = 0.0;
  std::string detail;
  double seconds = 0.0;
};

/// Random Theta with every variance in U[0, 1] and every mean in U[-2, 2].
Hyperparameters random_theta(std::string_view arch, std::uint64_t seed);

/// |m1 - chi(C = 1)| at sigma_z = 1 over `draws` random Theta per architecture:
/// below 1e-6 for the quadrature paths, below 5 pooled standard errors for the LSTM.
CheckResult check_jacobian_chi_identity(int draws, std::uint64_t seed, int order);

/// Peephole LSTM: second differences of the correlation map on a 101-point
/// grid stay >= -1e-6, and starts 0.0 / 0.9 reach the same fixed point (1e-8).
CheckResult check_correlation_convexity(int draws, std::uint64_t seed, int order);

/// E[g(x) g(y)] >= -1e-10 for g = tanh and x^3 exp(-x^2), C in [0, 1].
CheckResult check_pair_positivity(int order);

/// Zero variances: simulator and mean-field trajectories agree to 1e-12.
CheckResult check_zero_variance(int N, int T, std::uint64_t seed);

/// Assembled one-step Jacobian against finite differences, GRU and LSTM.
CheckResult check_jacobian_transcription(int N, std::uint64_t seed);

/// peephole_critical preset: chi = sigmoid(5)^2 and xi = -1/log chi within 1e-3.
CheckResult check_critical_timescale(int order);

/// Closed-form Gaussian expectations reproduced by the quadrature.
CheckResult check_quadrature_oracles();

/// Reduced-size run of every check above.
std::vector<CheckResult> run_property_suite(std::uint64_t seed);

}  // namespace mfrnn
