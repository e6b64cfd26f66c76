#pragma once

#include <string>
#include <vector>

#include "mfrnn/architecture.hpp"
#include "mfrnn/core.hpp"
#include "mfrnn/fixed_point.hpp"

namespace mfrnn {

/// Per-entry expectations of the a-vector at the stationary state. Entry 0 is
/// the d f / d s term. A gated gate k2 (gating gate k) has two entries: "k2"
/// (its own recurrent weights) and "k2/k" (the path through W_k).
struct ContributionVector {
  std::vector<std::string> labels;
  std::vector<double> mean;
  /// second[k][l] = E[a_k a_l].
  std::vector<std::vector<double>> second;
  /// Monte Carlo standard error of sum(mean); 0 for quadrature paths.
  double se_total = 0.0;

  double total() const;
  double total_second() const;
};

enum class SecondMomentRule {
  /// m2 = 2 E[(sum a)^2] - E[a0^2].
  documented,
  /// m2 = E[(sum a)^2] + m1^2 - E[a0]^2.
  free,
};

struct JacobianMoments {
  double m1 = 0.0;
  double m2 = 0.0;
  double sigma = 0.0;
  double se_m1 = 0.0;
  /// Size of the negative-sigma clamp (0 when none was applied).
  double clamp = 0.0;
};

ContributionVector contribution_vector(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                       const InputStats& inputs, const FixedPointReport& fixed,
                                       const SolveOptions& opts = {});

JacobianMoments jacobian_moments(const ContributionVector& a, SecondMomentRule rule = SecondMomentRule::documented);

JacobianMoments jacobian_moments(const Hyperparameters& theta, const ArchitectureSpec& arch, const InputStats& inputs,
                                 const FixedPointReport& fixed, const SolveOptions& opts = {},
                                 SecondMomentRule rule = SecondMomentRule::documented);

struct IsometryGap {
  double chi = 0.0;
  double m1 = 0.0;
  double sigma = 0.0;
  double norm = 0.0;
  bool critical = false;
};

inline constexpr double kIsometryThreshold = 1e-2;

/// Residuals (chi - 1, m1 - 1, sigma); critical when each is below threshold in magnitude.
IsometryGap isometry_gap(const JacobianMoments& m, double chi, double threshold = kIsometryThreshold);

}  // namespace mfrnn
