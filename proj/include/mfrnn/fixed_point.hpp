#pragma once

#include <string>
#include <vector>

#include "mfrnn/architecture.hpp"
#include "mfrnn/cell_sampler.hpp"
#include "mfrnn/core.hpp"
#include "mfrnn/moment_maps.hpp"

namespace mfrnn {

struct SolveOptions {
  double tol = 1e-9;
  int max_iter = 10000;
  /// Iteration cap for the sampled (LSTM) maps.
  int max_iter_sampled = 400;
  bool auto_damping = true;
  /// Cell ensemble size/length and the root seed of every sampled quantity.
  CellSampling cell{};
  /// Fresh gate draws per cell sample in the LSTM chi and a-vector averages.
  int gate_draws = 16;
  Numerics num{};
  MomentState init{0.0, 0.0, 1.0};
};

struct MomentFixedPoint {
  MomentState state;
  std::vector<MomentState> trajectory;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  bool damped = false;
  /// Monte Carlo standard errors (sampled maps only).
  double se_mu = 0.0;
  double se_q = 0.0;
};

class NoConvergenceError : public Error {
 public:
  NoConvergenceError(const std::string& what, std::vector<MomentState> trajectory);
  const std::vector<MomentState>& trajectory() const { return trajectory_; }

 private:
  std::vector<MomentState> trajectory_;
};

struct FixedPointReport {
  double mu_star = 0.0;
  double q_star = 0.0;
  double c_star = 1.0;
  double chi = 0.0;
  double chi_se = 0.0;
  /// +infinity when chi >= 1.
  double xi = 0.0;
  /// "finite_difference", "analytic" or "sampled".
  std::string chi_method;
  int moment_iterations = 0;
  int correlation_iterations = 0;
  double moment_residual = 0.0;
  double correlation_residual = 0.0;
  double se_mu = 0.0;
  double se_q = 0.0;
  double se_c = 0.0;
  bool converged = false;
  bool damped = false;
  std::vector<double> c_trajectory;

  MomentState state() const { return {mu_star, q_star, c_star}; }
  bool stable() const { return chi <= 1.0; }
};

double timescale(double chi);

MomentFixedPoint solve_moments(const Hyperparameters& theta, const ArchitectureSpec& arch, const InputStats& inputs,
                               const SolveOptions& opts = {});

FixedPointReport solve_correlation(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                   const InputStats& inputs, const MomentFixedPoint& fixed, double c0,
                                   const SolveOptions& opts = {});

/// solve_moments followed by solve_correlation.
FixedPointReport analyze_fixed_point(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                     const InputStats& inputs, double c0 = 0.0, const SolveOptions& opts = {});

/// dM_C/dC at c. Central difference with step 1e-4 (one-sided second order
/// near c = 1), checked against step 5e-5 and Richardson-combined. A point-mass
/// state uses chi_analytic; the LSTM uses lstm_chi.
double chi_at(const Hyperparameters& theta, const ArchitectureSpec& arch, const InputStats& inputs,
              const MomentState& fixed, double c, const SolveOptions& opts = {});

struct SampledValue {
  double value = 0.0;
  double se = 0.0;
};

/// Closed-form one-step LSTM chi averaged over a paired cell ensemble and
/// fresh correlated gate draws.
SampledValue lstm_chi(const Hyperparameters& theta, const ArchitectureSpec& arch, const InputStats& inputs,
                      const MomentState& fixed, double c, const SolveOptions& opts = {});

}  // namespace mfrnn
