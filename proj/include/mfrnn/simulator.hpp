#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mfrnn/architecture.hpp"
#include "mfrnn/core.hpp"

namespace mfrnn {

/// dense: every weight matrix is drawn. projected: for fresh (untied) weights
/// the pair (W x_a, W x_b) is drawn directly from its Gaussian law given the
/// 2x2 Gram matrix of (x_a, x_b), which is exact in distribution and O(N).
enum class Backend { dense, projected };

struct PairOptions {
  bool tied = false;  // tied runs always use the dense backend
  Backend backend = Backend::projected;
  int replicas = 1;
  /// 0 means all available cores.
  int workers = 1;
};

/// Cross-unit estimates of one step, both copies pooled, with standard errors.
struct EmpiricalStep {
  double mu = 0.0;
  double q = 0.0;
  double c = 1.0;
  double se_mu = 0.0;
  double se_q = 0.0;
  double se_c = 0.0;

  MomentState state() const { return {mu, q, c}; }
};

/// Two copies driven by the same weights and inputs correlated at sigma_z.
/// Both copies start from the same s^0 ~ N(init_mean, init_var); the LSTM cell
/// starts at 0. schedule holds one entry (constant) or one per step.
/// Returns steps t = 0..T.
std::vector<EmpiricalStep> simulate_pair(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                         const SimulationConfig& config, std::span<const InputStats> schedule,
                                         const PairOptions& opts = {});

struct SpectrumReport {
  /// Squared singular values, descending.
  std::vector<double> values;
  double mean = 0.0;
  double variance = 0.0;
};

SpectrumReport spectrum(const Eigen::MatrixXd& jac);

struct JacobianOptions {
  /// Burn-in steps before the Jacobian step.
  int burn_in = 100;
  Backend burn_in_backend = Backend::projected;
  /// Also compare against central differences of the one-step map.
  bool check_finite_difference = false;
  double fd_step = 1e-5;
};

struct JacobianSample {
  Eigen::MatrixXd J;
  SpectrumReport spectrum;
  /// d f / d s per unit (the diagonal part of J).
  Eigen::VectorXd d0;
  /// Largest column-wise relative error against finite differences (NaN if not checked).
  double fd_max_relative_error = 0.0;
};

/// One-step state-to-state Jacobian after burn-in with i.i.d. inputs, using
/// fresh weights for the Jacobian step. config.T is ignored.
JacobianSample build_jacobian(const Hyperparameters& theta, const ArchitectureSpec& arch,
                              const SimulationConfig& config, const InputStats& inputs,
                              const JacobianOptions& opts = {});

/// Cell values (peephole LSTM state or LSTM cell) of one untied network of
/// width N after T steps.
std::vector<double> simulate_cell_distribution(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                               const SimulationConfig& config, const InputStats& inputs,
                                               Backend backend = Backend::dense);

}  // namespace mfrnn
