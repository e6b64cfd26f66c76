#pragma once

#include <array>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "mfrnn/architecture.hpp"
#include "mfrnn/cell_sampler.hpp"
#include "mfrnn/core.hpp"
#include "mfrnn/quadrature.hpp"

namespace mfrnn {

struct Numerics {
  int quad_order = kDefaultOrder;
};

struct GateStats {
  double mu = 0.0;
  double q = 0.0;
  /// Variance of the pre-activation, q - mu^2.
  double sigma2 = 0.0;
  /// Correlation between the two copies; meaningless when sigma2 == 0.
  double c = 1.0;

  bool degenerate() const { return !(sigma2 > 0.0); }
  double correlation() const;
  GaussianPairSpec pair() const { return {mu, sigma2, degenerate() ? 1.0 : c}; }
};

struct PreActivationStats {
  std::vector<std::string> labels;
  std::vector<GateStats> gates;

  const GateStats& at(std::string_view label) const;
  const GateStats& operator[](int k) const { return gates.at(k); }
};

PreActivationStats preactivation_stats(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                       const MomentState& state, const InputStats& inputs, const Numerics& num = {});

/// Relative state variance below this is treated as a point mass (C := 1).
inline constexpr double kDegenerateVariance = 1e-12;
bool degenerate_state(double mu, double q);

/// Per-gate Gaussian expectations of monomials with memoisation.
class GateExpectations {
 public:
  GateExpectations(const PreActivationStats& stats, int order);

  double e1(int k, const Monomial& m) const;
  double e2(int k, const Monomial& a, const Monomial& b) const;
  double e1(int k, const LinearForm& f) const;
  double e2(int k, const LinearForm& a, const LinearForm& b) const;
  const PreActivationStats& stats() const { return stats_; }
  int order() const { return order_; }

 private:
  PreActivationStats stats_;
  int order_;
  mutable std::map<std::pair<int, Monomial>, double> cache1_;
  mutable std::map<std::tuple<int, Monomial, Monomial>, double> cache2_;
};

/// E[p(s)] for one copy, with state_moments[n] = E[s^n].
double expect_single(const StatePoly& p, const GateExpectations& ex, std::span<const double> state_moments);
/// E[p(s_a) r(s_b)] over the two copies.
double expect_pair(const StatePoly& p, const StatePoly& r, const GateExpectations& ex, const MomentState& state);

MomentState step_moments(const Hyperparameters& theta, const ArchitectureSpec& arch, const MomentState& state,
                         const InputStats& inputs, const CellStateEnsemble* cell = nullptr, const Numerics& num = {});

/// (mu, Q) part of the map only; c is carried over (affine architectures).
MomentState step_state_moments(const Hyperparameters& theta, const ArchitectureSpec& arch, const MomentState& state,
                               const InputStats& inputs, const Numerics& num = {});

/// M_C(c) at the moment fixed point. The LSTM needs cell sampling options.
double step_correlation(const Hyperparameters& theta, const ArchitectureSpec& arch, const MomentState& fixed,
                        double c_s, const InputStats& inputs, const CellSampling* cell = nullptr,
                        const Numerics& num = {});

/// E[s^n], n = 0..4, of the stationary state at the fixed point (affine architectures).
std::array<double, 5> stationary_state_moments(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                               const MomentState& fixed, const InputStats& inputs,
                                               const Numerics& num = {});

/// Derivative of M_C by Price's theorem; the state variance cancels so this
/// also covers a point-mass state (affine architectures).
double chi_analytic(const Hyperparameters& theta, const ArchitectureSpec& arch, const MomentState& fixed, double c_s,
                    const InputStats& inputs, const Numerics& num = {});

/// Time-dependent mean-field prediction. schedule has one entry (constant) or
/// one entry per step. The LSTM carries a paired cell ensemble forward.
std::vector<MomentState> mean_field_trajectory(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                               const MomentState& init, std::span<const InputStats> schedule, int T,
                                               const CellSampling& cell = {}, const Numerics& num = {});

namespace lstm {
/// Hidden-state moments from a cell ensemble and the output-gate statistics.
MomentState hidden_moments(const CellStateEnsemble& cells, const GateStats& o, const MomentState& prev, int order);
}  // namespace lstm

}  // namespace mfrnn
