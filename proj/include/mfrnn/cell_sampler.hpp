#pragma once

#include <cstdint>
#include <vector>

#include "mfrnn/core.hpp"

namespace mfrnn {

struct PreActivationStats;

struct CellSampling {
  int n_s = 200;
  int n_iters = 200;
  std::uint64_t seed = 0;
};

/// Samples approximating the stationary cell-state distribution. Paired
/// ensembles also carry the second copy in samples_b.
struct CellStateEnsemble {
  std::vector<double> samples;
  std::vector<double> samples_b;
  int n_s = 0;
  int n_iters = 0;
  std::uint64_t seed = 0;
  std::uint64_t theta_hash = 0;

  bool paired() const { return !samples_b.empty(); }
};

std::uint64_t theta_hash(const Hyperparameters& theta);

/// Iterates c <- sigmoid(u_f) c + sigmoid(u_i) tanh(u_r) from c = 0 with
/// fresh Gaussian gate draws. Sample j uses stream (seed, j).
CellStateEnsemble sample_cell_distribution(const Hyperparameters& theta, const PreActivationStats& stats, int n_s,
                                           int n_iters, std::uint64_t seed);

/// Same iteration on coupled pairs driven by gate draws at correlation C_k.
CellStateEnsemble correlated_cell_pairs(const Hyperparameters& theta, const PreActivationStats& stats, int n_s,
                                        int n_iters, std::uint64_t seed);

/// One update of every (paired) sample with the given statistics.
void advance_cells(CellStateEnsemble& cells, const PreActivationStats& stats, std::uint64_t seed);

}  // namespace mfrnn
