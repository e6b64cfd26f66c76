#pragma once

#include <span>

namespace mfrnn {

/// Two-sample Kolmogorov-Smirnov distance sup |F_a - F_b|.
double ks_distance(std::span<const double> a, std::span<const double> b);

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

/// Sample mean and its standard error (n - 1 in the variance).
MeanSe mean_se(std::span<const double> x);

}  // namespace mfrnn
