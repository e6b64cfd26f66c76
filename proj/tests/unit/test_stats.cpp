#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "mfrnn/stats.hpp"

using namespace mfrnn;

TEST(KsDistance, DisjointAndIdentical) {
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  EXPECT_EQ(ks_distance(a, b), 1.0);
  EXPECT_EQ(ks_distance(a, a), 0.0);
}

TEST(KsDistance, PartialOverlap) {
  const std::vector<double> a{1, 2, 3, 4}, b{3, 4, 5, 6};
  EXPECT_DOUBLE_EQ(ks_distance(a, b), 0.5);
  EXPECT_DOUBLE_EQ(ks_distance(b, a), 0.5);
}

TEST(KsDistance, UnequalSizesAndTies) {
  const std::vector<double> a{0, 0, 1}, b{0, 1};
  // F_a(0) = 2/3, F_b(0) = 1/2.
  EXPECT_NEAR(ks_distance(a, b), 1.0 / 6.0, 1e-15);
}

TEST(MeanSe, SampleStatistics) {
  const std::vector<double> x{1, 2, 3, 4};
  const auto m = mean_se(x);
  EXPECT_DOUBLE_EQ(m.mean, 2.5);
  EXPECT_NEAR(m.se, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
}
