#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "mfrnn/core.hpp"

namespace mfrnn {

inline constexpr int kDefaultOrder = 64;
inline constexpr int kAcceptanceOrder = 128;
/// Correlations at or above this are evaluated on the collapsed c = 1 branch.
inline constexpr double kCollapseCorrelation = 1.0 - 1e-12;

/// Nodes and weights for E[g(z)], z ~ N(0, 1). Weights sum to 1, nodes are
/// ascending and symmetric about 0.
struct NodeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// gauss_hermite: fixed-order Gauss-Hermite. automatic: trapezoid in z whose
/// step shrinks with the standard deviation of the integrand's argument, so
/// sigmoid/tanh integrands (poles at distance ~pi/(2 sd) from the real axis)
/// stay resolved at large variance.
enum class QuadRule { automatic, gauss_hermite };

/// Cached Gauss-Hermite rule of the given order (thread-safe).
const NodeRule& gauss_hermite(int order);
/// Rule used for an integrand evaluated at mu + sd * z.
const NodeRule& select_rule(double sd, int order, QuadRule kind);

struct GaussianPairSpec {
  double mu = 0.0;
  double sigma2 = 0.0;
  double c = 1.0;

  void validate() const;
};

namespace detail {
[[noreturn]] void throw_non_finite(double x);
inline double checked(double v, double x) {
  if (!std::isfinite(v)) throw_non_finite(x);
  return v;
}
}  // namespace detail

/// E[g(u)] for u ~ N(mu, sigma2).
template <class G>
double expect1(G&& g, double mu, double sigma2, int order = kDefaultOrder, QuadRule kind = QuadRule::automatic) {
  if (!(sigma2 >= 0.0)) throw Error(ErrorCode::NegativeVariance, "expect1: sigma2 < 0");
  if (sigma2 == 0.0) return detail::checked(g(mu), mu);
  const double sd = std::sqrt(sigma2);
  const NodeRule& rule = select_rule(sd, order, kind);
  const std::size_t n = rule.nodes.size();
  // Pair symmetric nodes and sum from the centre out.
  double acc = 0.0;
  std::size_t lo = (n - 1) / 2, hi = n / 2;
  if (lo == hi) {
    acc = rule.weights[lo] * detail::checked(g(mu), mu);
    if (lo == 0) return acc;
    --lo;
    ++hi;
  }
  for (;; --lo, ++hi) {
    const double xl = mu + sd * rule.nodes[lo];
    const double xh = mu + sd * rule.nodes[hi];
    acc += rule.weights[hi] * (detail::checked(g(xl), xl) + detail::checked(g(xh), xh));
    if (lo == 0) break;
  }
  return acc;
}

/// E[g1(u_a) g2(u_b)] for the correlated pair u_a = mu + sd z_a,
/// u_b = mu + sd (c z_a + sqrt(1 - c^2) z_b).
template <class G1, class G2>
double expect2(G1&& g1, G2&& g2, const GaussianPairSpec& pair, int order = kDefaultOrder,
               QuadRule kind = QuadRule::automatic) {
  pair.validate();
  if (pair.sigma2 == 0.0) {
    return detail::checked(g1(pair.mu), pair.mu) * detail::checked(g2(pair.mu), pair.mu);
  }
  if (pair.c >= kCollapseCorrelation) {
    return expect1([&](double x) { return g1(x) * g2(x); }, pair.mu, pair.sigma2, order, kind);
  }
  const double sd = std::sqrt(pair.sigma2);
  const NodeRule& rule = select_rule(sd, order, kind);
  const std::size_t n = rule.nodes.size();
  const double c = pair.c;
  const double s = std::sqrt((1.0 - c) * (1.0 + c));
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double xa = pair.mu + sd * rule.nodes[i];
    const double ga = detail::checked(g1(xa), xa);
    if (ga == 0.0) continue;
    const double centre = pair.mu + sd * c * rule.nodes[i];
    double inner = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double xb = centre + sd * s * rule.nodes[j];
      inner += rule.weights[j] * detail::checked(g2(xb), xb);
    }
    acc += rule.weights[i] * ga * inner;
  }
  return acc;
}

/// i.i.d. draws of the correlated pair, deterministic given seed.
std::vector<std::pair<double, double>> sample_pair(const GaussianPairSpec& pair, std::size_t n,
                                                   std::uint64_t seed);

}  // namespace mfrnn
