#include "mfrnn/quadrature.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>

#include "mfrnn/rng.hpp"

namespace mfrnn {

namespace {

// Newton iteration on the orthonormal Hermite recurrence (weight exp(-x^2)),
// then rescaled to the standard normal measure.
NodeRule build_rule(int n) {
  std::vector<double> x(n), w(n);
  const int m = (n + 1) / 2;
  const double pim4 = 1.0 / std::pow(std::numbers::pi, 0.25);
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * x[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * x[1];
    } else {
      z = 2.0 * z - x[i - 2];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / j) * p2 - std::sqrt((j - 1.0) / j) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    x[i] = z;
    x[n - 1 - i] = -z;
    w[i] = 2.0 / (pp * pp);
    w[n - 1 - i] = w[i];
  }
  NodeRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double scale = 1.0 / std::sqrt(std::numbers::pi);
  // Ascending order, exactly symmetric.
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = std::numbers::sqrt2 * x[n - 1 - i];
    rule.weights[i] = w[n - 1 - i] * scale;
  }
  for (int i = 0; i < n / 2; ++i) {
    rule.nodes[n - 1 - i] = -rule.nodes[i];
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

// Trapezoid in z on [-kHalfWidth, kHalfWidth] with step h, weights
// phi(z) h renormalised to sum 1.
constexpr double kHalfWidth = 13.0;

NodeRule build_trapezoid(double h) {
  const int half = static_cast<int>(std::floor(kHalfWidth / h));
  NodeRule rule;
  rule.nodes.resize(2 * half + 1);
  rule.weights.resize(2 * half + 1);
  double total = 0.0;
  for (int j = -half; j <= half; ++j) {
    const double z = j * h;
    rule.nodes[j + half] = z;
    rule.weights[j + half] = std::exp(-0.5 * z * z);
    total += rule.weights[j + half];
  }
  for (auto& w : rule.weights) w /= total;
  return rule;
}

}  // namespace

const NodeRule& gauss_hermite(int order) {
  if (order < 1 || order > 512) throw Error(ErrorCode::InvalidArgument, "quadrature order must be in [1, 512]");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<NodeRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[order];
  if (!slot) slot = std::make_unique<NodeRule>(build_rule(order));
  return *slot;
}

const NodeRule& select_rule(double sd, int order, QuadRule kind) {
  if (kind == QuadRule::gauss_hermite) return gauss_hermite(order);
  if (order < 1 || order > 4096) throw Error(ErrorCode::InvalidArgument, "quadrature order must be in [1, 4096]");
  // Step resolving a pole at distance pi/(2 sd): exp(-2 pi d / h) ~ 1e-15.
  const double base = 0.25 * kDefaultOrder / order;
  const int refine = std::max(1, static_cast<int>(std::ceil(base * sd / 0.28)));
  static std::mutex mu;
  static std::map<std::pair<int, int>, std::unique_ptr<NodeRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{order, refine}];
  if (!slot) slot = std::make_unique<NodeRule>(build_trapezoid(base / refine));
  return *slot;
}

void GaussianPairSpec::validate() const {
  if (!(sigma2 >= 0.0)) throw Error(ErrorCode::NegativeVariance, "pair variance must be >= 0");
  if (!(std::abs(c) <= 1.0)) throw Error(ErrorCode::InvalidArgument, "pair correlation must lie in [-1, 1]");
  if (!std::isfinite(mu) || !std::isfinite(sigma2)) throw Error(ErrorCode::InvalidArgument, "pair parameters must be finite");
}

namespace detail {
void throw_non_finite(double x) {
  throw Error(ErrorCode::NonFiniteIntegrand, "integrand is not finite at x = " + std::to_string(x));
}
}  // namespace detail

std::vector<std::pair<double, double>> sample_pair(const GaussianPairSpec& pair, std::size_t n,
                                                   std::uint64_t seed) {
  pair.validate();
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "sample_pair: n must be >= 1");
  std::vector<std::pair<double, double>> out(n);
  Engine eng = make_engine(seed, 0);
  Normal normal(eng);
  const double sd = std::sqrt(pair.sigma2);
  const bool collapsed = pair.c >= kCollapseCorrelation;
  const double s = std::sqrt((1.0 - pair.c) * (1.0 + pair.c));
  for (auto& p : out) {
    const double za = normal();
    const double zb = normal();
    p.first = pair.mu + sd * za;
    p.second = collapsed ? p.first : pair.mu + sd * (pair.c * za + s * zb);
  }
  return out;
}

}  // namespace mfrnn
