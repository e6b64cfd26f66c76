#include "mfrnn/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>

#include "mfrnn/criticality.hpp"
#include "mfrnn/fixed_point.hpp"
#include "mfrnn/jacobian.hpp"
#include "mfrnn/moment_maps.hpp"
#include "mfrnn/quadrature.hpp"
#include "mfrnn/rng.hpp"
#include "mfrnn/simulator.hpp"

namespace mfrnn {

namespace {

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* f, double a, double b = 0.0) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Hyperparameters random_theta(std::string_view arch, std::uint64_t seed) {
  Engine eng(seed);
  std::uniform_real_distribution<double> var(0.0, 1.0), mean(-2.0, 2.0);
  Hyperparameters theta;
  for (const auto& g : architecture(arch).gates) {
    GateParams p;
    p.sigma2 = var(eng);
    p.nu2 = var(eng);
    p.rho2 = var(eng);
    p.mu = mean(eng);
    theta[g.label] = p;
  }
  return theta;
}

CheckResult check_jacobian_chi_identity(int draws, std::uint64_t seed, int order) {
  Timer timer;
  CheckResult r;
  r.name = "jacobian_chi_identity";
  r.limit = 1e-6;
  double worst_z = 0.0;
  const InputStats inputs{1.0, 1.0};
  for (const auto& arch : registry()) {
    for (int d = 0; d < draws; ++d) {
      const std::uint64_t s = derive_seed(derive_seed(seed, static_cast<std::uint64_t>(arch.kind)), d);
      const Hyperparameters theta = random_theta(arch.name, s);
      SolveOptions so;
      so.num.quad_order = order;
      so.cell.seed = derive_seed(s, 1);
      const FixedPointReport fp = analyze_fixed_point(theta, arch, inputs, 1.0, so);
      const JacobianMoments jm = jacobian_moments(theta, arch, inputs, fp, so);
      if (arch.sampled_cell) {
        const SampledValue chi = lstm_chi(theta, arch, inputs, fp.state(), 1.0, so);
        const double se = std::hypot(chi.se, jm.se_m1);
        const double z = std::abs(jm.m1 - chi.value) / se;
        worst_z = std::max(worst_z, z);
      } else {
        const double chi = chi_at(theta, arch, inputs, fp.state(), 1.0, so);
        r.worst = std::max(r.worst, std::abs(jm.m1 - chi));
      }
    }
  }
  r.passed = r.worst < r.limit && worst_z < 5.0;
  r.detail = fmt("max |m1 - chi| = %.2e (quadrature), max z = %.2f (LSTM)", r.worst, worst_z);
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_correlation_convexity(int draws, std::uint64_t seed, int order) {
  Timer timer;
  CheckResult r;
  r.name = "correlation_convexity";
  r.limit = -1e-6;
  const ArchitectureSpec& arch = architecture("peepholeLSTM");
  const InputStats inputs{1.0, 1.0};
  double min_second = std::numeric_limits<double>::infinity();
  double worst_split = 0.0;
  for (int d = 0; d < draws; ++d) {
    const Hyperparameters theta = random_theta(arch.name, derive_seed(seed, d));
    SolveOptions so;
    so.num.quad_order = order;
    const MomentFixedPoint fixed = solve_moments(theta, arch, inputs, so);
    std::vector<double> m(101);
    for (int i = 0; i <= 100; ++i) m[i] = step_correlation(theta, arch, fixed.state, i / 100.0, inputs, nullptr, so.num);
    for (int i = 1; i < 100; ++i) min_second = std::min(min_second, m[i - 1] - 2.0 * m[i] + m[i + 1]);
    const double a = solve_correlation(theta, arch, inputs, fixed, 0.0, so).c_star;
    const double b = solve_correlation(theta, arch, inputs, fixed, 0.9, so).c_star;
    worst_split = std::max(worst_split, std::abs(a - b));
  }
  r.worst = min_second;
  r.passed = min_second >= r.limit && worst_split < 1e-8;
  r.detail = fmt("min second difference = %.2e, max |C*(0) - C*(0.9)| = %.2e", min_second, worst_split);
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_pair_positivity(int order) {
  Timer timer;
  CheckResult r;
  r.name = "pair_positivity";
  r.limit = -1e-10;
  double lowest = std::numeric_limits<double>::infinity();
  auto odd = [](double x) { return x * x * x * std::exp(-x * x); };
  auto th = [](double x) { return std::tanh(x); };
  for (double mu : {-2.0, -1.0, -0.5, 0.0, 0.5, 1.0, 2.0}) {
    for (double s2 : {0.01, 0.1, 0.5, 1.0, 2.0, 4.0}) {
      for (int i = 0; i <= 20; ++i) {
        const GaussianPairSpec pair{mu, s2, i / 20.0};
        lowest = std::min(lowest, expect2(th, th, pair, order));
        lowest = std::min(lowest, expect2(odd, odd, pair, order));
      }
    }
  }
  r.worst = lowest;
  r.passed = lowest >= r.limit;
  r.detail = fmt("min E[g(x)g(y)] = %.3e", lowest);
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_zero_variance(int N, int T, std::uint64_t seed) {
  Timer timer;
  CheckResult r;
  r.name = "zero_variance_exactness";
  r.limit = 1e-12;
  Engine eng(seed);
  std::uniform_real_distribution<double> mean(-2.0, 2.0);
  const InputStats inputs{1.0, 0.5};
  for (const auto& arch : registry()) {
    Hyperparameters theta;
    for (const auto& g : arch.gates) theta[g.label] = GateParams{0.0, 0.0, 0.0, mean(eng)};
    SimulationConfig cfg;
    cfg.N = N;
    cfg.T = T;
    cfg.init_mean = 0.3;
    cfg.seed = seed;
    const std::span<const InputStats> sched(&inputs, 1);
    const auto sim = simulate_pair(theta, arch, cfg, sched);
    const auto mf = mean_field_trajectory(theta, arch, {0.3, 0.09, 1.0}, sched, T, CellSampling{4, 4, seed});
    for (int t = 0; t <= T; ++t) {
      r.worst = std::max({r.worst, std::abs(sim[t].mu - mf[t].mu), std::abs(sim[t].q - mf[t].q),
                          std::abs(sim[t].c - mf[t].c)});
    }
  }
  r.passed = r.worst <= r.limit;
  r.detail = fmt("max deviation = %.2e", r.worst);
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_jacobian_transcription(int N, std::uint64_t seed) {
  Timer timer;
  CheckResult r;
  r.name = "jacobian_transcription";
  r.limit = 1e-4;
  std::string detail;
  for (const char* name : {"GRU", "LSTM"}) {
    const ArchitectureSpec& arch = architecture(name);
    Hyperparameters theta;
    for (const auto& g : arch.gates) theta[g.label] = GateParams{1.2, 0.8, 0.1, 0.3};
    SimulationConfig cfg;
    cfg.N = N;
    cfg.seed = seed;
    JacobianOptions jo;
    jo.check_finite_difference = true;
    const JacobianSample js = build_jacobian(theta, arch, cfg, {1.0, 1.0}, jo);
    r.worst = std::max(r.worst, js.fd_max_relative_error);
    detail += (detail.empty() ? "" : ", ") + std::string(name) + fmt(" %.2e", js.fd_max_relative_error);
  }
  r.passed = r.worst < r.limit;
  r.detail = "max column relative error: " + detail;
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_critical_timescale(int order) {
  Timer timer;
  CheckResult r;
  r.name = "critical_timescale";
  r.limit = 1e-3;
  const ArchitectureSpec& arch = architecture("peepholeLSTM");
  SolveOptions so;
  so.num.quad_order = order;
  const Preset p = preset_init("peephole_critical", arch);
  const FixedPointReport fp = analyze_fixed_point(p.theta, arch, {1.0, 1.0}, 1.0, so);
  const double chi = logistic(5.0) * logistic(5.0);
  const double xi = -1.0 / std::log(chi);
  r.worst = std::max(std::abs(fp.chi / chi - 1.0), std::abs(fp.xi / xi - 1.0));
  r.passed = r.worst < r.limit;
  r.detail = fmt("chi = %.9f, xi = %.4f", fp.chi, fp.xi);
  r.seconds = timer.seconds();
  return r;
}

CheckResult check_quadrature_oracles() {
  Timer timer;
  CheckResult r;
  r.name = "quadrature_oracles";
  r.limit = 1e-10;
  auto sq = [](double x) { return x * x; };
  auto id = [](double x) { return x; };
  auto ex = [](double x) { return std::exp(x); };
  auto co = [](double x) { return std::cos(x); };
  const double errs[] = {
      std::abs(expect1(sq, 0.7, 2.3) - (0.49 + 2.3)),
      std::abs(expect1(ex, 0.3, 0.5) - std::exp(0.55)),
      std::abs(expect1(co, 0.2, 1.0) - std::cos(0.2) * std::exp(-0.5)),
      std::abs(expect1(logistic, 0.0, 3.0) - 0.5),
      std::abs(expect2(id, id, {0.4, 1.5, 0.3}) - (0.16 + 1.5 * 0.3)),
      std::abs(expect2(co, co, {0.0, 1.0, 0.5}) - 0.5 * (std::exp(-0.5) + std::exp(-1.5))),
  };
  r.worst = *std::max_element(std::begin(errs), std::end(errs));
  r.passed = r.worst < r.limit;
  r.detail = fmt("max error = %.2e", r.worst);
  r.seconds = timer.seconds();
  return r;
}

std::vector<CheckResult> run_property_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  auto run = [&](auto&& fn, const char* name) {
    try {
      out.push_back(fn());
    } catch (const Error& e) {
      CheckResult r;
      r.name = name;
      r.detail = std::string(to_string(e.code())) + ": " + e.what();
      out.push_back(r);
    }
  };
  run([] { return check_quadrature_oracles(); }, "quadrature_oracles");
  run([&] { return check_jacobian_chi_identity(2, seed, kDefaultOrder); }, "jacobian_chi_identity");
  run([&] { return check_correlation_convexity(3, seed, kDefaultOrder); }, "correlation_convexity");
  run([] { return check_pair_positivity(kDefaultOrder); }, "pair_positivity");
  run([&] { return check_zero_variance(16, 100, seed); }, "zero_variance_exactness");
  run([&] { return check_jacobian_transcription(48, seed); }, "jacobian_transcription");
  run([] { return check_critical_timescale(kDefaultOrder); }, "critical_timescale");
  return out;
}

}  // namespace mfrnn
