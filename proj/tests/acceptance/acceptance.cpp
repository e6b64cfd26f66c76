// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "mfrnn/architecture.hpp"
#include "mfrnn/criticality.hpp"
#include "mfrnn/fixed_point.hpp"
#include "mfrnn/jacobian.hpp"
#include "mfrnn/moment_maps.hpp"
#include "mfrnn/rng.hpp"
#include "mfrnn/simulator.hpp"
#include "mfrnn/stats.hpp"
#include "mfrnn/verify.hpp"

using namespace mfrnn;

namespace {

constexpr int kOrder = 128;

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

CheckResult spectrum_agreement() {
  CheckResult r;
  r.name = "jacobian_spectrum";
  const auto& arch = architecture("peepholeLSTM");
  const InputStats in{1.0, 1.0};
  SolveOptions so;
  so.num.quad_order = kOrder;
  struct Row {
    double mean_err, var_err, variance;
  };
  auto run = [&](const Hyperparameters& theta) {
    SimulationConfig cfg;
    cfg.N = 512;
    cfg.seed = 11;
    const auto js = build_jacobian(theta, arch, cfg, in);
    const auto fp = analyze_fixed_point(theta, arch, in, 1.0, so);
    const auto jm = jacobian_moments(theta, arch, in, fp, so);
    return Row{std::abs(js.spectrum.mean / jm.m1 - 1.0), std::abs(js.spectrum.variance / jm.sigma - 1.0),
               js.spectrum.variance};
  };
  const Row crit = run(preset_init("peephole_critical", arch).theta);
  const Row std_ = run(preset_init("standard", arch, 512).theta);
  const double ratio = std_.variance / crit.variance;
  r.worst = std::max({crit.mean_err / 0.05, crit.var_err / 0.05, std_.mean_err / 0.15, std_.var_err / 0.15});
  r.limit = 1.0;
  r.passed = r.worst < 1.0 && ratio >= 10.0;
  std::ostringstream d;
  d << fmt("critical rel err mean %.3g var %.3g; ", crit.mean_err, crit.var_err)
    << fmt("standard rel err mean %.3g var %.3g; ", std_.mean_err, std_.var_err) << fmt("variance ratio %.3g", ratio);
  r.detail = d.str();
  return r;
}

CheckResult moment_dynamics() {
  CheckResult r;
  r.name = "moment_dynamics";
  const auto& arch = architecture("GRU");
  const int T = 50;
  std::vector<InputStats> schedule(T);
  // Entry t - 1 drives step t: independent inputs before t = 10, identical after.
  for (int t = 1; t <= T; ++t) schedule[t - 1] = {1.0, t < 10 ? 0.0 : 1.0};
  SimulationConfig cfg;
  cfg.N = 2048;
  cfg.T = T;
  cfg.seed = 5;
  PairOptions po;
  po.replicas = 32;
  double worst_q = 0.0, worst_c = 0.0;
  int misses = 0;
  std::ostringstream d;
  for (double mu_f : {-2.0, 0.0, 2.0}) {
    Hyperparameters theta;
    for (const auto& g : arch.gates) theta[g.label] = {1.0, 1.0, 0.1, 0.0};
    theta["f"].mu = mu_f;
    const auto sim = simulate_pair(theta, arch, cfg, schedule, po);
    const auto mf = mean_field_trajectory(theta, arch, {0.0, 0.0, 1.0}, schedule, T, {}, Numerics{kOrder});
    for (int t = 1; t <= T; ++t) {
      const double zq = std::abs(sim[t].q - mf[t].q) / sim[t].se_q;
      const double ec = std::abs(sim[t].c - mf[t].c);
      const double zc = ec <= 1e-12 ? 0.0 : ec / sim[t].se_c;
      worst_q = std::max(worst_q, zq);
      worst_c = std::max(worst_c, zc);
      if (zq > 3.0 || ec > 3.0 * sim[t].se_c + 1e-12) {
        ++misses;
        d << fmt("[mu_f %g t %g zQ %.2f zC %.2f] ", mu_f, t, zq, zc);
      }
    }
  }
  r.worst = std::max(worst_q, worst_c);
  r.limit = 3.0;
  r.passed = misses == 0;
  r.detail = fmt("max zQ %.2f max zC %.2f over 150 steps; ", worst_q, worst_c) + fmt("misses %g ", misses) + d.str();
  return r;
}

CheckResult cell_sampler_fidelity() {
  CheckResult r;
  r.name = "cell_sampler_fidelity";
  const auto& arch = architecture("LSTM");
  const InputStats in{1.0, 1.0};
  Hyperparameters b;
  for (const auto& g : arch.gates) b[g.label] = {1.5, 0.5, 0.1, 0.0};
  b["f"].mu = 3.0;
  const std::vector<std::pair<std::string, Hyperparameters>> cases{
      {"standard", preset_init("standard", arch, 200).theta}, {"forget-biased", b}};
  std::ostringstream d;
  for (const auto& [label, theta] : cases) {
    SolveOptions so;
    so.num.quad_order = kOrder;
    so.cell = {200, 200, 77};
    const auto fixed = solve_moments(theta, arch, in, so);
    const auto stats = preactivation_stats(theta, arch, fixed.state, in, so.num);
    const auto ens = sample_cell_distribution(theta, stats, 200, 200, 78);
    SimulationConfig cfg;
    cfg.N = 200;
    cfg.T = 200;
    cfg.seed = 79;
    const auto cells = simulate_cell_distribution(theta, arch, cfg, in);
    const double ks = ks_distance(ens.samples, cells);
    r.worst = std::max(r.worst, ks);
    d << label << fmt(" KS %.4f; ", ks);
  }
  r.limit = 0.15;
  r.passed = r.worst < r.limit;
  r.detail = d.str();
  return r;
}

struct Criterion {
  int id;
  double budget_seconds;
  std::function<CheckResult()> run;
};

}  // namespace

int main() {
  const std::uint64_t seed = 20240501;
  const std::vector<Criterion> criteria{
      {1, 120.0, [&] { return check_jacobian_chi_identity(20, seed, kOrder); }},
      {2, 1.0, [] { return check_critical_timescale(kOrder); }},
      {3, 120.0, spectrum_agreement},
      {4, 300.0, moment_dynamics},
      {5, 60.0, cell_sampler_fidelity},
      {6, 60.0, [&] { return check_correlation_convexity(10, seed, kOrder); }},
      {7, 30.0, [] { return check_pair_positivity(kOrder); }},
      {8, 10.0, [&] { return check_zero_variance(16, 100, seed); }},
      {9, 60.0, [&] { return check_jacobian_transcription(128, seed); }},
  };
  bool all = true;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_seconds;
    const bool ok = r.passed && in_time;
    all = all && ok;
    std::printf("criterion %d %-4s %-26s %7.2fs/%gs  %s%s\n", c.id, ok ? "PASS" : "FAIL", r.name.c_str(), secs,
                c.budget_seconds, r.detail.c_str(), in_time ? "" : " (over time budget)");
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
