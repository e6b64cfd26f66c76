#include "mfrnn/jacobian.hpp"

#include <cmath>

#include "mfrnn/diagnostics.hpp"
#include "mfrnn/moment_maps.hpp"
#include "mfrnn/rng.hpp"
#include "mfrnn/symbolic.hpp"

namespace mfrnn {

double ContributionVector::total() const {
  double s = 0.0;
  for (double v : mean) s += v;
  return s;
}

double ContributionVector::total_second() const {
  double s = 0.0;
  for (const auto& row : second) {
    for (double v : row) s += v;
  }
  return s;
}

namespace {

ContributionVector affine_contributions(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                        const InputStats& inputs, const FixedPointReport& fixed,
                                        const SolveOptions& opts) {
  const MomentState st{fixed.mu_star, fixed.q_star, 1.0};
  std::vector<std::string> labels{"0"};
  std::vector<StatePoly> a{arch.d0 * arch.d0};
  for (int k = 0; k < arch.num_gates(); ++k) {
    const StatePoly& dk = arch.dk[k];
    if (dk.is_zero()) continue;
    const GateSpec& spec = arch.gates[k];
    const double s2 = theta.at(spec.label).sigma2;
    const StatePoly dk2 = dk * dk;
    if (spec.form == GateForm::linear) {
      labels.push_back(spec.label);
      a.push_back(dk2 * s2);
      continue;
    }
    const int g = spec.gating_gate;
    const double sg2 = theta.at(arch.gates[g].label).sigma2;
    const StatePoly gd = StatePoly::gate(g, derivative(spec.gating_fn));
    labels.push_back(spec.label);
    a.push_back(dk2 * StatePoly::gate(g, spec.gating_fn * spec.gating_fn) * s2);
    labels.push_back(spec.label + "/" + arch.gates[g].label);
    a.push_back(dk2 * StatePoly::state() * StatePoly::state() * gd * gd * (s2 * sg2));
  }

  const PreActivationStats stats = preactivation_stats(theta, arch, st, inputs, opts.num);
  const GateExpectations ex(stats, opts.num.quad_order);
  const std::array<double, 5> m = stationary_state_moments(theta, arch, st, inputs, opts.num);
  ContributionVector out;
  out.labels = labels;
  const std::size_t n = a.size();
  out.mean.resize(n);
  out.second.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t k = 0; k < n; ++k) {
    out.mean[k] = expect_single(a[k], ex, m);
    for (std::size_t l = k; l < n; ++l) {
      out.second[k][l] = out.second[l][k] = expect_single(a[k] * a[l], ex, m);
    }
  }
  return out;
}

// Entries: 0, i, f, r, o. Every entry is (cell/gate part) * (output-gate part),
// and the output gate is independent of the rest, so the output-gate factors
// are integrated by quadrature.
ContributionVector lstm_contributions(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                      const InputStats& inputs, const FixedPointReport& fixed,
                                      const SolveOptions& opts) {
  const MomentState st{fixed.mu_star, fixed.q_star, 1.0};
  const PreActivationStats stats = preactivation_stats(theta, arch, st, inputs, opts.num);
  const CellStateEnsemble cells = sample_cell_distribution(theta, stats, opts.cell.n_s, opts.cell.n_iters,
                                                           derive_seed(opts.cell.seed, 0xa01));
  const GateStats& gi = stats.at("i");
  const GateStats& gf = stats.at("f");
  const GateStats& gr = stats.at("r");
  const GateStats& go = stats.at("o");
  const double s2i = theta.at("i").sigma2, s2f = theta.at("f").sigma2, s2r = theta.at("r").sigma2;
  const double s2o = theta.at("o").sigma2;
  const double sd_i = std::sqrt(gi.sigma2), sd_f = std::sqrt(gf.sigma2), sd_r = std::sqrt(gr.sigma2);

  // Output-gate factor per entry: 0 -> 1, 1 -> sigmoid^2, 2 -> sigmoid'^2.
  constexpr std::array<int, 5> kind{0, 1, 1, 1, 2};
  const Monomial sig2 = Monomial::of(Elem::sigmoid, 2);
  const Monomial dsig2 = Monomial::of(Elem::sigmoid_prime, 2);
  const std::array<Monomial, 3> factor{Monomial{}, sig2, dsig2};
  const int order = opts.num.quad_order;
  std::array<std::array<double, 3>, 3> eo{};
  for (int p = 0; p < 3; ++p) {
    for (int q = 0; q < 3; ++q) eo[p][q] = expect1(factor[p] * factor[q], go.mu, go.sigma2, order);
  }

  constexpr int n_entries = 5;
  std::array<double, n_entries> sum{};
  std::array<std::array<double, n_entries>, n_entries> sum2{};
  double tot = 0.0, tot2 = 0.0;
  const int n = cells.n_s;
  for (int j = 0; j < n; ++j) {
    Engine eng = make_engine(derive_seed(opts.cell.seed, 0xa02), j);
    Normal normal(eng);
    const double cp = cells.samples[j];
    std::array<double, n_entries> mean_j{};
    for (int d = 0; d < opts.gate_draws; ++d) {
      const double ui = gi.mu + sd_i * normal();
      const double uf = gf.mu + sd_f * normal();
      const double ur = gr.mu + sd_r * normal();
      const double c = sigmoid(uf) * cp + sigmoid(ui) * std::tanh(ur);
      const double tc = tanh_prime(c) * tanh_prime(c);
      const double t = std::tanh(c);
      std::array<double, n_entries> b;
      b[0] = sigmoid(uf) * sigmoid(uf);
      b[1] = s2i * tc * std::pow(sigmoid_prime(ui) * std::tanh(ur), 2);
      b[2] = s2f * tc * std::pow(cp * sigmoid_prime(uf), 2);
      b[3] = s2r * tc * std::pow(sigmoid(ui) * tanh_prime(ur), 2);
      b[4] = s2o * t * t;
      for (int k = 0; k < n_entries; ++k) {
        mean_j[k] += b[k];
        for (int l = 0; l < n_entries; ++l) sum2[k][l] += b[k] * b[l] / opts.gate_draws;
      }
    }
    double total_j = 0.0;
    for (int k = 0; k < n_entries; ++k) {
      mean_j[k] /= opts.gate_draws;
      sum[k] += mean_j[k];
      total_j += mean_j[k] * eo[0][kind[k]];
    }
    tot += total_j;
    tot2 += total_j * total_j;
  }

  ContributionVector out;
  out.labels = {"0", "i", "f", "r", "o"};
  out.mean.resize(n_entries);
  out.second.assign(n_entries, std::vector<double>(n_entries, 0.0));
  for (int k = 0; k < n_entries; ++k) {
    out.mean[k] = sum[k] / n * eo[0][kind[k]];
    for (int l = 0; l < n_entries; ++l) out.second[k][l] = sum2[k][l] / n * eo[kind[k]][kind[l]];
  }
  if (n > 1) out.se_total = std::sqrt(std::max(0.0, (tot2 - tot * tot / n) / (n - 1)) / n);
  return out;
}

}  // namespace

ContributionVector contribution_vector(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                       const InputStats& inputs, const FixedPointReport& fixed,
                                       const SolveOptions& opts) {
  validate_theta(theta, arch);
  inputs.validate();
  if (!fixed.converged) throw Error(ErrorCode::InvalidArgument, "fixed point is not converged");
  return arch.sampled_cell ? lstm_contributions(theta, arch, inputs, fixed, opts)
                           : affine_contributions(theta, arch, inputs, fixed, opts);
}

JacobianMoments jacobian_moments(const ContributionVector& a, SecondMomentRule rule) {
  JacobianMoments out;
  out.m1 = a.total();
  out.se_m1 = a.se_total;
  const double s2 = a.total_second();
  if (rule == SecondMomentRule::documented) {
    out.m2 = 2.0 * s2 - a.second[0][0];
  } else {
    out.m2 = s2 + out.m1 * out.m1 - a.mean[0] * a.mean[0];
  }
  out.sigma = out.m2 - out.m1 * out.m1;
  if (out.sigma < 0.0) {
    out.clamp = -out.sigma;
    out.sigma = 0.0;
    note_sigma_clamp();
  }
  return out;
}

JacobianMoments jacobian_moments(const Hyperparameters& theta, const ArchitectureSpec& arch, const InputStats& inputs,
                                 const FixedPointReport& fixed, const SolveOptions& opts, SecondMomentRule rule) {
  return jacobian_moments(contribution_vector(theta, arch, inputs, fixed, opts), rule);
}

IsometryGap isometry_gap(const JacobianMoments& m, double chi, double threshold) {
  IsometryGap g;
  g.chi = chi - 1.0;
  g.m1 = m.m1 - 1.0;
  g.sigma = m.sigma;
  g.norm = std::sqrt(g.chi * g.chi + g.m1 * g.m1 + g.sigma * g.sigma);
  g.critical = std::abs(g.chi) < threshold && std::abs(g.m1) < threshold && std::abs(g.sigma) < threshold;
  return g;
}

}  // namespace mfrnn
