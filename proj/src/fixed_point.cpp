#include "mfrnn/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "mfrnn/rng.hpp"
#include "mfrnn/symbolic.hpp"

namespace mfrnn {

NoConvergenceError::NoConvergenceError(const std::string& what, std::vector<MomentState> trajectory)
    : Error(ErrorCode::NoConvergence, what), trajectory_(std::move(trajectory)) {}

double timescale(double chi) {
  if (!(chi < 1.0)) return std::numeric_limits<double>::infinity();
  if (chi <= 0.0) return 0.0;
  return -1.0 / std::log(chi);
}

namespace {

constexpr double kDamping = 0.5;
constexpr int kNoiseWindow = 10;

// Stops when the step is below tol and the geometric tail estimate
// |d| q / (1 - q) is below tol too. Watches the sign of the step for
// oscillation.
class Monitor {
 public:
  explicit Monitor(double tol) : tol_(tol) {}

  bool converged(double step) {
    const double a = std::abs(step);
    bool done = false;
    if (a < tol_ * 1e-3) {
      done = true;
    } else if (a < tol_ && prev_ > 0.0) {
      const double q = a / prev_;
      done = q < 1.0 && a * q / (1.0 - q) < tol_;
    }
    if (prev_signed_ != 0.0 && step != 0.0 && (step > 0) != (prev_signed_ > 0) && a > 0.5 * prev_) {
      ++alternations_;
    } else {
      alternations_ = 0;
    }
    prev_ = a;
    prev_signed_ = step;
    return done;
  }

  bool oscillating() const { return alternations_ >= 3; }

 private:
  double tol_;
  double prev_ = 0.0;
  double prev_signed_ = 0.0;
  int alternations_ = 0;
};

void check_options(const SolveOptions& o) {
  if (!(o.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  if (o.max_iter < 1 || o.max_iter_sampled < kNoiseWindow + 1) {
    throw Error(ErrorCode::InvalidArgument, "iteration caps too small");
  }
  if (o.gate_draws < 1) throw Error(ErrorCode::InvalidArgument, "gate_draws must be >= 1");
}

MomentFixedPoint solve_moments_affine(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                      const InputStats& inputs, const SolveOptions& opts) {
  MomentFixedPoint out;
  MomentState x = opts.init;
  Monitor mon(opts.tol);
  double omega = 1.0;
  out.trajectory.push_back(x);
  for (int n = 1; n <= opts.max_iter; ++n) {
    const MomentState y = step_state_moments(theta, arch, x, inputs, opts.num);
    if (!std::isfinite(y.mu) || !std::isfinite(y.q)) {
      throw NoConvergenceError("moment iteration produced a non-finite state", std::move(out.trajectory));
    }
    const double dmu = y.mu - x.mu, dq = y.q - x.q;
    const double step = std::abs(dmu) > std::abs(dq) ? dmu : dq;
    const bool done = mon.converged(step);
    if (opts.auto_damping && omega == 1.0 && mon.oscillating()) {
      omega = kDamping;
      out.damped = true;
    }
    x = omega == 1.0 ? y : MomentState{x.mu + omega * dmu, x.q + omega * dq, x.c};
    out.trajectory.push_back(x);
    out.iterations = n;
    out.residual = std::abs(step);
    if (done) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) {
    throw NoConvergenceError("moment iteration did not converge in " + std::to_string(opts.max_iter) + " steps",
                             std::move(out.trajectory));
  }
  out.state = {x.mu, x.q, 1.0};
  return out;
}

struct SampledMoments {
  MomentState m;
  double se_mu, se_q;
};

SampledMoments lstm_moment_step(const Hyperparameters& theta, const ArchitectureSpec& arch, const MomentState& x,
                                const InputStats& inputs, const SolveOptions& opts, std::uint64_t seed) {
  const PreActivationStats stats = preactivation_stats(theta, arch, x, inputs, opts.num);
  const CellStateEnsemble cells = sample_cell_distribution(theta, stats, opts.cell.n_s, opts.cell.n_iters, seed);
  SampledMoments out{lstm::hidden_moments(cells, stats.at("o"), x, opts.num.quad_order), 0.0, 0.0};
  const GateStats& o = stats.at("o");
  const Monomial sig = Monomial::of(Elem::sigmoid);
  const double eo = expect1(sig, o.mu, o.sigma2, opts.num.quad_order);
  const double eo2 = expect1(sig * sig, o.mu, o.sigma2, opts.num.quad_order);
  double s1 = 0, s2 = 0, s4 = 0;
  for (double c : cells.samples) {
    const double t = std::tanh(c);
    s1 += t;
    s2 += t * t;
    s4 += t * t * t * t;
  }
  const double n = cells.samples.size();
  if (n > 1) {
    const double var_t = std::max(0.0, (s2 - s1 * s1 / n) / (n - 1));
    const double var_t2 = std::max(0.0, (s4 - s2 * s2 / n) / (n - 1));
    out.se_mu = eo * std::sqrt(var_t / n);
    out.se_q = eo2 * std::sqrt(var_t2 / n);
  }
  return out;
}

MomentFixedPoint solve_moments_sampled(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                       const InputStats& inputs, const SolveOptions& opts) {
  MomentFixedPoint out;
  std::vector<SampledMoments> hist;
  MomentState x = opts.init;
  out.trajectory.push_back(x);
  for (int n = 1; n <= opts.max_iter_sampled; ++n) {
    const SampledMoments y = lstm_moment_step(theta, arch, x, inputs, opts, derive_seed(opts.cell.seed, n));
    hist.push_back(y);
    out.trajectory.push_back(y.m);
    out.iterations = n;
    x = y.m;
    if (n <= kNoiseWindow) continue;
    const SampledMoments& old = hist[hist.size() - 1 - kNoiseWindow];
    const double dmu = std::abs(y.m.mu - old.m.mu), dq = std::abs(y.m.q - old.m.q);
    const double bmu = 3.0 * std::hypot(y.se_mu, old.se_mu) + opts.tol;
    const double bq = 3.0 * std::hypot(y.se_q, old.se_q) + opts.tol;
    out.residual = std::max(dmu, dq);
    if (dmu < bmu && dq < bq) {
      out.converged = true;
      break;
    }
  }
  if (!out.converged) {
    throw NoConvergenceError("sampled moment iteration did not settle within MC noise in " +
                                 std::to_string(opts.max_iter_sampled) + " steps",
                             std::move(out.trajectory));
  }
  double mu = 0, q = 0, vmu = 0, vq = 0;
  for (std::size_t j = hist.size() - kNoiseWindow; j < hist.size(); ++j) {
    mu += hist[j].m.mu;
    q += hist[j].m.q;
    vmu += hist[j].se_mu * hist[j].se_mu;
    vq += hist[j].se_q * hist[j].se_q;
  }
  out.state = {mu / kNoiseWindow, q / kNoiseWindow, 1.0};
  if (degenerate_state(out.state.mu, out.state.q)) out.state.q = std::max(out.state.q, out.state.mu * out.state.mu);
  out.se_mu = std::sqrt(vmu) / kNoiseWindow;
  out.se_q = std::sqrt(vq) / kNoiseWindow;
  return out;
}

double central_or_one_sided(const std::function<double(double)>& m, double c, double eps) {
  if (c + eps <= 1.0 && c - eps >= -1.0) return (m(c + eps) - m(c - eps)) / (2.0 * eps);
  if (c + eps > 1.0) return (3.0 * m(c) - 4.0 * m(c - eps) + m(c - 2.0 * eps)) / (2.0 * eps);
  return (-3.0 * m(c) + 4.0 * m(c + eps) - m(c + 2.0 * eps)) / (2.0 * eps);
}

// Correlated draw with the collapse convention of the quadrature module.
inline void pair_draw(Normal& n, const GateStats& g, double& a, double& b) {
  const double sd = std::sqrt(std::max(0.0, g.sigma2));
  const double rho = g.degenerate() ? 1.0 : g.c;
  const double za = n();
  const double zb = n();
  a = g.mu + sd * za;
  b = rho >= kCollapseCorrelation ? a : g.mu + sd * (rho * za + std::sqrt((1.0 - rho) * (1.0 + rho)) * zb);
}

double lstm_correlation_se(const Hyperparameters& theta, const ArchitectureSpec& arch, const InputStats& inputs,
                           const MomentState& fixed, double c, const SolveOptions& opts) {
  const PreActivationStats stats = preactivation_stats(theta, arch, {fixed.mu, fixed.q, c}, inputs, opts.num);
  const CellStateEnsemble pairs = correlated_cell_pairs(theta, stats, opts.cell.n_s, opts.cell.n_iters, opts.cell.seed);
  const Monomial sig = Monomial::of(Elem::sigmoid);
  const double eo = expect2(sig, sig, stats.at("o").pair(), opts.num.quad_order);
  double s = 0, s2 = 0;
  for (int j = 0; j < pairs.n_s; ++j) {
    const double v = std::tanh(pairs.samples[j]) * std::tanh(pairs.samples_b[j]);
    s += v;
    s2 += v * v;
  }
  const double n = pairs.n_s;
  if (n < 2) return 0.0;
  return eo * std::sqrt(std::max(0.0, (s2 - s * s / n) / (n - 1)) / n) / fixed.sigma2();
}

}  // namespace

MomentFixedPoint solve_moments(const Hyperparameters& theta, const ArchitectureSpec& arch, const InputStats& inputs,
                               const SolveOptions& opts) {
  check_options(opts);
  validate_theta(theta, arch);
  inputs.validate();
  return arch.sampled_cell ? solve_moments_sampled(theta, arch, inputs, opts)
                           : solve_moments_affine(theta, arch, inputs, opts);
}

SampledValue lstm_chi(const Hyperparameters& theta, const ArchitectureSpec& arch, const InputStats& inputs,
                      const MomentState& fixed, double c, const SolveOptions& opts) {
  if (!arch.sampled_cell) throw Error(ErrorCode::InvalidArgument, "lstm_chi needs the LSTM architecture");
  check_options(opts);
  const MomentState st{fixed.mu, fixed.q, degenerate_state(fixed.mu, fixed.q) ? 1.0 : c};
  const PreActivationStats stats = preactivation_stats(theta, arch, st, inputs, opts.num);
  const CellStateEnsemble prev =
      correlated_cell_pairs(theta, stats, opts.cell.n_s, opts.cell.n_iters, derive_seed(opts.cell.seed, 0xc41));
  const GateStats& gi = stats.at("i");
  const GateStats& gf = stats.at("f");
  const GateStats& gr = stats.at("r");
  const GateStats& go = stats.at("o");
  const double s2i = theta.at("i").sigma2, s2f = theta.at("f").sigma2, s2r = theta.at("r").sigma2;
  const double s2o = theta.at("o").sigma2;
  const Monomial sig = Monomial::of(Elem::sigmoid);
  const Monomial dsig = Monomial::of(Elem::sigmoid_prime);
  const int order = opts.num.quad_order;
  const double eo_ss = expect2(sig, sig, go.pair(), order);
  const double eo_pp = s2o > 0.0 ? expect2(dsig, dsig, go.pair(), order) : 0.0;

  const int n = prev.n_s;
  double s = 0.0, sq = 0.0;
  for (int j = 0; j < n; ++j) {
    Engine eng = make_engine(derive_seed(opts.cell.seed, 0xc42), j);
    Normal normal(eng);
    const double pa = prev.samples[j], pb = prev.samples_b[j];
    double acc = 0.0;
    for (int d = 0; d < opts.gate_draws; ++d) {
      double ia, ib, fa, fb, ra, rb;
      pair_draw(normal, gi, ia, ib);
      pair_draw(normal, gf, fa, fb);
      pair_draw(normal, gr, ra, rb);
      const double ca = sigmoid(fa) * pa + sigmoid(ia) * std::tanh(ra);
      const double cb = sigmoid(fb) * pb + sigmoid(ib) * std::tanh(rb);
      double v = sigmoid(fa) * sigmoid(fb);
      v += s2o * eo_pp * std::tanh(ca) * std::tanh(cb);
      const double inner = s2f * pa * pb * sigmoid_prime(fa) * sigmoid_prime(fb) +
                           s2i * sigmoid_prime(ia) * sigmoid_prime(ib) * std::tanh(ra) * std::tanh(rb) +
                           s2r * sigmoid(ia) * sigmoid(ib) * tanh_prime(ra) * tanh_prime(rb);
      v += eo_ss * tanh_prime(ca) * tanh_prime(cb) * inner;
      acc += v;
    }
    const double per = acc / opts.gate_draws;
    s += per;
    sq += per * per;
  }
  SampledValue out;
  out.value = s / n;
  if (n > 1) out.se = std::sqrt(std::max(0.0, (sq - s * s / n) / (n - 1)) / n);
  return out;
}

double chi_at(const Hyperparameters& theta, const ArchitectureSpec& arch, const InputStats& inputs,
              const MomentState& fixed, double c, const SolveOptions& opts) {
  if (arch.sampled_cell) return lstm_chi(theta, arch, inputs, fixed, c, opts).value;
  if (degenerate_state(fixed.mu, fixed.q)) return chi_analytic(theta, arch, fixed, 1.0, inputs, opts.num);
  if (!(c >= -1.0 && c <= 1.0)) throw Error(ErrorCode::InvalidArgument, "correlation outside [-1, 1]");
  const std::function<double(double)> m = [&](double x) {
    return step_correlation(theta, arch, fixed, x, inputs, nullptr, opts.num);
  };
  constexpr double eps = 1e-4;
  const double d1 = central_or_one_sided(m, c, eps);
  const double d2 = central_or_one_sided(m, c, eps / 2);
  if (std::abs(d1 - d2) > 1e-4 * std::max(std::abs(d2), 1e-6)) {
    throw Error(ErrorCode::DerivativeUnstable, "finite-difference slope changes by more than 1e-4 relative at eps/2 (" +
                                                   std::to_string(d1) + " vs " + std::to_string(d2) + ")");
  }
  return (4.0 * d2 - d1) / 3.0;
}

FixedPointReport solve_correlation(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                   const InputStats& inputs, const MomentFixedPoint& fixed, double c0,
                                   const SolveOptions& opts) {
  check_options(opts);
  if (!fixed.converged) throw Error(ErrorCode::InvalidArgument, "moment fixed point is not converged");
  if (!(c0 >= -1.0 && c0 <= 1.0)) throw Error(ErrorCode::InvalidArgument, "c0 outside [-1, 1]");
  FixedPointReport rep;
  rep.mu_star = fixed.state.mu;
  rep.q_star = fixed.state.q;
  rep.moment_iterations = fixed.iterations;
  rep.moment_residual = fixed.residual;
  rep.se_mu = fixed.se_mu;
  rep.se_q = fixed.se_q;
  rep.damped = fixed.damped;
  const MomentState fs{fixed.state.mu, fixed.state.q, 1.0};

  if (degenerate_state(fs.mu, fs.q)) {
    rep.c_star = 1.0;
    rep.c_trajectory = {1.0};
    if (arch.sampled_cell) {
      const SampledValue v = lstm_chi(theta, arch, inputs, fs, 1.0, opts);
      rep.chi = v.value;
      rep.chi_se = v.se;
      rep.chi_method = "sampled";
    } else {
      rep.chi = chi_analytic(theta, arch, fs, 1.0, inputs, opts.num);
      rep.chi_method = "analytic";
    }
    rep.xi = timescale(rep.chi);
    rep.converged = true;
    return rep;
  }

  // The LSTM map is evaluated with a fixed seed (common random numbers), so
  // it is a deterministic function of c and the same iteration applies.
  const CellSampling* cell = arch.sampled_cell ? &opts.cell : nullptr;
  const auto m = [&](double c) { return step_correlation(theta, arch, fs, c, inputs, cell, opts.num); };
  const int cap = arch.sampled_cell ? opts.max_iter_sampled : opts.max_iter;
  Monitor mon(opts.tol);
  double omega = 1.0;
  double c = c0;
  rep.c_trajectory.push_back(c);
  for (int n = 1; n <= cap; ++n) {
    double y = m(c);
    if (!std::isfinite(y)) throw Error(ErrorCode::NoConvergence, "correlation map produced a non-finite value");
    if (std::abs(y) > 1.0) {
      if (std::abs(y) > 1.0 + 1e-9) {
        throw Error(ErrorCode::NoConvergence, "correlation map left [-1, 1]: " + std::to_string(y));
      }
      y = std::clamp(y, -1.0, 1.0);
    }
    const double step = y - c;
    const bool done = mon.converged(step);
    if (opts.auto_damping && omega == 1.0 && mon.oscillating()) {
      omega = kDamping;
      rep.damped = true;
    }
    c += omega * step;
    rep.c_trajectory.push_back(c);
    rep.correlation_iterations = n;
    if (done) {
      rep.converged = true;
      break;
    }
  }
  if (!rep.converged) {
    std::vector<MomentState> traj;
    for (double x : rep.c_trajectory) traj.push_back({fs.mu, fs.q, x});
    throw NoConvergenceError("correlation iteration did not converge in " + std::to_string(cap) + " steps",
                             std::move(traj));
  }
  rep.c_star = c;
  rep.correlation_residual = std::abs(m(c) - c);
  if (arch.sampled_cell) {
    const SampledValue v = lstm_chi(theta, arch, inputs, fs, c, opts);
    rep.chi = v.value;
    rep.chi_se = v.se;
    rep.chi_method = "sampled";
    rep.se_c = lstm_correlation_se(theta, arch, inputs, fs, c, opts);
  } else {
    rep.chi = chi_at(theta, arch, inputs, fs, c, opts);
    rep.chi_method = "finite_difference";
  }
  rep.xi = timescale(rep.chi);
  return rep;
}

FixedPointReport analyze_fixed_point(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                     const InputStats& inputs, double c0, const SolveOptions& opts) {
  return solve_correlation(theta, arch, inputs, solve_moments(theta, arch, inputs, opts), c0, opts);
}

}  // namespace mfrnn
