#include "mfrnn/moment_maps.hpp"

#include <algorithm>
#include <cmath>

#include "mfrnn/rng.hpp"

namespace mfrnn {

double GateStats::correlation() const {
  if (degenerate()) throw Error(ErrorCode::DegenerateCorrelation, "pre-activation variance is zero; correlation is 0/0");
  return c;
}

const GateStats& PreActivationStats::at(std::string_view label) const {
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] == label) return gates[k];
  }
  throw Error(ErrorCode::UnknownGate, "no statistics for gate '" + std::string(label) + "'");
}

bool degenerate_state(double mu, double q) {
  const double var = q - mu * mu;
  return !(var > kDegenerateVariance * std::max(q, 1e-300));
}

PreActivationStats preactivation_stats(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                       const MomentState& state, const InputStats& inputs, const Numerics& num) {
  validate_theta(theta, arch);
  inputs.validate();
  const double var_s = std::max(0.0, state.sigma2());
  const double cross_s = var_s * state.c + state.mu * state.mu;  // E[s_a s_b]
  PreActivationStats out;
  for (int k = 0; k < arch.num_gates(); ++k) {
    const GateSpec& spec = arch.gates[k];
    const GateParams& p = theta.at(spec.label);
    double var_rec = 0.0, cov_rec = 0.0;
    if (spec.form == GateForm::linear) {
      var_rec = p.sigma2 * state.q;
      cov_rec = p.sigma2 * cross_s;
    } else {
      const GateStats& g = out.gates.at(spec.gating_gate);
      const Monomial& fn = spec.gating_fn;
      var_rec = p.sigma2 * expect1(fn * fn, g.mu, g.sigma2, num.quad_order) * state.q;
      cov_rec = p.sigma2 * expect2(fn, fn, g.pair(), num.quad_order) * cross_s;
    }
    GateStats st;
    st.mu = p.mu;
    st.sigma2 = var_rec + p.nu2 * inputs.R + p.rho2;
    st.q = st.sigma2 + p.mu * p.mu;
    if (st.sigma2 > 0.0) {
      const double cov = cov_rec + p.nu2 * inputs.R * inputs.sigma_z + p.rho2;
      st.c = std::clamp(cov / st.sigma2, -1.0, 1.0);
    }
    out.labels.push_back(spec.label);
    out.gates.push_back(st);
  }
  return out;
}

GateExpectations::GateExpectations(const PreActivationStats& stats, int order) : stats_(stats), order_(order) {}

double GateExpectations::e1(int k, const Monomial& m) const {
  if (m.is_one()) return 1.0;
  auto key = std::make_pair(k, m);
  auto it = cache1_.find(key);
  if (it != cache1_.end()) return it->second;
  const GateStats& g = stats_.gates.at(k);
  const double v = expect1(m, g.mu, g.sigma2, order_);
  cache1_.emplace(key, v);
  return v;
}

double GateExpectations::e2(int k, const Monomial& a, const Monomial& b) const {
  if (a.is_one()) return e1(k, b);
  if (b.is_one()) return e1(k, a);
  const GateStats& g = stats_.gates.at(k);
  if (g.degenerate() || g.c >= kCollapseCorrelation) return e1(k, a * b);
  auto key = a < b ? std::make_tuple(k, a, b) : std::make_tuple(k, b, a);
  auto it = cache2_.find(key);
  if (it != cache2_.end()) return it->second;
  const double v = expect2(a, b, g.pair(), order_);
  cache2_.emplace(key, v);
  return v;
}

double GateExpectations::e1(int k, const LinearForm& f) const {
  double r = 0.0;
  for (const auto& [c, m] : f) r += c * e1(k, m);
  return r;
}

double GateExpectations::e2(int k, const LinearForm& a, const LinearForm& b) const {
  double r = 0.0;
  for (const auto& [ca, ma] : a) {
    for (const auto& [cb, mb] : b) r += ca * cb * e2(k, ma, mb);
  }
  return r;
}

double expect_single(const StatePoly& p, const GateExpectations& ex, std::span<const double> state_moments) {
  double r = 0.0;
  for (const auto& t : p.terms) {
    if (t.s_pow >= static_cast<int>(state_moments.size())) {
      throw Error(ErrorCode::InvalidArgument, "state moment of order " + std::to_string(t.s_pow) + " not supplied");
    }
    double v = t.coef * state_moments[t.s_pow];
    for (int k = 0; k < kMaxGates && v != 0.0; ++k) v *= ex.e1(k, t.gate[k]);
    r += v;
  }
  return r;
}

namespace {

double pair_state_moment(int p, int q, const MomentState& s) {
  if (p > 1 || q > 1) throw Error(ErrorCode::InvalidArgument, "pair expectation needs state powers <= 1");
  if (p == 0 && q == 0) return 1.0;
  if (p + q == 1) return s.mu;
  return std::max(0.0, s.sigma2()) * s.c + s.mu * s.mu;
}

double gate_product(const Term& a, const Term& b, const GateExpectations& ex, int skip = -1) {
  double v = 1.0;
  for (int k = 0; k < kMaxGates && v != 0.0; ++k) {
    if (k != skip) v *= ex.e2(k, a.gate[k], b.gate[k]);
  }
  return v;
}

const Monomial kOne{};

}  // namespace

double expect_pair(const StatePoly& p, const StatePoly& r, const GateExpectations& ex, const MomentState& state) {
  double acc = 0.0;
  for (const auto& a : p.terms) {
    for (const auto& b : r.terms) {
      acc += a.coef * b.coef * pair_state_moment(a.s_pow, b.s_pow, state) * gate_product(a, b, ex);
    }
  }
  return acc;
}

namespace lstm {
MomentState hidden_moments(const CellStateEnsemble& cells, const GateStats& o, const MomentState& prev, int order) {
  const Monomial sig = Monomial::of(Elem::sigmoid);
  const double eo = expect1(sig, o.mu, o.sigma2, order);
  const double eo2 = expect1(sig * sig, o.mu, o.sigma2, order);
  double t1 = 0.0, t2 = 0.0, tab = 0.0;
  std::size_t n = 0;
  for (double c : cells.samples) {
    const double t = std::tanh(c);
    t1 += t;
    t2 += t * t;
    ++n;
  }
  for (double c : cells.samples_b) {
    const double t = std::tanh(c);
    t1 += t;
    t2 += t * t;
    ++n;
  }
  for (std::size_t j = 0; j < cells.samples_b.size(); ++j) {
    tab += std::tanh(cells.samples[j]) * std::tanh(cells.samples_b[j]);
  }
  MomentState out;
  out.mu = eo * t1 / n;
  out.q = eo2 * t2 / n;
  out.c = prev.c;
  if (degenerate_state(out.mu, out.q)) {
    out.q = std::max(out.q, out.mu * out.mu);
    out.c = 1.0;
  } else if (cells.paired()) {
    const double p = expect2(sig, sig, o.pair(), order) * tab / cells.samples_b.size();
    out.c = (p - out.mu * out.mu) / out.sigma2();
  }
  return out;
}
}  // namespace lstm

MomentState step_moments(const Hyperparameters& theta, const ArchitectureSpec& arch, const MomentState& state,
                         const InputStats& inputs, const CellStateEnsemble* cell, const Numerics& num) {
  const PreActivationStats stats = preactivation_stats(theta, arch, state, inputs, num);
  if (arch.sampled_cell) {
    if (!cell) throw Error(ErrorCode::MissingCellEnsemble, "the LSTM moment map needs a cell-state ensemble");
    return lstm::hidden_moments(*cell, stats.at("o"), state, num.quad_order);
  }
  const GateExpectations ex(stats, num.quad_order);
  const std::array<double, 3> m{1.0, state.mu, state.q};
  MomentState out;
  out.mu = expect_single(arch.update, ex, m);
  out.q = expect_single(arch.update * arch.update, ex, m);
  if (degenerate_state(out.mu, out.q)) {
    out.q = std::max(out.q, out.mu * out.mu);
    out.c = 1.0;
    return out;
  }
  const double p = expect_pair(arch.update, arch.update, ex, state);
  out.c = (p - out.mu * out.mu) / out.sigma2();
  return out;
}

MomentState step_state_moments(const Hyperparameters& theta, const ArchitectureSpec& arch, const MomentState& state,
                               const InputStats& inputs, const Numerics& num) {
  if (arch.sampled_cell) throw Error(ErrorCode::InvalidArgument, "the LSTM state moments are sampled");
  const PreActivationStats stats = preactivation_stats(theta, arch, state, inputs, num);
  const GateExpectations ex(stats, num.quad_order);
  const std::array<double, 3> m{1.0, state.mu, state.q};
  MomentState out{expect_single(arch.update, ex, m), expect_single(arch.update * arch.update, ex, m), state.c};
  if (degenerate_state(out.mu, out.q)) out.q = std::max(out.q, out.mu * out.mu);
  return out;
}

double step_correlation(const Hyperparameters& theta, const ArchitectureSpec& arch, const MomentState& fixed,
                        double c_s, const InputStats& inputs, const CellSampling* cell, const Numerics& num) {
  if (degenerate_state(fixed.mu, fixed.q)) {
    throw Error(ErrorCode::DegenerateCorrelation, "state variance is zero at the fixed point");
  }
  const MomentState st{fixed.mu, fixed.q, c_s};
  const PreActivationStats stats = preactivation_stats(theta, arch, st, inputs, num);
  // Normalised by the moments of the same step, so M_C(1) = 1 holds to
  // rounding even when (mu, Q) is a fixed point only to tolerance.
  if (arch.sampled_cell) {
    if (!cell) throw Error(ErrorCode::MissingCellEnsemble, "the LSTM correlation map needs cell sampling options");
    const CellStateEnsemble pairs = correlated_cell_pairs(theta, stats, cell->n_s, cell->n_iters, cell->seed);
    const MomentState out = lstm::hidden_moments(pairs, stats.at("o"), st, num.quad_order);
    if (degenerate_state(out.mu, out.q)) return 1.0;
    return out.c;
  }
  const GateExpectations ex(stats, num.quad_order);
  const std::array<double, 3> m{1.0, st.mu, st.q};
  const double mu = expect_single(arch.update, ex, m);
  const double q = expect_single(arch.update * arch.update, ex, m);
  const double p = expect_pair(arch.update, arch.update, ex, st);
  return (p - mu * mu) / (q - mu * mu);
}

std::array<double, 5> stationary_state_moments(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                               const MomentState& fixed, const InputStats& inputs,
                                               const Numerics& num) {
  if (arch.sampled_cell) throw Error(ErrorCode::InvalidArgument, "stationary moments are sampled for the LSTM");
  const PreActivationStats stats = preactivation_stats(theta, arch, {fixed.mu, fixed.q, 1.0}, inputs, num);
  const GateExpectations ex(stats, num.quad_order);
  std::array<double, 5> m{1.0, 0.0, 0.0, 0.0, 0.0};
  StatePoly power = StatePoly::constant(1.0);
  for (int n = 1; n <= 4; ++n) {
    power = power * arch.update;
    double rest = 0.0, lead = 0.0;
    for (const auto& t : power.terms) {
      double v = t.coef;
      for (int k = 0; k < kMaxGates && v != 0.0; ++k) v *= ex.e1(k, t.gate[k]);
      if (t.s_pow == n) {
        lead += v;
      } else {
        rest += v * m[t.s_pow];
      }
    }
    m[n] = lead < 1.0 ? rest / (1.0 - lead) : (rest == 0.0 ? 0.0 : INFINITY);
  }
  m[1] = fixed.mu;
  m[2] = fixed.q;
  return m;
}

double chi_analytic(const Hyperparameters& theta, const ArchitectureSpec& arch, const MomentState& fixed, double c_s,
                    const InputStats& inputs, const Numerics& num) {
  if (arch.sampled_cell) throw Error(ErrorCode::InvalidArgument, "chi_analytic covers the affine architectures");
  const MomentState st{fixed.mu, fixed.q, c_s};
  const PreActivationStats stats = preactivation_stats(theta, arch, st, inputs, num);
  const GateExpectations ex(stats, num.quad_order);
  const double cross_s = std::max(0.0, st.sigma2()) * c_s + st.mu * st.mu;

  // d cov(u_k) / dC divided by the state variance.
  std::vector<double> rate(arch.num_gates());
  for (int k = 0; k < arch.num_gates(); ++k) {
    const GateSpec& spec = arch.gates[k];
    const double s2 = theta.at(spec.label).sigma2;
    if (spec.form == GateForm::linear) {
      rate[k] = s2;
    } else {
      const int g = spec.gating_gate;
      const LinearForm dg = derivative(spec.gating_fn);
      const double sg2 = theta.at(arch.gates[g].label).sigma2;
      rate[k] = s2 * (ex.e2(g, spec.gating_fn, spec.gating_fn) + cross_s * sg2 * ex.e2(g, dg, dg));
    }
  }

  double acc = 0.0;
  for (const auto& a : arch.update.terms) {
    for (const auto& b : arch.update.terms) {
      const double w = a.coef * b.coef;
      if (a.s_pow == 1 && b.s_pow == 1) acc += w * gate_product(a, b, ex);
      const double smom = pair_state_moment(a.s_pow, b.s_pow, st);
      if (smom == 0.0) continue;
      for (int k = 0; k < arch.num_gates(); ++k) {
        if (a.gate[k].is_one() || b.gate[k].is_one() || rate[k] == 0.0) continue;
        const double dk = ex.e2(k, derivative(a.gate[k]), derivative(b.gate[k]));
        acc += w * smom * rate[k] * dk * gate_product(a, b, ex, k);
      }
    }
  }
  return acc;
}

std::vector<MomentState> mean_field_trajectory(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                               const MomentState& init, std::span<const InputStats> schedule, int T,
                                               const CellSampling& cell, const Numerics& num) {
  if (schedule.empty()) throw Error(ErrorCode::InvalidArgument, "empty input schedule");
  if (schedule.size() != 1 && static_cast<int>(schedule.size()) < T) {
    throw Error(ErrorCode::InvalidArgument, "input schedule shorter than T");
  }
  std::vector<MomentState> traj{init};
  traj.reserve(T + 1);
  CellStateEnsemble cells;
  if (arch.sampled_cell) {
    cells.n_s = cell.n_s;
    cells.seed = cell.seed;
    cells.samples.assign(cell.n_s, 0.0);
    cells.samples_b.assign(cell.n_s, 0.0);
  }
  for (int t = 1; t <= T; ++t) {
    const InputStats& in = schedule.size() == 1 ? schedule[0] : schedule[t - 1];
    const MomentState& prev = traj.back();
    if (arch.sampled_cell) {
      const PreActivationStats stats = preactivation_stats(theta, arch, prev, in, num);
      advance_cells(cells, stats, derive_seed(cell.seed, static_cast<std::uint64_t>(t)));
      traj.push_back(lstm::hidden_moments(cells, stats.at("o"), prev, num.quad_order));
    } else {
      traj.push_back(step_moments(theta, arch, prev, in, nullptr, num));
    }
  }
  return traj;
}

}  // namespace mfrnn
