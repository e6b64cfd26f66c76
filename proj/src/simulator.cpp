#include "mfrnn/simulator.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mfrnn/moment_maps.hpp"
#include "mfrnn/parallel.hpp"
#include "mfrnn/rng.hpp"
#include "mfrnn/symbolic.hpp"

namespace mfrnn {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Net {
  VectorXd s;
  VectorXd cell;    // LSTM
  VectorXd o_prev;  // LSTM: previous output-gate pre-activation
};

struct GateDraw {
  MatrixXd W, U;
  VectorXd b;
};

class Model {
 public:
  Model(const Hyperparameters& theta, const ArchitectureSpec& arch, int n) : arch_(arch), n_(n) {
    validate_theta(theta, arch);
    for (const auto& g : arch.gates) params_.push_back(theta.at(g.label));
  }

  int units() const { return n_; }
  int gates() const { return arch_.num_gates(); }
  const ArchitectureSpec& arch() const { return arch_; }

  Net initial(const SimulationConfig& cfg, Normal& nrm) const {
    Net net;
    net.s.resize(n_);
    const double sd = std::sqrt(cfg.init_var);
    for (int i = 0; i < n_; ++i) net.s[i] = cfg.init_mean + sd * nrm();
    if (arch_.sampled_cell) {
      net.cell = VectorXd::Zero(n_);
      net.o_prev = VectorXd::Zero(n_);
    }
    return net;
  }

  VectorXd draw_inputs(Normal& nrm, double R) const {
    VectorXd z(n_);
    const double sd = std::sqrt(R);
    for (int i = 0; i < n_; ++i) z[i] = sd * nrm();
    return z;
  }

  // z_b = sqrt(R) (sigma_z xi_a + sqrt(1 - sigma_z^2) xi_b) with z_a = sqrt(R) xi_a.
  VectorXd correlated_inputs(const VectorXd& za, Normal& nrm, const InputStats& in) const {
    const double perp = std::sqrt((1.0 - in.sigma_z) * (1.0 + in.sigma_z));
    const VectorXd xi = draw_inputs(nrm, in.R);
    if (perp == 0.0 && in.sigma_z == 1.0) return za;
    return in.sigma_z * za + perp * xi;
  }

  std::vector<GateDraw> draw_weights(Normal& nrm) const {
    std::vector<GateDraw> w(gates());
    const double inv = 1.0 / n_;
    for (int k = 0; k < gates(); ++k) {
      const GateParams& p = params_[k];
      const double sw = std::sqrt(p.sigma2 * inv), su = std::sqrt(p.nu2 * inv), sb = std::sqrt(p.rho2);
      w[k].W.resize(n_, n_);
      w[k].U.resize(n_, n_);
      w[k].b.resize(n_);
      for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < n_; ++i) w[k].W(i, j) = sw * nrm();
      }
      for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < n_; ++i) w[k].U(i, j) = su * nrm();
      }
      for (int i = 0; i < n_; ++i) w[k].b[i] = p.mu + sb * nrm();
    }
    return w;
  }

  // Recurrent input of gate k given the pre-activations computed so far.
  VectorXd recurrent_input(int k, const VectorXd& s, const MatrixXd& u) const {
    const GateSpec& spec = arch_.gates[k];
    if (spec.form == GateForm::linear) return s;
    VectorXd x(n_);
    for (int i = 0; i < n_; ++i) x[i] = spec.gating_fn(u(i, spec.gating_gate)) * s[i];
    return x;
  }

  MatrixXd preactivations(const Net& net, const VectorXd& z, const std::vector<GateDraw>& w) const {
    MatrixXd u(n_, gates());
    for (int k = 0; k < gates(); ++k) {
      const VectorXd x = recurrent_input(k, net.s, u);
      u.col(k) = w[k].W * x + w[k].U * z + w[k].b;
    }
    return u;
  }

  // Draws the pre-activations of both copies from their joint law given the
  // states (exact for fresh weights). `b` may be null for a single copy.
  void project(const Net& a, const Net* b, const VectorXd& za, const VectorXd* zb, Normal& nrm, MatrixXd& ua,
               MatrixXd* ub) const {
    ua.resize(n_, gates());
    if (ub) ub->resize(n_, gates());
    const double inv = 1.0 / n_;
    const double zaa = za.squaredNorm() * inv;
    const double zab = zb ? za.dot(*zb) * inv : 0.0;
    const double zbb = zb ? zb->squaredNorm() * inv : 0.0;
    const bool same_z = zb && (*zb == za);
    for (int k = 0; k < gates(); ++k) {
      const GateParams& p = params_[k];
      const VectorXd xa = recurrent_input(k, a.s, ua);
      const double sb = std::sqrt(p.rho2);
      if (!b) {
        const double sd = std::sqrt(p.sigma2 * xa.squaredNorm() * inv + p.nu2 * zaa);
        for (int i = 0; i < n_; ++i) {
          const double e = sd * nrm();
          ua(i, k) = e + p.mu + sb * nrm();
        }
        continue;
      }
      const VectorXd xb = recurrent_input(k, b->s, *ub);
      const bool same = same_z && xa == xb;
      const double gaa = p.sigma2 * xa.squaredNorm() * inv + p.nu2 * zaa;
      const double gab = p.sigma2 * xa.dot(xb) * inv + p.nu2 * zab;
      const double gbb = p.sigma2 * xb.squaredNorm() * inv + p.nu2 * zbb;
      const double l11 = std::sqrt(gaa);
      const double l21 = l11 > 0.0 ? gab / l11 : 0.0;
      const double l22 = std::sqrt(std::max(0.0, gbb - l21 * l21));
      for (int i = 0; i < n_; ++i) {
        const double xi1 = nrm();
        const double xi2 = nrm();
        const double bias = p.mu + sb * nrm();
        const double ea = l11 * xi1;
        ua(i, k) = ea + bias;
        (*ub)(i, k) = same ? ua(i, k) : l21 * xi1 + l22 * xi2 + bias;
      }
    }
  }

  void apply(Net& net, const MatrixXd& u) const {
    std::vector<double> row(gates());
    for (int i = 0; i < n_; ++i) {
      for (int k = 0; k < gates(); ++k) row[k] = u(i, k);
      if (arch_.sampled_cell) {
        using namespace lstm;
        net.cell[i] = sigmoid(row[kF]) * net.cell[i] + sigmoid(row[kI]) * std::tanh(row[kR]);
        net.s[i] = sigmoid(row[kO]) * std::tanh(net.cell[i]);
        net.o_prev[i] = row[kO];
      } else {
        net.s[i] = arch_.f(net.s[i], row);
      }
    }
    if (!net.s.allFinite() || (arch_.sampled_cell && !net.cell.allFinite())) {
      throw Error(ErrorCode::NonFiniteState, "simulated state became non-finite");
    }
  }

  // Scalar one-step map used for the Jacobian (the LSTM in its hidden-state form).
  VectorXd one_step(const VectorXd& s, const VectorXd& o_prev, const VectorXd& z,
                    const std::vector<GateDraw>& w) const {
    Net net;
    net.s = s;
    const MatrixXd u = preactivations(net, z, w);
    VectorXd out(n_);
    std::vector<double> row(gates());
    for (int i = 0; i < n_; ++i) {
      for (int k = 0; k < gates(); ++k) row[k] = u(i, k);
      out[i] = arch_.f(s[i], row, arch_.sampled_cell ? o_prev[i] : 0.0);
    }
    return out;
  }

 private:
  const ArchitectureSpec& arch_;
  int n_;
  std::vector<GateParams> params_;
};

struct PairEstimate {
  double mu, q, c;
};

// 1 - C is formed from the squared differences, which avoids cancellation
// when the copies nearly coincide.
PairEstimate estimate(double s1, double s2, double sd, double n) {
  PairEstimate e;
  e.mu = s1 / (2.0 * n);
  e.q = s2 / (2.0 * n);
  e.c = degenerate_state(e.mu, e.q) ? 1.0 : 1.0 - sd / (2.0 * n) / (e.q - e.mu * e.mu);
  return e;
}

// Pooled estimates with a leave-one-unit-out jackknife.
EmpiricalStep pair_step_stats(const VectorXd& a, const VectorXd& b) {
  const int n = static_cast<int>(a.size());
  double s1 = 0, s2 = 0, sd = 0;
  for (int i = 0; i < n; ++i) {
    s1 += a[i] + b[i];
    s2 += a[i] * a[i] + b[i] * b[i];
    sd += (a[i] - b[i]) * (a[i] - b[i]);
  }
  const PairEstimate full = estimate(s1, s2, sd, n);
  EmpiricalStep out{full.mu, full.q, full.c, 0.0, 0.0, 0.0};
  if (n < 2) return out;
  std::vector<PairEstimate> loo(n);
  PairEstimate mean{0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    loo[i] = estimate(s1 - a[i] - b[i], s2 - a[i] * a[i] - b[i] * b[i], sd - d * d, n - 1);
    mean.mu += loo[i].mu / n;
    mean.q += loo[i].q / n;
    mean.c += loo[i].c / n;
  }
  double vmu = 0, vq = 0, vc = 0;
  for (const auto& e : loo) {
    vmu += (e.mu - mean.mu) * (e.mu - mean.mu);
    vq += (e.q - mean.q) * (e.q - mean.q);
    vc += (e.c - mean.c) * (e.c - mean.c);
  }
  const double f = (n - 1.0) / n;
  out.se_mu = std::sqrt(f * vmu);
  out.se_q = std::sqrt(f * vq);
  out.se_c = std::sqrt(f * vc);
  return out;
}

const InputStats& schedule_at(std::span<const InputStats> schedule, int t) {
  return schedule.size() == 1 ? schedule[0] : schedule[t - 1];
}

std::vector<EmpiricalStep> run_replica(const Model& model, const SimulationConfig& cfg,
                                       std::span<const InputStats> schedule, const PairOptions& opts,
                                       std::uint64_t seed) {
  Engine eng(seed);
  Normal nrm(eng);
  Net a = model.initial(cfg, nrm);
  Net b = a;
  std::vector<EmpiricalStep> out;
  out.reserve(cfg.T + 1);
  out.push_back(pair_step_stats(a.s, b.s));
  const bool dense = opts.tied || opts.backend == Backend::dense;
  std::vector<GateDraw> tied;
  if (opts.tied) tied = model.draw_weights(nrm);
  MatrixXd ua, ub;
  for (int t = 1; t <= cfg.T; ++t) {
    const InputStats& in = schedule_at(schedule, t);
    const VectorXd za = model.draw_inputs(nrm, in.R);
    const VectorXd zb = model.correlated_inputs(za, nrm, in);
    if (dense) {
      const std::vector<GateDraw> fresh = opts.tied ? std::vector<GateDraw>{} : model.draw_weights(nrm);
      const auto& w = opts.tied ? tied : fresh;
      ua = model.preactivations(a, za, w);
      ub = model.preactivations(b, zb, w);
    } else {
      model.project(a, &b, za, &zb, nrm, ua, &ub);
    }
    model.apply(a, ua);
    model.apply(b, ub);
    out.push_back(pair_step_stats(a.s, b.s));
  }
  return out;
}

void check_schedule(std::span<const InputStats> schedule, int T) {
  if (schedule.empty()) throw Error(ErrorCode::InvalidArgument, "empty input schedule");
  if (schedule.size() != 1 && static_cast<int>(schedule.size()) < T) {
    throw Error(ErrorCode::InvalidArgument, "input schedule shorter than T");
  }
  for (const auto& in : schedule) in.validate();
}

}  // namespace

std::vector<EmpiricalStep> simulate_pair(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                         const SimulationConfig& config, std::span<const InputStats> schedule,
                                         const PairOptions& opts) {
  config.validate();
  check_schedule(schedule, config.T);
  if (opts.replicas < 1) throw Error(ErrorCode::InvalidArgument, "replicas must be >= 1");
  const Model model(theta, arch, config.N);
  if (opts.replicas == 1) return run_replica(model, config, schedule, opts, derive_seed(config.seed, 0));

  std::vector<std::vector<EmpiricalStep>> runs(opts.replicas);
  parallel_for(runs.size(), opts.workers, [&](std::size_t r) {
    runs[r] = run_replica(model, config, schedule, opts, derive_seed(config.seed, r));
  });
  const double R = opts.replicas;
  std::vector<EmpiricalStep> out(config.T + 1);
  for (int t = 0; t <= config.T; ++t) {
    EmpiricalStep m{0, 0, 0, 0, 0, 0};
    for (const auto& run : runs) {
      m.mu += run[t].mu / R;
      m.q += run[t].q / R;
      m.c += run[t].c / R;
    }
    double vmu = 0, vq = 0, vc = 0;
    for (const auto& run : runs) {
      vmu += (run[t].mu - m.mu) * (run[t].mu - m.mu);
      vq += (run[t].q - m.q) * (run[t].q - m.q);
      vc += (run[t].c - m.c) * (run[t].c - m.c);
    }
    m.se_mu = std::sqrt(vmu / (R - 1) / R);
    m.se_q = std::sqrt(vq / (R - 1) / R);
    m.se_c = std::sqrt(vc / (R - 1) / R);
    out[t] = m;
  }
  return out;
}

SpectrumReport spectrum(const MatrixXd& jac) {
  if (!jac.allFinite()) throw Error(ErrorCode::NonFiniteState, "Jacobian has non-finite entries");
  Eigen::BDCSVD<MatrixXd> svd(jac);
  const VectorXd sv = svd.singularValues();
  SpectrumReport rep;
  rep.values.resize(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) rep.values[i] = sv[i] * sv[i];
  const double n = static_cast<double>(rep.values.size());
  for (double v : rep.values) rep.mean += v / n;
  for (double v : rep.values) rep.variance += (v - rep.mean) * (v - rep.mean) / n;
  return rep;
}

JacobianSample build_jacobian(const Hyperparameters& theta, const ArchitectureSpec& arch,
                              const SimulationConfig& config, const InputStats& inputs, const JacobianOptions& opts) {
  config.validate();
  inputs.validate();
  if (opts.burn_in < 0) throw Error(ErrorCode::InvalidArgument, "burn_in must be >= 0");
  const Model model(theta, arch, config.N);
  const int n = config.N;
  Engine eng(derive_seed(config.seed, 0));
  Normal nrm(eng);
  Net net = model.initial(config, nrm);
  MatrixXd u;
  for (int t = 1; t <= opts.burn_in; ++t) {
    const VectorXd z = model.draw_inputs(nrm, inputs.R);
    if (opts.burn_in_backend == Backend::dense) {
      u = model.preactivations(net, z, model.draw_weights(nrm));
    } else {
      model.project(net, nullptr, z, nullptr, nrm, u, nullptr);
    }
    model.apply(net, u);
  }

  const VectorXd z = model.draw_inputs(nrm, inputs.R);
  const std::vector<GateDraw> w = model.draw_weights(nrm);
  u = model.preactivations(net, z, w);
  const VectorXd o_prev = arch.sampled_cell ? net.o_prev : VectorXd::Zero(n);

  JacobianSample out;
  out.d0.resize(n);
  MatrixXd dk(n, model.gates());
  std::vector<double> row(model.gates());
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < model.gates(); ++k) row[k] = u(i, k);
    out.d0[i] = arch.d_state(net.s[i], row, o_prev[i]);
    for (int k = 0; k < model.gates(); ++k) dk(i, k) = arch.d_gate(k, net.s[i], row, o_prev[i]);
  }
  out.J = out.d0.asDiagonal();
  for (int k = 0; k < model.gates(); ++k) {
    const GateSpec& spec = arch.gates[k];
    if (spec.form == GateForm::linear) {
      out.J.noalias() += dk.col(k).asDiagonal() * w[k].W;
      continue;
    }
    // u_k2 = W_k2 (g(u_k) * s) + ...: d/ds = W_k2 (diag(g) + diag(s g') W_k).
    const int g = spec.gating_gate;
    const LinearForm dg = derivative(spec.gating_fn);
    VectorXd gv(n), sgp(n);
    for (int i = 0; i < n; ++i) {
      gv[i] = spec.gating_fn(u(i, g));
      sgp[i] = net.s[i] * eval(dg, u(i, g));
    }
    MatrixXd inner = sgp.asDiagonal() * w[g].W;
    inner.diagonal() += gv;
    out.J.noalias() += dk.col(k).asDiagonal() * (w[k].W * inner);
  }
  out.spectrum = spectrum(out.J);

  out.fd_max_relative_error = std::numeric_limits<double>::quiet_NaN();
  if (opts.check_finite_difference) {
    double worst = 0.0;
    for (int j = 0; j < n; ++j) {
      VectorXd sp = net.s, sm = net.s;
      sp[j] += opts.fd_step;
      sm[j] -= opts.fd_step;
      const VectorXd col = (model.one_step(sp, o_prev, z, w) - model.one_step(sm, o_prev, z, w)) / (2 * opts.fd_step);
      const double denom = out.J.col(j).norm();
      const double err = (col - out.J.col(j)).norm() / (denom > 0.0 ? denom : 1.0);
      worst = std::max(worst, err);
    }
    out.fd_max_relative_error = worst;
  }
  return out;
}

std::vector<double> simulate_cell_distribution(const Hyperparameters& theta, const ArchitectureSpec& arch,
                                               const SimulationConfig& config, const InputStats& inputs,
                                               Backend backend) {
  if (arch.kind != ArchKind::lstm && arch.kind != ArchKind::peephole_lstm) {
    throw Error(ErrorCode::InvalidArgument, "cell distributions need the LSTM or the peephole LSTM");
  }
  config.validate();
  inputs.validate();
  const Model model(theta, arch, config.N);
  Engine eng(derive_seed(config.seed, 0));
  Normal nrm(eng);
  Net net = model.initial(config, nrm);
  MatrixXd u;
  for (int t = 1; t <= config.T; ++t) {
    const VectorXd z = model.draw_inputs(nrm, inputs.R);
    if (backend == Backend::dense) {
      u = model.preactivations(net, z, model.draw_weights(nrm));
    } else {
      model.project(net, nullptr, z, nullptr, nrm, u, nullptr);
    }
    model.apply(net, u);
  }
  const VectorXd& cells = arch.sampled_cell ? net.cell : net.s;
  return {cells.data(), cells.data() + cells.size()};
}

}  // namespace mfrnn
