#include "mfrnn/criticality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfrnn/parallel.hpp"
#include "mfrnn/rng.hpp"

namespace mfrnn {

std::vector<std::string> preset_names() { return {"peephole_critical", "lstm_cifar_critical", "standard"}; }

std::string preset_default_arch(std::string_view name) {
  if (name == "peephole_critical" || name == "standard") return "peepholeLSTM";
  if (name == "lstm_cifar_critical") return "LSTM";
  throw Error(ErrorCode::UnknownPreset, "unknown preset '" + std::string(name) + "'");
}

Preset preset_init(std::string_view name, const ArchitectureSpec& arch, int N, int input_dim) {
  Preset p;
  p.name = std::string(name);
  p.arch = arch.name;
  for (const auto& g : arch.gates) p.theta[g.label] = GateParams{};
  auto need = [&](std::initializer_list<const char*> labels) {
    for (const char* l : labels) {
      if (!arch.has_gate(l)) {
        throw Error(ErrorCode::InvalidArgument, p.name + " needs gate '" + l + "', which " + arch.name + " lacks");
      }
    }
  };
  if (name == "peephole_critical") {
    need({"f"});
    for (auto& [label, g] : p.theta.gates) g.sigma2 = 1e-5;
    p.theta["f"].mu = 5.0;
  } else if (name == "lstm_cifar_critical") {
    need({"i", "f", "r", "o"});
    p.theta["i"].nu2 = 1.0;
    p.theta["r"].nu2 = 1.0;
    p.theta["o"].sigma2 = 1.0;
    p.theta["f"].mu = 1.0;
    for (const char* l : {"i", "f", "r"}) p.theta[l].sigma2 = 1e-5;
  } else if (name == "standard") {
    need({"f"});
    if (N < 1) throw Error(ErrorCode::InvalidArgument, "standard preset needs N >= 1");
    p.N = N;
    p.input_dim = input_dim > 0 ? input_dim : N;
    p.recurrent_entry_var = 1.0 / N;
    p.input_entry_var = 2.0 / (p.input_dim + N);
    // Theta scales W by 1/N: sigma2 = N * entry variance.
    for (auto& [label, g] : p.theta.gates) {
      g.sigma2 = N * p.recurrent_entry_var;
      g.nu2 = N * p.input_entry_var;
    }
    p.theta["f"].mu = 1.0;
  } else {
    throw Error(ErrorCode::UnknownPreset, "unknown preset '" + std::string(name) + "'");
  }
  return p;
}

ParamRef ParamRef::parse(std::string_view text) {
  const auto dot = text.find('.');
  if (dot == std::string_view::npos) {
    throw Error(ErrorCode::InvalidArgument, "parameter '" + std::string(text) + "' is not of the form gate.field");
  }
  ParamRef r{std::string(text.substr(0, dot)), std::string(text.substr(dot + 1))};
  if (r.field != "sigma2" && r.field != "nu2" && r.field != "rho2" && r.field != "mu") {
    throw Error(ErrorCode::InvalidArgument, "unknown field '" + r.field + "'");
  }
  return r;
}

double& ParamRef::in(Hyperparameters& theta) const {
  auto it = theta.gates.find(gate);
  if (it == theta.gates.end()) throw Error(ErrorCode::UnknownGate, "no gate '" + gate + "'");
  GateParams& g = it->second;
  if (field == "sigma2") return g.sigma2;
  if (field == "nu2") return g.nu2;
  if (field == "rho2") return g.rho2;
  return g.mu;
}

double ParamRef::get(const Hyperparameters& theta) const { return in(const_cast<Hyperparameters&>(theta)); }

SearchFailedError::SearchFailedError(const std::string& what, std::optional<CriticalPoint> best)
    : Error(ErrorCode::SearchFailed, what), best_(std::move(best)) {}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

CriticalPoint evaluate(const ArchitectureSpec& arch, const Hyperparameters& theta, const SearchSpec& spec) {
  CriticalPoint p;
  p.theta = theta;
  p.fixed = analyze_fixed_point(theta, arch, spec.inputs, 1.0, spec.solve);
  p.moments = jacobian_moments(theta, arch, spec.inputs, p.fixed, spec.solve);
  p.gap = isometry_gap(p.moments, p.fixed.chi);
  if (spec.target_xi) {
    p.objective = std::isinf(p.fixed.xi) ? kInf : std::abs(p.fixed.xi - *spec.target_xi);
  } else {
    p.objective = p.gap.norm;
  }
  return p;
}

double safe_objective(const ArchitectureSpec& arch, const Hyperparameters& theta, const SearchSpec& spec) {
  try {
    return evaluate(arch, theta, spec).objective;
  } catch (const Error&) {
    return kInf;
  }
}

template <class F>
double golden_section(F&& f, double lo, double hi, double tol, int& evals) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - r * (b - a), x2 = a + r * (b - a);
  double f1 = f(x1), f2 = f(x2);
  evals += 2;
  while (b - a > tol * std::max(1.0, std::abs(a) + std::abs(b))) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - r * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + r * (b - a);
      f2 = f(x2);
    }
    ++evals;
  }
  // The bracket ends are candidates too: the objective may be monotone.
  double best = 0.5 * (a + b), fbest = f(best);
  for (double x : {lo, hi}) {
    const double fx = f(x);
    if (fx < fbest) {
      best = x;
      fbest = fx;
    }
  }
  evals += 3;
  return best;
}

}  // namespace

CriticalPoint search_critical(const ArchitectureSpec& arch, const SearchSpec& spec) {
  if (spec.free.empty() || spec.free.size() > 3) {
    throw Error(ErrorCode::InvalidArgument, "search needs between one and three free parameters");
  }
  Hyperparameters theta = spec.base;
  if (theta.gates.empty()) {
    for (const auto& g : arch.gates) theta[g.label] = GateParams{spec.variance_floor, 0.0, 0.0, 0.0};
  }
  validate_theta(theta, arch);
  std::vector<ParamRef> refs;
  for (const auto& f : spec.free) refs.push_back(ParamRef::parse(f));

  int evals = 0;
  double current = safe_objective(arch, theta, spec);
  ++evals;
  for (int sweep = 0; sweep < spec.max_sweeps; ++sweep) {
    const double before = current;
    for (const auto& ref : refs) {
      const bool is_mean = ref.field == "mu";
      const double lo = is_mean ? spec.mu_lo : spec.var_lo, hi = is_mean ? spec.mu_hi : spec.var_hi;
      auto f = [&](double x) {
        Hyperparameters t = theta;
        ref.in(t) = x;
        return safe_objective(arch, t, spec);
      };
      const double x = golden_section(f, lo, hi, spec.tol, evals);
      const double fx = f(x);
      ++evals;
      if (fx <= current) {
        ref.in(theta) = x;
        current = fx;
      }
    }
    if (refs.size() == 1 || !(before - current > spec.tol * std::max(1.0, current))) break;
  }

  std::optional<CriticalPoint> best;
  try {
    best = evaluate(arch, theta, spec);
    best->origin = "search";
  } catch (const Error&) {
  }
  if (spec.include_preset && arch.has_gate("f")) {
    try {
      CriticalPoint p = evaluate(arch, preset_init("peephole_critical", arch).theta, spec);
      p.origin = "preset:peephole_critical";
      if (!best || p.objective < best->objective) best = std::move(p);
    } catch (const Error&) {
    }
  }
  if (!best || !std::isfinite(best->objective)) {
    throw SearchFailedError("no finite objective value was reached", std::move(best));
  }
  best->evaluations = evals;
  if (spec.target_xi && best->objective > 1e-3 * std::max(1.0, *spec.target_xi)) {
    throw SearchFailedError("target timescale not reached (|xi - target| = " + std::to_string(best->objective) + ")",
                            std::move(best));
  }
  return *best;
}

Hyperparameters mu_f_direction(const ArchitectureSpec& arch) {
  Hyperparameters d;
  for (const auto& g : arch.gates) d[g.label] = GateParams{};
  d["f"].mu = 1.0;
  return d;
}

Hyperparameters offset_theta(const Hyperparameters& theta0, const Hyperparameters& direction, double alpha) {
  Hyperparameters t = theta0;
  for (const auto& [label, d] : direction.gates) {
    auto it = t.gates.find(label);
    if (it == t.gates.end()) throw Error(ErrorCode::UnknownGate, "direction names unknown gate '" + label + "'");
    it->second.sigma2 += alpha * d.sigma2;
    it->second.nu2 += alpha * d.nu2;
    it->second.rho2 += alpha * d.rho2;
    it->second.mu += alpha * d.mu;
  }
  return t;
}

std::vector<SweepRow> sweep_phase_diagram(const ArchitectureSpec& arch, const Hyperparameters& theta0,
                                          const Hyperparameters& direction, std::span<const double> alphas,
                                          const SweepOptions& opts) {
  validate_theta(theta0, arch);
  std::vector<SweepRow> rows(alphas.size());
  parallel_for(alphas.size(), opts.workers, [&](std::size_t j) {
    SweepRow& row = rows[j];
    row.alpha = alphas[j];
    const Hyperparameters theta = offset_theta(theta0, direction, row.alpha);
    for (const auto& [label, g] : theta.gates) {
      if (g.sigma2 < 0.0 || g.nu2 < 0.0 || g.rho2 < 0.0) {
        row.status = to_string(ErrorCode::InvalidTheta);
        row.message = "gate '" + label + "' has a negative variance at this alpha";
        row.chi = row.xi = row.m1 = row.m2 = row.sigma = std::numeric_limits<double>::quiet_NaN();
        return;
      }
    }
    SolveOptions so = opts.solve;
    so.cell.seed = derive_seed(opts.seed, j);
    try {
      const FixedPointReport fp = analyze_fixed_point(theta, arch, opts.inputs, 1.0, so);
      const JacobianMoments jm = jacobian_moments(theta, arch, opts.inputs, fp, so);
      row.chi = fp.chi;
      row.xi = fp.xi;
      row.m1 = jm.m1;
      row.m2 = jm.m2;
      row.sigma = jm.sigma;
    } catch (const Error& e) {
      row.status = to_string(e.code());
      row.message = e.what();
      row.chi = row.xi = row.m1 = row.m2 = row.sigma = std::numeric_limits<double>::quiet_NaN();
    }
  });
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) { return a.alpha < b.alpha; });
  return rows;
}

}  // namespace mfrnn
