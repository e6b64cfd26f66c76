#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfrnn/architecture.hpp"
#include "mfrnn/criticality.hpp"
#include "mfrnn/diagnostics.hpp"
#include "mfrnn/fixed_point.hpp"
#include "mfrnn/io.hpp"
#include "mfrnn/jacobian.hpp"
#include "mfrnn/moment_maps.hpp"
#include "mfrnn/parallel.hpp"
#include "mfrnn/rng.hpp"
#include "mfrnn/simulator.hpp"
#include "mfrnn/verify.hpp"

using namespace mfrnn;

namespace {

struct Options {
  std::string arch;
  std::string theta;
  std::string inputs_file;
  double sigma_z = 1.0;
  double R = 1.0;
  int order = kDefaultOrder;
  double tol = 1e-9;
  int n_s = 200;
  int n_iters = 200;
  std::uint64_t seed = 0;
  std::vector<CLI::Option*> seed_opts;
  bool seed_resolved = false;
  int workers = 1;
  std::string out = "-";
  double c0 = 0.0;
  // jacobian
  double threshold = kIsometryThreshold;
  std::string m2_rule = "documented";
  // critical-init
  std::string preset;
  bool search = false;
  double target_xi = 0.0;
  CLI::Option* target_opt = nullptr;
  std::vector<std::string> free{"f.mu"};
  std::string base;
  std::string report;
  int N = 256;
  int input_dim = 0;
  // sweep
  std::string theta0;
  std::string direction;
  std::string alphas;
  // simulate / spectrum / cell-dist
  int T = 100;
  bool tied = false;
  std::string schedule;
  int replicas = 1;
  std::string backend = "projected";
  double init_mean = 0.0;
  double init_var = 0.0;
  bool no_theory = false;
  int burn_in = 100;
  bool fd_check = false;
  std::string summary;
  bool simulate = false;
};

/// Input-side failures exit with 2, numerical failures with 1.
bool usage_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::MissingGate:
    case ErrorCode::NegativeVariance:
    case ErrorCode::UnknownGate:
    case ErrorCode::UnknownArchitecture:
    case ErrorCode::InvalidArgument:
    case ErrorCode::ParseError:
    case ErrorCode::UnknownPreset:
    case ErrorCode::InvalidTheta:
      return true;
    default:
      return false;
  }
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_) throw Error(ErrorCode::InvalidArgument, "cannot write '" + path + "'");
    }
  }
  std::ostream& stream() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

void write_json(const Json& j, const std::string& path) {
  Output out(path);
  out.stream() << j.dump(2) << '\n';
}

std::uint64_t resolve_seed(Options& o) {
  if (o.seed_resolved) return o.seed;
  o.seed_resolved = true;
  for (const auto* opt : o.seed_opts) {
    if (opt->count()) return o.seed;
  }
  o.seed = random_seed();
  std::fprintf(stderr, "seed: %llu\n", static_cast<unsigned long long>(o.seed));
  return o.seed;
}

InputStats resolve_inputs(const Options& o) {
  if (!o.inputs_file.empty()) return inputs_from_json(load_json(o.inputs_file));
  InputStats s{o.R, o.sigma_z};
  s.validate();
  return s;
}

SolveOptions solve_options(Options& o) {
  SolveOptions so;
  so.tol = o.tol;
  so.num.quad_order = o.order;
  so.cell.n_s = o.n_s;
  so.cell.n_iters = o.n_iters;
  so.cell.seed = resolve_seed(o);
  return so;
}

struct Loaded {
  Hyperparameters theta;
  const ArchitectureSpec* arch;
};

Loaded load(const Options& o, const std::string& path) {
  const ThetaDocument doc = load_theta(path);
  return {doc.theta, &resolve_arch(doc, o.arch)};
}

std::vector<double> parse_alphas(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
  if (parts.size() != 3) throw Error(ErrorCode::InvalidArgument, "--alphas expects a:b:n");
  double a = 0.0, b = 0.0;
  long n = 0;
  try {
    std::size_t ia = 0, ib = 0, in = 0;
    a = std::stod(parts[0], &ia);
    b = std::stod(parts[1], &ib);
    n = std::stol(parts[2], &in);
    if (ia != parts[0].size() || ib != parts[1].size() || in != parts[2].size()) throw std::invalid_argument("");
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::InvalidArgument, "--alphas expects a:b:n, got '" + text + "'");
  }
  if (n < 1) throw Error(ErrorCode::InvalidArgument, "--alphas needs n >= 1");
  std::vector<double> out(n);
  for (long j = 0; j < n; ++j) out[j] = n == 1 ? a : a + (b - a) * static_cast<double>(j) / static_cast<double>(n - 1);
  return out;
}

Backend parse_backend(const std::string& s) { return s == "dense" ? Backend::dense : Backend::projected; }

void warn_clamps() {
  if (const auto n = sigma_clamp_count()) std::fprintf(stderr, "warning: negative sigma clamped to 0 (%zu times)\n", n);
  if (const auto n = atanh_clamp_count()) std::fprintf(stderr, "warning: atanh argument clamped (%zu times)\n", n);
}

// ---- subcommands ----

int run_fixed_point(Options& o, bool timescale_view) {
  const Loaded in = load(o, o.theta);
  const InputStats inputs = resolve_inputs(o);
  const FixedPointReport r = analyze_fixed_point(in.theta, *in.arch, inputs, o.c0, solve_options(o));
  if (timescale_view) {
    write_json({{"xi", number(r.xi)}, {"chi", number(r.chi)}, {"stable", r.stable()}, {"report", to_json(r)}}, o.out);
  } else {
    write_json(to_json(r), o.out);
  }
  return 0;
}

int run_jacobian(Options& o) {
  const Loaded in = load(o, o.theta);
  const InputStats inputs = resolve_inputs(o);
  const SolveOptions so = solve_options(o);
  const FixedPointReport fp = analyze_fixed_point(in.theta, *in.arch, inputs, 1.0, so);
  const auto rule = o.m2_rule == "free" ? SecondMomentRule::free : SecondMomentRule::documented;
  const JacobianMoments jm = jacobian_moments(in.theta, *in.arch, inputs, fp, so, rule);
  write_json(to_json(jm, isometry_gap(jm, fp.chi, o.threshold), fp), o.out);
  warn_clamps();
  return 0;
}

int run_critical_init(Options& o) {
  if (!o.preset.empty()) {
    const std::string arch_name = o.arch.empty() ? preset_default_arch(o.preset) : o.arch;
    const Preset p = preset_init(o.preset, architecture(arch_name), o.N, o.input_dim);
    write_json(theta_to_json(p.theta, p.arch), o.out);
    if (!o.report.empty()) write_json(preset_meta(p), o.report);
    return 0;
  }
  if (o.arch.empty()) throw Error(ErrorCode::InvalidArgument, "--search needs --arch");
  const ArchitectureSpec& arch = architecture(o.arch);
  SearchSpec spec;
  spec.free = o.free;
  if (o.target_opt->count()) spec.target_xi = o.target_xi;
  if (!o.base.empty()) spec.base = load(o, o.base).theta;
  spec.inputs = resolve_inputs(o);
  spec.solve = solve_options(o);
  try {
    const CriticalPoint p = search_critical(arch, spec);
    write_json(theta_to_json(p.theta, arch.name), o.out);
    if (!o.report.empty()) write_json(search_meta(p), o.report);
  } catch (const SearchFailedError& e) {
    Json err = error_json(e);
    if (e.best()) {
      err["best"] = search_meta(*e.best());
      err["best"]["theta"] = theta_to_json(e.best()->theta, arch.name);
    }
    std::cerr << err.dump() << '\n';
    return 1;
  }
  return 0;
}

int run_sweep(Options& o) {
  const Loaded in = load(o, o.theta0);
  Hyperparameters direction = mu_f_direction(*in.arch);
  if (!o.direction.empty()) {
    const ThetaDocument d = load_theta(o.direction, true);
    if (!d.arch.empty() && d.arch != in.arch->name) {
      throw Error(ErrorCode::InvalidArgument, "direction file is for '" + d.arch + "'");
    }
    direction = d.theta;
  }
  const std::vector<double> alphas = parse_alphas(o.alphas);
  SweepOptions so;
  so.inputs = resolve_inputs(o);
  so.solve = solve_options(o);
  so.seed = so.solve.cell.seed;
  so.workers = o.workers;
  const auto rows = sweep_phase_diagram(*in.arch, in.theta, direction, alphas, so);
  Output out(o.out);
  CsvWriter csv(out.stream(), {"alpha", "chi", "xi", "3xi", "6xi", "m1", "m2", "sigma", "status"});
  for (const auto& r : rows) {
    csv << r.alpha << r.chi << r.xi << 3.0 * r.xi << 6.0 * r.xi << r.m1 << r.m2 << r.sigma << r.status;
    csv.end_row();
    if (!r.message.empty()) std::fprintf(stderr, "alpha=%s: %s\n", format_double(r.alpha).c_str(), r.message.c_str());
  }
  return 0;
}

int run_simulate(Options& o) {
  const Loaded in = load(o, o.theta);
  std::vector<InputStats> schedule;
  if (!o.schedule.empty()) {
    schedule = load_schedule(o.schedule, o.R);
  } else {
    schedule.push_back(resolve_inputs(o));
  }
  SimulationConfig cfg;
  cfg.N = o.N;
  cfg.T = o.T;
  cfg.init_mean = o.init_mean;
  cfg.init_var = o.init_var;
  cfg.seed = resolve_seed(o);
  PairOptions po;
  po.tied = o.tied;
  po.backend = parse_backend(o.backend);
  po.replicas = o.replicas;
  po.workers = o.workers;
  const auto sim = simulate_pair(in.theta, *in.arch, cfg, schedule, po);
  std::vector<MomentState> mf;
  if (!o.no_theory) {
    const MomentState init{o.init_mean, o.init_var + o.init_mean * o.init_mean, 1.0};
    mf = mean_field_trajectory(in.theta, *in.arch, init, schedule, o.T,
                               CellSampling{o.n_s, o.n_iters, derive_seed(cfg.seed, 0x7e0)}, Numerics{o.order});
  }
  Output out(o.out);
  std::vector<std::string> header{"t", "sigma_z", "mu", "q", "c", "se_mu", "se_q", "se_c"};
  if (!o.no_theory) header.insert(header.end(), {"mf_mu", "mf_q", "mf_c"});
  CsvWriter csv(out.stream(), header);
  for (int t = 0; t <= o.T; ++t) {
    // Step t is driven by schedule entry t - 1; t = 0 is the initial state.
    const double sz = t == 0 ? std::nan("") : schedule[schedule.size() == 1 ? 0 : t - 1].sigma_z;
    const EmpiricalStep& s = sim[t];
    csv << t << sz << s.mu << s.q << s.c << s.se_mu << s.se_q << s.se_c;
    if (!o.no_theory) csv << mf[t].mu << mf[t].q << mf[t].c;
    csv.end_row();
  }
  warn_clamps();
  return 0;
}

int run_spectrum(Options& o) {
  const Loaded in = load(o, o.theta);
  const InputStats inputs = resolve_inputs(o);
  SimulationConfig cfg;
  cfg.N = o.N;
  cfg.seed = resolve_seed(o);
  JacobianOptions jo;
  jo.burn_in = o.burn_in;
  jo.check_finite_difference = o.fd_check;
  const JacobianSample js = build_jacobian(in.theta, *in.arch, cfg, inputs, jo);

  SolveOptions so = solve_options(o);
  so.cell.seed = derive_seed(cfg.seed, 0x5be);
  const FixedPointReport fp = analyze_fixed_point(in.theta, *in.arch, inputs, 1.0, so);
  const JacobianMoments jm = jacobian_moments(in.theta, *in.arch, inputs, fp, so);

  Output out(o.out);
  CsvWriter csv(out.stream(), {"index", "squared_singular_value"});
  for (std::size_t i = 0; i < js.spectrum.values.size(); ++i) {
    csv << static_cast<long long>(i) << js.spectrum.values[i];
    csv.end_row();
  }
  Json summary = {
      {"N", o.N},
      {"seed", o.seed},
      {"empirical_mean", number(js.spectrum.mean)},
      {"empirical_variance", number(js.spectrum.variance)},
      {"m1", number(jm.m1)},
      {"m2", number(jm.m2)},
      {"sigma", number(jm.sigma)},
      {"mean_relative_error", number(js.spectrum.mean / jm.m1 - 1.0)},
      {"variance_relative_error", number(js.spectrum.variance / jm.sigma - 1.0)},
      {"fd_max_relative_error", number(o.fd_check ? js.fd_max_relative_error : std::nan(""))},
  };
  if (o.summary.empty()) {
    std::cerr << summary.dump(2) << '\n';
  } else {
    write_json(summary, o.summary);
  }
  warn_clamps();
  return 0;
}

int run_cell_dist(Options& o) {
  if (o.arch.empty()) o.arch = "LSTM";
  const Loaded in = load(o, o.theta);
  if (!in.arch->sampled_cell) throw Error(ErrorCode::InvalidArgument, "cell-dist needs an architecture with a sampled cell (LSTM)");
  const InputStats inputs = resolve_inputs(o);
  SolveOptions so = solve_options(o);
  const std::uint64_t seed = so.cell.seed;
  so.cell.seed = derive_seed(seed, 0);
  const MomentFixedPoint fixed = solve_moments(in.theta, *in.arch, inputs, so);
  const PreActivationStats stats = preactivation_stats(in.theta, *in.arch, fixed.state, inputs, so.num);
  const CellStateEnsemble ens = sample_cell_distribution(in.theta, stats, o.n_s, o.n_iters, derive_seed(seed, 1));
  Output out(o.out);
  if (!o.simulate) {
    CsvWriter csv(out.stream(), {"value"});
    for (double x : ens.samples) {
      csv << x;
      csv.end_row();
    }
    return 0;
  }
  SimulationConfig cfg;
  cfg.N = o.N;
  cfg.T = o.T;
  cfg.seed = derive_seed(seed, 2);
  const auto sim = simulate_cell_distribution(in.theta, *in.arch, cfg, inputs);
  CsvWriter csv(out.stream(), {"source", "value"});
  for (double x : ens.samples) {
    csv << std::string("ensemble") << x;
    csv.end_row();
  }
  for (double x : sim) {
    csv << std::string("simulation") << x;
    csv.end_row();
  }
  return 0;
}

int run_verify(Options& o) {
  const auto rows = run_property_suite(resolve_seed(o));
  bool all = true;
  std::printf("%-26s %-6s %9s  %s\n", "property", "result", "seconds", "detail");
  for (const auto& r : rows) {
    all = all && r.passed;
    std::printf("%-26s %-6s %9.2f  %s\n", r.name.c_str(), r.passed ? "PASS" : "FAIL", r.seconds, r.detail.c_str());
  }
  return all ? 0 : 1;
}

// ---- option groups ----

void add_theta(CLI::App* c, Options& o, bool required = true) {
  c->add_option("--arch", o.arch, "Architecture")->check(CLI::IsMember(architecture_names()));
  auto* t = c->add_option("--theta", o.theta, "Theta JSON file")->check(CLI::ExistingFile);
  if (required) t->required();
}

void add_inputs(CLI::App* c, Options& o) {
  c->add_option("--sigma-z", o.sigma_z, "Input correlation between the two copies")->check(CLI::Range(-1.0, 1.0));
  c->add_option("--R", o.R, "Input second moment")->check(CLI::NonNegativeNumber);
  c->add_option("--inputs", o.inputs_file, "JSON file {\"R\": .., \"sigma_z\": ..}")->check(CLI::ExistingFile);
}

void add_numerics(CLI::App* c, Options& o) {
  c->add_option("--quad-order", o.order, "Quadrature base resolution")->check(CLI::Range(8, 4096));
  c->add_option("--tol", o.tol, "Fixed-point tolerance")->check(CLI::PositiveNumber);
  c->add_option("--n-s", o.n_s, "Cell samples (LSTM)")->check(CLI::PositiveNumber);
  c->add_option("--n-iters", o.n_iters, "Cell iterations per sample (LSTM)")->check(CLI::PositiveNumber);
}

void add_seed(CLI::App* c, Options& o) {
  o.seed_opts.push_back(c->add_option("--seed", o.seed, "Root seed (random and printed to stderr when omitted)"));
}

void add_out(CLI::App* c, Options& o) { c->add_option("-o,--out", o.out, "Output file ('-' for stdout)"); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field signal propagation for gated recurrent networks"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  o.workers = default_workers();
  app.add_option("--workers", o.workers, "Parallel workers (default: all cores)")
      ->envname("MFRNN_WORKERS")
      ->check(CLI::PositiveNumber);

  auto* fp = app.add_subcommand("fixed-point", "Moment and correlation fixed point with chi and xi");
  auto* ts = app.add_subcommand("timescale", "Signal-propagation timescale xi at the fixed point");
  for (auto* c : {fp, ts}) {
    add_theta(c, o);
    add_inputs(c, o);
    add_numerics(c, o);
    add_seed(c, o);
    add_out(c, o);
    c->add_option("--c0", o.c0, "Starting correlation")->check(CLI::Range(-1.0, 1.0));
  }

  auto* jac = app.add_subcommand("jacobian", "Squared-singular-value moments of the state-to-state Jacobian");
  add_theta(jac, o);
  add_inputs(jac, o);
  add_numerics(jac, o);
  add_seed(jac, o);
  add_out(jac, o);
  jac->add_option("--threshold", o.threshold, "Isometry residual threshold")->check(CLI::PositiveNumber);
  jac->add_option("--m2-rule", o.m2_rule, "documented | free")->check(CLI::IsMember({"documented", "free"}));

  auto* ci = app.add_subcommand("critical-init", "Critical initialisation from a preset or a search");
  auto* preset = ci->add_option("--preset", o.preset, "Preset name")->check(CLI::IsMember(preset_names()));
  auto* search = ci->add_flag("--search", o.search, "Search for a critical point");
  preset->excludes(search);
  ci->add_option("--arch", o.arch, "Architecture")->check(CLI::IsMember(architecture_names()));
  o.target_opt = ci->add_option("--target-xi", o.target_xi, "Target timescale instead of the isometry residual")
                     ->check(CLI::PositiveNumber);
  ci->add_option("--free", o.free, "Free coordinates, e.g. f.mu i.sigma2 (at most three)");
  ci->add_option("--base", o.base, "Theta JSON with the fixed coordinates")->check(CLI::ExistingFile);
  ci->add_option("--N", o.N, "Width for the standard preset")->check(CLI::PositiveNumber);
  ci->add_option("--input-dim", o.input_dim, "Input width for the standard preset (default N)");
  ci->add_option("--report", o.report, "Write preset metadata or search diagnostics to this JSON file");
  add_inputs(ci, o);
  add_numerics(ci, o);
  add_seed(ci, o);
  add_out(ci, o);

  auto* sw = app.add_subcommand("sweep", "Phase diagram along theta0 + alpha * direction");
  sw->add_option("--arch", o.arch, "Architecture")->check(CLI::IsMember(architecture_names()));
  sw->add_option("--theta0", o.theta0, "Base Theta JSON")->required()->check(CLI::ExistingFile);
  sw->add_option("--direction", o.direction, "Direction JSON (fields default to 0; default: forget-gate bias mean)")
      ->check(CLI::ExistingFile);
  sw->add_option("--alphas", o.alphas, "Grid a:b:n (n points, inclusive)")->required();
  add_inputs(sw, o);
  add_numerics(sw, o);
  add_seed(sw, o);
  add_out(sw, o);

  auto* sim = app.add_subcommand("simulate", "Finite-width two-copy simulation with mean-field prediction");
  add_theta(sim, o);
  add_inputs(sim, o);
  add_numerics(sim, o);
  add_seed(sim, o);
  add_out(sim, o);
  sim->add_option("--N", o.N, "Width")->check(CLI::Range(1, 2048));
  sim->add_option("--T", o.T, "Steps")->check(CLI::NonNegativeNumber);
  sim->add_flag("--tied", o.tied, "Reuse one weight draw for every step");
  sim->add_option("--sigma-z-schedule", o.schedule, "File with one sigma_z per step")->check(CLI::ExistingFile);
  sim->add_option("--replicas", o.replicas, "Independent replicas")->check(CLI::PositiveNumber);
  sim->add_option("--backend", o.backend, "projected | dense")->check(CLI::IsMember({"projected", "dense"}));
  sim->add_option("--init-mean", o.init_mean, "Mean of the initial state");
  sim->add_option("--init-var", o.init_var, "Variance of the initial state")->check(CLI::NonNegativeNumber);
  sim->add_flag("--no-theory", o.no_theory, "Skip the mean-field columns");

  auto* sp = app.add_subcommand("spectrum", "Empirical Jacobian spectrum against the predicted moments");
  add_theta(sp, o);
  add_inputs(sp, o);
  add_numerics(sp, o);
  add_seed(sp, o);
  add_out(sp, o);
  sp->add_option("--N", o.N, "Width")->check(CLI::Range(1, 2048));
  sp->add_option("--burn-in", o.burn_in, "Steps before the Jacobian step")->check(CLI::NonNegativeNumber);
  sp->add_flag("--fd-check", o.fd_check, "Also compare against finite differences");
  sp->add_option("--summary", o.summary, "Write the comparison JSON here (default: stderr)");

  auto* cd = app.add_subcommand("cell-dist", "Sampled stationary cell-state distribution (LSTM)");
  add_theta(cd, o);
  add_inputs(cd, o);
  add_numerics(cd, o);
  add_seed(cd, o);
  add_out(cd, o);
  cd->add_flag("--simulate", o.simulate, "Append cells of a simulated untied network");
  cd->add_option("--N", o.N, "Simulated width")->check(CLI::Range(1, 2048));
  cd->add_option("--T", o.T, "Simulated steps")->check(CLI::NonNegativeNumber);

  auto* ver = app.add_subcommand("verify", "Property suite with a pass/fail table");
  add_seed(ver, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }
  if (ci->parsed() && o.preset.empty() && !o.search) {
    std::cerr << "critical-init: give --preset or --search\n";
    return 2;
  }

  try {
    if (fp->parsed()) return run_fixed_point(o, false);
    if (ts->parsed()) return run_fixed_point(o, true);
    if (jac->parsed()) return run_jacobian(o);
    if (ci->parsed()) return run_critical_init(o);
    if (sw->parsed()) return run_sweep(o);
    if (sim->parsed()) return run_simulate(o);
    if (sp->parsed()) return run_spectrum(o);
    if (cd->parsed()) return run_cell_dist(o);
    if (ver->parsed()) return run_verify(o);
  } catch (const Error& e) {
    std::cerr << error_json(e).dump() << '\n';
    return usage_error(e.code()) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << error_json("InternalError", e.what()).dump() << '\n';
    return 1;
  }
  return 2;
}
