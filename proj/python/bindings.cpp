#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "mfrnn/architecture.hpp"
#include "mfrnn/criticality.hpp"
#include "mfrnn/fixed_point.hpp"
#include "mfrnn/io.hpp"
#include "mfrnn/jacobian.hpp"
#include "mfrnn/moment_maps.hpp"
#include "mfrnn/rng.hpp"
#include "mfrnn/simulator.hpp"
#include "mfrnn/stats.hpp"
#include "mfrnn/verify.hpp"

namespace py = pybind11;
using namespace mfrnn;

namespace {

struct Loaded {
  Hyperparameters theta;
  const ArchitectureSpec* arch;
};

Loaded load(const std::string& theta_json, const std::string& arch) {
  const ThetaDocument doc = theta_from_json(Json::parse(theta_json));
  const ArchitectureSpec& spec = resolve_arch(doc, arch);
  return {doc.theta, &spec};
}

InputStats inputs(double R, double sigma_z) {
  InputStats in{R, sigma_z};
  in.validate();
  return in;
}

SolveOptions solve(double tol, int order, int n_s, int n_iters, std::uint64_t seed) {
  SolveOptions so;
  so.tol = tol;
  so.num.quad_order = order;
  so.cell = {n_s, n_iters, seed};
  return so;
}

std::vector<InputStats> schedule_of(const std::vector<double>& sigma_z, double R) {
  if (sigma_z.empty()) throw Error(ErrorCode::InvalidArgument, "sigma_z schedule is empty");
  std::vector<InputStats> s;
  for (double v : sigma_z) s.push_back(inputs(R, v));
  return s;
}

Backend backend_of(const std::string& name) {
  if (name == "dense") return Backend::dense;
  if (name == "projected") return Backend::projected;
  throw Error(ErrorCode::InvalidArgument, "unknown backend '" + name + "'");
}

}  // namespace

PYBIND11_MODULE(_mfrnn, m) {
  m.doc() = "Mean-field signal propagation for gated recurrent networks (native core)";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object cls = py::module_::import("mfrnn._errors").attr("MfrnnError");
      PyErr_SetObject(cls.ptr(), py::make_tuple(to_string(e.code()), e.what()).ptr());
    }
  });

  m.attr("DEFAULT_ORDER") = kDefaultOrder;

  m.def("architectures", &architecture_names);
  m.def("gate_labels", [](const std::string& arch) {
    std::vector<std::string> out;
    for (const auto& g : architecture(arch).gates) out.push_back(g.label);
    return out;
  });
  m.def("preset_names", &preset_names);

  m.def(
      "preset",
      [](const std::string& name, const std::string& arch, int N, int input_dim) {
        const Preset p = preset_init(name, architecture(arch.empty() ? preset_default_arch(name) : arch), N, input_dim);
        return py::make_tuple(theta_to_json(p.theta, p.arch).dump(), preset_meta(p).dump());
      },
      py::arg("name"), py::arg("arch") = "", py::arg("N") = 256, py::arg("input_dim") = 0);

  m.def(
      "fixed_point",
      [](const std::string& theta, const std::string& arch, double R, double sigma_z, double c0, double tol, int order,
         int n_s, int n_iters, std::uint64_t seed) {
        const Loaded in = load(theta, arch);
        py::gil_scoped_release release;
        return to_json(analyze_fixed_point(in.theta, *in.arch, inputs(R, sigma_z), c0,
                                           solve(tol, order, n_s, n_iters, seed)))
            .dump();
      },
      py::arg("theta"), py::arg("arch") = "", py::arg("R") = 1.0, py::arg("sigma_z") = 1.0, py::arg("c0") = 0.5,
      py::arg("tol") = 1e-9, py::arg("order") = kDefaultOrder, py::arg("n_s") = 200, py::arg("n_iters") = 200,
      py::arg("seed") = 0);

  m.def(
      "jacobian",
      [](const std::string& theta, const std::string& arch, double R, double sigma_z, double threshold,
         const std::string& rule, double tol, int order, int n_s, int n_iters, std::uint64_t seed) {
        const Loaded in = load(theta, arch);
        if (rule != "documented" && rule != "free") throw Error(ErrorCode::InvalidArgument, "unknown m2 rule '" + rule + "'");
        py::gil_scoped_release release;
        const InputStats is = inputs(R, sigma_z);
        const SolveOptions so = solve(tol, order, n_s, n_iters, seed);
        const auto fp = analyze_fixed_point(in.theta, *in.arch, is, 1.0, so);
        const auto jm = jacobian_moments(in.theta, *in.arch, is, fp, so,
                                         rule == "free" ? SecondMomentRule::free : SecondMomentRule::documented);
        return to_json(jm, isometry_gap(jm, fp.chi, threshold), fp).dump();
      },
      py::arg("theta"), py::arg("arch") = "", py::arg("R") = 1.0, py::arg("sigma_z") = 1.0,
      py::arg("threshold") = 1e-2, py::arg("rule") = "documented", py::arg("tol") = 1e-9,
      py::arg("order") = kDefaultOrder, py::arg("n_s") = 200, py::arg("n_iters") = 200, py::arg("seed") = 0);

  m.def(
      "search",
      [](const std::string& arch, std::optional<double> target_xi, const std::vector<std::string>& free,
         const std::string& base, double R, double sigma_z, int order, std::uint64_t seed) {
        const ArchitectureSpec& spec_arch = architecture(arch);
        SearchSpec spec;
        spec.target_xi = target_xi;
        spec.free = free;
        if (!base.empty()) spec.base = load(base, arch).theta;
        spec.inputs = inputs(R, sigma_z);
        spec.solve.num.quad_order = order;
        spec.solve.cell.seed = seed;
        std::optional<CriticalPoint> p;
        {
          py::gil_scoped_release release;
          p = search_critical(spec_arch, spec);
        }
        return py::make_tuple(theta_to_json(p->theta, arch).dump(), search_meta(*p).dump());
      },
      py::arg("arch"), py::arg("target_xi") = std::nullopt, py::arg("free") = std::vector<std::string>{"f.mu"},
      py::arg("base") = "", py::arg("R") = 1.0, py::arg("sigma_z") = 1.0, py::arg("order") = kDefaultOrder,
      py::arg("seed") = 0);

  m.def(
      "sweep",
      [](const std::string& theta, const std::string& direction, const std::string& arch,
         const std::vector<double>& alphas, double R, double sigma_z, int order, std::uint64_t seed, int workers) {
        const Loaded in = load(theta, arch);
        const Hyperparameters dir =
            direction.empty() ? mu_f_direction(*in.arch) : theta_from_json(Json::parse(direction), true).theta;
        SweepOptions so;
        so.inputs = inputs(R, sigma_z);
        so.solve.num.quad_order = order;
        so.seed = seed;
        so.workers = workers;
        std::vector<SweepRow> rows;
        {
          py::gil_scoped_release release;
          rows = sweep_phase_diagram(*in.arch, in.theta, dir, alphas, so);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["alpha"] = r.alpha;
          d["chi"] = r.chi;
          d["xi"] = r.xi;
          d["m1"] = r.m1;
          d["m2"] = r.m2;
          d["sigma"] = r.sigma;
          d["status"] = r.status;
          d["message"] = r.message;
          out.append(d);
        }
        return out;
      },
      py::arg("theta"), py::arg("direction") = "", py::arg("arch") = "", py::arg("alphas") = std::vector<double>{},
      py::arg("R") = 1.0, py::arg("sigma_z") = 1.0, py::arg("order") = kDefaultOrder, py::arg("seed") = 0,
      py::arg("workers") = 1);

  m.def(
      "simulate",
      [](const std::string& theta, const std::string& arch, int N, int T, const std::vector<double>& sigma_z, double R,
         std::uint64_t seed, int replicas, bool tied, const std::string& backend, double init_mean, double init_var,
         int workers) {
        const Loaded in = load(theta, arch);
        const auto schedule = schedule_of(sigma_z, R);
        SimulationConfig cfg;
        cfg.N = N;
        cfg.T = T;
        cfg.seed = seed;
        cfg.init_mean = init_mean;
        cfg.init_var = init_var;
        PairOptions po;
        po.tied = tied;
        po.backend = backend_of(backend);
        po.replicas = replicas;
        po.workers = workers;
        std::vector<EmpiricalStep> sim;
        {
          py::gil_scoped_release release;
          sim = simulate_pair(in.theta, *in.arch, cfg, schedule, po);
        }
        std::vector<double> mu, q, c, se_mu, se_q, se_c;
        for (const auto& s : sim) {
          mu.push_back(s.mu);
          q.push_back(s.q);
          c.push_back(s.c);
          se_mu.push_back(s.se_mu);
          se_q.push_back(s.se_q);
          se_c.push_back(s.se_c);
        }
        py::dict d;
        d["mu"] = mu;
        d["q"] = q;
        d["c"] = c;
        d["se_mu"] = se_mu;
        d["se_q"] = se_q;
        d["se_c"] = se_c;
        return d;
      },
      py::arg("theta"), py::arg("arch") = "", py::arg("N") = 256, py::arg("T") = 100,
      py::arg("sigma_z") = std::vector<double>{1.0}, py::arg("R") = 1.0, py::arg("seed") = 0, py::arg("replicas") = 1,
      py::arg("tied") = false, py::arg("backend") = "projected", py::arg("init_mean") = 0.0, py::arg("init_var") = 0.0,
      py::arg("workers") = 1);

  m.def(
      "mean_field",
      [](const std::string& theta, const std::string& arch, int T, const std::vector<double>& sigma_z, double R,
         double init_mean, double init_var, int order, int n_s, int n_iters, std::uint64_t seed) {
        const Loaded in = load(theta, arch);
        const auto schedule = schedule_of(sigma_z, R);
        std::vector<MomentState> mf;
        {
          py::gil_scoped_release release;
          mf = mean_field_trajectory(in.theta, *in.arch, {init_mean, init_var + init_mean * init_mean, 1.0}, schedule,
                                     T, CellSampling{n_s, n_iters, seed}, Numerics{order});
        }
        std::vector<double> mu, q, c;
        for (const auto& s : mf) {
          mu.push_back(s.mu);
          q.push_back(s.q);
          c.push_back(s.c);
        }
        py::dict d;
        d["mu"] = mu;
        d["q"] = q;
        d["c"] = c;
        return d;
      },
      py::arg("theta"), py::arg("arch") = "", py::arg("T") = 100, py::arg("sigma_z") = std::vector<double>{1.0},
      py::arg("R") = 1.0, py::arg("init_mean") = 0.0, py::arg("init_var") = 0.0, py::arg("order") = kDefaultOrder,
      py::arg("n_s") = 200, py::arg("n_iters") = 200, py::arg("seed") = 0);

  m.def(
      "spectrum",
      [](const std::string& theta, const std::string& arch, int N, double R, double sigma_z, std::uint64_t seed,
         int burn_in) {
        const Loaded in = load(theta, arch);
        SimulationConfig cfg;
        cfg.N = N;
        cfg.seed = seed;
        JacobianOptions jo;
        jo.burn_in = burn_in;
        py::gil_scoped_release release;
        return build_jacobian(in.theta, *in.arch, cfg, inputs(R, sigma_z), jo).spectrum.values;
      },
      py::arg("theta"), py::arg("arch") = "", py::arg("N") = 256, py::arg("R") = 1.0, py::arg("sigma_z") = 1.0,
      py::arg("seed") = 0, py::arg("burn_in") = 100);

  m.def(
      "cell_ensemble",
      [](const std::string& theta, const std::string& arch, double R, double sigma_z, int n_s, int n_iters, int order,
         std::uint64_t seed) {
        const Loaded in = load(theta, arch.empty() ? "LSTM" : arch);
        if (!in.arch->sampled_cell) {
          throw Error(ErrorCode::InvalidArgument, "cell ensembles need an architecture with a sampled cell (LSTM)");
        }
        const InputStats is = inputs(R, sigma_z);
        py::gil_scoped_release release;
        SolveOptions so = solve(1e-9, order, n_s, n_iters, derive_seed(seed, 0));
        const auto fixed = solve_moments(in.theta, *in.arch, is, so);
        const auto stats = preactivation_stats(in.theta, *in.arch, fixed.state, is, so.num);
        return sample_cell_distribution(in.theta, stats, n_s, n_iters, derive_seed(seed, 1)).samples;
      },
      py::arg("theta"), py::arg("arch") = "", py::arg("R") = 1.0, py::arg("sigma_z") = 1.0, py::arg("n_s") = 200,
      py::arg("n_iters") = 200, py::arg("order") = kDefaultOrder, py::arg("seed") = 0);

  m.def(
      "simulate_cells",
      [](const std::string& theta, const std::string& arch, int N, int T, double R, double sigma_z,
         std::uint64_t seed) {
        const Loaded in = load(theta, arch);
        SimulationConfig cfg;
        cfg.N = N;
        cfg.T = T;
        cfg.seed = seed;
        py::gil_scoped_release release;
        return simulate_cell_distribution(in.theta, *in.arch, cfg, inputs(R, sigma_z));
      },
      py::arg("theta"), py::arg("arch") = "", py::arg("N") = 200, py::arg("T") = 200, py::arg("R") = 1.0,
      py::arg("sigma_z") = 1.0, py::arg("seed") = 0);

  m.def("ks_distance", [](const std::vector<double>& a, const std::vector<double>& b) { return ks_distance(a, b); });

  m.def(
      "verify",
      [](std::uint64_t seed) {
        std::vector<CheckResult> rows;
        {
          py::gil_scoped_release release;
          rows = run_property_suite(seed);
        }
        py::list out;
        for (const auto& r : rows) {
          py::dict d;
          d["name"] = r.name;
          d["passed"] = r.passed;
          d["worst"] = r.worst;
          d["limit"] = r.limit;
          d["detail"] = r.detail;
          d["seconds"] = r.seconds;
          out.append(d);
        }
        return out;
      },
      py::arg("seed") = 0);
}
