#include "mfrnn/cell_sampler.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "mfrnn/moment_maps.hpp"
#include "mfrnn/rng.hpp"
#include "mfrnn/symbolic.hpp"

namespace mfrnn {

namespace {

constexpr double kDivergence = 1e12;

struct CellDrivers {
  GateStats i, f, r;
  double sd_i, sd_f, sd_r;
  double rho_i, rho_f, rho_r;    // pair correlation
  double perp_i, perp_f, perp_r;  // sqrt(1 - rho^2)
  bool same_i, same_f, same_r;    // collapsed branch

  explicit CellDrivers(const PreActivationStats& stats)
      : i(stats.at("i")), f(stats.at("f")), r(stats.at("r")) {
    setup(i, sd_i, rho_i, perp_i, same_i);
    setup(f, sd_f, rho_f, perp_f, same_f);
    setup(r, sd_r, rho_r, perp_r, same_r);
  }

  static void setup(const GateStats& g, double& sd, double& rho, double& perp, bool& same) {
    sd = std::sqrt(std::max(0.0, g.sigma2));
    rho = g.degenerate() ? 1.0 : g.c;
    same = rho >= kCollapseCorrelation;
    perp = std::sqrt((1.0 - rho) * (1.0 + rho));
  }
};

void check_cell(double c, std::uint64_t hash) {
  if (!std::isfinite(c) || std::abs(c) > kDivergence) {
    std::ostringstream os;
    os << "cell state diverged (|c| > 1e12) for theta hash " << std::hex << hash;
    throw Error(ErrorCode::NonFiniteSample, os.str());
  }
}

inline double draw(Normal& n, double mu, double sd) { return mu + sd * n(); }

// One update of a single chain.
inline double step_single(double c, const CellDrivers& d, Normal& n) {
  const double ui = draw(n, d.i.mu, d.sd_i);
  const double uf = draw(n, d.f.mu, d.sd_f);
  const double ur = draw(n, d.r.mu, d.sd_r);
  return sigmoid(uf) * c + sigmoid(ui) * std::tanh(ur);
}

inline void draw_pair(Normal& n, double mu, double sd, double rho, double perp, bool same, double& a, double& b) {
  const double za = n();
  const double zb = n();
  a = mu + sd * za;
  b = same ? a : mu + sd * (rho * za + perp * zb);
}

inline void step_pair(double& ca, double& cb, const CellDrivers& d, Normal& n) {
  double ia, ib, fa, fb, ra, rb;
  draw_pair(n, d.i.mu, d.sd_i, d.rho_i, d.perp_i, d.same_i, ia, ib);
  draw_pair(n, d.f.mu, d.sd_f, d.rho_f, d.perp_f, d.same_f, fa, fb);
  draw_pair(n, d.r.mu, d.sd_r, d.rho_r, d.perp_r, d.same_r, ra, rb);
  ca = sigmoid(fa) * ca + sigmoid(ia) * std::tanh(ra);
  cb = sigmoid(fb) * cb + sigmoid(ib) * std::tanh(rb);
}

void check_args(int n_s, int n_iters) {
  if (n_s < 1) throw Error(ErrorCode::InvalidArgument, "n_s must be >= 1");
  if (n_iters < 0) throw Error(ErrorCode::InvalidArgument, "n_iters must be >= 0");
}

}  // namespace

std::uint64_t theta_hash(const Hyperparameters& theta) {
  std::uint64_t h = 0x84222325cbf29ce4ULL;
  auto mix = [&h](std::uint64_t v) { h = splitmix64(h ^ v); };
  for (const auto& [label, p] : theta.gates) {
    for (char ch : label) mix(static_cast<unsigned char>(ch));
    for (double v : {p.sigma2, p.nu2, p.rho2, p.mu}) {
      std::uint64_t bits;
      static_assert(sizeof(bits) == sizeof(v));
      std::memcpy(&bits, &v, sizeof v);
      mix(bits);
    }
  }
  return h;
}

CellStateEnsemble sample_cell_distribution(const Hyperparameters& theta, const PreActivationStats& stats, int n_s,
                                           int n_iters, std::uint64_t seed) {
  check_args(n_s, n_iters);
  const CellDrivers d(stats);
  CellStateEnsemble out{std::vector<double>(n_s, 0.0), {}, n_s, n_iters, seed, theta_hash(theta)};
  for (int j = 0; j < n_s; ++j) {
    Engine eng = make_engine(seed, static_cast<std::uint64_t>(j));
    Normal n(eng);
    double c = 0.0;
    for (int it = 0; it < n_iters; ++it) {
      c = step_single(c, d, n);
      check_cell(c, out.theta_hash);
    }
    out.samples[j] = c;
  }
  return out;
}

CellStateEnsemble correlated_cell_pairs(const Hyperparameters& theta, const PreActivationStats& stats, int n_s,
                                        int n_iters, std::uint64_t seed) {
  check_args(n_s, n_iters);
  const CellDrivers d(stats);
  CellStateEnsemble out{std::vector<double>(n_s, 0.0), std::vector<double>(n_s, 0.0), n_s, n_iters, seed,
                        theta_hash(theta)};
  for (int j = 0; j < n_s; ++j) {
    Engine eng = make_engine(seed, static_cast<std::uint64_t>(j));
    Normal n(eng);
    double ca = 0.0, cb = 0.0;
    for (int it = 0; it < n_iters; ++it) {
      step_pair(ca, cb, d, n);
      check_cell(ca, out.theta_hash);
      check_cell(cb, out.theta_hash);
    }
    out.samples[j] = ca;
    out.samples_b[j] = cb;
  }
  return out;
}

void advance_cells(CellStateEnsemble& cells, const PreActivationStats& stats, std::uint64_t seed) {
  const CellDrivers d(stats);
  for (std::size_t j = 0; j < cells.samples.size(); ++j) {
    Engine eng = make_engine(seed, j);
    Normal n(eng);
    if (cells.paired()) {
      step_pair(cells.samples[j], cells.samples_b[j], d, n);
      check_cell(cells.samples_b[j], cells.theta_hash);
    } else {
      cells.samples[j] = step_single(cells.samples[j], d, n);
    }
    check_cell(cells.samples[j], cells.theta_hash);
  }
  cells.n_iters += 1;
}

}  // namespace mfrnn
