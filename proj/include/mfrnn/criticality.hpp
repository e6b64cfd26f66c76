#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mfrnn/architecture.hpp"
#include "mfrnn/core.hpp"
#include "mfrnn/fixed_point.hpp"
#include "mfrnn/jacobian.hpp"

namespace mfrnn {

struct Preset {
  std::string name;
  std::string arch;
  Hyperparameters theta;
  /// Widths used by the standard preset (0 otherwise).
  int N = 0;
  int input_dim = 0;
  /// Per-entry weight variances of the standard preset.
  double recurrent_entry_var = 0.0;
  double input_entry_var = 0.0;
};

std::vector<std::string> preset_names();
/// Architecture a preset is written for when none is given.
std::string preset_default_arch(std::string_view name);

/// input_dim = 0 means input_dim = N.
Preset preset_init(std::string_view name, const ArchitectureSpec& arch, int N = 256, int input_dim = 0);

/// Hyperparameter coordinate such as "f.mu" or "i.sigma2".
struct ParamRef {
  std::string gate;
  std::string field;

  static ParamRef parse(std::string_view text);
  double& in(Hyperparameters& theta) const;
  double get(const Hyperparameters& theta) const;
  std::string str() const { return gate + "." + field; }
};

struct SearchSpec {
  /// Values of every coordinate that is not searched. Empty means the
  /// zero-variance family: all sigma2 at variance_floor, everything else 0.
  Hyperparameters base;
  double variance_floor = 1e-5;
  std::vector<std::string> free{"f.mu"};
  std::optional<double> target_xi;
  double mu_lo = -10.0, mu_hi = 15.0;
  double var_lo = 0.0, var_hi = 4.0;
  int max_sweeps = 20;
  double tol = 1e-9;
  /// Also evaluate the peephole_critical preset as a candidate.
  bool include_preset = true;
  InputStats inputs{1.0, 1.0};
  SolveOptions solve{};
};

struct CriticalPoint {
  Hyperparameters theta;
  FixedPointReport fixed;
  JacobianMoments moments;
  IsometryGap gap;
  /// |xi - target| or the gap norm.
  double objective = 0.0;
  int evaluations = 0;
  std::string origin;
};

class SearchFailedError : public Error {
 public:
  SearchFailedError(const std::string& what, std::optional<CriticalPoint> best);
  const std::optional<CriticalPoint>& best() const { return best_; }

 private:
  std::optional<CriticalPoint> best_;
};

/// Golden-section search for one free coordinate, coordinate descent for up
/// to three. The returned point is re-evaluated after the search.
CriticalPoint search_critical(const ArchitectureSpec& arch, const SearchSpec& spec);

struct SweepRow {
  double alpha = 0.0;
  double chi = 0.0;
  double xi = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double sigma = 0.0;
  /// "ok" or an error code name.
  std::string status = "ok";
  std::string message;
};

struct SweepOptions {
  InputStats inputs{1.0, 1.0};
  SolveOptions solve{};
  int workers = 1;
  std::uint64_t seed = 0;
};

/// theta0 + alpha * direction for every alpha; failures are recorded per row.
/// Rows are sorted by alpha.
std::vector<SweepRow> sweep_phase_diagram(const ArchitectureSpec& arch, const Hyperparameters& theta0,
                                          const Hyperparameters& direction, std::span<const double> alphas,
                                          const SweepOptions& opts = {});

/// Direction that moves only the forget-gate bias mean.
Hyperparameters mu_f_direction(const ArchitectureSpec& arch);

/// theta0 + alpha * direction, coordinate-wise (direction may omit gates).
Hyperparameters offset_theta(const Hyperparameters& theta0, const Hyperparameters& direction, double alpha);

}  // namespace mfrnn
