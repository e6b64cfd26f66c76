#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfrnn {

enum class ErrorCode {
  MissingGate,
  NegativeVariance,
  UnknownGate,
  UnknownArchitecture,
  InvalidArgument,
  ParseError,
  NonFiniteIntegrand,
  DegenerateCorrelation,
  MissingCellEnsemble,
  NonFiniteSample,
  NoConvergence,
  DerivativeUnstable,
  UnknownPreset,
  SearchFailed,
  InvalidTheta,
  NonFiniteState,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

enum class GateForm { linear, gated };

/// Distribution parameters of one gate: W ~ N(0, sigma2/N), U ~ N(0, nu2/N),
/// b ~ N(mu, rho2).
struct GateParams {
  double sigma2 = 0.0;
  double nu2 = 0.0;
  double rho2 = 0.0;
  double mu = 0.0;

  bool operator==(const GateParams&) const = default;
};

struct Hyperparameters {
  std::map<std::string, GateParams> gates;

  const GateParams& at(const std::string& label) const;
  GateParams& operator[](const std::string& label) { return gates[label]; }
  bool operator==(const Hyperparameters&) const = default;
};

/// Input covariance R * [[1, sigma_z], [sigma_z, 1]].
struct InputStats {
  double R = 1.0;
  double sigma_z = 1.0;

  void validate() const;
};

struct MomentState {
  double mu = 0.0;
  double q = 0.0;
  double c = 1.0;

  double sigma2() const { return q - mu * mu; }
};

struct SimulationConfig {
  int N = 256;
  int T = 100;
  double init_mean = 0.0;
  double init_var = 0.0;
  std::uint64_t seed = 0;

  void validate() const;
};

}  // namespace mfrnn
