#include "mfrnn/core.hpp"

#include <cmath>

namespace mfrnn {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingGate: return "MissingGate";
    case ErrorCode::NegativeVariance: return "NegativeVariance";
    case ErrorCode::UnknownGate: return "UnknownGate";
    case ErrorCode::UnknownArchitecture: return "UnknownArchitecture";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::NonFiniteIntegrand: return "NonFiniteIntegrand";
    case ErrorCode::DegenerateCorrelation: return "DegenerateCorrelation";
    case ErrorCode::MissingCellEnsemble: return "MissingCellEnsemble";
    case ErrorCode::NonFiniteSample: return "NonFiniteSample";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DerivativeUnstable: return "DerivativeUnstable";
    case ErrorCode::UnknownPreset: return "UnknownPreset";
    case ErrorCode::SearchFailed: return "SearchFailed";
    case ErrorCode::InvalidTheta: return "InvalidTheta";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(what), code_(code) {}

const GateParams& Hyperparameters::at(const std::string& label) const {
  auto it = gates.find(label);
  if (it == gates.end()) throw Error(ErrorCode::MissingGate, "no parameters for gate '" + label + "'");
  return it->second;
}

void InputStats::validate() const {
  if (!(R >= 0.0) || !std::isfinite(R)) throw Error(ErrorCode::InvalidArgument, "input second moment R must be >= 0");
  if (!(std::abs(sigma_z) <= 1.0)) throw Error(ErrorCode::InvalidArgument, "sigma_z must lie in [-1, 1]");
}

void SimulationConfig::validate() const {
  if (N < 1) throw Error(ErrorCode::InvalidArgument, "N must be >= 1");
  if (T < 0) throw Error(ErrorCode::InvalidArgument, "T must be >= 0");
  if (!(init_var >= 0.0)) throw Error(ErrorCode::NegativeVariance, "initial-state variance must be >= 0");
}

}  // namespace mfrnn
