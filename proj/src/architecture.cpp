#include "mfrnn/architecture.hpp"

#include <atomic>
#include <cmath>

#include "mfrnn/diagnostics.hpp"

namespace mfrnn {

namespace {

using M = Monomial;
const M kSig = M::of(Elem::sigmoid);
const M kOneMinusSig = M::of(Elem::one_minus_sigmoid);
const M kTanh = M::of(Elem::tanh);

ArchitectureSpec finish(ArchitectureSpec a) {
  if (a.sampled_cell) return a;
  a.d0 = a.update.d_state();
  a.dk.clear();
  for (int k = 0; k < a.num_gates(); ++k) a.dk.push_back(a.update.d_gate(k));
  return a;
}

std::vector<ArchitectureSpec> build_registry() {
  std::vector<ArchitectureSpec> r;
  const auto S = StatePoly::state();
  {
    ArchitectureSpec a{ArchKind::vanilla_rnn, "vanillaRNN", {{"f"}}};
    a.update = StatePoly::gate(0, kSig);
    r.push_back(finish(a));
  }
  {
    ArchitectureSpec a{ArchKind::minimal_rnn, "minimalRNN", {{"f"}, {"r"}}};
    a.update = StatePoly::gate(0, kSig) * S + StatePoly::gate(0, kOneMinusSig) * StatePoly::gate(1, kTanh);
    r.push_back(finish(a));
  }
  {
    ArchitectureSpec a{ArchKind::gru, "GRU", {{"f"}, {"r"}, {"r2", GateForm::gated, 1, kSig}}};
    a.update = StatePoly::gate(0, kSig) * S + StatePoly::gate(0, kOneMinusSig) * StatePoly::gate(2, kTanh);
    r.push_back(finish(a));
  }
  {
    ArchitectureSpec a{ArchKind::peephole_lstm, "peepholeLSTM", {{"i"}, {"f"}, {"r"}, {"o"}}};
    a.update = StatePoly::gate(1, kSig) * S + StatePoly::gate(0, kSig) * StatePoly::gate(2, kTanh);
    r.push_back(finish(a));
  }
  {
    ArchitectureSpec a{ArchKind::lstm, "LSTM", {{"i"}, {"f"}, {"r"}, {"o"}}};
    a.sampled_cell = true;
    r.push_back(finish(a));
  }
  return r;
}

}  // namespace

const std::vector<ArchitectureSpec>& registry() {
  static const std::vector<ArchitectureSpec> r = build_registry();
  return r;
}

const ArchitectureSpec& architecture(std::string_view name) {
  for (const auto& a : registry()) {
    if (a.name == name) return a;
  }
  throw Error(ErrorCode::UnknownArchitecture, "unknown architecture '" + std::string(name) + "'");
}

std::vector<std::string> architecture_names() {
  std::vector<std::string> out;
  for (const auto& a : registry()) out.push_back(a.name);
  return out;
}

int ArchitectureSpec::index(std::string_view label) const {
  for (int k = 0; k < num_gates(); ++k) {
    if (gates[k].label == label) return k;
  }
  throw Error(ErrorCode::UnknownGate, name + " has no gate '" + std::string(label) + "'");
}

bool ArchitectureSpec::has_gate(std::string_view label) const {
  for (const auto& g : gates) {
    if (g.label == label) return true;
  }
  return false;
}

namespace lstm {
double cell_from_hidden(double s_prev, double o_prev, bool* clamped) {
  constexpr double kMax = 1.0 - 1e-9;
  double ratio = s_prev / sigmoid(o_prev);
  bool hit = false;
  if (std::abs(ratio) > kMax) {
    ratio = std::copysign(kMax, ratio);
    hit = true;
    note_atanh_clamp();
  }
  if (clamped) *clamped = hit;
  return std::atanh(ratio);
}
}  // namespace lstm

double ArchitectureSpec::f(double s_prev, std::span<const double> u, double o_prev) const {
  if (!sampled_cell) return update.eval(s_prev, u);
  using namespace lstm;
  const double c_prev = cell_from_hidden(s_prev, o_prev);
  const double c = sigmoid(u[kF]) * c_prev + sigmoid(u[kI]) * std::tanh(u[kR]);
  return sigmoid(u[kO]) * std::tanh(c);
}

double ArchitectureSpec::d_state(double s_prev, std::span<const double> u, double o_prev) const {
  if (!sampled_cell) return d0.eval(s_prev, u);
  using namespace lstm;
  const double c_prev = cell_from_hidden(s_prev, o_prev);
  const double c = sigmoid(u[kF]) * c_prev + sigmoid(u[kI]) * std::tanh(u[kR]);
  return sigmoid(u[kO]) * tanh_prime(c) * sigmoid(u[kF]) / (sigmoid(o_prev) * tanh_prime(c_prev));
}

double ArchitectureSpec::d_gate(int k, double s_prev, std::span<const double> u, double o_prev) const {
  if (!sampled_cell) return dk.at(k).eval(s_prev, u);
  using namespace lstm;
  const double c_prev = cell_from_hidden(s_prev, o_prev);
  const double c = sigmoid(u[kF]) * c_prev + sigmoid(u[kI]) * std::tanh(u[kR]);
  const double dc = sigmoid(u[kO]) * tanh_prime(c);
  switch (k) {
    case kI: return dc * sigmoid_prime(u[kI]) * std::tanh(u[kR]);
    case kF: return dc * sigmoid_prime(u[kF]) * c_prev;
    case kR: return dc * sigmoid(u[kI]) * tanh_prime(u[kR]);
    case kO: return sigmoid_prime(u[kO]) * std::tanh(c);
    default: throw Error(ErrorCode::UnknownGate, "LSTM gate index out of range");
  }
}

void validate_theta(const Hyperparameters& theta, const ArchitectureSpec& arch) {
  for (const auto& g : arch.gates) {
    if (!theta.gates.count(g.label)) throw Error(ErrorCode::MissingGate, arch.name + ": missing gate '" + g.label + "'");
  }
  for (const auto& [label, p] : theta.gates) {
    if (!arch.has_gate(label)) throw Error(ErrorCode::UnknownGate, arch.name + ": unknown gate '" + label + "'");
    for (double v : {p.sigma2, p.nu2, p.rho2}) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw Error(ErrorCode::NegativeVariance, arch.name + ": gate '" + label + "' has a negative or non-finite variance");
      }
    }
    if (!std::isfinite(p.mu)) throw Error(ErrorCode::InvalidTheta, arch.name + ": gate '" + label + "' has a non-finite mean");
  }
}

}  // namespace mfrnn
