#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mfrnn/core.hpp"
#include "mfrnn/symbolic.hpp"

namespace mfrnn {

struct GateSpec {
  std::string label;
  GateForm form = GateForm::linear;
  /// For gated pre-activations u = W (g(u_gating) * s) + U z + b.
  int gating_gate = -1;
  Monomial gating_fn{};
};

enum class ArchKind { vanilla_rnn, minimal_rnn, gru, peephole_lstm, lstm };

struct ArchitectureSpec {
  ArchKind kind = ArchKind::vanilla_rnn;
  std::string name;
  std::vector<GateSpec> gates;
  /// True for the LSTM: the state is h and the cell c has to be sampled.
  bool sampled_cell = false;
  /// Update rule and its derivatives, affine architectures only.
  StatePoly update{};
  StatePoly d0{};
  std::vector<StatePoly> dk{};

  int num_gates() const { return static_cast<int>(gates.size()); }
  int index(std::string_view label) const;
  bool has_gate(std::string_view label) const;

  /// Scalar evaluators. For the LSTM `o_prev` is the previous output-gate
  /// pre-activation and s_prev = sigmoid(o_prev) tanh(c_prev).
  double f(double s_prev, std::span<const double> u, double o_prev = 0.0) const;
  double d_state(double s_prev, std::span<const double> u, double o_prev = 0.0) const;
  double d_gate(int k, double s_prev, std::span<const double> u, double o_prev = 0.0) const;
};

const ArchitectureSpec& architecture(std::string_view name);
const std::vector<ArchitectureSpec>& registry();
std::vector<std::string> architecture_names();

void validate_theta(const Hyperparameters& theta, const ArchitectureSpec& arch);

namespace lstm {
inline constexpr int kI = 0, kF = 1, kR = 2, kO = 3;
/// c_prev recovered from the hidden state; the ratio is clamped to 1 - 1e-9.
double cell_from_hidden(double s_prev, double o_prev, bool* clamped = nullptr);
}  // namespace lstm

}  // namespace mfrnn
