#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace mfrnn {

/// Elementary gate functions. Every update rule and derivative in the
/// registry is a polynomial in the state whose coefficients are products of
/// these, one product per gate.
enum class Elem : std::uint8_t { sigmoid, one_minus_sigmoid, sigmoid_prime, tanh, tanh_prime };
inline constexpr int kNumElems = 5;
inline constexpr int kMaxGates = 5;

double sigmoid(double x);
double sigmoid_prime(double x);
double tanh_prime(double x);

struct ElemValues {
  std::array<double, kNumElems> v{};
  explicit ElemValues(double x);
};

/// Product of elementary functions with small integer powers.
struct Monomial {
  std::array<std::uint8_t, kNumElems> pow{};

  static Monomial of(Elem e, int power = 1);
  bool is_one() const;
  double eval(const ElemValues& ev) const;
  double operator()(double x) const { return eval(ElemValues(x)); }
  Monomial operator*(const Monomial& o) const;
  auto operator<=>(const Monomial&) const = default;
};

/// Sum of c_i * m_i.
using LinearForm = std::vector<std::pair<double, Monomial>>;

LinearForm derivative(const Monomial& m);
double eval(const LinearForm& f, double x);

struct Term {
  double coef = 1.0;
  int s_pow = 0;
  std::array<Monomial, kMaxGates> gate{};
};

/// Polynomial in the previous state s with gate-function coefficients.
class StatePoly {
 public:
  std::vector<Term> terms;

  static StatePoly constant(double c);
  static StatePoly state();
  static StatePoly gate(int k, const Monomial& m, double coef = 1.0);
  static StatePoly gate(int k, const LinearForm& f);

  StatePoly operator+(const StatePoly& o) const;
  StatePoly operator-(const StatePoly& o) const;
  StatePoly operator*(const StatePoly& o) const;
  StatePoly operator*(double c) const;

  StatePoly d_state() const;
  StatePoly d_gate(int k) const;
  bool depends_on(int k) const;
  bool is_zero() const { return terms.empty(); }
  int max_s_pow() const;

  /// u holds one pre-activation per gate.
  double eval(double s, std::span<const double> u) const;

 private:
  void simplify();
};

}  // namespace mfrnn
