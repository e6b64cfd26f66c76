#include "mfrnn/symbolic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

namespace mfrnn {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double sigmoid_prime(double x) { return sigmoid(x) * sigmoid(-x); }

double tanh_prime(double x) {
  const double ch = std::cosh(x);
  return 1.0 / (ch * ch);
}

ElemValues::ElemValues(double x) {
  const double sp = sigmoid(x);
  const double sn = sigmoid(-x);
  v[static_cast<int>(Elem::sigmoid)] = sp;
  v[static_cast<int>(Elem::one_minus_sigmoid)] = sn;
  v[static_cast<int>(Elem::sigmoid_prime)] = sp * sn;
  v[static_cast<int>(Elem::tanh)] = std::tanh(x);
  v[static_cast<int>(Elem::tanh_prime)] = tanh_prime(x);
}

Monomial Monomial::of(Elem e, int power) {
  Monomial m;
  m.pow[static_cast<int>(e)] = static_cast<std::uint8_t>(power);
  return m;
}

bool Monomial::is_one() const {
  return std::all_of(pow.begin(), pow.end(), [](auto p) { return p == 0; });
}

double Monomial::eval(const ElemValues& ev) const {
  double r = 1.0;
  for (int e = 0; e < kNumElems; ++e) {
    for (int p = 0; p < pow[e]; ++p) r *= ev.v[e];
  }
  return r;
}

Monomial Monomial::operator*(const Monomial& o) const {
  Monomial m;
  for (int e = 0; e < kNumElems; ++e) m.pow[e] = static_cast<std::uint8_t>(pow[e] + o.pow[e]);
  return m;
}

namespace {

// d/dx of each elementary function, as a linear form.
LinearForm elem_derivative(Elem e) {
  using M = Monomial;
  switch (e) {
    case Elem::sigmoid:
      return {{1.0, M::of(Elem::sigmoid_prime)}};
    case Elem::one_minus_sigmoid:
      return {{-1.0, M::of(Elem::sigmoid_prime)}};
    case Elem::sigmoid_prime:  // s'(1 - 2s) = s'(1 - s) - s's
      return {{1.0, M::of(Elem::sigmoid_prime) * M::of(Elem::one_minus_sigmoid)},
              {-1.0, M::of(Elem::sigmoid_prime) * M::of(Elem::sigmoid)}};
    case Elem::tanh:
      return {{1.0, M::of(Elem::tanh_prime)}};
    case Elem::tanh_prime:
      return {{-2.0, M::of(Elem::tanh) * M::of(Elem::tanh_prime)}};
  }
  return {};
}

}  // namespace

LinearForm derivative(const Monomial& m) {
  LinearForm out;
  for (int e = 0; e < kNumElems; ++e) {
    if (m.pow[e] == 0) continue;
    Monomial rest = m;
    rest.pow[e] = static_cast<std::uint8_t>(rest.pow[e] - 1);
    for (const auto& [c, dm] : elem_derivative(static_cast<Elem>(e))) {
      out.emplace_back(c * m.pow[e], rest * dm);
    }
  }
  return out;
}

double eval(const LinearForm& f, double x) {
  const ElemValues ev(x);
  double r = 0.0;
  for (const auto& [c, m] : f) r += c * m.eval(ev);
  return r;
}

StatePoly StatePoly::constant(double c) {
  StatePoly p;
  if (c != 0.0) p.terms.push_back(Term{c, 0, {}});
  return p;
}

StatePoly StatePoly::state() {
  StatePoly p;
  p.terms.push_back(Term{1.0, 1, {}});
  return p;
}

StatePoly StatePoly::gate(int k, const Monomial& m, double coef) {
  StatePoly p;
  Term t{coef, 0, {}};
  t.gate[k] = m;
  p.terms.push_back(t);
  return p;
}

StatePoly StatePoly::gate(int k, const LinearForm& f) {
  StatePoly p;
  for (const auto& [c, m] : f) p = p + gate(k, m, c);
  return p;
}

StatePoly StatePoly::operator+(const StatePoly& o) const {
  StatePoly r = *this;
  r.terms.insert(r.terms.end(), o.terms.begin(), o.terms.end());
  r.simplify();
  return r;
}

StatePoly StatePoly::operator-(const StatePoly& o) const { return *this + o * -1.0; }

StatePoly StatePoly::operator*(const StatePoly& o) const {
  StatePoly r;
  for (const auto& a : terms) {
    for (const auto& b : o.terms) {
      Term t{a.coef * b.coef, a.s_pow + b.s_pow, {}};
      for (int k = 0; k < kMaxGates; ++k) t.gate[k] = a.gate[k] * b.gate[k];
      r.terms.push_back(t);
    }
  }
  r.simplify();
  return r;
}

StatePoly StatePoly::operator*(double c) const {
  StatePoly r = *this;
  for (auto& t : r.terms) t.coef *= c;
  r.simplify();
  return r;
}

StatePoly StatePoly::d_state() const {
  StatePoly r;
  for (const auto& t : terms) {
    if (t.s_pow == 0) continue;
    Term d = t;
    d.coef *= t.s_pow;
    d.s_pow -= 1;
    r.terms.push_back(d);
  }
  r.simplify();
  return r;
}

StatePoly StatePoly::d_gate(int k) const {
  StatePoly r;
  for (const auto& t : terms) {
    for (const auto& [c, m] : derivative(t.gate[k])) {
      Term d = t;
      d.coef *= c;
      d.gate[k] = m;
      r.terms.push_back(d);
    }
  }
  r.simplify();
  return r;
}

bool StatePoly::depends_on(int k) const {
  return std::any_of(terms.begin(), terms.end(), [k](const Term& t) { return !t.gate[k].is_one(); });
}

int StatePoly::max_s_pow() const {
  int m = 0;
  for (const auto& t : terms) m = std::max(m, t.s_pow);
  return m;
}

double StatePoly::eval(double s, std::span<const double> u) const {
  std::array<ElemValues, kMaxGates> ev{ElemValues(0.0), ElemValues(0.0), ElemValues(0.0), ElemValues(0.0),
                                      ElemValues(0.0)};
  for (std::size_t k = 0; k < u.size() && k < kMaxGates; ++k) ev[k] = ElemValues(u[k]);
  double r = 0.0;
  for (const auto& t : terms) {
    double v = t.coef * std::pow(s, t.s_pow);
    for (int k = 0; k < kMaxGates; ++k) {
      if (!t.gate[k].is_one()) v *= t.gate[k].eval(ev[k]);
    }
    r += v;
  }
  return r;
}

void StatePoly::simplify() {
  std::map<std::tuple<int, std::array<Monomial, kMaxGates>>, double> acc;
  std::vector<std::tuple<int, std::array<Monomial, kMaxGates>>> order;
  for (const auto& t : terms) {
    auto key = std::make_tuple(t.s_pow, t.gate);
    auto [it, inserted] = acc.emplace(key, 0.0);
    if (inserted) order.push_back(key);
    it->second += t.coef;
  }
  terms.clear();
  for (const auto& key : order) {
    const double c = acc[key];
    if (c == 0.0) continue;
    terms.push_back(Term{c, std::get<0>(key), std::get<1>(key)});
  }
}

}  // namespace mfrnn
