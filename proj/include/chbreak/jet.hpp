#pragma once

// Polynomial differential functions on the (t, x) jet of u with exact
// rational coefficients, formal total derivatives, and the built-in
// conserved currents of the equation.
//
// A monomial is  exp(w lambda t) * prod u_{t^a x^b}^p ; mixed derivatives are
// symmetrized, so u_tx and u_xt are the same coordinate.

#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <boost/rational.hpp>

namespace chbreak::jet {

using Rational = boost::rational<std::int64_t>;

struct JetIndex {
  int t = 0;
  int x = 0;
  friend auto operator<=>(const JetIndex&, const JetIndex&) = default;
};

inline std::string coordinate_name(JetIndex i) {
  std::string s = "u";
  if (i.t + i.x > 0) {
    s += '_';
    s.append(static_cast<std::size_t>(i.t), 't');
    s.append(static_cast<std::size_t>(i.x), 'x');
  }
  return s;
}

struct Monomial {
  int weight = 0;                              // exponent w of exp(w lambda t)
  std::vector<std::pair<JetIndex, int>> powers;  // sorted, positive powers
  friend auto operator<=>(const Monomial&, const Monomial&) = default;

  int degree_of(JetIndex i) const {
    for (const auto& [idx, p] : powers)
      if (idx == i) return p;
    return 0;
  }
};

inline Monomial multiply(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.weight = a.weight + b.weight;
  std::map<JetIndex, int> acc;
  for (const auto& [i, p] : a.powers) acc[i] += p;
  for (const auto& [i, p] : b.powers) acc[i] += p;
  for (const auto& [i, p] : acc) out.powers.emplace_back(i, p);
  return out;
}

class DiffExpr {
public:
  DiffExpr() = default;
  DiffExpr(Rational c) {  // NOLINT(google-explicit-constructor)
    if (c.numerator() != 0) terms_[Monomial{}] = c;
  }
  DiffExpr(std::int64_t c) : DiffExpr(Rational(c)) {}  // NOLINT(google-explicit-constructor)

  static DiffExpr coordinate(JetIndex i, int power = 1) {
    DiffExpr e;
    e.terms_[Monomial{0, {{i, power}}}] = 1;
    return e;
  }
  static DiffExpr exp_weight(int w) {
    DiffExpr e;
    e.terms_[Monomial{w, {}}] = 1;
    return e;
  }
  static DiffExpr term(Rational c, Monomial m) {
    DiffExpr e;
    e.add(m, c);
    return e;
  }

  const std::map<Monomial, Rational>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  Rational coefficient(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? Rational(0) : it->second;
  }

  void add(const Monomial& m, Rational c) {
    if (c.numerator() == 0) return;
    auto [it, inserted] = terms_.try_emplace(m, c);
    if (!inserted) {
      it->second += c;
      if (it->second.numerator() == 0) terms_.erase(it);
    }
  }

  DiffExpr& operator+=(const DiffExpr& o) {
    for (const auto& [m, c] : o.terms_) add(m, c);
    return *this;
  }
  DiffExpr& operator-=(const DiffExpr& o) {
    for (const auto& [m, c] : o.terms_) add(m, -c);
    return *this;
  }
  friend DiffExpr operator+(DiffExpr a, const DiffExpr& b) { return a += b; }
  friend DiffExpr operator-(DiffExpr a, const DiffExpr& b) { return a -= b; }
  friend DiffExpr operator-(const DiffExpr& a) { return DiffExpr() - a; }
  friend DiffExpr operator*(const DiffExpr& a, const DiffExpr& b) {
    DiffExpr out;
    for (const auto& [ma, ca] : a.terms_)
      for (const auto& [mb, cb] : b.terms_) out.add(multiply(ma, mb), ca * cb);
    return out;
  }
  friend bool operator==(const DiffExpr&, const DiffExpr&) = default;

private:
  std::map<Monomial, Rational> terms_;
};

inline DiffExpr pow(const DiffExpr& e, int p) {
  DiffExpr out(1);
  for (int i = 0; i < p; ++i) out = out * e;
  return out;
}

inline std::string to_string(Rational r) {
  std::ostringstream os;
  os << r.numerator();
  if (r.denominator() != 1) os << '/' << r.denominator();
  return os.str();
}

inline std::string to_string(const DiffExpr& e) {
  if (e.is_zero()) return "0";
  std::ostringstream os;
  bool first = true;
  for (const auto& [m, c] : e.terms()) {
    Rational mag = c < 0 ? -c : c;
    os << (first ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + "));
    first = false;
    const bool bare = m.powers.empty() && m.weight == 0;
    bool need_star = false;
    if (mag != Rational(1) || bare) {
      os << to_string(mag);
      need_star = true;
    }
    if (m.weight != 0) {
      os << (need_star ? "*" : "") << "exp(" << m.weight << "*lambda*t)";
      need_star = true;
    }
    for (const auto& [i, p] : m.powers) {
      os << (need_star ? "*" : "") << coordinate_name(i);
      if (p != 1) os << '^' << p;
      need_star = true;
    }
  }
  return os.str();
}

enum class Direction { t, x };

/// Formal total derivative; `lambda` enters only through exp weights.
inline DiffExpr total_derivative(const DiffExpr& e, Direction dir, Rational lambda = 0) {
  DiffExpr out;
  for (const auto& [m, c] : e.terms()) {
    if (dir == Direction::t && m.weight != 0) out.add(m, c * lambda * Rational(m.weight));
    for (std::size_t f = 0; f < m.powers.size(); ++f) {
      const auto [idx, p] = m.powers[f];
      Monomial reduced = m;
      if (p == 1)
        reduced.powers.erase(reduced.powers.begin() + static_cast<std::ptrdiff_t>(f));
      else
        reduced.powers[f].second = p - 1;
      JetIndex raised = idx;
      (dir == Direction::t ? raised.t : raised.x) += 1;
      out.add(multiply(reduced, Monomial{0, {{raised, 1}}}), c * Rational(p));
    }
  }
  return out;
}

inline DiffExpr Dt(const DiffExpr& e, Rational lambda = 0) {
  return total_derivative(e, Direction::t, lambda);
}
inline DiffExpr Dx(const DiffExpr& e) { return total_derivative(e, Direction::x); }

/// Numeric values of t, x and of every jet coordinate that an expression
/// may reference. Coordinates are independent (off-shell).
struct JetPoint {
  double t = 0.0;
  double x = 0.0;
  std::map<JetIndex, double> values;

  double get(JetIndex i) const {
    auto it = values.find(i);
    if (it == values.end())
      throw std::out_of_range("jet point lacks coordinate " + coordinate_name(i));
    return it->second;
  }
  void set(JetIndex i, double v) { values[i] = v; }
};

/// All coordinates of total order <= max_order, uniform in [-range, range].
template <class Rng>
JetPoint random_jet(Rng& rng, int max_order = 5, double range = 2.0) {
  std::uniform_real_distribution<double> dist(-range, range);
  JetPoint p;
  p.t = dist(rng);
  p.x = dist(rng);
  for (int order = 0; order <= max_order; ++order)
    for (int nt = 0; nt <= order; ++nt) p.set({nt, order - nt}, dist(rng));
  return p;
}

inline double rational_to_double(Rational r) {
  return static_cast<double>(r.numerator()) / static_cast<double>(r.denominator());
}

inline double monomial_value(const Monomial& m, const JetPoint& p, double lambda) {
  double v = m.weight != 0 ? std::exp(m.weight * lambda * p.t) : 1.0;
  for (const auto& [i, pow_] : m.powers) v *= std::pow(p.get(i), pow_);
  return v;
}

inline double evaluate(const DiffExpr& e, const JetPoint& p, double lambda = 0.0) {
  double sum = 0.0;
  for (const auto& [m, c] : e.terms()) sum += rational_to_double(c) * monomial_value(m, p, lambda);
  return sum;
}

/// Sum of absolute term values; the natural scale for relative residuals.
inline double magnitude(const DiffExpr& e, const JetPoint& p, double lambda = 0.0) {
  double sum = 0.0;
  for (const auto& [m, c] : e.terms())
    sum += std::abs(rational_to_double(c) * monomial_value(m, p, lambda));
  return sum;
}

/// Parses "7/3", "-2", "0.125" or "1e-3" exactly.
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  auto fail = [&]() -> Rational { throw std::invalid_argument("not a rational number: " + s); };
  if (s.empty()) return fail();
  if (auto slash = s.find('/'); slash != std::string::npos) {
    std::size_t used = 0;
    const long long num = std::stoll(s.substr(0, slash), &used);
    if (used != slash) return fail();
    const std::string den_s = s.substr(slash + 1);
    const long long den = std::stoll(den_s, &used);
    if (used != den_s.size() || den == 0) return fail();
    return Rational(num, den);
  }
  std::size_t pos = 0;
  bool negative = false;
  if (s[pos] == '+' || s[pos] == '-') negative = s[pos++] == '-';
  std::int64_t num = 0, den = 1;
  bool digits = false, dot = false;
  for (; pos < s.size() && s[pos] != 'e' && s[pos] != 'E'; ++pos) {
    const char ch = s[pos];
    if (ch == '.' && !dot) {
      dot = true;
      continue;
    }
    if (ch < '0' || ch > '9') return fail();
    digits = true;
    num = num * 10 + (ch - '0');
    if (dot) den *= 10;
    if (num > (std::int64_t{1} << 50) || den > (std::int64_t{1} << 50)) return fail();
  }
  if (!digits) return fail();
  Rational r(negative ? -num : num, den);
  if (pos < s.size()) {
    const std::string ex = s.substr(pos + 1);
    std::size_t used = 0;
    const int e = std::stoi(ex, &used);
    if (used != ex.size() || e > 15 || e < -15) return fail();
    for (int i = 0; i < std::abs(e); ++i) r = e > 0 ? r * 10 : r / 10;
  }
  return r;
}

// Shorthand for building the built-in expressions.
namespace coords {
inline DiffExpr u() { return DiffExpr::coordinate({0, 0}); }
inline DiffExpr ut() { return DiffExpr::coordinate({1, 0}); }
inline DiffExpr ux() { return DiffExpr::coordinate({0, 1}); }
inline DiffExpr utx() { return DiffExpr::coordinate({1, 1}); }
inline DiffExpr uxx() { return DiffExpr::coordinate({0, 2}); }
inline DiffExpr utxx() { return DiffExpr::coordinate({1, 2}); }
inline DiffExpr uxxx() { return DiffExpr::coordinate({0, 3}); }
}  // namespace coords

/// u_t - u_txx + lambda (u - u_xx) + 3 u^2 u_x - u u_xxx - 2 u_x u_xx.
inline DiffExpr equation_expression(Rational lambda = 0) {
  using namespace coords;
  return ut() - utxx() + DiffExpr(lambda) * (u() - uxx()) + DiffExpr(3) * pow(u(), 2) * ux() -
         u() * uxxx() - DiffExpr(2) * ux() * uxx();
}

struct Current {
  std::string name;
  DiffExpr density;         // C^0
  DiffExpr flux;            // C^1
  DiffExpr characteristic;  // phi
};

/// lambda = 0: three currents with characteristics 1, u and
/// u^3 - u_x^2/2 - u_tx - u u_xx. lambda != 0: the two exponentially
/// weighted currents with characteristics exp(lambda t), exp(2 lambda t) u.
inline std::vector<Current> builtin_currents(Rational lambda = 0) {
  using namespace coords;
  const Rational half(1, 2);
  const DiffExpr mass_density = u() - uxx();
  const DiffExpr mass_flux = pow(u(), 3) - DiffExpr(half) * pow(ux(), 2) - u() * uxx();
  const DiffExpr energy_density = DiffExpr(half) * (pow(u(), 2) + pow(ux(), 2));
  const DiffExpr energy_flux = DiffExpr(Rational(3, 4)) * pow(u(), 4) - u() * utx() - pow(u(), 2) * uxx();

  if (lambda.numerator() == 0) {
    const DiffExpr third_density = DiffExpr(Rational(1, 4)) * pow(u(), 4) + DiffExpr(half) * u() * pow(ux(), 2);
    const DiffExpr third_flux =
        DiffExpr(half) * pow(u(), 6) + DiffExpr(Rational(1, 8)) * pow(ux(), 4) - DiffExpr(half) * pow(ut(), 2) -
        u() * ut() * ux() - DiffExpr(half) * pow(u(), 3) * pow(ux(), 2) +
        DiffExpr(half) * u() * pow(ux(), 2) * uxx() + DiffExpr(half) * pow(ux(), 2) * utx() +
        DiffExpr(half) * pow(utx(), 2) + DiffExpr(half) * pow(u(), 2) * pow(uxx(), 2) - pow(u(), 4) * uxx() +
        u() * uxx() * utx() - pow(u(), 3) * utx();
    const DiffExpr third_char = pow(u(), 3) - DiffExpr(half) * pow(ux(), 2) - utx() - u() * uxx();
    return {
        {"mass", mass_density, mass_flux, DiffExpr(1)},
        {"energy", energy_density, energy_flux, u()},
        {"quartic", third_density, third_flux, third_char},
    };
  }
  const DiffExpr e1 = DiffExpr::exp_weight(1);
  const DiffExpr e2 = DiffExpr::exp_weight(2);
  return {
      {"weighted_mass", e1 * mass_density, e1 * mass_flux, e1},
      {"weighted_energy", e2 * energy_density, e2 * (energy_flux - DiffExpr(lambda) * u() * ux()), e2 * u()},
  };
}

/// D_t C^0 + D_x C^1 - phi F in canonical form; zero for a valid current.
inline DiffExpr symbolic_cancellation(const DiffExpr& density, const DiffExpr& flux,
                                      const DiffExpr& characteristic, const DiffExpr& equation,
                                      Rational lambda = 0) {
  return Dt(density, lambda) + Dx(flux) - characteristic * equation;
}

/// Floating-point value of D_t C^0 + D_x C^1 - phi F at a jet point, with each
/// piece evaluated separately (no symbolic cancellation involved).
inline double divergence_residual(const DiffExpr& density, const DiffExpr& flux,
                                  const DiffExpr& characteristic, const DiffExpr& equation,
                                  const JetPoint& p, Rational lambda = 0) {
  const double lam = rational_to_double(lambda);
  return evaluate(Dt(density, lambda), p, lam) + evaluate(Dx(flux), p, lam) -
         evaluate(characteristic, p, lam) * evaluate(equation, p, lam);
}

/// Term-magnitude scale for divergence_residual.
inline double divergence_scale(const DiffExpr& density, const DiffExpr& flux,
                               const DiffExpr& characteristic, const DiffExpr& equation,
                               const JetPoint& p, Rational lambda = 0) {
  const double lam = rational_to_double(lambda);
  return magnitude(Dt(density, lambda), p, lam) + magnitude(Dx(flux), p, lam) +
         magnitude(characteristic, p, lam) * magnitude(equation, p, lam);
}

}  // namespace chbreak::jet
