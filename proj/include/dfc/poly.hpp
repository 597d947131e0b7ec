// Multivariate polynomials with rational coefficients: the exact coefficient
// functions of polynomial-mode fields.
#pragma once

#include <map>
#include <stdexcept>
#include <vector>

#include "dfc/prng.hpp"
#include "dfc/scalar.hpp"

namespace dfc {

class Poly {
 public:
  using Exps = std::vector<int>;

  Poly() = default;
  explicit Poly(int nvars) : nvars_(nvars) {}
  Poly(int nvars, const Rational& c) : nvars_(nvars) {
    if (sgn(c) != 0) terms_[Exps(nvars, 0)] = c;
  }

  static Poly variable(int nvars, int axis) {  // axis in [1..nvars]
    Poly p(nvars);
    Exps e(nvars, 0);
    e[axis - 1] = 1;
    p.terms_[e] = Rational(1);
    return p;
  }

  int nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  const std::map<Exps, Rational>& terms() const { return terms_; }

  void add_term(const Exps& e, const Rational& c) {
    if (int(e.size()) != nvars_) throw std::domain_error("Poly::add_term: arity");
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      if (sgn(c) != 0) terms_[e] = c;
    } else {
      it->second += c;
      if (sgn(it->second) == 0) terms_.erase(it);
    }
  }

  friend bool operator==(const Poly& a, const Poly& b) {
    return a.nvars_ == b.nvars_ && a.terms_ == b.terms_;
  }

  // Zero-arity polynomials act as plain constants and promote on use, which
  // lets Poly serve as the scalar type of DoubleForm.
  Poly promoted(int n) const {
    if (nvars_ == n) return *this;
    if (nvars_ != 0) throw std::domain_error("Poly: arity mismatch");
    Poly out(n);
    for (const auto& [e, c] : terms_) out.terms_[Exps(n, 0)] = c;
    return out;
  }

  Poly& operator+=(const Poly& o) {
    if (nvars_ != o.nvars_) {
      if (o.nvars_ == 0) return *this += o.promoted(nvars_);
      *this = promoted(o.nvars_);
    }
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Poly& operator-=(const Poly& o) { return *this += -o; }
  friend Poly operator+(Poly a, const Poly& b) { return a += b; }
  friend Poly operator-(Poly a, const Poly& b) { return a -= b; }
  friend Poly operator-(const Poly& a) {
    Poly out(a.nvars_);
    for (const auto& [e, c] : a.terms_) out.terms_[e] = -c;
    return out;
  }
  friend Poly operator*(const Rational& s, const Poly& a) {
    Poly out(a.nvars_);
    if (sgn(s) == 0) return out;
    for (const auto& [e, c] : a.terms_) out.terms_[e] = s * c;
    return out;
  }
  friend Poly operator*(const Poly& a, const Poly& b) {
    if (a.nvars_ != b.nvars_) {
      if (a.nvars_ == 0) return a.promoted(b.nvars_) * b;
      return a * b.promoted(a.nvars_);
    }
    Poly out(a.nvars_);
    Exps e(a.nvars_);
    for (const auto& [ea, ca] : a.terms_) {
      for (const auto& [eb, cb] : b.terms_) {
        for (int i = 0; i < a.nvars_; ++i) e[i] = ea[i] + eb[i];
        out.add_term(e, ca * cb);
      }
    }
    return out;
  }
  Poly& operator*=(const Poly& o) { *this = *this * o; return *this; }

  // Division by a constant polynomial only.
  friend Poly operator/(const Poly& a, const Poly& b) {
    if (b.total_degree() != 0 || b.is_zero())
      throw std::domain_error("Poly: division only by nonzero constants");
    return (Rational(1) / b.terms_.begin()->second) * a;
  }

  Poly diff(int axis) const {  // axis in [1..nvars]
    if (nvars_ == 0) return Poly();  // constants differentiate to zero
    Poly out(nvars_);
    for (const auto& [e, c] : terms_) {
      if (e[axis - 1] == 0) continue;
      Exps de = e;
      de[axis - 1] -= 1;
      out.add_term(de, c * e[axis - 1]);
    }
    return out;
  }

  Rational eval(const std::vector<Rational>& x) const {
    if (int(x.size()) != nvars_) throw std::domain_error("Poly::eval: arity");
    Rational acc(0);
    for (const auto& [e, c] : terms_) {
      Rational t = c;
      for (int i = 0; i < nvars_; ++i)
        for (int p = 0; p < e[i]; ++p) t *= x[i];
      acc += t;
    }
    return acc;
  }

  double eval_double(const std::vector<double>& x) const {
    double acc = 0;
    for (const auto& [e, c] : terms_) {
      double t = to_double(c);
      for (int i = 0; i < nvars_; ++i)
        for (int p = 0; p < e[i]; ++p) t *= x[i];
      acc += t;
    }
    return acc;
  }

  // Exact integral over the box prod_a [0, extent_a].
  Rational integral_box(const std::vector<Rational>& extent) const {
    if (int(extent.size()) != nvars_) throw std::domain_error("integral_box: arity");
    Rational acc(0);
    for (const auto& [e, c] : terms_) {
      Rational t = c;
      for (int i = 0; i < nvars_; ++i) {
        Rational len = extent[i];
        Rational pw(1);
        for (int p = 0; p < e[i] + 1; ++p) pw *= len;
        t *= pw / Rational(e[i] + 1);
      }
      acc += t;
    }
    return acc;
  }

  // Substitute x_axis = value; the variable becomes inert (exponent 0).
  Poly substitute(int axis, const Rational& value) const {
    if (nvars_ == 0) return *this;
    Poly out(nvars_);
    for (const auto& [e, c] : terms_) {
      Rational t = c;
      for (int p = 0; p < e[axis - 1]; ++p) t *= value;
      Exps ne = e;
      ne[axis - 1] = 0;
      out.add_term(ne, t);
    }
    return out;
  }

  // Drop a variable the polynomial does not depend on (face-local relabeling).
  Poly drop_variable(int axis) const {
    Poly out(nvars_ - 1);
    for (const auto& [e, c] : terms_) {
      if (e[axis - 1] != 0)
        throw std::domain_error("drop_variable: polynomial depends on the axis");
      Exps ne;
      ne.reserve(nvars_ - 1);
      for (int i = 0; i < nvars_; ++i)
        if (i != axis - 1) ne.push_back(e[i]);
      out.add_term(ne, c);
    }
    return out;
  }

  // Insert a new inert variable at position axis (inverse of drop_variable).
  Poly insert_variable(int axis) const {
    Poly out(nvars_ + 1);
    for (const auto& [e, c] : terms_) {
      Exps ne;
      ne.reserve(nvars_ + 1);
      for (int i = 0; i < axis - 1; ++i) ne.push_back(e[i]);
      ne.push_back(0);
      for (int i = axis - 1; i < nvars_; ++i) ne.push_back(e[i]);
      out.add_term(ne, c);
    }
    return out;
  }

  int total_degree() const {
    int deg = 0;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int v : e) s += v;
      deg = std::max(deg, s);
    }
    return deg;
  }

  static Poly random(Prng& rng, int nvars, int degree_cap, int terms = 4) {
    Poly out(nvars);
    for (int t = 0; t < terms; ++t) {
      Exps e(nvars, 0);
      int budget = degree_cap;
      for (int i = 0; i < nvars; ++i) {
        e[i] = int(rng.next_int(0, budget));
        budget -= e[i];
      }
      out.add_term(e, rng.next_small_rational());
    }
    return out;
  }

 private:
  int nvars_ = 0;
  std::map<Exps, Rational> terms_;
};

template <>
struct ScalarTraits<Poly> {
  static Poly zero() { return Poly(); }
  static Poly one() { return Poly(0, Rational(1)); }
  static bool is_zero(const Poly& p) { return p.is_zero(); }
  static Poly from_int(long v) { return Poly(0, Rational(v)); }
  static constexpr bool exact = true;
};

}  // namespace dfc
