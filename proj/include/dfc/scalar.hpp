// Scalar modes: exact rationals (GMP), exact complex rationals, and doubles.
#pragma once

#include <gmpxx.h>

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dfc {

using Rational = mpq_class;

inline Rational rational_from_string(const std::string& s) {
  // Accepts "p", "p/q", or a plain decimal like "-1.25".
  auto slash = s.find('/');
  if (slash != std::string::npos) {
    Rational r;
    if (r.set_str(s, 10) != 0) throw std::invalid_argument("bad rational: " + s);
    r.canonicalize();
    return r;
  }
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    Rational r;
    if (r.set_str(s, 10) != 0) throw std::invalid_argument("bad rational: " + s);
    r.canonicalize();
    return r;
  }
  std::string digits = s.substr(0, dot) + s.substr(dot + 1);
  std::size_t frac_len = s.size() - dot - 1;
  Rational num;
  if (num.set_str(digits, 10) != 0) throw std::invalid_argument("bad rational: " + s);
  Rational den(1);
  for (std::size_t i = 0; i < frac_len; ++i) den *= 10;
  Rational r = num / den;
  r.canonicalize();
  return r;
}

inline std::string rational_to_string(const Rational& r) { return r.get_str(); }

inline double to_double(const Rational& r) { return r.get_d(); }
inline double to_double(double x) { return x; }

// Complex numbers over an exact scalar. std::complex is only specified for
// floating-point types, so exact complex arithmetic gets its own small type.
template <class T>
struct Cx {
  T re{};
  T im{};

  Cx() = default;
  Cx(T r) : re(std::move(r)) {}
  Cx(T r, T i) : re(std::move(r)), im(std::move(i)) {}

  friend Cx operator+(const Cx& a, const Cx& b) { return {a.re + b.re, a.im + b.im}; }
  friend Cx operator-(const Cx& a, const Cx& b) { return {a.re - b.re, a.im - b.im}; }
  friend Cx operator-(const Cx& a) { return {-a.re, -a.im}; }
  friend Cx operator*(const Cx& a, const Cx& b) {
    return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
  }
  friend Cx operator/(const Cx& a, const Cx& b) {
    T n = b.re * b.re + b.im * b.im;
    return {(a.re * b.re + a.im * b.im) / n, (a.im * b.re - a.re * b.im) / n};
  }
  Cx& operator+=(const Cx& o) { re += o.re; im += o.im; return *this; }
  Cx& operator-=(const Cx& o) { re -= o.re; im -= o.im; return *this; }
  Cx& operator*=(const Cx& o) { *this = *this * o; return *this; }
  friend bool operator==(const Cx& a, const Cx& b) { return a.re == b.re && a.im == b.im; }
  friend bool operator!=(const Cx& a, const Cx& b) { return !(a == b); }

  Cx conj() const { return {re, -im}; }
};

using CRational = Cx<Rational>;

inline std::complex<double> to_cdouble(const CRational& z) {
  return {to_double(z.re), to_double(z.im)};
}

// Traits used by the templated fiber/field layers.
template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<Rational> {
  static Rational zero() { return Rational(0); }
  static Rational one() { return Rational(1); }
  static bool is_zero(const Rational& x) { return sgn(x) == 0; }
  static Rational from_int(long v) { return Rational(v); }
  static constexpr bool exact = true;
};

template <>
struct ScalarTraits<double> {
  static double zero() { return 0.0; }
  static double one() { return 1.0; }
  static bool is_zero(double x) { return x == 0.0; }
  static double from_int(long v) { return double(v); }
  static constexpr bool exact = false;
};

template <>
struct ScalarTraits<CRational> {
  static CRational zero() { return CRational(Rational(0)); }
  static CRational one() { return CRational(Rational(1)); }
  static bool is_zero(const CRational& x) { return sgn(x.re) == 0 && sgn(x.im) == 0; }
  static CRational from_int(long v) { return CRational(Rational(v)); }
  static constexpr bool exact = true;
};

template <>
struct ScalarTraits<std::complex<double>> {
  static std::complex<double> zero() { return {0.0, 0.0}; }
  static std::complex<double> one() { return {1.0, 0.0}; }
  static bool is_zero(const std::complex<double>& x) { return x.real() == 0.0 && x.imag() == 0.0; }
  static std::complex<double> from_int(long v) { return {double(v), 0.0}; }
  static constexpr bool exact = false;
};

}  // namespace dfc
