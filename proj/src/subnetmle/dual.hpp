#pragma once

// Forward-mode dual numbers with a compile-time derivative capacity. Objectives
// are written once as templates over the scalar type and instantiated with
// double (value only) or Dual<Cap> (value and gradient).

#include <array>
#include <cmath>
#include <cstddef>

namespace subnetmle {

template <int Cap>
struct Dual {
  double v = 0.0;
  std::array<double, Cap> d{};

  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)

  static Dual variable(double value, int index) {
    Dual x(value);
    x.d[static_cast<std::size_t>(index)] = 1.0;
    return x;
  }

  Dual& operator+=(const Dual& o) {
    v += o.v;
    for (int i = 0; i < Cap; ++i) d[i] += o.d[i];
    return *this;
  }
  Dual& operator-=(const Dual& o) {
    v -= o.v;
    for (int i = 0; i < Cap; ++i) d[i] -= o.d[i];
    return *this;
  }
  Dual& operator*=(const Dual& o) {
    for (int i = 0; i < Cap; ++i) d[i] = d[i] * o.v + v * o.d[i];
    v *= o.v;
    return *this;
  }
  Dual& operator/=(const Dual& o) {
    const double inv = 1.0 / o.v;
    const double q = v * inv;
    for (int i = 0; i < Cap; ++i) d[i] = (d[i] - q * o.d[i]) * inv;
    v = q;
    return *this;
  }
  Dual& operator+=(double s) {
    v += s;
    return *this;
  }
  Dual& operator-=(double s) {
    v -= s;
    return *this;
  }
  Dual& operator*=(double s) {
    v *= s;
    for (int i = 0; i < Cap; ++i) d[i] *= s;
    return *this;
  }
  Dual& operator/=(double s) { return *this *= (1.0 / s); }

  Dual operator-() const {
    Dual r;
    r.v = -v;
    for (int i = 0; i < Cap; ++i) r.d[i] = -d[i];
    return r;
  }
};

template <int C> Dual<C> operator+(Dual<C> a, const Dual<C>& b) { return a += b; }
template <int C> Dual<C> operator-(Dual<C> a, const Dual<C>& b) { return a -= b; }
template <int C> Dual<C> operator*(Dual<C> a, const Dual<C>& b) { return a *= b; }
template <int C> Dual<C> operator/(Dual<C> a, const Dual<C>& b) { return a /= b; }
template <int C> Dual<C> operator+(Dual<C> a, double b) { return a += b; }
template <int C> Dual<C> operator-(Dual<C> a, double b) { return a -= b; }
template <int C> Dual<C> operator*(Dual<C> a, double b) { return a *= b; }
template <int C> Dual<C> operator/(Dual<C> a, double b) { return a /= b; }
template <int C> Dual<C> operator+(double a, Dual<C> b) { return b += a; }
template <int C> Dual<C> operator-(double a, const Dual<C>& b) { return (-b) += a; }
template <int C> Dual<C> operator*(double a, Dual<C> b) { return b *= a; }
template <int C> Dual<C> operator/(double a, const Dual<C>& b) { return Dual<C>(a) /= b; }

template <int C> bool operator<(const Dual<C>& a, const Dual<C>& b) { return a.v < b.v; }
template <int C> bool operator>(const Dual<C>& a, const Dual<C>& b) { return a.v > b.v; }
template <int C> bool operator<(const Dual<C>& a, double b) { return a.v < b; }
template <int C> bool operator>(const Dual<C>& a, double b) { return a.v > b; }

template <int C>
Dual<C> log(const Dual<C>& a) {
  Dual<C> r;
  r.v = std::log(a.v);
  const double s = 1.0 / a.v;
  for (int i = 0; i < C; ++i) r.d[i] = a.d[i] * s;
  return r;
}

template <int C>
Dual<C> exp(const Dual<C>& a) {
  Dual<C> r;
  r.v = std::exp(a.v);
  for (int i = 0; i < C; ++i) r.d[i] = a.d[i] * r.v;
  return r;
}

template <int C>
Dual<C> sqrt(const Dual<C>& a) {
  Dual<C> r;
  r.v = std::sqrt(a.v);
  const double s = 0.5 / r.v;
  for (int i = 0; i < C; ++i) r.d[i] = a.d[i] * s;
  return r;
}

inline double value_of(double x) { return x; }
template <int C> double value_of(const Dual<C>& x) { return x.v; }

using std::exp;
using std::log;
using std::sqrt;

}  // namespace subnetmle
