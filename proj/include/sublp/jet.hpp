#pragma once

// Truncated Taylor arithmetic ("jets") and a small set of elementary
// functions overloaded for double, std::complex<double> and Jet, so that the
// catalog symbols can be written once and evaluated on the real axis, on the
// complex right half-plane, or with derivatives attached.

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>

namespace sublp {

/// Taylor coefficients c[k] = f^(k)(x0)/k! for k < kJetSize.
inline constexpr std::size_t kJetSize = 7;

class Jet {
 public:
  Jet() { c_.fill(0.0); }
  explicit Jet(double value) {
    c_.fill(0.0);
    c_[0] = value;
  }

  /// The independent variable x at x0, scaled by `slope` (jet of x -> slope*x).
  static Jet variable(double x0, double slope = 1.0) {
    Jet j(x0);
    j.c_[1] = slope;
    return j;
  }

  double value() const { return c_[0]; }
  double coeff(std::size_t k) const { return c_[k]; }
  double& operator[](std::size_t k) { return c_[k]; }
  double operator[](std::size_t k) const { return c_[k]; }

  /// k-th derivative, k! * c[k].
  double derivative(std::size_t k) const {
    double f = 1.0;
    for (std::size_t i = 2; i <= k; ++i) f *= static_cast<double>(i);
    return f * c_[k];
  }

  Jet& operator+=(const Jet& o) {
    for (std::size_t k = 0; k < kJetSize; ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (std::size_t k = 0; k < kJetSize; ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet& operator+=(double s) {
    c_[0] += s;
    return *this;
  }
  Jet& operator-=(double s) {
    c_[0] -= s;
    return *this;
  }
  Jet& operator*=(double s) {
    for (auto& v : c_) v *= s;
    return *this;
  }
  Jet& operator/=(double s) {
    for (auto& v : c_) v /= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator+(Jet a, double s) { return a += s; }
  friend Jet operator+(double s, Jet a) { return a += s; }
  friend Jet operator-(Jet a, double s) { return a -= s; }
  friend Jet operator-(double s, const Jet& a) {
    Jet r = -a;
    r.c_[0] += s;
    return r;
  }
  friend Jet operator*(Jet a, double s) { return a *= s; }
  friend Jet operator*(double s, Jet a) { return a *= s; }
  friend Jet operator/(Jet a, double s) { return a /= s; }
  Jet operator-() const {
    Jet r;
    for (std::size_t k = 0; k < kJetSize; ++k) r.c_[k] = -c_[k];
    return r;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    Jet r;
    for (std::size_t k = 0; k < kJetSize; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j <= k; ++j) s += a.c_[j] * b.c_[k - j];
      r.c_[k] = s;
    }
    return r;
  }

  friend Jet operator/(const Jet& a, const Jet& b) {
    Jet r;
    for (std::size_t k = 0; k < kJetSize; ++k) {
      double s = a.c_[k];
      for (std::size_t j = 1; j <= k; ++j) s -= b.c_[j] * r.c_[k - j];
      r.c_[k] = s / b.c_[0];
    }
    return r;
  }
  friend Jet operator/(double s, const Jet& b) { return Jet(s) / b; }

 private:
  std::array<double, kJetSize> c_;
};

namespace jetmath {

// exp(u) with an arbitrary value slot, so expm1 can share the recurrence.
inline Jet exp_with_value(const Jet& u, double e0, double value) {
  Jet w;
  w[0] = e0;
  for (std::size_t k = 1; k < kJetSize; ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j) s += static_cast<double>(j) * u[j] * w[k - j];
    w[k] = s / static_cast<double>(k);
  }
  w[0] = value;
  return w;
}

// log(v) where v0 is supplied separately (log1p passes 1+u0 and log1p(u0)).
inline Jet log_with_value(const Jet& v, double v0, double value) {
  Jet w;
  w[0] = value;
  for (std::size_t k = 1; k < kJetSize; ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j < k; ++j) s += static_cast<double>(j) * w[j] * v[k - j];
    w[k] = (v[k] - s / static_cast<double>(k)) / v0;
  }
  return w;
}

}  // namespace jetmath

// --- elementary functions, one overload set per scalar type ---

inline double pw(double x, double a) { return std::pow(x, a); }
inline double lg(double x) { return std::log(x); }
inline double lg1p(double x) { return std::log1p(x); }
inline double ex(double x) { return std::exp(x); }
inline double em1(double x) { return std::expm1(x); }
inline double sq(double x) { return std::sqrt(x); }
inline double magnitude(double x) { return std::abs(x); }

using cplx = std::complex<double>;

inline cplx pw(cplx z, double a) { return std::pow(z, a); }
inline cplx lg(cplx z) { return std::log(z); }
inline cplx lg1p(cplx u) {
  const double re = 0.5 * std::log1p(2.0 * u.real() + std::norm(u));
  const double im = std::atan2(u.imag(), 1.0 + u.real());
  return {re, im};
}
inline cplx ex(cplx z) { return std::exp(z); }
inline cplx em1(cplx w) {
  const double a = w.real();
  const double b = w.imag();
  const double sb2 = std::sin(0.5 * b);
  return {std::expm1(a) * std::cos(b) - 2.0 * sb2 * sb2, std::exp(a) * std::sin(b)};
}
inline cplx sq(cplx z) { return std::sqrt(z); }
inline double magnitude(cplx z) { return std::abs(z); }

inline Jet pw(const Jet& u, double a) {
  Jet w;
  const double u0 = u[0];
  w[0] = std::pow(u0, a);
  for (std::size_t k = 1; k < kJetSize; ++k) {
    double s = 0.0;
    for (std::size_t j = 1; j <= k; ++j)
      s += (a * static_cast<double>(j) - static_cast<double>(k - j)) * u[j] * w[k - j];
    w[k] = s / (static_cast<double>(k) * u0);
  }
  return w;
}
inline Jet lg(const Jet& u) { return jetmath::log_with_value(u, u[0], std::log(u[0])); }
inline Jet lg1p(const Jet& u) {
  return jetmath::log_with_value(u, 1.0 + u[0], std::log1p(u[0]));
}
inline Jet ex(const Jet& u) {
  const double e0 = std::exp(u[0]);
  return jetmath::exp_with_value(u, e0, e0);
}
inline Jet em1(const Jet& u) {
  return jetmath::exp_with_value(u, std::exp(u[0]), std::expm1(u[0]));
}
inline Jet sq(const Jet& u) { return pw(u, 0.5); }
inline double magnitude(const Jet& u) { return std::abs(u[0]); }

}  // namespace sublp
