#pragma once

#include <cmath>
#include <utility>
#include <vector>

namespace atensor {

// Generic field code calls elementary functions unqualified; pull the
// double overloads in beside the jet ones so both resolve.
using std::cos;
using std::exp;
using std::log;
using std::pow;
using std::sin;
using std::sqrt;

inline double leading_value(double x) { return x; }
inline bool all_finite(double x) { return std::isfinite(x); }

template <class T>
class Jet2;

template <class T>
double leading_value(const Jet2<T>& x);
template <class T>
bool all_finite(const Jet2<T>& x);

// Second-order forward-mode jet over a scalar ring T.
//
// Carries value, gradient and Hessian with respect to the active chart
// coordinates; the Hessian is stored packed lower-triangular, so it is
// symmetric by construction. T is double for plain derivatives, or another
// Jet2 when a computation that itself consumes derivatives has to be
// differentiated (nested jets give exact higher partials of composed
// pipelines without symbolic work).
//
// Constants are dimension 0 and broadcast against any dimension.
template <class T>
class Jet2 {
 public:
  using value_type = T;

  Jet2() : v_{} {}
  explicit Jet2(const T& v) : v_(v) {}
  Jet2(const T& v, int dim)
      : v_(v), g_(static_cast<size_t>(dim)), h_(hsize(dim)) {}

  static Jet2 variable(const T& v, int dim, int index) {
    Jet2 r(v, dim);
    r.g_[static_cast<size_t>(index)] = T(1.0);
    return r;
  }

  int dim() const { return static_cast<int>(g_.size()); }

  const T& value() const { return v_; }
  T& value() { return v_; }

  // Broadcasting accessors: components beyond dim() are zero.
  T grad(int i) const {
    return i < dim() ? g_[static_cast<size_t>(i)] : T{};
  }
  T hess(int i, int j) const {
    if (i < j) std::swap(i, j);
    return i < dim() ? h_[hidx(i, j)] : T{};
  }

  T& grad_ref(int i) { return g_[static_cast<size_t>(i)]; }
  T& hess_ref(int i, int j) {
    if (i < j) std::swap(i, j);
    return h_[hidx(i, j)];
  }

  friend Jet2 operator+(const Jet2& a, const Jet2& b) {
    const int n = a.dim() >= b.dim() ? a.dim() : b.dim();
    Jet2 r(a.v_ + b.v_, n);
    for (int i = 0; i < n; ++i) r.g_[i] = a.grad(i) + b.grad(i);
    for (int i = 0, k = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j, ++k) r.h_[k] = a.hess(i, j) + b.hess(i, j);
    return r;
  }

  friend Jet2 operator-(const Jet2& a, const Jet2& b) {
    const int n = a.dim() >= b.dim() ? a.dim() : b.dim();
    Jet2 r(a.v_ - b.v_, n);
    for (int i = 0; i < n; ++i) r.g_[i] = a.grad(i) - b.grad(i);
    for (int i = 0, k = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j, ++k) r.h_[k] = a.hess(i, j) - b.hess(i, j);
    return r;
  }

  friend Jet2 operator-(const Jet2& a) {
    Jet2 r(-a.v_, a.dim());
    for (size_t i = 0; i < a.g_.size(); ++i) r.g_[i] = -a.g_[i];
    for (size_t k = 0; k < a.h_.size(); ++k) r.h_[k] = -a.h_[k];
    return r;
  }

  // Leibniz rule through value/gradient/Hessian.
  friend Jet2 operator*(const Jet2& a, const Jet2& b) {
    const int n = a.dim() >= b.dim() ? a.dim() : b.dim();
    Jet2 r(a.v_ * b.v_, n);
    for (int i = 0; i < n; ++i)
      r.g_[i] = a.grad(i) * b.v_ + a.v_ * b.grad(i);
    for (int i = 0, k = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j, ++k)
        r.h_[k] = a.hess(i, j) * b.v_ + a.grad(i) * b.grad(j) +
                  a.grad(j) * b.grad(i) + a.v_ * b.hess(i, j);
    return r;
  }

  friend Jet2 operator/(const Jet2& a, const Jet2& b) { return a * recip(b); }

  // Scalar (double) constants enter without materialising a jet.
  friend Jet2 operator+(const Jet2& a, double c) {
    Jet2 r = a;
    r.v_ = r.v_ + c;
    return r;
  }
  friend Jet2 operator+(double c, const Jet2& a) { return a + c; }
  friend Jet2 operator-(const Jet2& a, double c) { return a + (-c); }
  friend Jet2 operator-(double c, const Jet2& a) { return (-a) + c; }
  friend Jet2 operator*(const Jet2& a, double c) {
    Jet2 r(a.v_ * c, a.dim());
    for (size_t i = 0; i < a.g_.size(); ++i) r.g_[i] = a.g_[i] * c;
    for (size_t k = 0; k < a.h_.size(); ++k) r.h_[k] = a.h_[k] * c;
    return r;
  }
  friend Jet2 operator*(double c, const Jet2& a) { return a * c; }
  friend Jet2 operator/(const Jet2& a, double c) { return a * (1.0 / c); }
  friend Jet2 operator/(double c, const Jet2& a) { return recip(a) * c; }

  Jet2& operator+=(const Jet2& o) { return *this = *this + o; }
  Jet2& operator-=(const Jet2& o) { return *this = *this - o; }
  Jet2& operator*=(const Jet2& o) { return *this = *this * o; }

  // f(u) with f0 = f(u), f1 = f'(u), f2 = f''(u) evaluated in the ring T.
  friend Jet2 chain(const Jet2& u, const T& f0, const T& f1, const T& f2) {
    const int n = u.dim();
    Jet2 r(f0, n);
    for (int i = 0; i < n; ++i) r.g_[i] = f1 * u.g_[i];
    for (int i = 0, k = 0; i < n; ++i)
      for (int j = 0; j <= i; ++j, ++k)
        r.h_[k] = f1 * u.h_[k] + f2 * u.g_[i] * u.g_[j];
    return r;
  }

  friend Jet2 recip(const Jet2& b) {
    const T one = T(1.0);
    T iv = one / b.v_;
    T iv2 = iv * iv;
    return chain(b, iv, -iv2, iv2 * iv * 2.0);
  }

 private:
  static size_t hsize(int n) { return static_cast<size_t>(n) * (n + 1) / 2; }
  static size_t hidx(int i, int j) {
    return static_cast<size_t>(i) * (i + 1) / 2 + static_cast<size_t>(j);
  }

  T v_;
  std::vector<T> g_;
  std::vector<T> h_;  // packed lower triangle
};

template <class T>
double leading_value(const Jet2<T>& x) {
  return leading_value(x.value());
}

template <class T>
bool all_finite(const Jet2<T>& x) {
  if (!all_finite(x.value())) return false;
  for (int i = 0; i < x.dim(); ++i) {
    if (!all_finite(x.grad(i))) return false;
    for (int j = 0; j <= i; ++j)
      if (!all_finite(x.hess(i, j))) return false;
  }
  return true;
}

template <class T>
Jet2<T> sin(const Jet2<T>& u) {
  using std::cos;
  using std::sin;
  T s = sin(u.value()), c = cos(u.value());
  return chain(u, s, c, -s);
}

template <class T>
Jet2<T> cos(const Jet2<T>& u) {
  using std::cos;
  using std::sin;
  T c = cos(u.value()), s = sin(u.value());
  return chain(u, c, -s, -c);
}

template <class T>
Jet2<T> exp(const Jet2<T>& u) {
  using std::exp;
  T e = exp(u.value());
  return chain(u, e, e, e);
}

template <class T>
Jet2<T> log(const Jet2<T>& u) {
  using std::log;
  T l = log(u.value());
  T iv = T(1.0) / u.value();
  return chain(u, l, iv, -(iv * iv));
}

template <class T>
Jet2<T> sqrt(const Jet2<T>& u) {
  using std::sqrt;
  T s = sqrt(u.value());
  T f1 = T(0.5) / s;
  return chain(u, s, f1, -(f1 * T(0.5)) / u.value());
}

template <class T>
Jet2<T> pow(const Jet2<T>& u, double p) {
  using std::pow;
  T f0 = pow(u.value(), p);
  T f1 = pow(u.value(), p - 1.0) * p;
  T f2 = pow(u.value(), p - 2.0) * (p * (p - 1.0));
  return chain(u, f0, f1, f2);
}

// Constant of the ring T from a double.
template <class T>
struct ring_constant {
  static T make(double c) { return T(c); }
};
template <>
struct ring_constant<double> {
  static double make(double c) { return c; }
};
template <class U>
struct ring_constant<Jet2<U>> {
  static Jet2<U> make(double c) { return Jet2<U>(ring_constant<U>::make(c)); }
};

template <class T>
T ring_const(double c) {
  return ring_constant<T>::make(c);
}

// Seeds chart coordinates as jet variables: returned coordinates carry
// identity gradients so that any expression evaluated on them yields its
// own partials with respect to the chart coordinates.
template <class T>
std::vector<Jet2<T>> seed_point(const std::vector<T>& x) {
  const int n = static_cast<int>(x.size());
  std::vector<Jet2<T>> out;
  out.reserve(x.size());
  for (int i = 0; i < n; ++i)
    out.push_back(Jet2<T>::variable(x[i], n, i));
  return out;
}

using jet2 = Jet2<double>;
using jet22 = Jet2<jet2>;

// Reduces a second-order jet to the first-order jet of its i-th partial:
// value = da/dx_i, gradient = row i of the Hessian. The Hessian slot of the
// result is zero and must not be consumed (third derivatives are not
// tracked at this level).
template <class T>
Jet2<T> partial_jet(const Jet2<T>& a, int i) {
  const int n = a.dim();
  Jet2<T> r(a.grad(i), n);
  for (int k = 0; k < n; ++k) r.grad_ref(k) = a.hess(i, k);
  return r;
}

}  // namespace atensor
