#pragma once

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <vector>

#include "atensor/errors.hpp"
#include "atensor/jets.hpp"

namespace atensor {

template <class T>
using VecN = std::vector<T>;

// Dense row-major matrix over a scalar ring T (double or jets). Dimensions
// here are manifold dimensions (<= 5), so no effort is spent on blocking.
template <class T>
class MatN {
 public:
  MatN() = default;
  MatN(int rows, int cols)
      : r_(rows), c_(cols), d_(static_cast<size_t>(rows) * cols) {}

  static MatN identity(int n) {
    MatN m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = ring_const<T>(1.0);
    return m;
  }

  int rows() const { return r_; }
  int cols() const { return c_; }

  T& operator()(int i, int j) { return d_[static_cast<size_t>(i) * c_ + j]; }
  const T& operator()(int i, int j) const {
    return d_[static_cast<size_t>(i) * c_ + j];
  }

  friend MatN operator+(const MatN& a, const MatN& b) {
    MatN r(a.r_, a.c_);
    for (size_t k = 0; k < r.d_.size(); ++k) r.d_[k] = a.d_[k] + b.d_[k];
    return r;
  }
  friend MatN operator-(const MatN& a, const MatN& b) {
    MatN r(a.r_, a.c_);
    for (size_t k = 0; k < r.d_.size(); ++k) r.d_[k] = a.d_[k] - b.d_[k];
    return r;
  }
  friend MatN operator*(const MatN& a, const MatN& b) {
    MatN r(a.r_, b.c_);
    for (int i = 0; i < a.r_; ++i)
      for (int j = 0; j < b.c_; ++j) {
        T s{};
        for (int k = 0; k < a.c_; ++k) s = s + a(i, k) * b(k, j);
        r(i, j) = s;
      }
    return r;
  }
  friend MatN operator*(const MatN& a, double c) {
    MatN r(a.r_, a.c_);
    for (size_t k = 0; k < r.d_.size(); ++k) r.d_[k] = a.d_[k] * c;
    return r;
  }
  friend MatN operator*(double c, const MatN& a) { return a * c; }

  VecN<T> apply(const VecN<T>& v) const {
    VecN<T> r(static_cast<size_t>(r_));
    for (int i = 0; i < r_; ++i) {
      T s{};
      for (int j = 0; j < c_; ++j) s = s + (*this)(i, j) * v[j];
      r[i] = s;
    }
    return r;
  }

  MatN transposed() const {
    MatN r(c_, r_);
    for (int i = 0; i < r_; ++i)
      for (int j = 0; j < c_; ++j) r(j, i) = (*this)(i, j);
    return r;
  }

  T trace() const {
    T s{};
    for (int i = 0; i < r_; ++i) s = s + (*this)(i, i);
    return s;
  }

 private:
  int r_ = 0, c_ = 0;
  std::vector<T> d_;
};

template <class T>
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(int n) : n_(n), d_(static_cast<size_t>(n) * n * n) {}
  int dim() const { return n_; }
  T& operator()(int i, int j, int k) {
    return d_[(static_cast<size_t>(i) * n_ + j) * n_ + k];
  }
  const T& operator()(int i, int j, int k) const {
    return d_[(static_cast<size_t>(i) * n_ + j) * n_ + k];
  }

 private:
  int n_ = 0;
  std::vector<T> d_;
};

template <class T>
class Tensor4 {
 public:
  Tensor4() = default;
  explicit Tensor4(int n) : n_(n), d_(static_cast<size_t>(n) * n * n * n) {}
  int dim() const { return n_; }
  T& operator()(int i, int j, int k, int l) {
    return d_[((static_cast<size_t>(i) * n_ + j) * n_ + k) * n_ + l];
  }
  const T& operator()(int i, int j, int k, int l) const {
    return d_[((static_cast<size_t>(i) * n_ + j) * n_ + k) * n_ + l];
  }

 private:
  int n_ = 0;
  std::vector<T> d_;
};

inline bool nonzero_jet(double x) { return x != 0.0; }
template <class T>
bool nonzero_jet(const Jet2<T>& x) {
  if (nonzero_jet(x.value())) return true;
  for (int i = 0; i < x.dim(); ++i) {
    if (nonzero_jet(x.grad(i))) return true;
    for (int j = 0; j <= i; ++j)
      if (nonzero_jet(x.hess(i, j))) return true;
  }
  return false;
}

// Gauss-Jordan inverse with partial pivoting on leading values. Works over
// any jet level because jets form a commutative ring whose units are the
// elements with nonzero leading value.
template <class T>
MatN<T> inverse(const MatN<T>& m) {
  const int n = m.rows();
  MatN<T> a = m;
  MatN<T> inv = MatN<T>::identity(n);
  double scale = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      scale = std::max(scale, std::abs(leading_value(a(i, j))));
  if (scale == 0.0) throw conditioning_error("inverse of zero matrix");

  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(leading_value(a(col, col)));
    for (int r = col + 1; r < n; ++r) {
      double cand = std::abs(leading_value(a(r, col)));
      if (cand > best) {
        best = cand;
        piv = r;
      }
    }
    if (best < 1e-13 * scale)
      throw conditioning_error("matrix numerically singular in ring inverse");
    if (piv != col)
      for (int j = 0; j < n; ++j) {
        std::swap(a(piv, j), a(col, j));
        std::swap(inv(piv, j), inv(col, j));
      }
    T ipiv = ring_const<T>(1.0) / a(col, col);
    for (int j = 0; j < n; ++j) {
      a(col, j) = a(col, j) * ipiv;
      inv(col, j) = inv(col, j) * ipiv;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      T f = a(r, col);
      if (leading_value(f) == 0.0) {
        bool zero = true;  // jets may have zero value but nonzero derivatives
        if constexpr (!std::is_same_v<T, double>) zero = !nonzero_jet(f);
        if (zero) continue;
      }
      for (int j = 0; j < n; ++j) {
        a(r, j) = a(r, j) - f * a(col, j);
        inv(r, j) = inv(r, j) - f * inv(col, j);
      }
    }
  }
  return inv;
}

template <class T>
T determinant(MatN<T> a) {
  const int n = a.rows();
  T det = ring_const<T>(1.0);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    double best = std::abs(leading_value(a(col, col)));
    for (int r = col + 1; r < n; ++r) {
      double cand = std::abs(leading_value(a(r, col)));
      if (cand > best) {
        best = cand;
        piv = r;
      }
    }
    if (best == 0.0) return T{};
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(a(piv, j), a(col, j));
      det = -det;
    }
    det = det * a(col, col);
    T ipiv = ring_const<T>(1.0) / a(col, col);
    for (int r = col + 1; r < n; ++r) {
      T f = a(r, col) * ipiv;
      for (int j = col; j < n; ++j) a(r, j) = a(r, j) - f * a(col, j);
    }
  }
  return det;
}

template <class T>
T dot(const VecN<T>& a, const VecN<T>& b) {
  T s{};
  for (size_t i = 0; i < a.size(); ++i) s = s + a[i] * b[i];
  return s;
}

// g-inner product of (contravariant) vectors.
template <class T>
T inner(const MatN<T>& g, const VecN<T>& u, const VecN<T>& v) {
  T s{};
  const int n = g.rows();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) s = s + g(i, j) * u[i] * v[j];
  return s;
}

template <class T>
MatN<T> values_of(const MatN<Jet2<T>>& m) {
  MatN<T> r(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j) = m(i, j).value();
  return r;
}

template <class T>
VecN<T> values_of(const VecN<Jet2<T>>& v) {
  VecN<T> r(v.size());
  for (size_t i = 0; i < v.size(); ++i) r[i] = v[i].value();
  return r;
}

inline double frob_norm(const MatN<double>& m) {
  double s = 0.0;
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) s += m(i, j) * m(i, j);
  return std::sqrt(s);
}

inline double frob_norm(const Tensor3<double>& t) {
  double s = 0.0;
  const int n = t.dim();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) s += t(i, j, k) * t(i, j, k);
  return std::sqrt(s);
}

inline double norm2(const VecN<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace atensor
