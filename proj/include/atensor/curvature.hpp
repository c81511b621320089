#pragma once

#include <cmath>
#include <vector>

#include "atensor/chart.hpp"

namespace atensor {

// ---------------------------------------------------------------------------
// Levi-Civita connection and curvature over an arbitrary scalar ring T.
//
// The metric is evaluated with coordinate jets one level above T, so Gamma
// comes out with trustworthy value and first-partial slots (its Hessian slot
// would need third metric derivatives and must not be consumed). Curvature is
// then assembled from Gamma values and Gamma first partials in plain T
// arithmetic.
//
// Sign conventions, fixed so round spheres get positive curvature:
//   R(X,Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_{[X,Y]} Z
//   riem(l,i,j,k) = [R(d_i, d_j) d_k]^l
//   ricci_ij = sum_k riem(k,k,i,j),  scalar = g^{ij} ricci_ij
// ---------------------------------------------------------------------------

template <class T>
struct ConnectionJets {
  MatN<Jet2<T>> g;      // metric with coordinate jets
  MatN<Jet2<T>> ginv;   // inverse in the jet ring
  Tensor3<Jet2<T>> gamma;  // Gamma^k_{ij}; value and grad slots valid
};

template <class T>
ConnectionJets<T> connection_jets(const ChartPatch& patch, const VecN<T>& x) {
  const int n = patch.dim();
  ConnectionJets<T> out;
  out.g = patch.metric_jets(x);
  out.ginv = inverse(out.g);
  out.gamma = Tensor3<Jet2<T>>(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      // d-reduced jets of the three metric partials entering Gamma
      std::vector<Jet2<T>> bracket(static_cast<size_t>(n));
      for (int l = 0; l < n; ++l)
        bracket[l] = partial_jet(out.g(j, l), i) + partial_jet(out.g(i, l), j) -
                     partial_jet(out.g(i, j), l);
      for (int k = 0; k < n; ++k) {
        Jet2<T> s{};
        for (int l = 0; l < n; ++l) s += out.ginv(k, l) * bracket[l];
        s = s * 0.5;
        out.gamma(k, i, j) = s;
        out.gamma(k, j, i) = s;
      }
    }
  return out;
}

// Gamma values only (no partials); the cheap path for geodesic integration.
inline Tensor3<double> christoffel_values(const ChartPatch& patch,
                                          const VecN<double>& x) {
  const int n = patch.dim();
  auto gj = patch.metric_jets(x);
  MatN<double> ginv = inverse(values_of(gj));
  Tensor3<double> gamma(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int l = 0; l < n; ++l)
          s += ginv(k, l) *
               (gj(j, l).grad(i) + gj(i, l).grad(j) - gj(i, j).grad(l));
        gamma(k, i, j) = 0.5 * s;
        gamma(k, j, i) = gamma(k, i, j);
      }
  return gamma;
}

struct ChristoffelData {
  Tensor3<double> gamma;  // Gamma^k_{ij}
};

inline ChristoffelData christoffel(const ChartPatch& patch,
                                   const VecN<double>& x) {
  patch.require_interior(x);
  require_well_conditioned(values_of(patch.metric_jets(x)));
  return ChristoffelData{christoffel_values(patch, x)};
}

// Residual of metric compatibility nabla g = 0 (identically zero
// analytically; measures jet/linear-algebra roundoff).
inline double metric_compatibility_residual(const ChartPatch& patch,
                                            const VecN<double>& x) {
  const int n = patch.dim();
  auto gj = patch.metric_jets(x);
  auto gamma = christoffel_values(patch, x);
  double worst = 0.0;
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        double v = gj(i, j).grad(a);
        for (int m = 0; m < n; ++m)
          v -= gamma(m, a, i) * gj(m, j).value() +
               gamma(m, a, j) * gj(i, m).value();
        worst = std::max(worst, std::abs(v));
      }
  return worst;
}

template <class T>
struct CurvatureRing {
  Tensor4<T> riemann;
  MatN<T> ricci;
  T scalar;
  MatN<T> g;
  MatN<T> ginv;
};

template <class T>
CurvatureRing<T> curvature_in_ring(const ChartPatch& patch, const VecN<T>& x) {
  const int n = patch.dim();
  auto cj = connection_jets(patch, x);
  CurvatureRing<T> out;
  out.riemann = Tensor4<T>(n);
  out.ricci = MatN<T>(n, n);
  out.g = values_of(cj.g);
  out.ginv = values_of(cj.ginv);
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          T r = cj.gamma(l, j, k).grad(i) - cj.gamma(l, i, k).grad(j);
          for (int m = 0; m < n; ++m)
            r = r + cj.gamma(l, i, m).value() * cj.gamma(m, j, k).value() -
                cj.gamma(l, j, m).value() * cj.gamma(m, i, k).value();
          out.riemann(l, i, j, k) = r;
        }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      T s{};
      for (int k = 0; k < n; ++k) s = s + out.riemann(k, k, i, j);
      out.ricci(i, j) = s;
    }
  T tau{};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      tau = tau + out.ginv(i, j) * out.ricci(i, j);
  out.scalar = tau;
  return out;
}

struct CurvatureData {
  Tensor4<double> riemann;  // riem(l,i,j,k) = [R(d_i,d_j)d_k]^l
  MatN<double> ricci;       // rho_ij
  double scalar = 0.0;      // tau
};

inline CurvatureData riemann(const ChartPatch& patch, const VecN<double>& x) {
  patch.require_interior(x);
  auto cr = curvature_in_ring<double>(patch, x);
  require_well_conditioned(cr.g);
  return CurvatureData{std::move(cr.riemann), std::move(cr.ricci), cr.scalar};
}

inline double bianchi_residual(const CurvatureData& c) {
  const int n = c.ricci.rows();
  double scale = 0.0, worst = 0.0;
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          scale = std::max(scale, std::abs(c.riemann(l, i, j, k)));
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          worst = std::max(worst,
                           std::abs(c.riemann(l, i, j, k) +
                                    c.riemann(l, j, k, i) +
                                    c.riemann(l, k, i, j)));
  return worst / std::max(scale, 1e-12);
}

inline double pair_antisymmetry_residual(const CurvatureData& c,
                                         const MatN<double>& g) {
  const int n = c.ricci.rows();
  double scale = 0.0, worst = 0.0;
  // lowered tensor R_{lijk}
  Tensor4<double> low(n);
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) {
          double s = 0.0;
          for (int m = 0; m < n; ++m) s += g(l, m) * c.riemann(m, i, j, k);
          low(l, i, j, k) = s;
          scale = std::max(scale, std::abs(s));
        }
  for (int l = 0; l < n; ++l)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          worst = std::max(worst,
                           std::abs(low(l, i, j, k) + low(l, j, i, k)));
  return worst / std::max(scale, 1e-12);
}

// K(u ^ v) = <R(u,v)v, u> / (|u|^2 |v|^2 - <u,v>^2)
inline double sectional_curvature(const ChartPatch& patch,
                                  const VecN<double>& x,
                                  const VecN<double>& u,
                                  const VecN<double>& v) {
  const int n = patch.dim();
  auto c = riemann(patch, x);
  MatN<double> g = patch.metric_value(x);
  double uu = inner(g, u, u), vv = inner(g, v, v), uv = inner(g, u, v);
  double denom = uu * vv - uv * uv;
  if (denom < 1e-12 * uu * vv)
    throw degenerate_plane_error("sectional plane is degenerate");
  VecN<double> rv(static_cast<size_t>(n), 0.0);
  for (int l = 0; l < n; ++l) {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          s += c.riemann(l, i, j, k) * u[i] * v[j] * v[k];
    rv[l] = s;
  }
  return inner(g, rv, u) / denom;
}

// ---------------------------------------------------------------------------
// Covariant derivatives of fields. Derivative index comes first, matching
// the slot-0 convention nabla T(X0, X1, ..) = (nabla_{X0} T)(X1, ..).
// ---------------------------------------------------------------------------

// Gamma values in the ring T (value slots of the jet computation).
template <class T>
Tensor3<T> christoffel_ring_values(const ChartPatch& patch, const VecN<T>& x) {
  const int n = patch.dim();
  auto cj = connection_jets(patch, x);
  Tensor3<T> gamma(n);
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) gamma(k, i, j) = cj.gamma(k, i, j).value();
  return gamma;
}

// (nabla_a X)^k, returned as out(a, k).
template <class T>
MatN<T> nabla_vector(const ChartPatch& patch, const VecN<T>& x,
                     const VectorField& field) {
  const int n = patch.dim();
  auto xi = field.eval(seed_point(x));
  auto gamma = christoffel_ring_values(patch, x);
  MatN<T> out(n, n);
  for (int a = 0; a < n; ++a)
    for (int k = 0; k < n; ++k) {
      T s = xi[k].grad(a);
      for (int m = 0; m < n; ++m) s = s + gamma(k, a, m) * xi[m].value();
      out(a, k) = s;
    }
  return out;
}

// (nabla_a theta)_j, returned as out(a, j).
template <class T>
MatN<T> nabla_form(const ChartPatch& patch, const VecN<T>& x,
                   const OneFormField& field) {
  const int n = patch.dim();
  auto th = field.eval(seed_point(x));
  auto gamma = christoffel_ring_values(patch, x);
  MatN<T> out(n, n);
  for (int a = 0; a < n; ++a)
    for (int j = 0; j < n; ++j) {
      T s = th[j].grad(a);
      for (int m = 0; m < n; ++m) s = s - gamma(m, a, j) * th[m].value();
      out(a, j) = s;
    }
  return out;
}

// (nabla_a S)^i_j for an endomorphism field, returned as out(a, i, j).
template <class T>
Tensor3<T> nabla_endo(const ChartPatch& patch, const VecN<T>& x,
                      const EndoField& field) {
  const int n = patch.dim();
  auto sj = field.eval(seed_point(x));
  auto gamma = christoffel_ring_values(patch, x);
  Tensor3<T> out(n);
  for (int a = 0; a < n; ++a)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        T s = sj(i, j).grad(a);
        for (int m = 0; m < n; ++m)
          s = s + gamma(i, a, m) * sj(m, j).value() -
              gamma(m, a, j) * sj(i, m).value();
        out(a, i, j) = s;
      }
  return out;
}

// (nabla_a Omega)_{bc} for a covariant 2-tensor field, out(a, b, c).
template <class T>
Tensor3<T> nabla_bilinear(const ChartPatch& patch, const VecN<T>& x,
                          const TwoFormField& field) {
  const int n = patch.dim();
  auto om = field.eval(seed_point(x));
  auto gamma = christoffel_ring_values(patch, x);
  Tensor3<T> out(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        T s = om(b, c).grad(a);
        for (int m = 0; m < n; ++m)
          s = s - gamma(m, a, b) * om(m, c).value() -
              gamma(m, a, c) * om(b, m).value();
        out(a, b, c) = s;
      }
  return out;
}

// nabla Phi for Phi(X,Y) = <S X, Y>: lowers S in the jet ring first so the
// metric's own derivatives are carried through. out(a, b, c) = nabla_a Phi_bc.
template <class T>
Tensor3<T> nabla_phi_of_endo(const ChartPatch& patch, const VecN<T>& x,
                             const EndoField& sfield) {
  const int n = patch.dim();
  auto xj = seed_point(x);
  auto gj = patch.metric(xj);
  auto sj = sfield.eval(xj);
  MatN<Jet2<T>> phi(n, n);
  for (int b = 0; b < n; ++b)
    for (int c = 0; c < n; ++c) {
      Jet2<T> s{};
      for (int m = 0; m < n; ++m) s += gj(b, m) * sj(m, c);
      phi(b, c) = s;
    }
  auto gamma = christoffel_ring_values(patch, x);
  Tensor3<T> out(n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        T s = phi(b, c).grad(a);
        for (int m = 0; m < n; ++m)
          s = s - gamma(m, a, b) * phi(m, c).value() -
              gamma(m, a, c) * phi(b, m).value();
        out(a, b, c) = s;
      }
  return out;
}

// ---------------------------------------------------------------------------
// Generic tensor fields of valence (p, q): components in one flat array,
// contravariant indices first, row-major base-n digits.
// ---------------------------------------------------------------------------

struct TensorField {
  int p = 0, q = 0;
  Erased3<VecN> comps;

  template <class F>
  static TensorField make(int p, int q, F f) {
    return {p, q, Erased3<VecN>::deep(std::move(f))};
  }
};

namespace detail {
inline void decode_index(size_t flat, int rank, int n, int* digits) {
  for (int s = rank - 1; s >= 0; --s) {
    digits[s] = static_cast<int>(flat % static_cast<size_t>(n));
    flat /= static_cast<size_t>(n);
  }
}
inline size_t encode_index(const int* digits, int rank, int n) {
  size_t flat = 0;
  for (int s = 0; s < rank; ++s)
    flat = flat * static_cast<size_t>(n) + static_cast<size_t>(digits[s]);
  return flat;
}
}  // namespace detail

// nabla T with the new covariant slot in position 0:
// out[a, I] = d_a T[I] + sum_contra Gamma^{i_s}_{a m} T[..m..]
//           - sum_cov   Gamma^{m}_{a j_s} T[..m..]
inline VecN<double> covariant_derivative(const ChartPatch& patch,
                                         const VecN<double>& x,
                                         const TensorField& field) {
  const int n = patch.dim();
  const int rank = field.p + field.q;
  auto tj = field.comps.operator()(seed_point(x));
  auto gamma = christoffel_values(patch, x);
  size_t count = 1;
  for (int s = 0; s < rank; ++s) count *= static_cast<size_t>(n);
  VecN<double> out(count * static_cast<size_t>(n), 0.0);
  std::vector<int> digits(static_cast<size_t>(rank), 0);
  std::vector<int> tmp(static_cast<size_t>(rank), 0);
  for (size_t flat = 0; flat < count; ++flat) {
    detail::decode_index(flat, rank, n, digits.data());
    for (int a = 0; a < n; ++a) {
      double s = tj[flat].grad(a);
      for (int slot = 0; slot < rank; ++slot) {
        const bool contra = slot < field.p;
        for (int m = 0; m < n; ++m) {
          tmp = digits;
          tmp[static_cast<size_t>(slot)] = m;
          size_t other = detail::encode_index(tmp.data(), rank, n);
          double t = tj[other].value();
          if (contra)
            s += gamma(digits[static_cast<size_t>(slot)], a, m) * t;
          else
            s -= gamma(m, a, digits[static_cast<size_t>(slot)]) * t;
        }
      }
      out[static_cast<size_t>(a) * count + flat] = s;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Lie and exterior calculus.
// ---------------------------------------------------------------------------

// (L_xi g)_ij = nabla_i xi_j + nabla_j xi_i
inline MatN<double> lie_derivative_metric(const ChartPatch& patch,
                                          const VecN<double>& x,
                                          const VectorField& xi) {
  const int n = patch.dim();
  auto dxi = nabla_vector(patch, x, xi);
  MatN<double> g = patch.metric_value(x);
  MatN<double> out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        s += g(j, k) * dxi(i, k) + g(i, k) * dxi(j, k);
      out(i, j) = s;
    }
  return out;
}

// (d theta)_ij = d_i theta_j - d_j theta_i  (no 1/2 factor)
inline MatN<double> exterior_derivative(const ChartPatch& patch,
                                        const VecN<double>& x,
                                        const OneFormField& theta) {
  const int n = patch.dim();
  patch.require_interior(x);
  auto th = theta.eval(seed_point(x));
  MatN<double> out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = th[j].grad(i) - th[i].grad(j);
  return out;
}

// delta Omega in coordinates: (delta Omega)_c = -g^{ab} (nabla_a Omega)_{bc}
inline VecN<double> codifferential_2form(const ChartPatch& patch,
                                         const VecN<double>& x,
                                         const TwoFormField& omega) {
  const int n = patch.dim();
  auto nab = nabla_bilinear(patch, x, omega);
  MatN<double> ginv = inverse(patch.metric_value(x));
  VecN<double> out(static_cast<size_t>(n), 0.0);
  for (int c = 0; c < n; ++c) {
    double s = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) s += ginv(a, b) * nab(a, b, c);
    out[c] = -s;
  }
  return out;
}

// Same contraction through an explicit orthonormal frame; used to check
// frame independence of the coordinate route.
inline VecN<double> codifferential_2form_frame(
    const ChartPatch& patch, const VecN<double>& x, const TwoFormField& omega,
    const std::vector<TangentVector>& frame) {
  const int n = patch.dim();
  auto nab = nabla_bilinear(patch, x, omega);
  VecN<double> out(static_cast<size_t>(n), 0.0);
  for (int c = 0; c < n; ++c) {
    double s = 0.0;
    for (const auto& e : frame)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          s += e.components[a] * e.components[b] * nab(a, b, c);
    out[c] = -s;
  }
  return out;
}

// Ricci as a bilinear form contracted through a frame:
// rho(X, Y) = sum_k <R(E_k, X) Y, E_k>. Cross-checks the coordinate trace.
inline MatN<double> ricci_via_frame(const ChartPatch& patch,
                                    const VecN<double>& x,
                                    const std::vector<TangentVector>& frame) {
  const int n = patch.dim();
  auto c = riemann(patch, x);
  MatN<double> g = patch.metric_value(x);
  MatN<double> out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (const auto& e : frame) {
        // [R(E, d_i) d_j]^l = E^a riem(l, a, i, j)
        VecN<double> rv(static_cast<size_t>(n), 0.0);
        for (int l = 0; l < n; ++l)
          for (int a = 0; a < n; ++a)
            rv[l] += c.riemann(l, a, i, j) * e.components[a];
        s += inner(g, rv, e.components);
      }
      out(i, j) = s;
    }
  return out;
}

// The Ricci endomorphism S = g^{-1} rho as a point-indexed field. Shallow:
// its evaluation already consumes two derivative levels of the metric.
inline EndoField ricci_endofield(const ChartPatch& patch) {
  return EndoField::make_shallow([patch](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    auto cr = curvature_in_ring<S>(patch, x);
    const int n = cr.ricci.rows();
    MatN<S> out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        S s{};
        for (int m = 0; m < n; ++m) s = s + cr.ginv(i, m) * cr.ricci(m, j);
        out(i, j) = s;
      }
    return out;
  });
}

}  // namespace atensor
