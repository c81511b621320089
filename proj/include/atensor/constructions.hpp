#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "atensor/analysis.hpp"

namespace atensor {

// ---------------------------------------------------------------------------
// Oracle geometries.
// ---------------------------------------------------------------------------

inline ChartPatch flat_patch(int n) {
  if (n < 1) throw usage_error("flat_patch requires n >= 1");
  Box box{VecN<double>(static_cast<size_t>(n), -1.0),
          VecN<double>(static_cast<size_t>(n), 1.0)};
  return ChartPatch::make(box, [n](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    (void)x;
    return MatN<S>::identity(n);
  });
}

// Round sphere of radius r in hyperspherical coordinates
// (chi_1, .., chi_{n-1}, phi): g = r^2 diag(1, sin^2 chi_1, ...,
// sin^2 chi_1 * .. * sin^2 chi_{n-1}).
inline ChartPatch round_sphere_patch(int n, double r) {
  if (n < 2 || r <= 0.0) throw usage_error("round_sphere_patch needs n >= 2, r > 0");
  VecN<double> lo(static_cast<size_t>(n), 0.2), hi(static_cast<size_t>(n));
  for (int i = 0; i < n - 1; ++i) hi[static_cast<size_t>(i)] = M_PI - 0.2;
  hi[static_cast<size_t>(n - 1)] = 2.0 * M_PI - 0.2;
  return ChartPatch::make(Box{lo, hi}, [n, r](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    MatN<S> g(n, n);
    S acc = ring_const<S>(r * r);
    g(0, 0) = acc;
    for (int i = 1; i < n; ++i) {
      S st = sin(x[static_cast<size_t>(i - 1)]);
      acc = acc * st * st;
      g(i, i) = acc;
    }
    return g;
  });
}

// Rotationally perturbed sphere metric diag(1, (1 + eps sin th)^2 sin^2 th):
// non-constant Gauss curvature for eps != 0, the negative control geometry.
inline ChartPatch perturbed_sphere_patch(double eps) {
  if (std::abs(eps) >= 0.5)
    throw usage_error("perturbed_sphere_patch needs |eps| < 0.5");
  Box box{{0.2, 0.2}, {M_PI - 0.2, 2.0 * M_PI - 0.2}};
  return ChartPatch::make(box, [eps](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    MatN<S> g(2, 2);
    g(0, 0) = ring_const<S>(1.0);
    S st = sin(x[0]);
    S f = (st * eps + 1.0) * st;
    g(1, 1) = f * f;
    return g;
  });
}

// ---------------------------------------------------------------------------
// Kaehler-Einstein bases. omega(X, Y) = <J X, Y>; the connection potential
// satisfies d a = -alpha omega on the chart, and alpha is measured from the
// computed Ricci tensor rather than hard-coded.
// ---------------------------------------------------------------------------

struct KaehlerBaseSpec {
  int complex_dim = 0;      // n
  ChartPatch patch;         // real dimension 2n
  EndoField J;
  TwoFormField omega;       // omega_bc = g(J e_b, e_c)
  OneFormField potential;   // a with d a = -alpha omega
  double tau_star = 0.0;    // measured
  double alpha = 0.0;       // tau_star / (2n)
  std::string name;
};

inline TwoFormField kaehler_form(const ChartPatch& patch, const EndoField& J) {
  return TwoFormField::make([patch, J](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    auto g = patch.metric(x);
    auto j = J.eval(x);
    const int n = g.rows();
    MatN<S> om(n, n);
    for (int b = 0; b < n; ++b)
      for (int c = 0; c < n; ++c) {
        S s{};
        for (int m = 0; m < n; ++m) s = s + g(m, c) * j(m, b);
        om(b, c) = s;
      }
    return om;
  });
}

// Measures tau_* across calibration points and enforces the Einstein
// condition rho = alpha g; a violation is a construction bug.
inline void calibrate_einstein(KaehlerBaseSpec& spec, int points = 40,
                               uint64_t seed = 42) {
  auto pts = sample_points(spec.patch, points, seed);
  const int n2 = spec.patch.dim();
  double tau_acc = 0.0;
  std::vector<CurvatureRing<double>> curvs(pts.size());
  parallel_for(static_cast<int>(pts.size()), [&](int i) {
    curvs[static_cast<size_t>(i)] =
        curvature_in_ring<double>(spec.patch, pts[static_cast<size_t>(i)]);
  });
  for (const auto& c : curvs) tau_acc += c.scalar;
  spec.tau_star = tau_acc / static_cast<double>(pts.size());
  spec.alpha = spec.tau_star / (2.0 * spec.complex_dim);
  for (size_t i = 0; i < pts.size(); ++i) {
    const auto& c = curvs[i];
    double num = 0.0, den = 0.0;
    for (int a = 0; a < n2; ++a)
      for (int b = 0; b < n2; ++b) {
        double d = c.ricci(a, b) - spec.alpha * c.g(a, b);
        num += d * d;
        den += c.g(a, b) * c.g(a, b);
      }
    if (std::sqrt(num) > 1e-8 * std::sqrt(den))
      throw evaluation_error(spec.name +
                             ": base metric failed the Einstein residual");
  }
}

// Residual of d a + alpha omega over sample points.
inline double potential_residual(const KaehlerBaseSpec& spec, int points = 20,
                                 uint64_t seed = 42) {
  double worst = 0.0;
  for (const auto& x : sample_points(spec.patch, points, seed)) {
    auto da = exterior_derivative(spec.patch, x, spec.potential);
    auto om = spec.omega.eval(x);
    auto frame = gram_schmidt_frame(spec.patch, x);
    worst = std::max(worst,
                     matrix_frame_norm(frame, da + om * spec.alpha));
  }
  return worst;
}

// Constant-curvature surface: round sphere for K > 0, hyperbolic upper
// half-plane chart for K < 0. J is the +90 degree rotation in the oriented
// orthonormal frame.
inline KaehlerBaseSpec surface_base(double K) {
  if (K == 0.0) throw usage_error("surface_base requires K != 0");
  KaehlerBaseSpec spec;
  spec.complex_dim = 1;
  spec.name = "surface";

  if (K > 0.0) {
    double r = 1.0 / std::sqrt(K);
    Box box{{0.2, 0.2}, {M_PI - 0.2, 2.0 * M_PI - 0.2}};
    spec.patch = ChartPatch::make(box, [r](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::value_type;
      MatN<S> g(2, 2);
      g(0, 0) = ring_const<S>(r * r);
      S st = sin(x[0]);
      g(1, 1) = st * st * (r * r);
      return g;
    }, {"theta", "phi"});
    // J d_theta = (1/sin) d_phi, J d_phi = -sin d_theta
    spec.J = EndoField::make([](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::value_type;
      MatN<S> j(2, 2);
      S st = sin(x[0]);
      j(1, 0) = ring_const<S>(1.0) / st;
      j(0, 1) = -st;
      return j;
    });
    calibrate_einstein(spec);
    double aK = spec.alpha / K;
    spec.potential = OneFormField::make([aK](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::value_type;
      VecN<S> a(2);
      a[0] = S{};
      a[1] = cos(x[0]) * aK;
      return a;
    });
  } else {
    double ik = 1.0 / std::abs(K);
    Box box{{-1.0, 0.5}, {1.0, 2.0}};
    spec.patch = ChartPatch::make(box, [ik](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::value_type;
      MatN<S> g(2, 2);
      S f = ring_const<S>(ik) / (x[1] * x[1]);
      g(0, 0) = f;
      g(1, 1) = f;
      return g;
    }, {"x", "y"});
    spec.J = EndoField::make([](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::value_type;
      (void)x;
      MatN<S> j(2, 2);
      j(1, 0) = ring_const<S>(1.0);
      j(0, 1) = ring_const<S>(-1.0);
      return j;
    });
    calibrate_einstein(spec);
    double aK = spec.alpha / std::abs(K);
    spec.potential = OneFormField::make([aK](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::value_type;
      VecN<S> a(2);
      a[0] = ring_const<S>(-aK) / x[1];  // a_x = -alpha / (|K| y)
      a[1] = S{};
      return a;
    });
  }
  spec.omega = kaehler_form(spec.patch, spec.J);
  return spec;
}

// Fubini-Study metric on the affine chart of CP^n, real coordinates
// (x_1..x_n, y_1..y_n), Kaehler potential log(1 + |z|^2). Holomorphic
// sectional curvature 4, so the measured alpha is 2(n+1).
inline KaehlerBaseSpec fubini_study_base(int n) {
  if (n < 1) throw usage_error("fubini_study_base requires n >= 1");
  KaehlerBaseSpec spec;
  spec.complex_dim = n;
  spec.name = "fubini-study";
  const int n2 = 2 * n;
  Box box{VecN<double>(static_cast<size_t>(n2), -0.7),
          VecN<double>(static_cast<size_t>(n2), 0.7)};

  spec.patch = ChartPatch::make(box, [n](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    const int n2 = 2 * n;
    S s{};
    for (int i = 0; i < n2; ++i) s = s + x[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
    S w = ring_const<S>(1.0) + s;
    S iw2 = ring_const<S>(1.0) / (w * w);
    MatN<S> g(n2, n2);
    // A_jk = [delta_jk (1+s) - (x_j x_k + y_j y_k)] / (1+s)^2
    // B_jk = (x_k y_j - x_j y_k) / (1+s)^2
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const auto& xj = x[static_cast<size_t>(j)];
        const auto& xk = x[static_cast<size_t>(k)];
        const auto& yj = x[static_cast<size_t>(n + j)];
        const auto& yk = x[static_cast<size_t>(n + k)];
        S ajk = (xj * xk + yj * yk) * (-1.0);
        if (j == k) ajk = ajk + w;
        ajk = ajk * iw2;
        S bjk = (xk * yj - xj * yk) * iw2;
        g(j, k) = ajk;
        g(n + j, n + k) = ajk;
        g(j, n + k) = bjk;
        g(n + k, j) = bjk;
      }
    return g;
  });

  // J d_x_j = -d_y_j, J d_y_j = +d_x_j (paired with the metric's B-block
  // orientation so that nabla J = 0).
  spec.J = EndoField::make([n](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    (void)x;
    const int n2 = 2 * n;
    MatN<S> j(n2, n2);
    for (int k = 0; k < n; ++k) {
      j(n + k, k) = ring_const<S>(-1.0);
      j(k, n + k) = ring_const<S>(1.0);
    }
    return j;
  });

  calibrate_einstein(spec);
  double al = spec.alpha;
  spec.potential = OneFormField::make([n, al](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    const int n2 = 2 * n;
    S s{};
    for (int i = 0; i < n2; ++i)
      s = s + x[static_cast<size_t>(i)] * x[static_cast<size_t>(i)];
    S f = ring_const<S>(0.5 * al) / (ring_const<S>(1.0) + s);
    VecN<S> a(static_cast<size_t>(n2));
    for (int j = 0; j < n; ++j) {
      a[static_cast<size_t>(j)] = -(f * x[static_cast<size_t>(n + j)]);  // a_{x_j} = -f y_j
      a[static_cast<size_t>(n + j)] = f * x[static_cast<size_t>(j)];     // a_{y_j} = +f x_j
    }
    return a;
  });
  spec.omega = kaehler_form(spec.patch, spec.J);
  return spec;
}

// ---------------------------------------------------------------------------
// Circle-bundle metric g_c = c^2 theta_bar (x) theta_bar + p* g_*
// on the local trivialization U x S^1 with theta_bar = dt + a.
// ---------------------------------------------------------------------------

struct BergerBundleSpec {
  KaehlerBaseSpec base;
  double c = 1.0;
  ChartPatch patch;         // dim 2n + 1, coordinates (base.., t)
  OneFormField theta_bar;   // dt + a
  OneFormField theta;       // c * theta_bar
  VectorField xi;           // (1/c) d_t
  OneFormField potential;   // the base potential a, pulled back
};

inline BergerBundleSpec berger_bundle(const KaehlerBaseSpec& base, double c) {
  if (c <= 0.0) throw usage_error("berger_bundle requires c > 0");
  if (potential_residual(base) > 1e-9)
    throw potential_error("connection potential fails d a = -alpha omega");

  BergerBundleSpec spec;
  spec.base = base;
  spec.c = c;

  const int m = base.patch.dim();
  const int dim = m + 1;
  VecN<double> lo = base.patch.domain.lo, hi = base.patch.domain.hi;
  lo.push_back(0.0);
  hi.push_back(1.0);
  Box box{lo, hi, base.patch.domain.margin};

  auto base_patch = base.patch;
  auto pot = base.potential;

  auto names = base.patch.coordinate_names;
  if (!names.empty()) names.push_back("t");

  spec.patch = ChartPatch::make(box, [base_patch, pot, c, m](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    VecN<S> xb(x.begin(), x.begin() + m);
    auto gstar = base_patch.metric(xb);
    auto a = pot.eval(xb);
    const double c2 = c * c;
    MatN<S> g(m + 1, m + 1);
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < m; ++j)
        g(i, j) = gstar(i, j) + a[static_cast<size_t>(i)] *
                                    a[static_cast<size_t>(j)] * c2;
      g(i, m) = a[static_cast<size_t>(i)] * c2;
      g(m, i) = g(i, m);
    }
    g(m, m) = ring_const<S>(c2);
    return g;
  }, names);

  spec.theta_bar = OneFormField::make([pot, m](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    VecN<S> xb(x.begin(), x.begin() + m);
    auto a = pot.eval(xb);
    VecN<S> th(static_cast<size_t>(m + 1));
    for (int i = 0; i < m; ++i) th[static_cast<size_t>(i)] = a[static_cast<size_t>(i)];
    th[static_cast<size_t>(m)] = ring_const<S>(1.0);
    return th;
  });
  spec.theta = OneFormField::make([pot, m, c](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    VecN<S> xb(x.begin(), x.begin() + m);
    auto a = pot.eval(xb);
    VecN<S> th(static_cast<size_t>(m + 1));
    for (int i = 0; i < m; ++i)
      th[static_cast<size_t>(i)] = a[static_cast<size_t>(i)] * c;
    th[static_cast<size_t>(m)] = ring_const<S>(c);
    return th;
  });
  spec.xi = VectorField::make([m, c](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    (void)x;
    VecN<S> v(static_cast<size_t>(m + 1));
    v[static_cast<size_t>(m)] = ring_const<S>(1.0 / c);
    return v;
  });
  spec.potential = OneFormField::make([pot, m](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    VecN<S> xb(x.begin(), x.begin() + m);
    auto a = pot.eval(xb);
    VecN<S> out(static_cast<size_t>(m + 1));
    for (int i = 0; i < m; ++i) out[static_cast<size_t>(i)] = a[static_cast<size_t>(i)];
    return out;
  });
  (void)dim;
  return spec;
}

// Direct evaluation of formula (g): c^2 theta_bar(e_a) theta_bar(e_b) +
// g_*(dp e_a, dp e_b). Alternative assembly used to cross-check the block
// construction entrywise.
inline MatN<double> berger_metric_formula_g(const BergerBundleSpec& spec,
                                            const VecN<double>& x) {
  const int m = spec.base.patch.dim();
  VecN<double> xb(x.begin(), x.begin() + m);
  auto th = spec.theta_bar.eval(x);
  auto gstar = spec.base.patch.metric_value(xb);
  MatN<double> g(m + 1, m + 1);
  for (int a = 0; a <= m; ++a)
    for (int b = 0; b <= m; ++b) {
      double v = spec.c * spec.c * th[static_cast<size_t>(a)] *
                 th[static_cast<size_t>(b)];
      if (a < m && b < m) v += gstar(a, b);
      g(a, b) = v;
    }
  return g;
}

// Horizontal lift of a base tangent vector at x (theta_bar annihilates it).
inline VecN<double> horizontal_lift(const BergerBundleSpec& spec,
                                    const VecN<double>& x,
                                    const VecN<double>& base_vec) {
  const int m = spec.base.patch.dim();
  auto th = spec.theta_bar.eval(x);
  VecN<double> out(static_cast<size_t>(m + 1), 0.0);
  double pairing = 0.0;
  for (int i = 0; i < m; ++i) {
    out[static_cast<size_t>(i)] = base_vec[static_cast<size_t>(i)];
    pairing += th[static_cast<size_t>(i)] * base_vec[static_cast<size_t>(i)];
  }
  out[static_cast<size_t>(m)] = -pairing;
  return out;
}

// Horizontal projection of a vector field: H F = F - <F, xi> xi.
inline VectorField horizontal_projection(const BergerBundleSpec& spec,
                                         const VectorField& f) {
  auto patch = spec.patch;
  auto xi = spec.xi;
  return VectorField::make_shallow([patch, xi, f](const auto& y) {
    using S = typename std::decay_t<decltype(y)>::value_type;
    auto g = patch.metric(y);
    auto xv = xi.eval(y);
    auto fv = f.eval(y);
    S ip = inner(g, fv, xv);
    const int d = g.rows();
    VecN<S> out(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i)
      out[static_cast<size_t>(i)] =
          fv[static_cast<size_t>(i)] - ip * xv[static_cast<size_t>(i)];
    return out;
  });
}

inline VectorField vertical_projection(const BergerBundleSpec& spec,
                                       const VectorField& f) {
  auto patch = spec.patch;
  auto xi = spec.xi;
  return VectorField::make_shallow([patch, xi, f](const auto& y) {
    using S = typename std::decay_t<decltype(y)>::value_type;
    auto g = patch.metric(y);
    auto xv = xi.eval(y);
    auto fv = f.eval(y);
    S ip = inner(g, fv, xv);
    const int d = g.rows();
    VecN<S> out(static_cast<size_t>(d));
    for (int i = 0; i < d; ++i)
      out[static_cast<size_t>(i)] = ip * xv[static_cast<size_t>(i)];
    return out;
  });
}

inline VectorField constant_field(int dim, const VecN<double>& comps) {
  return VectorField::make([dim, comps](const auto& y) {
    using S = typename std::decay_t<decltype(y)>::value_type;
    (void)y;
    VecN<S> out(static_cast<size_t>(dim));
    for (int i = 0; i < dim; ++i)
      out[static_cast<size_t>(i)] = ring_const<S>(comps[static_cast<size_t>(i)]);
    return out;
  });
}

inline VecN<double> unit_coord(int dim, int c) {
  VecN<double> v(static_cast<size_t>(dim), 0.0);
  v[static_cast<size_t>(c)] = 1.0;
  return v;
}

// ---------------------------------------------------------------------------
// O'Neill A-tensor of the submersion: A_E F = V(nabla_{HE} HF) + H(nabla_{HE} VF).
// ---------------------------------------------------------------------------

struct OneillReport {
  double eq31_residual = 0.0;        // A_EF = <E,TF> xi + <xi,F> TE
  double eq32_residual = 0.0;        // |A_UV|^2 = <V, TU>^2
  double eq32_value = 0.0;           // measured |A_UV|^2, unit orthogonal U,V
  double a_vertical_residual = 0.0;  // A_UV + 1/2 Omega(U,V) xi
  double a_xixi_residual = 0.0;      // A_xi xi = 0
  double fiber_geodesic_residual = 0.0;  // |nabla_xi xi|
};

inline OneillReport oneill_A_check(const BergerBundleSpec& spec,
                                   const std::vector<VecN<double>>& samples) {
  const int dim = spec.patch.dim();
  EndoField tf = deformation_tensor(spec.patch, spec.xi);
  std::vector<OneillReport> per(samples.size());

  parallel_for(static_cast<int>(samples.size()), [&](int idx) {
    const auto& x = samples[static_cast<size_t>(idx)];
    OneillReport& r = per[static_cast<size_t>(idx)];
    MatN<double> g = spec.patch.metric_value(x);
    VecN<double> xv = spec.xi.eval(x);
    MatN<double> t = tf.eval(x);
    auto gamma = christoffel_values(spec.patch, x);

    auto covariant_along = [&](const VecN<double>& dir,
                               const VectorField& field) {
      auto js = field.eval(seed_point(x));
      VecN<double> out(static_cast<size_t>(dim), 0.0);
      for (int k = 0; k < dim; ++k) {
        double s = 0.0;
        for (int a = 0; a < dim; ++a) {
          s += dir[static_cast<size_t>(a)] * js[k].grad(a);
          for (int m = 0; m < dim; ++m)
            s += dir[static_cast<size_t>(a)] * gamma(k, a, m) * js[m].value();
        }
        out[static_cast<size_t>(k)] = s;
      }
      return out;
    };

    double tscale = std::max(frob_norm(t), 1e-12);

    // definitional A_EF vs (3.1) for coordinate fields E, F
    for (int ec = 0; ec < dim; ++ec)
      for (int fc = 0; fc < dim; ++fc) {
        VectorField E = constant_field(dim, unit_coord(dim, ec));
        VectorField F = constant_field(dim, unit_coord(dim, fc));
        auto HE = horizontal_projection(spec, E);
        auto HF = horizontal_projection(spec, F);
        auto VF = vertical_projection(spec, F);
        VecN<double> he = HE.eval(x);

        auto term1 = covariant_along(he, HF);
        auto term2 = covariant_along(he, VF);
        // vertical part of term1 + horizontal part of term2
        double ip1 = inner(g, term1, xv);
        VecN<double> a_def(static_cast<size_t>(dim));
        double ip2 = inner(g, term2, xv);
        for (int k = 0; k < dim; ++k)
          a_def[static_cast<size_t>(k)] =
              ip1 * xv[static_cast<size_t>(k)] +
              (term2[static_cast<size_t>(k)] - ip2 * xv[static_cast<size_t>(k)]);

        // rhs of (3.1) with the plain coordinate vectors
        VecN<double> e = unit_coord(dim, ec), f = unit_coord(dim, fc);
        auto tfv = t.apply(f);
        auto te = t.apply(e);
        double c1 = inner(g, e, tfv);
        double c2 = inner(g, xv, f);
        VecN<double> a_rhs(static_cast<size_t>(dim));
        for (int k = 0; k < dim; ++k)
          a_rhs[static_cast<size_t>(k)] =
              c1 * xv[static_cast<size_t>(k)] + c2 * te[static_cast<size_t>(k)];

        VecN<double> diff(static_cast<size_t>(dim));
        for (int k = 0; k < dim; ++k)
          diff[static_cast<size_t>(k)] =
              a_def[static_cast<size_t>(k)] - a_rhs[static_cast<size_t>(k)];
        r.eq31_residual = std::max(r.eq31_residual,
                                   vector_g_norm(g, diff) / tscale);
      }

    // unit horizontal orthonormal pair from a frame with xi first
    std::vector<VecN<double>> seeds;
    seeds.push_back(xv);
    for (int c = 0; c < dim; ++c) seeds.push_back(unit_coord(dim, c));
    std::vector<TangentVector> frame;
    {
      // drop the seed that degenerates against xi
      for (int drop = dim; drop >= 0; --drop) {
        std::vector<VecN<double>> trial(seeds.begin(), seeds.end());
        if (drop < dim) trial.erase(trial.begin() + 1 + drop);
        try {
          frame = gram_schmidt_frame(spec.patch, x, trial);
          break;
        } catch (const degenerate_frame_error&) {
          continue;
        }
      }
    }
    const VecN<double>& u = frame[1].components;
    const VecN<double>& v = frame[2].components;

    auto a_uv = [&](const VecN<double>& uu, const VecN<double>& vv) {
      VectorField V = constant_field(dim, vv);
      auto HV = horizontal_projection(spec, V);
      auto nuv = covariant_along(uu, HV);
      double ip = inner(g, nuv, xv);
      VecN<double> out(static_cast<size_t>(dim));
      for (int k = 0; k < dim; ++k)
        out[static_cast<size_t>(k)] = ip * xv[static_cast<size_t>(k)];
      return out;
    };

    auto auv = a_uv(u, v);
    double auv2 = inner(g, auv, auv);
    r.eq32_value = std::max(r.eq32_value, auv2);
    double vtu = inner(g, v, t.apply(u));
    r.eq32_residual = std::max(r.eq32_residual, std::abs(auv2 - vtu * vtu));

    // A_UV = -1/2 Omega(U, V) xi with Omega = d theta
    auto om = exterior_derivative(spec.patch, x, spec.theta);
    double omuv = 0.0;
    for (int a = 0; a < dim; ++a)
      for (int b = 0; b < dim; ++b)
        omuv += om(a, b) * u[static_cast<size_t>(a)] * v[static_cast<size_t>(b)];
    VecN<double> diff(static_cast<size_t>(dim));
    for (int k = 0; k < dim; ++k)
      diff[static_cast<size_t>(k)] =
          auv[static_cast<size_t>(k)] + 0.5 * omuv * xv[static_cast<size_t>(k)];
    r.a_vertical_residual =
        std::max(r.a_vertical_residual, vector_g_norm(g, diff));

    // A_xi xi = 0 and totally geodesic fibers
    auto a_xixi_term = covariant_along(xv, horizontal_projection(spec, spec.xi));
    r.a_xixi_residual = vector_g_norm(g, a_xixi_term);
    auto nxixi = covariant_along(xv, spec.xi);
    r.fiber_geodesic_residual = vector_g_norm(g, nxixi);
  });

  OneillReport rep;
  for (const auto& r : per) {
    rep.eq31_residual = std::max(rep.eq31_residual, r.eq31_residual);
    rep.eq32_residual = std::max(rep.eq32_residual, r.eq32_residual);
    rep.eq32_value = std::max(rep.eq32_value, r.eq32_value);
    rep.a_vertical_residual =
        std::max(rep.a_vertical_residual, r.a_vertical_residual);
    rep.a_xixi_residual = std::max(rep.a_xixi_residual, r.a_xixi_residual);
    rep.fiber_geodesic_residual =
        std::max(rep.fiber_geodesic_residual, r.fiber_geodesic_residual);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// The full eigenvalue certificate for the bundle metric: predicted Ricci
// eigenvalues lambda = n c^2 alpha^2 / 2 (vertical) and
// mu = alpha (1 - c^2 alpha / 2) (horizontal), the scalar identity
// tau = tau_* - |T|^2, the T~ = -(c alpha / 2) J match, coclosedness of the
// projected 2-form, the cyclic condition for the Ricci endomorphism, and
// properness away from the Einstein threshold c^2 = 2 / ((n+1) alpha).
// ---------------------------------------------------------------------------

struct Theorem33Certificate {
  double alpha = 0.0, tau_star = 0.0, c = 0.0;
  double lambda_formula = 0.0, mu_formula = 0.0;
  bool einstein_case = false;
  double lambda_measured = 0.0, mu_measured = 0.0;
  double lambda_max_err = 0.0, mu_max_err = 0.0;
  int multiplicity_lambda = 0, multiplicity_mu = 0;
  bool multiplicities_ok = false;
  double xi_alignment_residual = 0.0;   // sin of angle(v_lambda, xi)
  double horizontal_residual = 0.0;     // |<v_mu, xi>|
  double tau_identity_residual = 0.0;   // tau - (tau_* - |T|^2)
  double tau_measured = 0.0;
  double t_norm_sq = 0.0;
  double t_norm_sq_err = 0.0;           // vs n c^2 alpha^2 / 2
  double t_tilde_j_residual = 0.0;      // T~ + (c alpha / 2) J
  double a_condition = 0.0;
  double einstein_total_residual = 0.0; // |rho - lambda g| when einstein
  double delta_omega_residual = 0.0;    // codifferential of Omega~ on the base
  PropernessCertificate properness;
  bool proper_expected = false;
};

inline Theorem33Certificate theorem_3_3_certificate(
    const BergerBundleSpec& spec, const std::vector<VecN<double>>& samples,
    uint64_t seed = 42) {
  Theorem33Certificate cert;
  const int n = spec.base.complex_dim;
  const int dim = spec.patch.dim();
  const int m = 2 * n;
  cert.alpha = spec.base.alpha;
  cert.tau_star = spec.base.tau_star;
  cert.c = spec.c;
  const double a = cert.alpha, c = spec.c;
  cert.lambda_formula = 0.5 * n * c * c * a * a;
  cert.mu_formula = a * (1.0 - 0.5 * c * c * a);
  cert.einstein_case =
      std::abs(cert.lambda_formula - cert.mu_formula) <=
      1e-9 * (std::abs(cert.lambda_formula) + std::abs(cert.mu_formula) + 1.0);
  cert.proper_expected = !cert.einstein_case;

  EndoField sfield = ricci_endofield(spec.patch);
  EndoField tfield = deformation_tensor(spec.patch, spec.xi);

  struct PerSample {
    double lam = 0.0, mu = 0.0, lam_err = 0.0, mu_err = 0.0;
    int mult_lam = 0, mult_mu = 0;
    bool mult_ok = false;
    double align = 0.0, horiz = 0.0, tau_resid = 0.0, tau = 0.0;
    double tnorm = 0.0, tnorm_err = 0.0, ttilde = 0.0, einstein_resid = 0.0;
  };
  std::vector<PerSample> per(samples.size());

  parallel_for(static_cast<int>(samples.size()), [&](int idx) {
    const auto& x = samples[static_cast<size_t>(idx)];
    PerSample& r = per[static_cast<size_t>(idx)];
    MatN<double> g = spec.patch.metric_value(x);
    VecN<double> xv = spec.xi.eval(x);
    auto es = eigenstructure(spec.patch, sfield, x);
    auto curv = curvature_in_ring<double>(spec.patch, x);

    MatN<double> t = tfield.eval(x);
    auto frame = gram_schmidt_frame(spec.patch, x);
    double tn = 0.0;
    for (const auto& e : frame) {
      auto te = t.apply(e.components);
      tn += inner(g, te, te);
    }
    r.tnorm = tn;
    r.tnorm_err = std::abs(tn - 0.5 * n * c * c * a * a);
    r.tau = curv.scalar;
    r.tau_resid = std::abs(curv.scalar - (cert.tau_star - tn));

    if (cert.einstein_case) {
      r.mult_ok = es.count == 1;
      r.lam = r.mu = es.eigenvalues.front();
      r.mult_lam = r.mult_mu = es.multiplicities.front();
      r.lam_err = std::abs(r.lam - cert.lambda_formula);
      r.mu_err = r.lam_err;
      // Einstein residual |rho - lambda g| relative to |g|
      double num = 0.0, den = 0.0;
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) {
          double d = curv.ricci(i, j) - cert.lambda_formula * g(i, j);
          num += d * d;
          den += g(i, j) * g(i, j);
        }
      r.einstein_resid = std::sqrt(num) / std::sqrt(den);
    } else if (es.count == 2) {
      // identify the vertical cluster by eigenvector alignment with xi
      int vert = es.multiplicities[0] == 1 ? 0 : 1;
      int hor = 1 - vert;
      r.mult_lam = es.multiplicities[static_cast<size_t>(vert)];
      r.mult_mu = es.multiplicities[static_cast<size_t>(hor)];
      r.mult_ok = r.mult_lam == 1 && r.mult_mu == m;
      r.lam = es.eigenvalues[static_cast<size_t>(vert)];
      r.mu = es.eigenvalues[static_cast<size_t>(hor)];
      r.lam_err = std::abs(r.lam - cert.lambda_formula);
      r.mu_err = std::abs(r.mu - cert.mu_formula);
      const auto& v = es.eigenbases[static_cast<size_t>(vert)].front();
      // orthogonal-complement norm avoids cancellation near alignment
      double ipr = inner(g, v.components, xv);
      VecN<double> perp(static_cast<size_t>(dim));
      for (int k = 0; k < dim; ++k)
        perp[static_cast<size_t>(k)] =
            v.components[static_cast<size_t>(k)] - ipr * xv[static_cast<size_t>(k)];
      r.align = vector_g_norm(g, perp);
      for (const auto& h : es.eigenbases[static_cast<size_t>(hor)])
        r.horiz =
            std::max(r.horiz, std::abs(inner(g, h.components, xv)));
    } else {
      r.mult_ok = false;
      r.lam_err = r.mu_err = 1.0;
    }

    // T~ against -(c alpha / 2) J on the base
    VecN<double> xb(x.begin(), x.begin() + m);
    auto j = spec.base.J.eval(xb);
    auto gb = spec.base.patch.metric_value(xb);
    double scale = std::max(0.5 * std::abs(c * a), 1e-12);
    for (int col = 0; col < m; ++col) {
      auto lift = horizontal_lift(spec, x, unit_coord(m, col));
      auto tl = t.apply(lift);
      VecN<double> diff(static_cast<size_t>(m));
      for (int row = 0; row < m; ++row)
        diff[static_cast<size_t>(row)] =
            tl[static_cast<size_t>(row)] + 0.5 * c * a * j(row, col);
      r.ttilde = std::max(r.ttilde, vector_g_norm(gb, diff) / scale);
    }
  });

  for (const auto& r : per) {
    cert.lambda_max_err = std::max(cert.lambda_max_err, r.lam_err);
    cert.mu_max_err = std::max(cert.mu_max_err, r.mu_err);
    cert.xi_alignment_residual = std::max(cert.xi_alignment_residual, r.align);
    cert.horizontal_residual = std::max(cert.horizontal_residual, r.horiz);
    cert.tau_identity_residual =
        std::max(cert.tau_identity_residual, r.tau_resid);
    cert.t_norm_sq_err = std::max(cert.t_norm_sq_err, r.tnorm_err);
    cert.t_tilde_j_residual = std::max(cert.t_tilde_j_residual, r.ttilde);
    cert.einstein_total_residual =
        std::max(cert.einstein_total_residual, r.einstein_resid);
  }
  cert.multiplicities_ok = !per.empty();
  for (const auto& r : per) cert.multiplicities_ok &= r.mult_ok;
  if (!per.empty()) {
    cert.lambda_measured = per.front().lam;
    cert.mu_measured = per.front().mu;
    cert.multiplicity_lambda = per.front().mult_lam;
    cert.multiplicity_mu = per.front().mult_mu;
    cert.t_norm_sq = per.front().tnorm;
    cert.tau_measured = per.front().tau;
  }

  cert.a_condition =
      a_condition_residual(spec.patch, sfield, samples).max_cyclic_residual;

  // delta Omega~ = 0 on the base, Omega~ = -c alpha omega
  {
    auto base = spec.base;
    double f = -c * a;
    TwoFormField omt = TwoFormField::make([base, f](const auto& y) {
      using S = typename std::decay_t<decltype(y)>::value_type;
      auto om = base.omega.eval(y);
      const int d = om.rows();
      MatN<S> out(d, d);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) out(i, j) = om(i, j) * f;
      return out;
    });
    for (const auto& xb : sample_points(base.patch, 25, seed)) {
      auto del = codifferential_2form(base.patch, xb, omt);
      cert.delta_omega_residual =
          std::max(cert.delta_omega_residual,
                   vector_g_norm(inverse(base.patch.metric_value(xb)), del));
    }
  }

  cert.properness =
      properness_certificate(spec.patch, sfield, samples, &spec.xi);
  return cert;
}

}  // namespace atensor
