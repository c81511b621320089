#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "atensor/errors.hpp"
#include "atensor/jets.hpp"
#include "atensor/linalg.hpp"
#include "atensor/sampling.hpp"

namespace atensor {

// ---------------------------------------------------------------------------
// Type-erased pointwise evaluators.
//
// Every geometric object (metric, vector field, endomorphism field, ...) is
// authored once as a generic functor over the scalar ring and then erased at
// three rings: plain doubles, second-order jets, and jets of jets. Callers
// pick the ring by the type of the coordinates they pass in; derivative
// pipelines seed coordinates one jet level above their own working ring.
// ---------------------------------------------------------------------------

template <class T>
using ScalarOf = T;

template <template <class> class Out>
class Erased3 {
 public:
  Erased3() = default;

  // Erase at all three rings (closed-form objects).
  template <class F>
  static Erased3 deep(F f) {
    Erased3 e;
    e.f0_ = [f](const VecN<double>& x) { return f(x); };
    e.f2_ = [f](const VecN<jet2>& x) { return f(x); };
    e.f4_ = [f](const VecN<jet22>& x) { return f(x); };
    return e;
  }

  // Erase at doubles and jets only. Used for objects whose evaluation
  // already consumes two derivative levels of the metric (e.g. the Ricci
  // endomorphism), where the deepest ring would need metric derivatives
  // beyond what charts carry.
  template <class F>
  static Erased3 shallow(F f) {
    Erased3 e;
    e.f0_ = [f](const VecN<double>& x) { return f(x); };
    e.f2_ = [f](const VecN<jet2>& x) { return f(x); };
    return e;
  }

  Out<double> operator()(const VecN<double>& x) const {
    require(f0_);
    return f0_(x);
  }
  Out<jet2> operator()(const VecN<jet2>& x) const {
    require(f2_);
    return f2_(x);
  }
  Out<jet22> operator()(const VecN<jet22>& x) const {
    require(f4_);
    return f4_(x);
  }

  bool valid() const { return static_cast<bool>(f2_); }
  bool has_deep_level() const { return static_cast<bool>(f4_); }

 private:
  template <class Fn>
  static void require(const Fn& f) {
    if (!f)
      throw precondition_error(
          "field was built without the requested derivative depth");
  }

  std::function<Out<double>(const VecN<double>&)> f0_;
  std::function<Out<jet2>(const VecN<jet2>&)> f2_;
  std::function<Out<jet22>(const VecN<jet22>&)> f4_;
};

using MetricEval = Erased3<MatN>;

// Contravariant vector field X^i(x).
struct VectorField {
  Erased3<VecN> eval;
  template <class F>
  static VectorField make(F f) {
    return {Erased3<VecN>::deep(std::move(f))};
  }
  template <class F>
  static VectorField make_shallow(F f) {
    return {Erased3<VecN>::shallow(std::move(f))};
  }
};

// Covariant field theta_i(x).
struct OneFormField {
  Erased3<VecN> eval;
  template <class F>
  static OneFormField make(F f) {
    return {Erased3<VecN>::deep(std::move(f))};
  }
  template <class F>
  static OneFormField make_shallow(F f) {
    return {Erased3<VecN>::shallow(std::move(f))};
  }
};

// Point-indexed (1,1)-tensor field in mixed components S^i_j(x).
struct EndoField {
  Erased3<MatN> eval;
  template <class F>
  static EndoField make(F f) {
    return {Erased3<MatN>::deep(std::move(f))};
  }
  template <class F>
  static EndoField make_shallow(F f) {
    return {Erased3<MatN>::shallow(std::move(f))};
  }
};

// Antisymmetric covariant field Omega_ij(x).
struct TwoFormField {
  Erased3<MatN> eval;
  template <class F>
  static TwoFormField make(F f) {
    return {Erased3<MatN>::deep(std::move(f))};
  }
  template <class F>
  static TwoFormField make_shallow(F f) {
    return {Erased3<MatN>::shallow(std::move(f))};
  }
};

struct ScalarField {
  Erased3<ScalarOf> eval;
  template <class F>
  static ScalarField make(F f) {
    return {Erased3<ScalarOf>::deep(std::move(f))};
  }
};

struct TangentVector {
  VecN<double> base_point;
  VecN<double> components;
};

// ---------------------------------------------------------------------------
// ChartPatch: a coordinate domain plus a smooth metric evaluator.
// ---------------------------------------------------------------------------

class ChartPatch {
 public:
  Box domain;
  std::vector<std::string> coordinate_names;
  MetricEval metric;

  int dim() const { return domain.dim(); }

  template <class F>
  static ChartPatch make(Box box, F metric_fn,
                         std::vector<std::string> names = {}) {
    ChartPatch p;
    p.domain = std::move(box);
    p.coordinate_names = std::move(names);
    p.metric = MetricEval::deep(std::move(metric_fn));
    return p;
  }

  template <class F>
  static ChartPatch make_shallow(Box box, F metric_fn,
                                 std::vector<std::string> names = {}) {
    ChartPatch p;
    p.domain = std::move(box);
    p.coordinate_names = std::move(names);
    p.metric = MetricEval::shallow(std::move(metric_fn));
    return p;
  }

  void require_interior(const VecN<double>& x) const {
    if (static_cast<int>(x.size()) != dim())
      throw domain_error("point dimension does not match chart");
    if (!domain.contains_interior(x))
      throw domain_error("point outside chart interior");
  }

  // Metric with coordinate jets one level above the working ring T.
  template <class T>
  MatN<Jet2<T>> metric_jets(const VecN<T>& x) const {
    return metric(seed_point(x));
  }

  MatN<double> metric_value(const VecN<double>& x) const { return metric(x); }
};

inline Eigen::MatrixXd to_eigen(const MatN<double>& m) {
  Eigen::MatrixXd r(m.rows(), m.cols());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j) = m(i, j);
  return r;
}

inline MatN<double> from_eigen(const Eigen::MatrixXd& m) {
  MatN<double> r(static_cast<int>(m.rows()), static_cast<int>(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(i, j) = m(i, j);
  return r;
}

// Condition number gate shared by every operation that inverts the metric.
inline void require_well_conditioned(const MatN<double>& g,
                                     double max_cond = 1e10) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(to_eigen(g),
                                                    Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  double lo = ev(0), hi = ev(ev.size() - 1);
  if (lo <= 0.0)
    throw conditioning_error("metric not positive definite at sample point");
  if (hi / lo > max_cond)
    throw conditioning_error("metric condition number exceeds 1e10");
}

// Metric value together with first and second coordinate partials.
struct MetricDerivs {
  MatN<double> g;       // g_ij
  Tensor3<double> dg;   // dg(k, i, j) = d_k g_ij
  Tensor4<double> d2g;  // d2g(k, l, i, j) = d_k d_l g_ij
};

inline MetricDerivs metric_at(const ChartPatch& patch, const VecN<double>& x) {
  patch.require_interior(x);
  auto gj = patch.metric_jets(x);
  const int n = patch.dim();
  MetricDerivs out{MatN<double>(n, n), Tensor3<double>(n), Tensor4<double>(n)};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (!all_finite(gj(i, j)))
        throw evaluation_error("non-finite metric entry");
      out.g(i, j) = gj(i, j).value();
      for (int k = 0; k < n; ++k) {
        out.dg(k, i, j) = gj(i, j).grad(k);
        for (int l = 0; l < n; ++l) out.d2g(k, l, i, j) = gj(i, j).hess(k, l);
      }
    }
  return out;
}

// g-orthonormal frame by modified Gram-Schmidt (two passes). If seeds are
// given, E_0 is the normalization of the first seed; default seeds are the
// coordinate basis.
inline std::vector<TangentVector> gram_schmidt_frame(
    const ChartPatch& patch, const VecN<double>& x,
    std::vector<VecN<double>> seeds = {}) {
  patch.require_interior(x);
  const int n = patch.dim();
  MatN<double> g = patch.metric_value(x);
  require_well_conditioned(g);
  if (seeds.empty()) {
    seeds.resize(static_cast<size_t>(n), VecN<double>(n, 0.0));
    for (int i = 0; i < n; ++i) seeds[i][i] = 1.0;
  }
  std::vector<VecN<double>> frame;
  for (const auto& seed : seeds) {
    VecN<double> v = seed;
    double seed_norm = std::sqrt(inner(g, v, v));
    for (int pass = 0; pass < 2; ++pass)
      for (const auto& e : frame) {
        double c = inner(g, v, e);
        for (int i = 0; i < n; ++i) v[i] -= c * e[i];
      }
    double nrm = std::sqrt(std::max(inner(g, v, v), 0.0));
    if (nrm < 1e-10 * std::max(seed_norm, 1e-30))
      throw degenerate_frame_error("frame seeds are linearly dependent");
    for (int i = 0; i < n; ++i) v[i] /= nrm;
    frame.push_back(std::move(v));
  }
  std::vector<TangentVector> out;
  out.reserve(frame.size());
  for (auto& v : frame) out.push_back(TangentVector{x, std::move(v)});
  return out;
}

// g^{-1} Phi: bilinear form -> endomorphism.
inline MatN<double> raise_index(const ChartPatch& patch, const VecN<double>& x,
                                const MatN<double>& bilinear) {
  patch.require_interior(x);
  MatN<double> g = patch.metric_value(x);
  require_well_conditioned(g);
  return inverse(g) * bilinear;
}

// g S: endomorphism -> bilinear form.
inline MatN<double> lower_index(const ChartPatch& patch, const VecN<double>& x,
                                const MatN<double>& endo) {
  patch.require_interior(x);
  return patch.metric_value(x) * endo;
}

// Relative deviation from g-symmetry of a (1,1)-tensor at x.
inline double endo_symmetry_residual(const ChartPatch& patch,
                                     const VecN<double>& x,
                                     const MatN<double>& endo) {
  MatN<double> phi = patch.metric_value(x) * endo;
  MatN<double> skew = phi - phi.transposed();
  return frob_norm(skew) / std::max(frob_norm(phi), 1e-12);
}

inline std::vector<VecN<double>> sample_points(const ChartPatch& patch,
                                               int count, uint64_t seed) {
  return interior_samples(patch.domain, count, seed);
}

// Unit-speed tangent vector with direction drawn from the g-sphere.
inline VecN<double> random_unit_tangent(const ChartPatch& patch,
                                        const VecN<double>& x, Rng& rng) {
  MatN<double> g = patch.metric_value(x);
  for (int attempt = 0; attempt < 64; ++attempt) {
    VecN<double> v = rng.normal_vector(patch.dim());
    double nrm = std::sqrt(inner(g, v, v));
    if (nrm > 1e-8) {
      for (auto& c : v) c /= nrm;
      return v;
    }
  }
  throw evaluation_error("failed to draw a unit tangent vector");
}

}  // namespace atensor
