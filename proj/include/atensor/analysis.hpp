#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "atensor/curvature.hpp"
#include "atensor/parallel.hpp"

namespace atensor {

// ---------------------------------------------------------------------------
// Eigenstructure of g-symmetric endomorphism fields.
// ---------------------------------------------------------------------------

struct EigenOptions {
  double cluster_tol_factor = 1e-6;   // gap below factor*(spread+1) merges
  double symmetry_gate = 1e-8;        // relative g-symmetry precondition
};

struct EigenStructure {
  VecN<double> eigenvalues;                 // cluster means, ascending
  std::vector<int> multiplicities;          // sum equals n
  std::vector<std::vector<TangentVector>> eigenbases;  // g-orthonormal
  int count = 0;                            // E_S(x)
  bool borderline = false;                  // a gap sits near the cluster tol
  VecN<double> raw_eigenvalues;
};

inline EigenStructure eigenstructure(const ChartPatch& patch,
                                     const EndoField& field,
                                     const VecN<double>& x,
                                     const EigenOptions& opts = {}) {
  patch.require_interior(x);
  const int n = patch.dim();
  MatN<double> g = patch.metric_value(x);
  require_well_conditioned(g);
  MatN<double> s = field.eval(x);
  double sym = endo_symmetry_residual(patch, x, s);
  if (sym > opts.symmetry_gate)
    throw precondition_error("endomorphism is not g-symmetric at this point");

  // Generalized symmetric problem Phi v = lambda g v with Phi = g S;
  // eigenvectors come back g-orthonormal.
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(
      to_eigen(g * s), to_eigen(g));
  if (es.info() != Eigen::Success)
    throw evaluation_error("eigen decomposition failed");

  EigenStructure out;
  out.raw_eigenvalues.resize(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out.raw_eigenvalues[i] = es.eigenvalues()(i);

  double spread =
      out.raw_eigenvalues[static_cast<size_t>(n - 1)] - out.raw_eigenvalues[0];
  double tol = opts.cluster_tol_factor * (spread + 1.0);

  int start = 0;
  for (int i = 1; i <= n; ++i) {
    double gap = i < n ? out.raw_eigenvalues[i] - out.raw_eigenvalues[i - 1]
                       : 2.0 * (tol * 10.0 + 1.0);
    if (i < n && gap < tol) continue;
    if (i < n && gap < 10.0 * tol) out.borderline = true;

    double mean = 0.0;
    for (int k = start; k < i; ++k) mean += out.raw_eigenvalues[k];
    mean /= (i - start);
    out.eigenvalues.push_back(mean);
    out.multiplicities.push_back(i - start);
    std::vector<TangentVector> basis;
    for (int k = start; k < i; ++k) {
      VecN<double> v(static_cast<size_t>(n));
      for (int c = 0; c < n; ++c) v[c] = es.eigenvectors()(c, k);
      basis.push_back(TangentVector{x, std::move(v)});
    }
    out.eigenbases.push_back(std::move(basis));
    start = i;
  }
  out.count = static_cast<int>(out.eigenvalues.size());
  return out;
}

// ---------------------------------------------------------------------------
// Norm helpers (frame components make every residual g-invariant).
// ---------------------------------------------------------------------------

inline double tensor3_frame_norm(const std::vector<TangentVector>& frame,
                                 const Tensor3<double>& w) {
  const int n = w.dim();
  double s = 0.0;
  for (const auto& ea : frame)
    for (const auto& eb : frame)
      for (const auto& ec : frame) {
        double v = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            for (int c = 0; c < n; ++c)
              v += w(a, b, c) * ea.components[a] * eb.components[b] *
                   ec.components[c];
        s += v * v;
      }
  return std::sqrt(s);
}

inline double matrix_frame_norm(const std::vector<TangentVector>& frame,
                                const MatN<double>& w) {
  const int n = w.rows();
  double s = 0.0;
  for (const auto& ea : frame)
    for (const auto& eb : frame) {
      double v = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          v += w(a, b) * ea.components[a] * eb.components[b];
      s += v * v;
    }
  return std::sqrt(s);
}

inline double vector_g_norm(const MatN<double>& g, const VecN<double>& v) {
  return std::sqrt(std::max(inner(g, v, v), 0.0));
}

// ---------------------------------------------------------------------------
// Condition (A): the cyclic sum of nabla Phi vanishes.
// ---------------------------------------------------------------------------

struct AConditionReport {
  bool precondition_ok = true;
  double max_symmetry_residual = 0.0;
  double max_cyclic_residual = 0.0;
  double tolerance = 1e-8;
  bool pass = false;
  std::vector<std::pair<VecN<double>, double>> per_point;
};

inline AConditionReport a_condition_residual(
    const ChartPatch& patch, const EndoField& field,
    const std::vector<VecN<double>>& samples, double tolerance = 1e-8,
    double symmetry_gate = 1e-8) {
  AConditionReport rep;
  rep.tolerance = tolerance;
  rep.per_point.resize(samples.size());
  std::vector<double> sym(samples.size(), 0.0);

  parallel_for(static_cast<int>(samples.size()), [&](int idx) {
    const auto& x = samples[static_cast<size_t>(idx)];
    MatN<double> sval = field.eval(x);
    sym[static_cast<size_t>(idx)] = endo_symmetry_residual(patch, x, sval);
    auto frame = gram_schmidt_frame(patch, x);
    auto w = nabla_phi_of_endo<double>(patch, x, field);
    const int n = patch.dim();
    Tensor3<double> cyc(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          cyc(a, b, c) = w(a, b, c) + w(b, c, a) + w(c, a, b);
    // For parallel Phi the numerator is pure cancellation roundoff, so the
    // floor must carry the magnitude of the terms that cancelled
    // (|Gamma| |Phi| products), with 1e-12 as the final absolute floor.
    MatN<double> phi = patch.metric_value(x) * sval;
    double kappa =
        (1.0 + frob_norm(christoffel_values(patch, x))) * frob_norm(phi);
    double denom = std::max(tensor3_frame_norm(frame, w),
                            std::max(1e-4 * kappa, 1e-12));
    double ratio = tensor3_frame_norm(frame, cyc) / denom;
    rep.per_point[static_cast<size_t>(idx)] = {x, ratio};
  });

  for (size_t i = 0; i < samples.size(); ++i) {
    rep.max_symmetry_residual = std::max(rep.max_symmetry_residual, sym[i]);
    rep.max_cyclic_residual =
        std::max(rep.max_cyclic_residual, rep.per_point[i].second);
  }
  if (rep.max_symmetry_residual > symmetry_gate) {
    rep.precondition_ok = false;
    rep.pass = false;
    return rep;
  }
  rep.pass = rep.max_cyclic_residual <= tolerance;
  return rep;
}

// ---------------------------------------------------------------------------
// Eigenvalue functions as ring elements: characteristic polynomial by
// Newton's identities, cluster roots by Newton refinement on the
// (multiplicity-1)-th derivative, spectral projectors by Lagrange products.
// All operations stay in the scalar ring, so evaluating them on jets yields
// exact derivatives of the smooth eigenvalue/eigenprojection functions.
// ---------------------------------------------------------------------------

// Coefficients of det(lambda I - M), ascending powers; coef[n] = 1.
template <class S>
VecN<S> charpoly(const MatN<S>& m) {
  const int n = m.rows();
  std::vector<S> power_traces(static_cast<size_t>(n) + 1);
  MatN<S> acc = m;
  for (int k = 1; k <= n; ++k) {
    power_traces[static_cast<size_t>(k)] = acc.trace();
    if (k < n) acc = acc * m;
  }
  std::vector<S> e(static_cast<size_t>(n) + 1);
  e[0] = ring_const<S>(1.0);
  for (int k = 1; k <= n; ++k) {
    S s{};
    double sign = 1.0;
    for (int i = 1; i <= k; ++i) {
      s = s + e[static_cast<size_t>(k - i)] *
                  power_traces[static_cast<size_t>(i)] * sign;
      sign = -sign;
    }
    e[static_cast<size_t>(k)] = s * (1.0 / k);
  }
  VecN<S> coef(static_cast<size_t>(n) + 1);
  double sign = 1.0;
  for (int k = 0; k <= n; ++k) {
    coef[static_cast<size_t>(n - k)] = e[static_cast<size_t>(k)] * sign;
    sign = -sign;
  }
  return coef;
}

template <class S>
VecN<S> polyder(const VecN<S>& coef) {
  VecN<S> out;
  for (size_t k = 1; k < coef.size(); ++k)
    out.push_back(coef[k] * static_cast<double>(k));
  return out;
}

template <class S>
S polyval(const VecN<S>& coef, const S& x) {
  S acc{};
  for (size_t k = coef.size(); k-- > 0;) acc = acc * x + coef[k];
  return acc;
}

// Ring-valued eigenvalue of the cluster containing lam0. For a cluster of
// multiplicity m the characteristic polynomial has an m-fold root there, so
// Newton runs on the (m-1)-th derivative, which has a simple root. A fixed
// iteration count keeps evaluation deterministic; the leading value starts
// converged and each step fixes one more nilpotent order.
template <class S>
S cluster_eigenvalue(const VecN<S>& coef, double lam0, int multiplicity) {
  VecN<S> q = coef;
  for (int d = 1; d < multiplicity; ++d) q = polyder(q);
  VecN<S> dq = polyder(q);
  S lam = ring_const<S>(lam0);
  for (int it = 0; it < 6; ++it) {
    S denom = polyval(dq, lam);
    if (std::abs(leading_value(denom)) < 1e-300)
      throw evaluation_error("degenerate Newton step in eigenvalue jet");
    lam = lam - polyval(q, lam) / denom;
  }
  return lam;
}

// Lagrange spectral projector onto the cluster with index `which`, built
// from ring-valued cluster eigenvalues.
template <class S>
MatN<S> spectral_projector(const MatN<S>& m, const VecN<S>& cluster_lams,
                           int which) {
  const int n = m.rows();
  MatN<S> p = MatN<S>::identity(n);
  for (size_t j = 0; j < cluster_lams.size(); ++j) {
    if (static_cast<int>(j) == which) continue;
    MatN<S> shifted = m;
    for (int d = 0; d < n; ++d)
      shifted(d, d) = shifted(d, d) - cluster_lams[j];
    S inv = ring_const<S>(1.0) /
            (cluster_lams[static_cast<size_t>(which)] - cluster_lams[j]);
    p = p * shifted;
    for (int r = 0; r < n; ++r)
      for (int d = 0; d < n; ++d) p(r, d) = p(r, d) * inv;
  }
  return p;
}

// Smooth orthonormal eigenfields of the given cluster, anchored at x0 where
// `es` was computed. Valid for evaluation at (and jet-differentiation around)
// x0; the construction is smooth wherever cluster gaps persist.
inline std::vector<VectorField> eigenfields(const ChartPatch& patch,
                                            const EndoField& field,
                                            const EigenStructure& es,
                                            int cluster) {
  const int members = es.multiplicities[static_cast<size_t>(cluster)];
  std::vector<VecN<double>> seeds;
  for (int k = 0; k < members; ++k)
    seeds.push_back(es.eigenbases[static_cast<size_t>(cluster)]
                        [static_cast<size_t>(k)].components);
  VecN<double> lam0 = es.eigenvalues;
  std::vector<int> mult = es.multiplicities;

  std::vector<VectorField> out;
  for (int member = 0; member < members; ++member) {
    auto fn = [patch, field, seeds, lam0, mult, cluster,
               member](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::value_type;
      using std::sqrt;
      const int n = static_cast<int>(x.size());
      MatN<S> m = field.eval(x);
      auto coef = charpoly(m);
      VecN<S> lams(lam0.size());
      for (size_t j = 0; j < lam0.size(); ++j)
        lams[j] = cluster_eigenvalue(coef, lam0[j],
                                     mult[j]);
      MatN<S> proj = spectral_projector(m, lams, cluster);
      MatN<S> g = patch.metric(x);

      // project the frozen seeds, then g-orthonormalize in the ring
      std::vector<VecN<S>> w;
      for (int k = 0; k <= member; ++k) {
        VecN<S> seed(static_cast<size_t>(n));
        for (int c = 0; c < n; ++c)
          seed[static_cast<size_t>(c)] =
              ring_const<S>(seeds[static_cast<size_t>(k)][static_cast<size_t>(c)]);
        VecN<S> v = proj.apply(seed);
        for (const auto& prev : w) {
          S c = inner(g, v, prev);
          for (int d = 0; d < n; ++d)
            v[static_cast<size_t>(d)] =
                v[static_cast<size_t>(d)] - c * prev[static_cast<size_t>(d)];
        }
        S nrm = sqrt(inner(g, v, v));
        if (leading_value(nrm) < 1e-10)
          throw degenerate_frame_error("eigenfield seed degenerated");
        VecN<S> u(static_cast<size_t>(n));
        for (int d = 0; d < n; ++d)
          u[static_cast<size_t>(d)] = v[static_cast<size_t>(d)] / nrm;
        w.push_back(std::move(u));
      }
      return w.back();
    };
    out.push_back(VectorField::make_shallow(fn));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Eigenvalue constancy and the first-order perturbation formula
// d lambda(X) = nabla Phi(X, v, v) for unit eigenvectors v.
// ---------------------------------------------------------------------------

struct ConstancyReport {
  std::vector<int> multiplicities;       // dominant pattern
  VecN<double> eigen_medians;
  VecN<double> max_deviation;            // per cluster
  double max_directional_derivative = 0.0;
  int patterns_seen = 0;
  bool uniform_pattern = true;
};

inline ConstancyReport eigenvalue_constancy(
    const ChartPatch& patch, const EndoField& field,
    const std::vector<VecN<double>>& samples, const EigenOptions& opts = {}) {
  std::vector<EigenStructure> structs(samples.size());
  std::vector<double> dirs(samples.size(), 0.0);
  parallel_for(static_cast<int>(samples.size()), [&](int idx) {
    const auto& x = samples[static_cast<size_t>(idx)];
    auto es = eigenstructure(patch, field, x, opts);
    auto w = nabla_phi_of_endo<double>(patch, x, field);
    const int n = patch.dim();
    double worst = 0.0;
    for (size_t c = 0; c < es.eigenbases.size(); ++c) {
      const auto& basis = es.eigenbases[c];
      for (const auto& dir : basis) {
        // d lambda_c along dir, averaged over the cluster basis
        double acc = 0.0;
        for (const auto& v : basis) {
          double term = 0.0;
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              for (int d = 0; d < n; ++d)
                term += w(a, b, d) * dir.components[a] * v.components[b] *
                        v.components[d];
          acc += term;
        }
        worst = std::max(worst, std::abs(acc / basis.size()));
      }
    }
    dirs[static_cast<size_t>(idx)] = worst;
    structs[static_cast<size_t>(idx)] = std::move(es);
  });

  ConstancyReport rep;
  // group by multiplicity pattern, keep the most frequent
  std::vector<std::vector<int>> patterns;
  std::vector<int> counts;
  for (const auto& es : structs) {
    bool found = false;
    for (size_t p = 0; p < patterns.size(); ++p)
      if (patterns[p] == es.multiplicities) {
        ++counts[p];
        found = true;
        break;
      }
    if (!found) {
      patterns.push_back(es.multiplicities);
      counts.push_back(1);
    }
  }
  rep.patterns_seen = static_cast<int>(patterns.size());
  rep.uniform_pattern = patterns.size() == 1;
  size_t best = 0;
  for (size_t p = 1; p < patterns.size(); ++p)
    if (counts[p] > counts[best]) best = p;
  rep.multiplicities = patterns[best];

  const size_t k = rep.multiplicities.size();
  std::vector<VecN<double>> per_cluster(k);
  for (const auto& es : structs) {
    if (es.multiplicities != rep.multiplicities) continue;
    for (size_t c = 0; c < k; ++c)
      per_cluster[c].push_back(es.eigenvalues[c]);
  }
  rep.eigen_medians.resize(k);
  rep.max_deviation.assign(k, 0.0);
  for (size_t c = 0; c < k; ++c) {
    auto vals = per_cluster[c];
    std::sort(vals.begin(), vals.end());
    rep.eigen_medians[c] = vals[vals.size() / 2];
    for (double v : vals)
      rep.max_deviation[c] =
          std::max(rep.max_deviation[c], std::abs(v - rep.eigen_medians[c]));
  }
  for (double d : dirs)
    rep.max_directional_derivative =
        std::max(rep.max_directional_derivative, d);
  return rep;
}

// ---------------------------------------------------------------------------
// Identities (1.4) and (1.5).
// ---------------------------------------------------------------------------

struct Theorem12Report {
  double eq14_residual = 0.0;
  double eq15_residual = 0.0;
  int skipped_pairs = 0;
};

inline Theorem12Report theorem_1_2_residuals(
    const ChartPatch& patch, const EndoField& field,
    const std::vector<VecN<double>>& samples, const EigenOptions& opts = {}) {
  Theorem12Report rep;
  const int n = patch.dim();
  std::vector<double> r14(samples.size(), 0.0), r15(samples.size(), 0.0);
  std::vector<int> skipped(samples.size(), 0);

  parallel_for(static_cast<int>(samples.size()), [&](int idx) {
    const auto& x = samples[static_cast<size_t>(idx)];
    auto es = eigenstructure(patch, field, x, opts);
    MatN<double> g = patch.metric_value(x);
    MatN<double> ginv = inverse(g);
    auto frame = gram_schmidt_frame(patch, x);
    auto w = nabla_phi_of_endo<double>(patch, x, field);
    // same cancellation floor as the cyclic condition: parallel Phi leaves
    // only roundoff in nabla Phi
    double kappa = (1.0 + frob_norm(christoffel_values(patch, x))) *
                   frob_norm(g * field.eval(x));
    double scale = std::max(tensor3_frame_norm(frame, w),
                            std::max(1e-4 * kappa, 1e-12));

    double spread =
        es.raw_eigenvalues[static_cast<size_t>(n - 1)] - es.raw_eigenvalues[0];
    double cluster_tol = opts.cluster_tol_factor * (spread + 1.0);

    // (1.4): nabla S(X, X) = -1/2 grad(lambda_i) |X|^2 for eigenvectors X.
    for (size_t c = 0; c < es.eigenbases.size(); ++c) {
      for (const auto& v : es.eigenbases[c]) {
        VecN<double> dlam(static_cast<size_t>(n), 0.0);
        for (int a = 0; a < n; ++a) {
          double acc = 0.0;
          for (const auto& u : es.eigenbases[c]) {
            double term = 0.0;
            for (int b = 0; b < n; ++b)
              for (int d = 0; d < n; ++d)
                term += w(a, b, d) * u.components[b] * u.components[d];
            acc += term;
          }
          dlam[static_cast<size_t>(a)] =
              acc / static_cast<double>(es.eigenbases[c].size());
        }
        // <nabla S(v, v), e_a> = nabla_v Phi(v, e_a); compare against
        // -1/2 d lambda as covectors, in the g^{-1} norm.
        VecN<double> diff(static_cast<size_t>(n), 0.0);
        for (int a = 0; a < n; ++a) {
          double lhs = 0.0;
          for (int b = 0; b < n; ++b)
            for (int d = 0; d < n; ++d)
              lhs += w(b, d, a) * v.components[b] * v.components[d];
          diff[static_cast<size_t>(a)] =
              lhs + 0.5 * dlam[static_cast<size_t>(a)];
        }
        double num = 0.0;
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b)
            num += ginv(a, b) * diff[static_cast<size_t>(a)] *
                   diff[static_cast<size_t>(b)];
        r14[static_cast<size_t>(idx)] = std::max(
            r14[static_cast<size_t>(idx)], std::sqrt(std::max(num, 0.0)) / scale);
      }
    }

    // (1.5): <nabla_X X, Y> = 1/2 (Y lambda_i / (lambda_j - lambda_i)) |X|^2
    if (es.count >= 2) {
      for (size_t ci = 0; ci < es.eigenbases.size(); ++ci) {
        auto fields = eigenfields(patch, field, es, static_cast<int>(ci));
        for (size_t cj = 0; cj < es.eigenbases.size(); ++cj) {
          if (ci == cj) continue;
          double gap = std::abs(es.eigenvalues[cj] - es.eigenvalues[ci]);
          if (gap <= 10.0 * cluster_tol) {
            ++skipped[static_cast<size_t>(idx)];
            continue;
          }
          for (size_t m = 0; m < fields.size(); ++m) {
            auto xj = fields[m].eval(seed_point(x));
            auto gamma = christoffel_values(patch, x);
            // nabla_X X at the anchor
            VecN<double> nxx(static_cast<size_t>(n), 0.0);
            for (int k = 0; k < n; ++k) {
              double s = 0.0;
              for (int a = 0; a < n; ++a) {
                s += xj[a].value() * xj[k].grad(a);
                for (int mm = 0; mm < n; ++mm)
                  s += xj[a].value() * gamma(k, a, mm) * xj[mm].value();
              }
              nxx[static_cast<size_t>(k)] = s;
            }
            for (const auto& y : es.eigenbases[cj]) {
              double lhs = inner(g, nxx, y.components);
              // Y lambda_i by the perturbation formula
              double ylam = 0.0;
              for (const auto& u : es.eigenbases[ci]) {
                double term = 0.0;
                for (int a = 0; a < n; ++a)
                  for (int b = 0; b < n; ++b)
                    for (int d = 0; d < n; ++d)
                      term += w(a, b, d) * y.components[a] * u.components[b] *
                              u.components[d];
                ylam += term;
              }
              ylam /= static_cast<double>(es.eigenbases[ci].size());
              double rhs =
                  0.5 * ylam / (es.eigenvalues[cj] - es.eigenvalues[ci]);
              r15[static_cast<size_t>(idx)] = std::max(
                  r15[static_cast<size_t>(idx)], std::abs(lhs - rhs) / scale);
            }
          }
        }
      }
    }
  });

  for (size_t i = 0; i < samples.size(); ++i) {
    rep.eq14_residual = std::max(rep.eq14_residual, r14[i]);
    rep.eq15_residual = std::max(rep.eq15_residual, r15[i]);
    rep.skipped_pairs += skipped[i];
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Distribution checks (Corollary 1.4 / Eq. 1.10).
// ---------------------------------------------------------------------------

struct DistributionReport {
  double integrability_residual = 0.0;  // |(I-P)[X,Y]|
  double autoparallel_residual = 0.0;   // |(I-P) nabla_X Y|
  double nabla_s_residual = 0.0;        // |nabla S(X, Y)|
};

inline DistributionReport distribution_checks(
    const ChartPatch& patch, const EndoField& field, int cluster,
    const std::vector<VecN<double>>& samples, const EigenOptions& opts = {}) {
  const int n = patch.dim();
  std::vector<DistributionReport> per(samples.size());

  parallel_for(static_cast<int>(samples.size()), [&](int idx) {
    const auto& x = samples[static_cast<size_t>(idx)];
    auto es = eigenstructure(patch, field, x, opts);
    if (cluster >= es.count)
      throw precondition_error("eigenvalue cluster index out of range");
    auto flds = eigenfields(patch, field, es, cluster);
    MatN<double> g = patch.metric_value(x);
    auto gamma = christoffel_values(patch, x);
    auto nphi = nabla_phi_of_endo<double>(patch, x, field);
    MatN<double> ginv = inverse(g);

    // orthogonal projector onto the cluster span
    const auto& basis = es.eigenbases[static_cast<size_t>(cluster)];
    auto complement_norm = [&](const VecN<double>& v) {
      VecN<double> rest = v;
      for (const auto& e : basis) {
        double c = inner(g, v, e.components);
        for (int d = 0; d < n; ++d) rest[static_cast<size_t>(d)] -= c * e.components[d];
      }
      return vector_g_norm(g, rest);
    };

    std::vector<std::vector<Jet2<double>>> jets;
    for (auto& f : flds) jets.push_back(f.eval(seed_point(x)));

    DistributionReport& r = per[static_cast<size_t>(idx)];
    for (size_t i = 0; i < jets.size(); ++i)
      for (size_t j = 0; j < jets.size(); ++j) {
        const auto& X = jets[i];
        const auto& Y = jets[j];
        VecN<double> nxy(static_cast<size_t>(n), 0.0);
        VecN<double> bracket(static_cast<size_t>(n), 0.0);
        for (int k = 0; k < n; ++k) {
          double s = 0.0, lie = 0.0;
          for (int a = 0; a < n; ++a) {
            s += X[a].value() * Y[k].grad(a);
            lie += X[a].value() * Y[k].grad(a) - Y[a].value() * X[k].grad(a);
            for (int m = 0; m < n; ++m)
              s += X[a].value() * gamma(k, a, m) * Y[m].value();
          }
          nxy[static_cast<size_t>(k)] = s;
          bracket[static_cast<size_t>(k)] = lie;
        }
        if (i != j)
          r.integrability_residual =
              std::max(r.integrability_residual, complement_norm(bracket));
        r.autoparallel_residual =
            std::max(r.autoparallel_residual, complement_norm(nxy));

        // |nabla S(X, Y)| via the lowered derivative: nabla_a Phi_{b c} X^a Y^b
        VecN<double> low(static_cast<size_t>(n), 0.0);
        for (int c = 0; c < n; ++c) {
          double s = 0.0;
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              s += nphi(a, b, c) * X[a].value() * Y[b].value();
          low[static_cast<size_t>(c)] = s;
        }
        auto raised = ginv.apply(low);
        r.nabla_s_residual =
            std::max(r.nabla_s_residual, vector_g_norm(g, raised));
      }
  });

  DistributionReport rep;
  for (const auto& r : per) {
    rep.integrability_residual =
        std::max(rep.integrability_residual, r.integrability_residual);
    rep.autoparallel_residual =
        std::max(rep.autoparallel_residual, r.autoparallel_residual);
    rep.nabla_s_residual = std::max(rep.nabla_s_residual, r.nabla_s_residual);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Killing machinery: T X = nabla_X xi and its identities.
// ---------------------------------------------------------------------------

// T = nabla xi as a point-indexed endomorphism field. Shallow: evaluating T
// in a ring consumes one metric derivative level beyond that ring.
inline EndoField deformation_tensor(const ChartPatch& patch,
                                    const VectorField& xi) {
  return EndoField::make_shallow([patch, xi](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    const int n = static_cast<int>(x.size());
    auto dxi = nabla_vector(patch, x, xi);  // (a, k) = (nabla_a xi)^k
    MatN<S> t(n, n);
    for (int k = 0; k < n; ++k)
      for (int m = 0; m < n; ++m) t(k, m) = dxi(m, k);
    return t;
  });
}

struct KillingReport {
  double unit_residual = 0.0;          // max ||xi|^2 - 1|
  double killing_residual = 0.0;       // max |L_xi g| (frame norm)
  double antisymmetry_residual = 0.0;  // max |<TX,Y> + <X,TY>|
  double t_xi_residual = 0.0;          // max |T xi|
  double lie_dmu_residual = 0.0;       // max |<[xi,X], xi>|, X horizontal
  double coclosed_residual = 0.0;      // max |tr T| = |div xi|
  double t_norm_sq = 0.0;              // |T|^2 at the first sample
  double t_norm_sq_spread = 0.0;       // max deviation across samples
  double lambda_from_ricci = 0.0;      // rho(xi, xi) at the first sample
  double lambda_vs_t_norm = 0.0;       // max |rho(xi,xi) - |T|^2|
  double trace_nabla_t_residual = 0.0; // max |tr_g nabla T + lambda xi|
};

inline KillingReport killing_and_T(const ChartPatch& patch,
                                   const VectorField& xi,
                                   const std::vector<VecN<double>>& samples,
                                   bool enforce_unit = true) {
  const int n = patch.dim();
  EndoField tf = deformation_tensor(patch, xi);
  std::vector<KillingReport> per(samples.size());

  parallel_for(static_cast<int>(samples.size()), [&](int idx) {
    const auto& x = samples[static_cast<size_t>(idx)];
    KillingReport& r = per[static_cast<size_t>(idx)];
    MatN<double> g = patch.metric_value(x);
    VecN<double> xv = xi.eval(x);
    r.unit_residual = std::abs(inner(g, xv, xv) - 1.0);

    auto frame = gram_schmidt_frame(patch, x);
    r.killing_residual =
        matrix_frame_norm(frame, lie_derivative_metric(patch, x, xi));

    MatN<double> t = tf.eval(x);
    MatN<double> phi_t = g * t;
    MatN<double> sym = phi_t + phi_t.transposed();
    r.antisymmetry_residual = matrix_frame_norm(frame, sym);
    r.t_xi_residual = vector_g_norm(g, t.apply(xv));
    r.coclosed_residual = std::abs(t.trace());

    double tn = 0.0;
    for (const auto& e : frame) {
      auto te = t.apply(e.components);
      tn += inner(g, te, te);
    }
    r.t_norm_sq = tn;

    // [xi, X] for horizontally projected coordinate fields X
    auto xij = xi.eval(seed_point(x));
    for (int c = 0; c < n; ++c) {
      VectorField hc = VectorField::make_shallow([patch, xi, c](const auto& y) {
        using S = typename std::decay_t<decltype(y)>::value_type;
        const int m = static_cast<int>(y.size());
        auto xiv = xi.eval(y);
        auto gv = patch.metric(y);
        VecN<S> ec(static_cast<size_t>(m));
        for (int d = 0; d < m; ++d)
          ec[static_cast<size_t>(d)] = ring_const<S>(d == c ? 1.0 : 0.0);
        S ip = inner(gv, ec, xiv);
        S nn = inner(gv, xiv, xiv);
        VecN<S> out(static_cast<size_t>(m));
        for (int d = 0; d < m; ++d)
          out[static_cast<size_t>(d)] =
              ec[static_cast<size_t>(d)] - (ip / nn) * xiv[static_cast<size_t>(d)];
        return out;
      });
      auto hj = hc.eval(seed_point(x));
      VecN<double> bracket(static_cast<size_t>(n), 0.0);
      for (int k = 0; k < n; ++k) {
        double s = 0.0;
        for (int a = 0; a < n; ++a)
          s += xij[a].value() * hj[k].grad(a) - hj[a].value() * xij[k].grad(a);
        bracket[static_cast<size_t>(k)] = s;
      }
      r.lie_dmu_residual =
          std::max(r.lie_dmu_residual,
                   std::abs(inner(g, bracket, xv)));
    }

    // rho(xi, xi) and tr_g nabla T + lambda xi
    auto curv = curvature_in_ring<double>(patch, x);
    double lam = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) lam += curv.ricci(a, b) * xv[a] * xv[b];
    r.lambda_from_ricci = lam;
    r.lambda_vs_t_norm = std::abs(lam - tn);

    auto nt = nabla_endo<double>(patch, x, tf);  // (a, i, j)
    MatN<double> ginv = inverse(g);
    VecN<double> tr(static_cast<size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) {
      double s = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) s += ginv(a, b) * nt(a, k, b);
      tr[static_cast<size_t>(k)] = s;
    }
    VecN<double> resid(static_cast<size_t>(n));
    for (int k = 0; k < n; ++k)
      resid[static_cast<size_t>(k)] = tr[static_cast<size_t>(k)] + lam * xv[k];
    r.trace_nabla_t_residual = vector_g_norm(g, resid);
  });

  KillingReport rep;
  rep.t_norm_sq = per.empty() ? 0.0 : per.front().t_norm_sq;
  rep.lambda_from_ricci = per.empty() ? 0.0 : per.front().lambda_from_ricci;
  for (const auto& r : per) {
    rep.unit_residual = std::max(rep.unit_residual, r.unit_residual);
    rep.killing_residual = std::max(rep.killing_residual, r.killing_residual);
    rep.antisymmetry_residual =
        std::max(rep.antisymmetry_residual, r.antisymmetry_residual);
    rep.t_xi_residual = std::max(rep.t_xi_residual, r.t_xi_residual);
    rep.lie_dmu_residual = std::max(rep.lie_dmu_residual, r.lie_dmu_residual);
    rep.coclosed_residual =
        std::max(rep.coclosed_residual, r.coclosed_residual);
    rep.t_norm_sq_spread =
        std::max(rep.t_norm_sq_spread, std::abs(r.t_norm_sq - rep.t_norm_sq));
    rep.lambda_vs_t_norm =
        std::max(rep.lambda_vs_t_norm, r.lambda_vs_t_norm);
    rep.trace_nabla_t_residual =
        std::max(rep.trace_nabla_t_residual, r.trace_nabla_t_residual);
  }
  if (enforce_unit && rep.unit_residual > 1e-10)
    throw precondition_error(
        "xi is not a unit field at the samples; run conformal_unitize first");
  return rep;
}

// ---------------------------------------------------------------------------
// Curvature identities for unit Killing fields (Eqs. 2.6a/2.6b and friends).
// ---------------------------------------------------------------------------

struct Lemma25Report {
  double eq26a_residual = 0.0;  // R(X, xi) Y = nabla T(X, Y)
  double eq26b_residual = 0.0;  // nabla T(X, xi) = -T^2 X
  double cor25_residual = 0.0;  // <R(X,xi)xi, Y> = <TX, TY>
  double eq28_residual = 0.0;   // <R(X,xi)xi, X> = |TX|^2
};

inline Lemma25Report lemma_2_5_check(const ChartPatch& patch,
                                     const VectorField& xi,
                                     const std::vector<VecN<double>>& samples,
                                     uint64_t seed = 42) {
  const int n = patch.dim();
  EndoField tf = deformation_tensor(patch, xi);
  std::vector<Lemma25Report> per(samples.size());

  parallel_for(static_cast<int>(samples.size()), [&](int idx) {
    const auto& x = samples[static_cast<size_t>(idx)];
    Lemma25Report& r = per[static_cast<size_t>(idx)];
    Rng rng(seed + 1000003ull * static_cast<uint64_t>(idx));
    MatN<double> g = patch.metric_value(x);
    VecN<double> xv = xi.eval(x);
    auto curv = riemann(patch, x);
    MatN<double> t = tf.eval(x);
    auto nt = nabla_endo<double>(patch, x, tf);
    auto frame = gram_schmidt_frame(patch, x);

    // scale: curvature magnitude in frame components
    double rscale = 0.0;
    for (const auto& ea : frame)
      for (const auto& eb : frame)
        for (const auto& ec : frame) {
          VecN<double> rv(static_cast<size_t>(n), 0.0);
          for (int l = 0; l < n; ++l)
            for (int i = 0; i < n; ++i)
              for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                  rv[l] += curv.riemann(l, i, j, k) * ea.components[i] *
                           eb.components[j] * ec.components[k];
          rscale += inner(g, rv, rv);
        }
    double scale = std::max(std::sqrt(rscale),
                            std::max(frob_norm(t) * frob_norm(t), 1e-12));

    auto apply_R = [&](const VecN<double>& a, const VecN<double>& b,
                       const VecN<double>& c) {
      VecN<double> out(static_cast<size_t>(n), 0.0);
      for (int l = 0; l < n; ++l)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
              out[l] += curv.riemann(l, i, j, k) * a[i] * b[j] * c[k];
      return out;
    };
    auto nabla_t_apply = [&](const VecN<double>& a, const VecN<double>& b) {
      VecN<double> out(static_cast<size_t>(n), 0.0);
      for (int k = 0; k < n; ++k)
        for (int d = 0; d < n; ++d)
          for (int j = 0; j < n; ++j) out[k] += nt(d, k, j) * a[d] * b[j];
      return out;
    };

    for (int draw = 0; draw < 3; ++draw) {
      VecN<double> X = random_unit_tangent(patch, x, rng);
      VecN<double> Y = random_unit_tangent(patch, x, rng);

      auto lhs_a = apply_R(X, xv, Y);
      auto rhs_a = nabla_t_apply(X, Y);
      VecN<double> diff(static_cast<size_t>(n));
      for (int k = 0; k < n; ++k) diff[k] = lhs_a[k] - rhs_a[k];
      r.eq26a_residual =
          std::max(r.eq26a_residual, vector_g_norm(g, diff) / scale);

      auto lhs_b = nabla_t_apply(X, xv);
      auto t2x = t.apply(t.apply(X));
      for (int k = 0; k < n; ++k) diff[k] = lhs_b[k] + t2x[k];
      r.eq26b_residual =
          std::max(r.eq26b_residual, vector_g_norm(g, diff) / scale);

      auto rxx = apply_R(X, xv, xv);
      double lhs_c = inner(g, rxx, Y);
      auto tx = t.apply(X);
      auto ty = t.apply(Y);
      r.cor25_residual = std::max(
          r.cor25_residual, std::abs(lhs_c - inner(g, tx, ty)) / scale);

      double lhs_d = inner(g, rxx, X);
      r.eq28_residual = std::max(
          r.eq28_residual, std::abs(lhs_d - inner(g, tx, tx)) / scale);
    }
  });

  Lemma25Report rep;
  for (const auto& r : per) {
    rep.eq26a_residual = std::max(rep.eq26a_residual, r.eq26a_residual);
    rep.eq26b_residual = std::max(rep.eq26b_residual, r.eq26b_residual);
    rep.cor25_residual = std::max(rep.cor25_residual, r.cor25_residual);
    rep.eq28_residual = std::max(rep.eq28_residual, r.eq28_residual);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Two-eigenvalue tensor built from a unit Killing field:
// S xi = lambda xi, S X = mu X on the orthogonal complement.
// ---------------------------------------------------------------------------

inline EndoField construct_S_from_killing(
    const ChartPatch& patch, const VectorField& xi, double lambda, double mu,
    const std::vector<VecN<double>>& gate_samples, double gate = 1e-9) {
  auto kr = killing_and_T(patch, xi, gate_samples, false);
  if (kr.unit_residual > gate || kr.killing_residual > gate)
    throw precondition_error(
        "construct_S_from_killing requires a unit Killing field");
  return EndoField::make([patch, xi, lambda, mu](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    const int n = static_cast<int>(x.size());
    auto g = patch.metric(x);
    auto xiv = xi.eval(x);
    VecN<S> flat(static_cast<size_t>(n));  // xi_j = g_jk xi^k
    for (int j = 0; j < n; ++j) {
      S s{};
      for (int k = 0; k < n; ++k)
        s = s + g(j, k) * xiv[static_cast<size_t>(k)];
      flat[static_cast<size_t>(j)] = s;
    }
    MatN<S> out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        S v = xiv[static_cast<size_t>(i)] * flat[static_cast<size_t>(j)] *
              (lambda - mu);
        if (i == j) v = v + mu;
        out(i, j) = v;
      }
    return out;
  });
}

// Conformal change g = g' / <xi, xi>' making a Killing field unit
// (conformal scaling by a xi-invariant factor keeps it Killing).
inline ChartPatch conformal_unitize(const ChartPatch& patch,
                                    const VectorField& xi,
                                    int check_samples = 50,
                                    uint64_t seed = 42) {
  for (const auto& x : sample_points(patch, check_samples, seed)) {
    MatN<double> g = patch.metric_value(x);
    VecN<double> xv = xi.eval(x);
    if (inner(g, xv, xv) < 1e-16)
      throw vanishing_field_error("xi vanishes on the domain");
  }
  ChartPatch out = patch;
  out.metric = MetricEval::deep([patch, xi](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    auto g = patch.metric(x);
    auto xiv = xi.eval(x);
    S f = inner(g, xiv, xiv);
    S inv = ring_const<S>(1.0) / f;
    const int n = g.rows();
    MatN<S> scaled(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) scaled(i, j) = g(i, j) * inv;
    return scaled;
  });
  return out;
}

// ---------------------------------------------------------------------------
// Properness: |nabla S| and |d theta| must vanish or persist together
// (parallel iff the associated 2-form vanishes).
// ---------------------------------------------------------------------------

struct PropernessCertificate {
  double nabla_s_norm = 0.0;
  double dtheta_norm = 0.0;
  bool structure_ok = false;  // two eigenvalues with dim D_lambda = 1
  bool einstein_degenerate = false;
  std::string status;         // parallel | proper | inconclusive | einstein
  bool consistent = false;
  double parallel_threshold = 1e-8;
  double proper_threshold = 1e-4;
};

inline PropernessCertificate properness_certificate(
    const ChartPatch& patch, const EndoField& field,
    const std::vector<VecN<double>>& samples,
    const VectorField* xi_hint = nullptr, const EigenOptions& opts = {}) {
  PropernessCertificate cert;
  const int n = patch.dim();

  auto es0 = eigenstructure(patch, field, samples.front(), opts);
  cert.einstein_degenerate = es0.count == 1;
  int one_dim_cluster = -1;
  if (es0.count == 2)
    for (int c = 0; c < 2; ++c)
      if (es0.multiplicities[static_cast<size_t>(c)] == 1) one_dim_cluster = c;
  cert.structure_ok = one_dim_cluster >= 0;

  std::vector<double> ns(samples.size(), 0.0), dt(samples.size(), 0.0);
  parallel_for(static_cast<int>(samples.size()), [&](int idx) {
    const auto& x = samples[static_cast<size_t>(idx)];
    auto frame = gram_schmidt_frame(patch, x);
    auto w = nabla_phi_of_endo<double>(patch, x, field);
    ns[static_cast<size_t>(idx)] = tensor3_frame_norm(frame, w);

    if (cert.einstein_degenerate) return;

    OneFormField theta = OneFormField{};
    if (xi_hint) {
      const VectorField xi = *xi_hint;
      theta = OneFormField::make_shallow([patch, xi](const auto& y) {
        using S = typename std::decay_t<decltype(y)>::value_type;
        auto g = patch.metric(y);
        auto xiv = xi.eval(y);
        const int m = g.rows();
        VecN<S> out(static_cast<size_t>(m));
        for (int j = 0; j < m; ++j) {
          S s{};
          for (int k = 0; k < m; ++k)
            s = s + g(j, k) * xiv[static_cast<size_t>(k)];
          out[static_cast<size_t>(j)] = s;
        }
        return out;
      });
    } else {
      auto es = eigenstructure(patch, field, x, opts);
      int cl = -1;
      for (int c = 0; c < es.count; ++c)
        if (es.multiplicities[static_cast<size_t>(c)] == 1) {
          cl = c;
          break;
        }
      if (cl < 0) return;
      auto flds = eigenfields(patch, field, es, cl);
      const VectorField xi = flds.front();
      theta = OneFormField::make_shallow([patch, xi](const auto& y) {
        using S = typename std::decay_t<decltype(y)>::value_type;
        auto g = patch.metric(y);
        auto xiv = xi.eval(y);
        const int m = g.rows();
        VecN<S> out(static_cast<size_t>(m));
        for (int j = 0; j < m; ++j) {
          S s{};
          for (int k = 0; k < m; ++k)
            s = s + g(j, k) * xiv[static_cast<size_t>(k)];
          out[static_cast<size_t>(j)] = s;
        }
        return out;
      });
    }
    dt[static_cast<size_t>(idx)] =
        matrix_frame_norm(frame, exterior_derivative(patch, x, theta));
  });

  for (size_t i = 0; i < samples.size(); ++i) {
    cert.nabla_s_norm = std::max(cert.nabla_s_norm, ns[i]);
    cert.dtheta_norm = std::max(cert.dtheta_norm, dt[i]);
  }
  (void)n;

  if (cert.einstein_degenerate) {
    cert.status = "einstein";
    cert.consistent = cert.nabla_s_norm <= cert.parallel_threshold;
  } else if (cert.nabla_s_norm <= cert.parallel_threshold &&
             cert.dtheta_norm <= cert.parallel_threshold) {
    cert.status = "parallel";
    cert.consistent = true;
  } else if (cert.nabla_s_norm >= cert.proper_threshold &&
             cert.dtheta_norm >= cert.proper_threshold) {
    cert.status = "proper";
    cert.consistent = true;
  } else {
    cert.status = "inconclusive";
    cert.consistent = false;
  }
  return cert;
}

}  // namespace atensor
