#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "atensor/curvature.hpp"

namespace atensor {

struct GeodesicState {
  VecN<double> x;
  VecN<double> v;
  double t = 0.0;
};

struct StepStats {
  long accepted = 0;
  long rejected = 0;
  double max_error_estimate = 0.0;
};

struct Trajectory {
  std::vector<GeodesicState> states;
  StepStats step_stats;
  bool domain_exit = false;
};

struct IntegrateOptions {
  double fixed_step = 0.0;  // > 0 disables adaptivity (order verification)
  long max_steps = 1000000;
};

namespace detail {

// Dormand-Prince RK5(4)7M coefficients.
inline constexpr double dp_c[7] = {0.0,     1.0 / 5, 3.0 / 10, 4.0 / 5,
                                   8.0 / 9, 1.0,     1.0};
inline constexpr double dp_a[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
     -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
inline constexpr double dp_b5[7] = {35.0 / 384,    0.0,  500.0 / 1113,
                                    125.0 / 192,   -2187.0 / 6784,
                                    11.0 / 84,     0.0};
inline constexpr double dp_b4[7] = {5179.0 / 57600,    0.0,
                                    7571.0 / 16695,    393.0 / 640,
                                    -92097.0 / 339200, 187.0 / 2100,
                                    1.0 / 40};

}  // namespace detail

// Adaptive integration of the geodesic equation x'' + Gamma(x', x') = 0.
// Domain exits stop the integration and are reported as data, not errors;
// only an immediate exit (no accepted step) is an error.
inline Trajectory integrate_geodesic(const ChartPatch& patch,
                                     const VecN<double>& x0,
                                     const VecN<double>& v0, double t_end,
                                     double tol,
                                     const IntegrateOptions& opts = {}) {
  if (tol < 1e-12 || tol > 1e-4)
    throw usage_error("geodesic tolerance must lie in [1e-12, 1e-4]");
  patch.require_interior(x0);
  const int n = patch.dim();
  for (double c : v0)
    if (!std::isfinite(c)) throw evaluation_error("non-finite velocity");

  const int dim = 2 * n;
  auto pack = [&](const VecN<double>& x, const VecN<double>& v) {
    VecN<double> y(static_cast<size_t>(dim));
    for (int i = 0; i < n; ++i) {
      y[static_cast<size_t>(i)] = x[static_cast<size_t>(i)];
      y[static_cast<size_t>(n + i)] = v[static_cast<size_t>(i)];
    }
    return y;
  };

  // RHS; returns false if the stage point left the full box (step too big).
  auto rhs = [&](const VecN<double>& y, VecN<double>& dy) {
    VecN<double> x(y.begin(), y.begin() + n);
    if (!patch.domain.contains(x)) return false;
    auto gamma = christoffel_values(patch, x);
    for (int i = 0; i < n; ++i) dy[static_cast<size_t>(i)] = y[static_cast<size_t>(n + i)];
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          acc += gamma(k, i, j) * y[static_cast<size_t>(n + i)] *
                 y[static_cast<size_t>(n + j)];
      dy[static_cast<size_t>(n + k)] = -acc;
      if (!std::isfinite(acc)) return false;
    }
    return true;
  };

  Trajectory traj;
  traj.states.push_back(GeodesicState{x0, v0, 0.0});

  VecN<double> y = pack(x0, v0);
  VecN<double> k[7], ytmp(static_cast<size_t>(dim)), ynew(static_cast<size_t>(dim));
  for (auto& ki : k) ki.assign(static_cast<size_t>(dim), 0.0);

  const bool fixed = opts.fixed_step > 0.0;
  double t = 0.0;
  double h = fixed ? opts.fixed_step : std::min(t_end, 1e-2);
  bool have_k1 = false;

  for (long step = 0; step < opts.max_steps; ++step) {
    if (t >= t_end - 1e-14 * t_end) return traj;
    h = std::min(h, t_end - t);
    if (h < 1e-14 * std::max(1.0, t_end))
      throw stiffness_error("geodesic step size underflow");

    if (!have_k1) {
      if (!rhs(y, k[0])) {
        if (traj.states.size() == 1)
          throw degenerate_trajectory_error("trajectory exits immediately");
        traj.domain_exit = true;
        return traj;
      }
      have_k1 = true;
    }

    bool stage_ok = true;
    for (int s = 1; s < 7 && stage_ok; ++s) {
      for (int i = 0; i < dim; ++i) {
        double acc = y[static_cast<size_t>(i)];
        for (int q = 0; q < s; ++q)
          acc += h * detail::dp_a[s][q] * k[q][static_cast<size_t>(i)];
        ytmp[static_cast<size_t>(i)] = acc;
      }
      stage_ok = rhs(ytmp, k[s]);
    }
    if (!stage_ok) {
      if (fixed) {
        traj.domain_exit = true;
        return traj;
      }
      h *= 0.5;
      ++traj.step_stats.rejected;
      continue;
    }

    double err = 0.0;
    for (int i = 0; i < dim; ++i) {
      double y5 = y[static_cast<size_t>(i)], e = 0.0;
      for (int s = 0; s < 7; ++s) {
        y5 += h * detail::dp_b5[s] * k[s][static_cast<size_t>(i)];
        e += h * (detail::dp_b5[s] - detail::dp_b4[s]) *
             k[s][static_cast<size_t>(i)];
      }
      ynew[static_cast<size_t>(i)] = y5;
      double sc = tol + tol * std::max(std::abs(y[static_cast<size_t>(i)]),
                                       std::abs(y5));
      err += (e / sc) * (e / sc);
    }
    err = std::sqrt(err / dim);
    traj.step_stats.max_error_estimate =
        std::max(traj.step_stats.max_error_estimate, err * tol);

    if (!fixed && err > 1.0) {
      ++traj.step_stats.rejected;
      h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
      continue;
    }

    // accepted
    VecN<double> xnew(ynew.begin(), ynew.begin() + n);
    if (!patch.domain.contains_interior(xnew)) {
      traj.domain_exit = true;
      if (traj.states.size() == 1)
        throw degenerate_trajectory_error("trajectory exits immediately");
      return traj;
    }
    t += h;
    y = ynew;
    ++traj.step_stats.accepted;
    {
      VecN<double> xv(y.begin(), y.begin() + n);
      VecN<double> vv(y.begin() + n, y.end());
      traj.states.push_back(GeodesicState{xv, vv, t});
    }
    // FSAL: last stage of the accepted step is k1 of the next one
    k[0] = k[6];
    if (!fixed) h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
  }
  throw stiffness_error("geodesic step budget exhausted");
}

struct DriftReport {
  double max_drift = 0.0;
  double relative_drift = 0.0;
};

// Drift of Q(x, v) along the trajectory relative to its initial value.
inline DriftReport conserved_quantity_drift(
    const ChartPatch& patch, const Trajectory& traj,
    const std::function<double(const VecN<double>&, const VecN<double>&)>& q) {
  (void)patch;
  if (traj.states.empty()) return {};
  double q0 = q(traj.states.front().x, traj.states.front().v);
  DriftReport rep;
  for (const auto& st : traj.states)
    rep.max_drift = std::max(rep.max_drift, std::abs(q(st.x, st.v) - q0));
  rep.relative_drift = rep.max_drift / std::max(std::abs(q0), 1e-12);
  return rep;
}

// Momentum <xi, gamma'> of a Killing field along a geodesic.
inline DriftReport killing_momentum_drift(const ChartPatch& patch,
                                          const VectorField& xi,
                                          const Trajectory& traj) {
  return conserved_quantity_drift(
      patch, traj, [&](const VecN<double>& x, const VecN<double>& v) {
        return inner(patch.metric_value(x), xi.eval(x), v);
      });
}

}  // namespace atensor
