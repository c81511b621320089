#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "atensor/constructions.hpp"
#include "atensor/geodesics.hpp"

using namespace atensor;

namespace {

// Sphere chart with the azimuth widened past a full turn, for closed-orbit
// tests (the metric formula does not care about the range).
ChartPatch wide_sphere() {
  Box box{{0.4, -0.5}, {M_PI - 0.4, 2.0 * M_PI + 0.5}};
  return ChartPatch::make(box, [](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    MatN<S> g(2, 2);
    g(0, 0) = ring_const<S>(1.0);
    S st = sin(x[0]);
    g(1, 1) = st * st;
    return g;
  });
}

double energy_drift(const ChartPatch& patch, const Trajectory& traj) {
  return conserved_quantity_drift(
             patch, traj,
             [&](const VecN<double>& x, const VecN<double>& v) {
               return inner(patch.metric_value(x), v, v);
             })
      .relative_drift;
}

}  // namespace

TEST_CASE("flat geodesics are straight lines") {
  auto patch = flat_patch(2);
  VecN<double> x0 = {-0.5, -0.4}, v0 = {0.3, 0.25};
  auto traj = integrate_geodesic(patch, x0, v0, 2.0, 1e-10);
  REQUIRE_FALSE(traj.domain_exit);
  for (const auto& st : traj.states) {
    REQUIRE(st.x[0] == Catch::Approx(x0[0] + st.t * v0[0]).margin(1e-12));
    REQUIRE(st.x[1] == Catch::Approx(x0[1] + st.t * v0[1]).margin(1e-12));
    REQUIRE(st.v[0] == Catch::Approx(v0[0]).margin(1e-13));
  }
}

TEST_CASE("equatorial great circle has period 2 pi") {
  auto patch = wide_sphere();
  VecN<double> x0 = {M_PI / 2.0, 0.0}, v0 = {0.0, 1.0};
  auto traj = integrate_geodesic(patch, x0, v0, 2.0 * M_PI, 1e-10);
  REQUIRE_FALSE(traj.domain_exit);
  for (const auto& st : traj.states)
    REQUIRE(st.x[0] == Catch::Approx(M_PI / 2.0).margin(1e-9));
  const auto& last = traj.states.back();
  REQUIRE(last.t == Catch::Approx(2.0 * M_PI).margin(1e-12));
  REQUIRE(last.x[1] == Catch::Approx(2.0 * M_PI).margin(1e-8));
}

TEST_CASE("trajectory bookkeeping invariants") {
  auto base = surface_base(1.0);
  auto spec = berger_bundle(base, 0.8);
  Rng rng(5);
  auto pts = sample_points(spec.patch, 10, 42);
  for (const auto& x0 : pts) {
    auto v0 = random_unit_tangent(spec.patch, x0, rng);
    auto traj = integrate_geodesic(spec.patch, x0, v0, 10.0, 1e-10);
    for (size_t i = 1; i < traj.states.size(); ++i)
      REQUIRE(traj.states[i].t > traj.states[i - 1].t);
    for (const auto& st : traj.states)
      REQUIRE(spec.patch.domain.contains_interior(st.x));
  }
}

TEST_CASE("energy is conserved to integrator accuracy") {
  auto base = surface_base(1.0);
  auto spec = berger_bundle(base, 0.8);
  Rng rng(17);
  auto pts = sample_points(spec.patch, 10, 42);
  const double tol = 1e-10;
  for (const auto& x0 : pts) {
    auto v0 = random_unit_tangent(spec.patch, x0, rng);
    auto traj = integrate_geodesic(spec.patch, x0, v0, 10.0, tol);
    REQUIRE(energy_drift(spec.patch, traj) <= 10.0 * tol);
  }
}

TEST_CASE("ricci quadratic is conserved on berger geodesics") {
  auto base = surface_base(1.0);
  auto spec = berger_bundle(base, 0.8);
  auto ricci = ricci_endofield(spec.patch);
  Rng rng(23);
  auto pts = sample_points(spec.patch, 12, 42);
  for (const auto& x0 : pts) {
    auto v0 = random_unit_tangent(spec.patch, x0, rng);
    auto traj = integrate_geodesic(spec.patch, x0, v0, 10.0, 1e-10);
    auto drift = conserved_quantity_drift(
        spec.patch, traj, [&](const VecN<double>& x, const VecN<double>& v) {
          return inner(spec.patch.metric_value(x), ricci.eval(x).apply(v), v);
        });
    REQUIRE(drift.relative_drift <= 1e-6);
  }
}

TEST_CASE("perturbed sphere breaks the ricci conservation law") {
  auto patch = perturbed_sphere_patch(0.3);
  auto ricci = ricci_endofield(patch);
  Rng rng(29);
  auto pts = sample_points(patch, 12, 42);
  int exceed = 0;
  for (const auto& x0 : pts) {
    auto v0 = random_unit_tangent(patch, x0, rng);
    auto traj = integrate_geodesic(patch, x0, v0, 10.0, 1e-10);
    auto drift = conserved_quantity_drift(
        patch, traj, [&](const VecN<double>& x, const VecN<double>& v) {
          return inner(patch.metric_value(x), ricci.eval(x).apply(v), v);
        });
    if (drift.relative_drift > 1e-3) ++exceed;
  }
  REQUIRE(exceed >= 10);  // at least 10 of 12
}

TEST_CASE("killing momentum") {
  SECTION("berger fundamental field momentum is conserved") {
    auto base = surface_base(1.0);
    auto spec = berger_bundle(base, 0.8);
    Rng rng(31);
    auto pts = sample_points(spec.patch, 8, 42);
    for (const auto& x0 : pts) {
      auto v0 = random_unit_tangent(spec.patch, x0, rng);
      auto traj = integrate_geodesic(spec.patch, x0, v0, 10.0, 1e-10);
      auto drift = killing_momentum_drift(spec.patch, spec.xi, traj);
      REQUIRE(drift.relative_drift <= 1e-8);
    }
  }

  SECTION("flat translation momentum is exact") {
    auto patch = flat_patch(2);
    auto traj = integrate_geodesic(patch, {-0.5, 0.0}, {0.4, 0.3}, 2.0, 1e-10);
    for (const auto& st : traj.states) REQUIRE(st.v[0] == 0.4);
  }

  SECTION("vertical geodesics stay vertical") {
    auto base = surface_base(1.0);
    auto spec = berger_bundle(base, 0.8);
    auto pts = sample_points(spec.patch, 5, 42);
    for (const auto& x0 : pts) {
      auto v0 = spec.xi.eval(x0);
      auto traj = integrate_geodesic(spec.patch, x0, v0, 10.0, 1e-10);
      for (const auto& st : traj.states) {
        auto g = spec.patch.metric_value(st.x);
        auto xv = spec.xi.eval(st.x);
        double ip = inner(g, st.v, xv);
        VecN<double> horiz(3);
        for (int k = 0; k < 3; ++k) horiz[k] = st.v[k] - ip * xv[k];
        REQUIRE(vector_g_norm(g, horiz) <= 1e-9);
      }
    }
  }
}

TEST_CASE("fifth-order convergence in fixed-step mode") {
  for (auto patch : {flat_patch(2), round_sphere_patch(2, 1.0)}) {
    VecN<double> x0 = {0.0, 0.0};
    if (patch.dim() == 2 && patch.domain.lo[0] > -0.5) x0 = {1.2, 1.0};
    VecN<double> v0 = {0.3, 1.0};
    double nrm = std::sqrt(inner(patch.metric_value(x0), v0, v0));
    for (auto& c : v0) c /= nrm;

    auto drift_at = [&](double h) {
      IntegrateOptions opts;
      opts.fixed_step = h;
      auto traj = integrate_geodesic(patch, x0, v0, 0.8, 1e-6, opts);
      return conserved_quantity_drift(
                 patch, traj,
                 [&](const VecN<double>& x, const VecN<double>& v) {
                   return inner(patch.metric_value(x), v, v);
                 })
          .max_drift;
    };
    double coarse = drift_at(0.02), fine = drift_at(0.01);
    if (coarse == 0.0) continue;  // flat space integrates exactly
    REQUIRE(coarse / fine >= 8.0);
  }
}

TEST_CASE("time reversal returns to the start") {
  auto patch = round_sphere_patch(2, 1.0);
  VecN<double> x0 = {1.1, 2.5}, v0 = {0.4, 0.5};
  double nrm = std::sqrt(inner(patch.metric_value(x0), v0, v0));
  for (auto& c : v0) c /= nrm;
  auto fwd = integrate_geodesic(patch, x0, v0, 1.0, 1e-10);
  REQUIRE_FALSE(fwd.domain_exit);
  const auto& endst = fwd.states.back();
  VecN<double> vrev = {-endst.v[0], -endst.v[1]};
  auto back = integrate_geodesic(patch, endst.x, vrev, endst.t, 1e-10);
  const auto& ret = back.states.back();
  REQUIRE(std::abs(ret.x[0] - x0[0]) <= 1e-6);
  REQUIRE(std::abs(ret.x[1] - x0[1]) <= 1e-6);
}

TEST_CASE("error conditions") {
  auto patch = flat_patch(2);

  SECTION("tolerance range") {
    REQUIRE_THROWS_AS(
        integrate_geodesic(patch, {0.0, 0.0}, {1.0, 0.0}, 1.0, 1e-3),
        usage_error);
    REQUIRE_THROWS_AS(
        integrate_geodesic(patch, {0.0, 0.0}, {1.0, 0.0}, 1.0, 1e-13),
        usage_error);
  }

  SECTION("immediate domain exit") {
    // starts at the inner edge moving straight out
    REQUIRE_THROWS_AS(
        integrate_geodesic(patch, {0.89, 0.0}, {50.0, 0.0}, 1.0, 1e-10),
        degenerate_trajectory_error);
  }

  SECTION("domain exit mid-flight is data") {
    auto traj = integrate_geodesic(patch, {0.0, 0.0}, {1.0, 0.0}, 5.0, 1e-10);
    REQUIRE(traj.domain_exit);
    REQUIRE(traj.states.size() > 1);
    REQUIRE(traj.states.back().t < 5.0);
  }

  SECTION("step budget exhaustion") {
    IntegrateOptions opts;
    opts.fixed_step = 1e-4;
    opts.max_steps = 10;
    REQUIRE_THROWS_AS(
        integrate_geodesic(patch, {0.0, 0.0}, {0.1, 0.0}, 1.0, 1e-10, opts),
        stiffness_error);
  }
}
