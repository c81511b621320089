#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "atensor/analysis.hpp"
#include "atensor/constructions.hpp"

using namespace atensor;

namespace {

VectorField coordinate_field(int dim, int c) {
  return constant_field(dim, unit_coord(dim, c));
}

EndoField constant_endo(MatN<double> m) {
  return EndoField::make([m](const auto& x) {
    using S = typename std::decay_t<decltype(x)>::value_type;
    const int n = m.rows();
    MatN<S> out(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) out(i, j) = ring_const<S>(m(i, j));
    return out;
  });
}

struct BergerFixture {
  KaehlerBaseSpec base = surface_base(1.0);
  BergerBundleSpec spec = berger_bundle(base, 0.8);
  EndoField ricci = ricci_endofield(spec.patch);
  std::vector<VecN<double>> samples = sample_points(spec.patch, 40, 42);
};

}  // namespace

TEST_CASE("a_condition_residual") {
  SECTION("constant multiple of the identity is an A-tensor") {
    auto patch = round_sphere_patch(2, 1.0);
    MatN<double> cid(2, 2);
    cid(0, 0) = cid(1, 1) = 3.7;
    auto rep = a_condition_residual(patch, constant_endo(cid),
                                    sample_points(patch, 50, 42));
    REQUIRE(rep.precondition_ok);
    REQUIRE(rep.max_cyclic_residual <= 1e-10);
    REQUIRE(rep.pass);
  }

  SECTION("Berger Ricci endomorphism satisfies condition (A)") {
    BergerFixture f;
    auto rep = a_condition_residual(f.spec.patch, f.ricci, f.samples);
    REQUIRE(rep.precondition_ok);
    REQUIRE(rep.max_cyclic_residual <= 1e-8);
    REQUIRE(rep.pass);
  }

  SECTION("perturbed sphere Ricci fails with a large residual") {
    auto patch = perturbed_sphere_patch(0.3);
    auto rep = a_condition_residual(patch, ricci_endofield(patch),
                                    sample_points(patch, 50, 42));
    REQUIRE(rep.precondition_ok);
    REQUIRE(rep.max_cyclic_residual > 0.01);
    REQUIRE_FALSE(rep.pass);
  }

  SECTION("non-symmetric input is reported, no residual computed") {
    auto patch = flat_patch(2);
    MatN<double> bad(2, 2);
    bad(0, 1) = 1.0;  // not g-symmetric for the euclidean metric
    bad(1, 0) = -1.0;
    auto rep = a_condition_residual(patch, constant_endo(bad),
                                    sample_points(patch, 10, 42));
    REQUIRE_FALSE(rep.precondition_ok);
    REQUIRE_FALSE(rep.pass);
  }

  SECTION("cyclic residual is invariant under the frame used for norms") {
    BergerFixture f;
    const auto& x = f.samples.front();
    auto w = nabla_phi_of_endo<double>(f.spec.patch, x, f.ricci);
    const int n = 3;
    Tensor3<double> cyc(n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c)
          cyc(a, b, c) = w(a, b, c) + w(b, c, a) + w(c, a, b);
    auto f1 = gram_schmidt_frame(f.spec.patch, x);
    auto f2 = gram_schmidt_frame(
        f.spec.patch, x, {{1.0, 0.4, 0.1}, {0.0, 1.0, 0.7}, {0.2, 0.0, 1.0}});
    double n1 = tensor3_frame_norm(f1, cyc) / tensor3_frame_norm(f1, w);
    double n2 = tensor3_frame_norm(f2, cyc) / tensor3_frame_norm(f2, w);
    REQUIRE(std::abs(n1 - n2) < 1e-12);
  }
}

TEST_CASE("eigenstructure") {
  SECTION("explicit diag(lambda, mu, mu) on flat space") {
    auto patch = flat_patch(3);
    MatN<double> s(3, 3);
    s(0, 0) = 2.0;
    s(1, 1) = 5.0;
    s(2, 2) = 5.0;
    auto es = eigenstructure(patch, constant_endo(s), {0.1, 0.2, 0.3});
    REQUIRE(es.count == 2);
    REQUIRE(es.eigenvalues[0] == Catch::Approx(2.0));
    REQUIRE(es.eigenvalues[1] == Catch::Approx(5.0));
    REQUIRE(es.multiplicities[0] == 1);
    REQUIRE(es.multiplicities[1] == 2);
  }

  SECTION("Berger Ricci eigenstructure") {
    BergerFixture f;
    for (int i = 0; i < 5; ++i) {
      const auto& x = f.samples[static_cast<size_t>(i)];
      auto es = eigenstructure(f.spec.patch, f.ricci, x);
      REQUIRE(es.count == 2);
      REQUIRE(es.eigenvalues[0] == Catch::Approx(0.32).margin(1e-10));
      REQUIRE(es.eigenvalues[1] == Catch::Approx(0.68).margin(1e-10));
      REQUIRE(es.multiplicities[0] == 1);
      REQUIRE(es.multiplicities[1] == 2);

      MatN<double> g = f.spec.patch.metric_value(x);
      MatN<double> s = f.ricci.eval(x);
      VecN<double> xv = f.spec.xi.eval(x);

      // eigenvector of 0.32 is parallel to xi
      const auto& v = es.eigenbases[0].front();
      double ip = inner(g, v.components, xv);
      REQUIRE(std::abs(std::abs(ip) - 1.0) < 1e-10);

      // residual |S v - lambda v| and cross-cluster g-orthogonality
      double snorm = frob_norm(s);
      for (size_t c = 0; c < es.eigenbases.size(); ++c)
        for (const auto& u : es.eigenbases[c]) {
          auto su = s.apply(u.components);
          VecN<double> resid(3);
          for (int k = 0; k < 3; ++k)
            resid[static_cast<size_t>(k)] =
                su[static_cast<size_t>(k)] -
                es.eigenvalues[c] * u.components[static_cast<size_t>(k)];
          REQUIRE(vector_g_norm(g, resid) <= 1e-8 * std::max(snorm, 1.0));
        }
      for (const auto& u : es.eigenbases[0])
        for (const auto& wv : es.eigenbases[1])
          REQUIRE(std::abs(inner(g, u.components, wv.components)) < 1e-10);
    }
  }

  SECTION("Einstein threshold c = 1 collapses to one eigenvalue") {
    BergerFixture f;
    auto einstein = berger_bundle(f.base, 1.0);
    auto ricci = ricci_endofield(einstein.patch);
    auto es = eigenstructure(einstein.patch, ricci,
                             sample_points(einstein.patch, 1, 42).front());
    REQUIRE(es.count == 1);
    REQUIRE(es.multiplicities[0] == 3);
    REQUIRE(es.eigenvalues[0] == Catch::Approx(0.5).margin(1e-10));
  }
}

TEST_CASE("eigenvalue_constancy") {
  SECTION("Berger eigenvalues are constant across the patch") {
    BergerFixture f;
    auto samples = sample_points(f.spec.patch, 200, 42);
    auto rep = eigenvalue_constancy(f.spec.patch, f.ricci, samples);
    REQUIRE(rep.uniform_pattern);
    REQUIRE(rep.multiplicities == std::vector<int>{1, 2});
    for (double d : rep.max_deviation) REQUIRE(d <= 1e-8);
    REQUIRE(rep.max_directional_derivative <= 1e-8);
  }

  SECTION("f(x) Id with non-constant f deviates and has nonzero derivative") {
    auto patch = flat_patch(2);
    auto pm = patch;
    EndoField s = EndoField::make([](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::value_type;
      MatN<S> out(2, 2);
      S f = x[0] + 2.0;
      out(0, 0) = f;
      out(1, 1) = f;
      return out;
    });
    auto samples = sample_points(patch, 60, 42);
    auto rep = eigenvalue_constancy(patch, s, samples);
    double lo = 1e9, hi = -1e9;
    for (const auto& x : samples) {
      lo = std::min(lo, x[0] + 2.0);
      hi = std::max(hi, x[0] + 2.0);
    }
    REQUIRE(rep.max_deviation[0] > 0.25 * (hi - lo));
    REQUIRE(rep.max_directional_derivative == Catch::Approx(1.0).margin(1e-10));
  }

  SECTION("parallel diag(1,2) has zero deviation and derivative") {
    auto patch = flat_patch(2);
    MatN<double> s(2, 2);
    s(0, 0) = 1.0;
    s(1, 1) = 2.0;
    auto rep = eigenvalue_constancy(patch, constant_endo(s),
                                    sample_points(patch, 40, 42));
    REQUIRE(rep.max_deviation[0] <= 1e-14);
    REQUIRE(rep.max_deviation[1] <= 1e-14);
    REQUIRE(rep.max_directional_derivative <= 1e-14);
  }
}

TEST_CASE("theorem_1_2_residuals") {
  SECTION("Berger Ricci satisfies (1.4) and (1.5)") {
    BergerFixture f;
    std::vector<VecN<double>> few(f.samples.begin(), f.samples.begin() + 10);
    auto rep = theorem_1_2_residuals(f.spec.patch, f.ricci, few);
    REQUIRE(rep.eq14_residual <= 1e-8);
    REQUIRE(rep.eq15_residual <= 1e-8);
    REQUIRE(rep.skipped_pairs == 0);
  }

  SECTION("parallel S on flat space gives identical zeros") {
    auto patch = flat_patch(2);
    MatN<double> s(2, 2);
    s(0, 0) = 1.0;
    s(1, 1) = 2.0;
    auto rep = theorem_1_2_residuals(patch, constant_endo(s),
                                     sample_points(patch, 20, 42));
    REQUIRE(rep.eq14_residual <= 1e-12);
    REQUIRE(rep.eq15_residual <= 1e-12);
  }
}

TEST_CASE("distribution_checks") {
  SECTION("Berger D_lambda (the xi line) is integrable and autoparallel") {
    BergerFixture f;
    std::vector<VecN<double>> few(f.samples.begin(), f.samples.begin() + 8);
    auto rep = distribution_checks(f.spec.patch, f.ricci, 0, few);
    REQUIRE(rep.integrability_residual <= 1e-8);
    REQUIRE(rep.autoparallel_residual <= 1e-8);
    REQUIRE(rep.nabla_s_residual <= 1e-8);
  }

  SECTION("Berger D_mu fails integrability by |Omega(X,Y)|") {
    BergerFixture f;
    std::vector<VecN<double>> few(f.samples.begin(), f.samples.begin() + 8);
    auto rep = distribution_checks(f.spec.patch, f.ricci, 1, few);
    // vertical part of [X, Y] has size |Omega(X,Y)| = c alpha = 0.8
    REQUIRE(rep.integrability_residual > 0.1);
    REQUIRE(rep.integrability_residual == Catch::Approx(0.8).margin(1e-8));
    REQUIRE(rep.nabla_s_residual > 0.1);
  }

  SECTION("flat parallel S: coordinate eigenfields have zero residuals") {
    auto patch = flat_patch(2);
    MatN<double> s(2, 2);
    s(0, 0) = 1.0;
    s(1, 1) = 2.0;
    auto endo = constant_endo(s);
    for (int cluster = 0; cluster < 2; ++cluster) {
      auto rep = distribution_checks(patch, endo, cluster,
                                     sample_points(patch, 10, 42));
      REQUIRE(rep.integrability_residual <= 1e-12);
      REQUIRE(rep.autoparallel_residual <= 1e-12);
      REQUIRE(rep.nabla_s_residual <= 1e-12);
    }
  }
}

TEST_CASE("killing_and_T") {
  SECTION("Berger fundamental field") {
    BergerFixture f;
    auto rep = killing_and_T(f.spec.patch, f.spec.xi, f.samples);
    REQUIRE(rep.unit_residual <= 1e-10);
    REQUIRE(rep.killing_residual <= 1e-9);
    REQUIRE(rep.antisymmetry_residual <= 1e-10);
    REQUIRE(rep.t_xi_residual <= 1e-10);
    REQUIRE(rep.lie_dmu_residual <= 1e-9);
    REQUIRE(rep.coclosed_residual <= 1e-10);
    REQUIRE(rep.t_norm_sq == Catch::Approx(0.32).margin(1e-8));
    REQUIRE(rep.t_norm_sq_spread <= 1e-8);
    REQUIRE(rep.lambda_vs_t_norm <= 1e-8);
    REQUIRE(rep.trace_nabla_t_residual <= 1e-8);
  }

  SECTION("flat space with xi = d_1: everything vanishes") {
    auto patch = flat_patch(3);
    auto xi = coordinate_field(3, 0);
    auto rep = killing_and_T(patch, xi, sample_points(patch, 20, 42));
    REQUIRE(rep.killing_residual <= 1e-14);
    REQUIRE(rep.t_norm_sq <= 1e-14);
    REQUIRE(rep.trace_nabla_t_residual <= 1e-14);
  }

  SECTION("non-unit field triggers the precondition") {
    auto patch = flat_patch(2);
    auto xi = VectorField::make([](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::value_type;
      (void)x;
      VecN<S> v(2);
      v[0] = ring_const<S>(2.0);
      return v;
    });
    REQUIRE_THROWS_AS(killing_and_T(patch, xi, sample_points(patch, 5, 42)),
                      precondition_error);
  }
}

TEST_CASE("lemma_2_5_check") {
  SECTION("Berger identities") {
    BergerFixture f;
    std::vector<VecN<double>> few(f.samples.begin(), f.samples.begin() + 15);
    auto rep = lemma_2_5_check(f.spec.patch, f.spec.xi, few);
    REQUIRE(rep.eq26a_residual <= 1e-8);
    REQUIRE(rep.eq26b_residual <= 1e-8);
    REQUIRE(rep.cor25_residual <= 1e-8);
    REQUIRE(rep.eq28_residual <= 1e-8);
  }

  SECTION("|T X|^2 = c^2 alpha^2 / 4 for unit horizontal X") {
    BergerFixture f;
    const auto& x = f.samples.front();
    auto tf = deformation_tensor(f.spec.patch, f.spec.xi);
    auto t = tf.eval(x);
    auto g = f.spec.patch.metric_value(x);
    auto frame = gram_schmidt_frame(
        f.spec.patch, x,
        {f.spec.xi.eval(x), unit_coord(3, 0), unit_coord(3, 1)});
    for (int h = 1; h <= 2; ++h) {
      auto tx = t.apply(frame[static_cast<size_t>(h)].components);
      REQUIRE(inner(g, tx, tx) == Catch::Approx(0.16).margin(1e-10));
    }
  }

  SECTION("flat space zeros") {
    auto patch = flat_patch(3);
    auto rep =
        lemma_2_5_check(patch, coordinate_field(3, 0), sample_points(patch, 10, 42));
    REQUIRE(rep.eq26a_residual <= 1e-14);
    REQUIRE(rep.eq26b_residual <= 1e-14);
    REQUIRE(rep.cor25_residual <= 1e-14);
  }
}

TEST_CASE("construct_S_from_killing") {
  SECTION("Berger with (lambda, mu) = (3, 7) is a proper A-tensor") {
    BergerFixture f;
    std::vector<VecN<double>> few(f.samples.begin(), f.samples.begin() + 15);
    auto s = construct_S_from_killing(f.spec.patch, f.spec.xi, 3.0, 7.0, few);
    auto rep = a_condition_residual(f.spec.patch, s, few);
    REQUIRE(rep.pass);
    REQUIRE(rep.max_cyclic_residual <= 1e-8);
    auto prop = properness_certificate(f.spec.patch, s, few, &f.spec.xi);
    REQUIRE(prop.status == "proper");
    REQUIRE(prop.nabla_s_norm > 1e-2);
    REQUIRE(prop.structure_ok);

    // round trip through eigenstructure recovers (lambda, mu, multiplicities)
    auto es = eigenstructure(f.spec.patch, s, few.front());
    REQUIRE(es.count == 2);
    REQUIRE(es.eigenvalues[0] == Catch::Approx(3.0).margin(1e-10));
    REQUIRE(es.eigenvalues[1] == Catch::Approx(7.0).margin(1e-10));
    REQUIRE(es.multiplicities == std::vector<int>{1, 2});
  }

  SECTION("Lemma 2.11 star condition for the constructed tensor") {
    BergerFixture f;
    std::vector<VecN<double>> few(f.samples.begin(), f.samples.begin() + 6);
    auto s = construct_S_from_killing(f.spec.patch, f.spec.xi, 3.0, 7.0, few);
    for (const auto& x : few) {
      auto es = eigenstructure(f.spec.patch, s, x);
      auto w = nabla_phi_of_endo<double>(f.spec.patch, x, s);
      MatN<double> g = f.spec.patch.metric_value(x);
      MatN<double> ginv = inverse(g);
      const int n = 3;
      // nabla S(X, X) = 0 for X inside each eigendistribution
      for (size_t c = 0; c < es.eigenbases.size(); ++c)
        for (const auto& v : es.eigenbases[c]) {
          VecN<double> low(static_cast<size_t>(n), 0.0);
          for (int cc = 0; cc < n; ++cc) {
            double acc = 0.0;
            for (int a = 0; a < n; ++a)
              for (int b = 0; b < n; ++b)
                acc += w(a, b, cc) * v.components[a] * v.components[b];
            low[static_cast<size_t>(cc)] = acc;
          }
          REQUIRE(vector_g_norm(g, ginv.apply(low)) <= 1e-10);
        }
      // (2.9): nabla S(Y, X) lands in the opposite distribution
      const auto& vx = es.eigenbases[0].front();  // D_lambda
      for (const auto& vy : es.eigenbases[1]) {
        VecN<double> low(static_cast<size_t>(n), 0.0);
        for (int cc = 0; cc < n; ++cc) {
          double acc = 0.0;
          for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
              acc += w(a, b, cc) * vy.components[a] * vx.components[b];
          low[static_cast<size_t>(cc)] = acc;
        }
        auto raised = ginv.apply(low);
        // component along D_lambda must vanish
        REQUIRE(std::abs(inner(g, raised, vx.components)) <= 1e-10);
      }
    }
  }

  SECTION("flat space with xi = d_1 gives a parallel tensor") {
    auto patch = flat_patch(3);
    auto xi = coordinate_field(3, 0);
    auto few = sample_points(patch, 10, 42);
    auto s = construct_S_from_killing(patch, xi, 3.0, 7.0, few);
    auto prop = properness_certificate(patch, s, few, &xi);
    REQUIRE(prop.nabla_s_norm <= 1e-10);
    REQUIRE(prop.status == "parallel");
  }

  SECTION("lambda = mu degenerates to a parallel multiple of the identity") {
    auto patch = flat_patch(2);
    auto xi = coordinate_field(2, 0);
    auto few = sample_points(patch, 5, 42);
    auto s = construct_S_from_killing(patch, xi, 4.0, 4.0, few);
    auto m = s.eval(few.front());
    REQUIRE(m(0, 0) == Catch::Approx(4.0));
    REQUIRE(m(1, 1) == Catch::Approx(4.0));
    REQUIRE(std::abs(m(0, 1)) < 1e-14);
  }

  SECTION("non-Killing field is rejected") {
    auto patch = flat_patch(2);
    // unit but not Killing: direction rotates with position
    auto xi = VectorField::make([](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::value_type;
      VecN<S> v(2);
      v[0] = cos(x[0]);
      v[1] = sin(x[0]);
      return v;
    });
    REQUIRE_THROWS_AS(construct_S_from_killing(patch, xi, 1.0, 2.0,
                                               sample_points(patch, 5, 42)),
                      precondition_error);
  }
}

TEST_CASE("conformal_unitize") {
  SECTION("already-unit field leaves the metric unchanged") {
    auto patch = flat_patch(2);
    auto xi = coordinate_field(2, 0);
    auto out = conformal_unitize(patch, xi);
    for (const auto& x : sample_points(patch, 10, 42)) {
      auto a = patch.metric_value(x);
      auto b = out.metric_value(x);
      for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
          REQUIRE(b(i, j) == Catch::Approx(a(i, j)).margin(1e-15));
    }
  }

  SECTION("rotation field on the punctured plane") {
    auto patch = ChartPatch::make(
        Box{{0.3, 0.3}, {1.5, 1.5}},
        [](const auto& x) {
          using S = typename std::decay_t<decltype(x)>::value_type;
          (void)x;
          return MatN<S>::identity(2);
        });
    auto rot = VectorField::make([](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::value_type;
      VecN<S> v(2);
      v[0] = -x[1];
      v[1] = x[0];
      return v;
    });
    auto out = conformal_unitize(patch, rot);
    auto pts = sample_points(out, 30, 42);
    auto rep = killing_and_T(out, rot, pts);
    REQUIRE(rep.unit_residual <= 1e-9);
    REQUIRE(rep.killing_residual <= 1e-9);
    // g = (1/r^2) euclidean
    for (const auto& x : pts) {
      double r2 = x[0] * x[0] + x[1] * x[1];
      auto g = out.metric_value(x);
      REQUIRE(g(0, 0) == Catch::Approx(1.0 / r2).epsilon(1e-12));
      REQUIRE(std::abs(g(0, 1)) < 1e-15);
    }
  }

  SECTION("scaled Berger fiber field recovers the rescaled bundle") {
    auto base = surface_base(1.0);
    double c = 0.8;
    auto spec = berger_bundle(base, c);
    // xi_bar = c xi = d_t has squared norm c^2
    auto xibar = coordinate_field(3, 2);
    auto out = conformal_unitize(spec.patch, xibar);

    // the conformally unitized metric equals the c' = 1 bundle over the
    // base rescaled to curvature c^2 K
    auto base2 = surface_base(c * c);
    auto spec2 = berger_bundle(base2, 1.0);
    for (const auto& x : sample_points(out, 20, 42)) {
      auto a = out.metric_value(x);
      auto b = spec2.patch.metric_value(x);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          REQUIRE(a(i, j) == Catch::Approx(b(i, j)).margin(1e-12));
    }
    auto rep = killing_and_T(out, xibar, sample_points(out, 20, 42));
    REQUIRE(rep.unit_residual <= 1e-12);
    REQUIRE(rep.killing_residual <= 1e-9);
  }

  SECTION("vanishing field is rejected") {
    auto patch = flat_patch(2);
    auto xi = VectorField::make([](const auto& x) {
      using S = typename std::decay_t<decltype(x)>::value_type;
      (void)x;
      VecN<S> v(2);
      v[0] = ring_const<S>(1e-9);
      return v;
    });
    REQUIRE_THROWS_AS(conformal_unitize(patch, xi), vanishing_field_error);
  }
}

TEST_CASE("properness_certificate") {
  SECTION("Berger Ricci is proper; norms persist together") {
    BergerFixture f;
    std::vector<VecN<double>> few(f.samples.begin(), f.samples.begin() + 10);
    auto cert = properness_certificate(f.spec.patch, f.ricci, few, &f.spec.xi);
    REQUIRE(cert.structure_ok);
    REQUIRE(cert.status == "proper");
    REQUIRE(cert.consistent);
    REQUIRE(cert.nabla_s_norm > 0.1);
    REQUIRE(cert.dtheta_norm > 0.1);
  }

  SECTION("flat constructed S is parallel; norms vanish together") {
    auto patch = flat_patch(3);
    auto xi = coordinate_field(3, 0);
    auto few = sample_points(patch, 10, 42);
    auto s = construct_S_from_killing(patch, xi, 3.0, 7.0, few);
    auto cert = properness_certificate(patch, s, few, &xi);
    REQUIRE(cert.structure_ok);
    REQUIRE(cert.status == "parallel");
    REQUIRE(cert.consistent);
    REQUIRE(cert.nabla_s_norm <= 1e-10);
    REQUIRE(cert.dtheta_norm <= 1e-10);
  }

  SECTION("certificate derives the eigenfield when no hint is given") {
    BergerFixture f;
    std::vector<VecN<double>> few(f.samples.begin(), f.samples.begin() + 4);
    auto cert = properness_certificate(f.spec.patch, f.ricci, few);
    REQUIRE(cert.status == "proper");
  }
}
