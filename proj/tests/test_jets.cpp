#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "atensor/jets.hpp"

using namespace atensor;

namespace {

// Exercises every elementary operation the metric evaluators may use.
template <class S>
S composite(const std::vector<S>& x) {
  using std::cos;
  using std::exp;
  using std::log;
  using std::pow;
  using std::sin;
  using std::sqrt;
  S a = sin(x[0] * x[1]);
  S b = exp(x[0] * 0.3) * log(x[1] + 2.0);
  S c = sqrt(x[0] * x[0] + x[1] * x[1] + 0.5);
  S d = pow(x[1] + 1.5, 1.7) / c;
  S e = cos(x[0]) / (x[1] + 3.0);
  return a + b - d * 0.25 + (x[0] * x[0]) * x[1] + e;
}

double composite_d(double x0, double x1) {
  return composite<double>({x0, x1});
}

}  // namespace

TEST_CASE("jet gradient and hessian match central finite differences") {
  const double h = 1e-5;
  const std::vector<std::vector<double>> pts = {
      {0.3, 0.7}, {-0.4, 1.2}, {1.1, 0.05}, {0.0, 2.0}};
  for (const auto& p : pts) {
    auto jp = seed_point<double>(p);
    jet2 r = composite<jet2>(jp);

    REQUIRE(r.value() == Catch::Approx(composite_d(p[0], p[1])).epsilon(1e-14));

    for (int i = 0; i < 2; ++i) {
      std::vector<double> hi = p, lo = p;
      hi[i] += h;
      lo[i] -= h;
      double fd = (composite_d(hi[0], hi[1]) - composite_d(lo[0], lo[1])) /
                  (2.0 * h);
      REQUIRE(std::abs(r.grad(i) - fd) <
              std::max(1e-7, 1e-6 * std::abs(fd)));
    }
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        auto gval = [&](std::vector<double> q) {
          auto jq = seed_point<double>(q);
          return composite<jet2>(jq).grad(i);
        };
        std::vector<double> hi = p, lo = p;
        hi[j] += h;
        lo[j] -= h;
        double fd = (gval(hi) - gval(lo)) / (2.0 * h);
        REQUIRE(std::abs(r.hess(i, j) - fd) <
                std::max(1e-6, 1e-5 * std::abs(fd)));
      }
  }
}

TEST_CASE("product and chain rules are exact to roundoff") {
  auto jp = seed_point<double>({0.8, -0.3});
  jet2 x = jp[0], y = jp[1];

  SECTION("(xy)' components") {
    jet2 p = x * y;
    REQUIRE(p.grad(0) == Catch::Approx(-0.3).margin(1e-15));
    REQUIRE(p.grad(1) == Catch::Approx(0.8).margin(1e-15));
    REQUIRE(p.hess(0, 1) == Catch::Approx(1.0).margin(1e-15));
    REQUIRE(p.hess(0, 0) == Catch::Approx(0.0).margin(1e-15));
  }

  SECTION("sin(x)^2 + cos(x)^2 == 1 with zero derivatives") {
    jet2 s = sin(x), c = cos(x);
    jet2 one = s * s + c * c;
    REQUIRE(one.value() == Catch::Approx(1.0).epsilon(1e-15));
    REQUIRE(std::abs(one.grad(0)) < 1e-15);
    REQUIRE(std::abs(one.hess(0, 0)) < 1e-14);
  }

  SECTION("exp(log(x)) == x") {
    jet2 r = exp(log(x));
    REQUIRE(r.value() == Catch::Approx(0.8).epsilon(1e-15));
    REQUIRE(r.grad(0) == Catch::Approx(1.0).epsilon(1e-14));
    REQUIRE(std::abs(r.hess(0, 0)) < 1e-14);
  }

  SECTION("sqrt(x)*sqrt(x) == x") {
    jet2 r = sqrt(x) * sqrt(x);
    REQUIRE(r.grad(0) == Catch::Approx(1.0).epsilon(1e-14));
    REQUIRE(std::abs(r.hess(0, 0)) < 1e-13);
  }

  SECTION("division inverts multiplication") {
    jet2 q = (x * y) / y;
    REQUIRE(q.value() == Catch::Approx(0.8).epsilon(1e-14));
    REQUIRE(q.grad(0) == Catch::Approx(1.0).epsilon(1e-13));
    REQUIRE(std::abs(q.grad(1)) < 1e-13);
  }
}

TEST_CASE("nested jets produce consistent third partials") {
  const std::vector<double> p = {0.3, 0.7};
  const int n = 2;

  // Seed twice: outer jets over inner jets.
  std::vector<jet2> inner;
  for (int i = 0; i < n; ++i) inner.push_back(jet2::variable(p[i], n, i));
  std::vector<jet22> nested;
  for (int i = 0; i < n; ++i)
    nested.push_back(jet22::variable(inner[i], n, i));

  jet22 r = composite<jet22>(nested);

  // Outer gradient entries are jets of the partials; their own slots must
  // agree with the outer hessian.
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      REQUIRE(r.grad(i).grad(j) ==
              Catch::Approx(r.hess(i, j).value()).margin(1e-13));
      for (int k = 0; k < n; ++k)
        REQUIRE(r.hess(i, j).grad(k) ==
                Catch::Approx(r.grad(i).hess(j, k)).margin(1e-12));
    }

  // Third partials against finite differences of the jet hessian.
  const double h = 1e-5;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        std::vector<double> hi = p, lo = p;
        hi[k] += h;
        lo[k] -= h;
        double fhi = composite<jet2>(seed_point<double>(hi)).hess(i, j);
        double flo = composite<jet2>(seed_point<double>(lo)).hess(i, j);
        double fd = (fhi - flo) / (2.0 * h);
        REQUIRE(std::abs(r.hess(i, j).grad(k) - fd) <
                std::max(1e-6, 1e-5 * std::abs(fd)));
      }
}

TEST_CASE("constants broadcast against any dimension") {
  jet2 x = jet2::variable(2.0, 3, 1);
  jet2 c(5.0);
  jet2 r = x * c + c;
  REQUIRE(r.value() == Catch::Approx(15.0));
  REQUIRE(r.dim() == 3);
  REQUIRE(r.grad(1) == Catch::Approx(5.0));
  REQUIRE(r.grad(0) == 0.0);
}

TEST_CASE("partial_jet reduces order correctly") {
  auto jp = seed_point<double>({0.4, 1.3});
  jet2 f = sin(jp[0] * jp[1]);
  jet2 d0 = partial_jet(f, 0);
  REQUIRE(d0.value() == Catch::Approx(f.grad(0)).margin(1e-15));
  REQUIRE(d0.grad(1) == Catch::Approx(f.hess(0, 1)).margin(1e-15));
}
