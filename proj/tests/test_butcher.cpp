#include <doctest.h>

#include "swoc/butcher.hpp"

using namespace swoc;

namespace {

// Independent collocation oracle: a_{i,j} = integral of the j-th Lagrange
// basis polynomial over [0, c_i], b_j over [0, 1]. Gauss-Legendre with 8
// points is exact for the involved low-degree polynomials.
double lagrange_basis(const Eigen::VectorXd& c, int j, double t) {
  double v = 1.0;
  for (int k = 0; k < c.size(); ++k) {
    if (k == j) continue;
    v *= (t - c[k]) / (c[j] - c[k]);
  }
  return v;
}

double integrate_basis(const Eigen::VectorXd& c, int j, double hi) {
  static const double xs[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
                               -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
                               0.7966664774136267,  0.9602898564975363};
  static const double wsarr[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
                                  0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
                                  0.2223810344533745, 0.1012285362903763};
  double sum = 0.0;
  for (int k = 0; k < 8; ++k) {
    const double t = 0.5 * hi * (xs[k] + 1.0);
    sum += wsarr[k] * lagrange_basis(c, j, t);
  }
  return 0.5 * hi * sum;
}

}  // namespace

TEST_CASE("butcher: implicit Euler is the one-stage degenerate tableau") {
  ButcherTableau t = butcher(RkScheme::ImplicitEuler, 1);
  CHECK(t.a(0, 0) == doctest::Approx(1.0));
  CHECK(t.b[0] == doctest::Approx(1.0));
  CHECK(t.c[0] == doctest::Approx(1.0));
  CHECK(t.stiffly_accurate());
}

TEST_CASE("butcher: Radau IIA(2) coefficients") {
  ButcherTableau t = butcher(RkScheme::RadauIIA, 2);
  CHECK(t.c[0] == doctest::Approx(1.0 / 3.0));
  CHECK(t.c[1] == doctest::Approx(1.0));
  CHECK(t.a(0, 0) == doctest::Approx(5.0 / 12.0));
  CHECK(t.a(0, 1) == doctest::Approx(-1.0 / 12.0));
  CHECK(t.a(1, 0) == doctest::Approx(3.0 / 4.0));
  CHECK(t.a(1, 1) == doctest::Approx(1.0 / 4.0));
  CHECK(t.b[0] == doctest::Approx(3.0 / 4.0));
  CHECK(t.b[1] == doctest::Approx(1.0 / 4.0));
}

TEST_CASE("butcher: collocation conditions from the Lagrange-basis oracle") {
  for (int ns : {1, 2, 3}) {
    ButcherTableau t = butcher(RkScheme::RadauIIA, ns);
    CHECK(t.stiffly_accurate());
    for (int i = 0; i < ns; ++i) {
      // Row-sum consistency sum_j a_ij = c_i.
      CHECK(t.a.row(i).sum() == doctest::Approx(t.c[i]).epsilon(1e-12));
      for (int j = 0; j < ns; ++j)
        CHECK(t.a(i, j) == doctest::Approx(integrate_basis(t.c, j, t.c[i])).epsilon(1e-12));
    }
    for (int j = 0; j < ns; ++j)
      CHECK(t.b[j] == doctest::Approx(integrate_basis(t.c, j, 1.0)).epsilon(1e-12));
  }
}

TEST_CASE("butcher: Radau IIA(2) quadrature integrates quadratic rhs exactly") {
  // xdot = p(t) with p quadratic: solution is a cubic polynomial; order-3
  // accuracy means one step reproduces it exactly.
  ButcherTableau t = butcher(RkScheme::RadauIIA, 2);
  auto p = [](double s) { return 3.0 * s * s - 2.0 * s + 0.5; };
  auto P = [](double s) { return s * s * s - s * s + 0.5 * s; };  // antiderivative
  const double h = 0.37;
  double step = 0.0;
  for (int i = 0; i < 2; ++i) step += h * t.b[i] * p(t.c[i] * h);
  CHECK(step == doctest::Approx(P(h)).epsilon(1e-14));
}

TEST_CASE("butcher: unsupported requests are rejected") {
  CHECK_THROWS_AS(butcher(RkScheme::RadauIIA, 4), std::invalid_argument);
  CHECK_THROWS_AS(butcher(RkScheme::RadauIIA, 0), std::invalid_argument);
  CHECK_THROWS_AS(butcher(RkScheme::ImplicitEuler, 2), std::invalid_argument);
}
