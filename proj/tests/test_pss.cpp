#include <doctest.h>

#include <random>

#include "swoc/pss.hpp"

using namespace swoc;
using sym::Expr;
using sym::VecFunc;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

PssModel car_model() {
  Expr q = Expr::variable("x", 0), v = Expr::variable("x", 1), u = Expr::variable("u", 0);
  VecFunc c("c", {{"x", 2}}, {v - 10.0});
  Eigen::MatrixXd S(2, 1);
  S << -1, 1;
  VecFunc f1("f1", {{"x", 2}, {"u", 1}}, {v, u});
  VecFunc f2("f2", {{"x", 2}, {"u", 1}}, {v, 3.0 * u});
  return define_pss(std::move(c), S, {f1, f2}, vec({0.0, 0.0}), 1);
}

PssModel relay_model() {
  Expr x = Expr::variable("x", 0);
  Expr u = Expr::variable("u", 0);  // unused input, zero-dim control is awkward downstream
  (void)u;
  VecFunc c("c", {{"x", 1}}, {x});
  Eigen::MatrixXd S(2, 1);
  S << 1, -1;
  VecFunc f1("f1", {{"x", 1}, {"u", 0}}, {Expr::constant(-1.0)});
  VecFunc f2("f2", {{"x", 1}, {"u", 0}}, {Expr::constant(1.0)});
  return define_pss(std::move(c), S, {f1, f2}, vec({1.0}), 0);
}

}  // namespace

TEST_CASE("define_pss: valid two-region models") {
  PssModel car = car_model();
  CHECK(car.n_x() == 2);
  CHECK(car.n_u() == 1);
  CHECK(car.n_f() == 2);
  CHECK(car.n_c() == 1);

  PssModel relay = relay_model();
  CHECK(relay.n_f() == 2);
  CHECK(relay.n_u() == 0);
}

TEST_CASE("define_pss: rejects repeated rows, bad entries, count mismatch") {
  Expr x = Expr::variable("x", 0);
  VecFunc c("c", {{"x", 1}}, {x});
  VecFunc f1("f1", {{"x", 1}, {"u", 0}}, {Expr::constant(-1.0)});
  VecFunc f2("f2", {{"x", 1}, {"u", 0}}, {Expr::constant(1.0)});

  Eigen::MatrixXd S_rep(2, 1);
  S_rep << 1, 1;
  CHECK_THROWS_AS(define_pss(c, S_rep, {f1, f2}, vec({0.0}), 0), std::invalid_argument);

  Eigen::MatrixXd S_bad(2, 1);
  S_bad << 1, 0.5;
  CHECK_THROWS_AS(define_pss(c, S_bad, {f1, f2}, vec({0.0}), 0), std::invalid_argument);

  Eigen::MatrixXd S(2, 1);
  S << 1, -1;
  CHECK_THROWS_AS(define_pss(c, S, {f1}, vec({0.0}), 0), std::invalid_argument);
}

TEST_CASE("discriminants: g = -S c with the paper's sign convention") {
  PssModel car = car_model();
  VecFunc g = discriminants(car);

  // car at v = 5: c = -5, g = (-5, 5); argmin is region 0 (normal), v < 10
  Eigen::VectorXd gv = g({vec({0.0, 5.0})});
  CHECK(gv[0] == doctest::Approx(-5.0));
  CHECK(gv[1] == doctest::Approx(5.0));

  PssModel relay = relay_model();
  VecFunc gr = discriminants(relay);
  Eigen::VectorXd g2 = gr({vec({2.0})});
  CHECK(g2[0] == doctest::Approx(-2.0));
  CHECK(g2[1] == doctest::Approx(2.0));

  Eigen::VectorXd g0 = gr({vec({0.0})});
  CHECK(g0[0] == doctest::Approx(0.0));
  CHECK(g0[1] == doctest::Approx(0.0));
}

TEST_CASE("filippov_lp_oracle: vertex and tie cases") {
  auto fp = filippov_lp_oracle(vec({1.0, 3.0}));
  CHECK(fp.mu == doctest::Approx(1.0));
  CHECK(fp.lambda[0] == doctest::Approx(0.0));
  CHECK(fp.lambda[1] == doctest::Approx(2.0));
  CHECK(fp.theta[0] == doctest::Approx(1.0));
  CHECK(fp.theta[1] == doctest::Approx(0.0));
  REQUIRE(fp.vertex_set.size() == 1);
  CHECK(fp.vertex_set[0] == 0);

  auto tie = filippov_lp_oracle(vec({2.0, 2.0}));
  CHECK(tie.mu == doctest::Approx(2.0));
  CHECK(tie.lambda.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
  CHECK(tie.theta[0] == doctest::Approx(0.5));
  CHECK(tie.theta[1] == doctest::Approx(0.5));
  CHECK(tie.vertex_set.size() == 2);

  auto fp4 = filippov_lp_oracle(vec({4.0, 1.0, 1.0, 9.0}));
  CHECK(fp4.mu == doctest::Approx(1.0));
  CHECK(fp4.lambda[0] == doctest::Approx(3.0));
  CHECK(fp4.lambda[3] == doctest::Approx(8.0));
  REQUIRE(fp4.vertex_set.size() == 2);
  CHECK(fp4.vertex_set[0] == 1);
  CHECK(fp4.vertex_set[1] == 2);

  // degenerate: all equal => uniform over the whole simplex
  auto deg = filippov_lp_oracle(vec({5.0, 5.0, 5.0}));
  CHECK(deg.theta.cwiseAbs().maxCoeff() == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("dcs_residual: KKT plug-in checks") {
  PssModel relay = relay_model();
  DcsSystem dcs(relay);

  // relay at x=2 with the exact LP solution
  Eigen::VectorXd r = dcs.residual(vec({2.0}), vec({1.0, 0.0}), vec({0.0, 4.0}), -2.0);
  CHECK(r.cwiseAbs().maxCoeff() <= 1e-14);

  // sliding point at x=0
  Eigen::VectorXd rs = dcs.residual(vec({0.0}), vec({0.5, 0.5}), vec({0.0, 0.0}), 0.0);
  CHECK(rs.cwiseAbs().maxCoeff() <= 1e-14);

  // theta = 0 violates the simplex row
  Eigen::VectorXd rv = dcs.residual(vec({2.0}), vec({0.0, 0.0}), vec({0.0, 4.0}), -2.0);
  CHECK(rv[relay.n_f()] == doctest::Approx(1.0));
}

TEST_CASE("dcs/lp oracle equivalence on random discriminants") {
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> dim(1, 6);
  std::uniform_real_distribution<double> val(-5.0, 5.0);
  std::uniform_int_distribution<int> coin(0, 1);

  for (int trial = 0; trial < 1000; ++trial) {
    const int nf = dim(rng);
    Eigen::VectorXd g(nf);
    for (int i = 0; i < nf; ++i) g[i] = val(rng);
    if (coin(rng) && nf >= 2) g[1] = g[0];  // force ties regularly

    auto fp = filippov_lp_oracle(g);

    // Invariants of the Filippov point itself.
    CHECK(fp.theta.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fp.theta.minCoeff() >= 0.0);
    CHECK(fp.lambda.minCoeff() >= 0.0);
    CHECK(std::abs(fp.theta.dot(fp.lambda)) <= 1e-12);
    CHECK(fp.mu == doctest::Approx(g.minCoeff()));
    // LP strong duality: objective value g^T theta equals mu.
    CHECK(g.dot(fp.theta) == doctest::Approx(fp.mu).epsilon(1e-12));

    // KKT residual of the oracle output is zero.
    Eigen::VectorXd r(2 * nf + 1);
    r.head(nf) = g - fp.lambda - Eigen::VectorXd::Constant(nf, fp.mu);
    r[nf] = 1.0 - fp.theta.sum();
    for (int i = 0; i < nf; ++i)
      r[nf + 1 + i] = c_function(CFunction::NaturalMin, fp.theta[i], fp.lambda[i]);
    CHECK(r.cwiseAbs().maxCoeff() <= 1e-12);

    // Adversarial perturbation: lambda +0.1 on an argmin component with
    // positive theta breaks the C-function row.
    const int k = fp.vertex_set.front();
    Eigen::VectorXd lam = fp.lambda;
    lam[k] += 0.1;
    CHECK(std::abs(c_function(CFunction::NaturalMin, fp.theta[k], lam[k])) > 1e-6);
  }
}

TEST_CASE("both C-functions share their zero set") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> val(0.0, 3.0);
  std::uniform_int_distribution<int> zero(0, 2);
  for (int trial = 0; trial < 1000; ++trial) {
    double a = val(rng), b = val(rng);
    const int z = zero(rng);
    if (z == 0) a = 0.0;
    if (z == 1) b = 0.0;
    const double fm = c_function(CFunction::NaturalMin, a, b);
    const double fb = c_function(CFunction::FischerBurmeister, a, b);
    CHECK((std::abs(fm) <= 1e-12) == (std::abs(fb) <= 1e-12));
  }
}

TEST_CASE("region_of: strict membership and boundary marker") {
  PssModel car = car_model();
  CHECK(region_of(car, vec({0.0, 15.0})) == 1);  // turbo
  CHECK(region_of(car, vec({0.0, 5.0})) == 0);
  CHECK_FALSE(region_of(car, vec({0.0, 10.0})).has_value());

  PssModel relay = relay_model();
  CHECK(region_of(relay, vec({-1.0})) == 1);
  CHECK(region_of(relay, vec({2.0})) == 0);
  CHECK_FALSE(region_of(relay, vec({0.0})).has_value());
}

TEST_CASE("DcsSystem: g matches -S c by random-point evaluation") {
  PssModel car = car_model();
  DcsSystem dcs(car);
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> val(-20.0, 20.0);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd x(2);
    x << val(rng), val(rng);
    Eigen::VectorXd c = car.switching_function()({x});
    Eigen::VectorXd g = dcs.discriminants()({x});
    Eigen::VectorXd expect = -car.sign_matrix() * c;
    CHECK((g - expect).cwiseAbs().maxCoeff() <= 1e-13);
  }
}
