#include <doctest.h>

#include <cmath>
#include <random>

#include "swoc/mpcc.hpp"

using namespace swoc;
using sym::Expr;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> v) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

// min (w1-1)^2 + (w2-1)^2  s.t.  0 <= w1 perp w2 >= 0.
// Minima at (1,0) and (0,1), objective 1.
Mpcc toy_mpcc() {
  Mpcc m;
  m.n_w = 2;
  m.objective = pow(Expr::variable("w", 0) - 1.0, 2.0) + pow(Expr::variable("w", 1) - 1.0, 2.0);
  m.lb = vec({0.0, 0.0});
  m.ub = vec({std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()});
  m.w_init = vec({0.5, 0.5});
  m.groups.push_back({{{0, 1}}});
  return m;
}

}  // namespace

TEST_CASE("comp_residual: examples and errors") {
  CHECK(comp_residual(vec({0.0, 2.0}), vec({3.0, 0.0})) == doctest::Approx(0.0));
  CHECK(comp_residual(vec({1.0, 1.0}), vec({1.0, 2.0})) == doctest::Approx(1.0));
  CHECK_THROWS_AS(comp_residual(vec({-0.5}), vec({1.0})), std::invalid_argument);
}

TEST_CASE("comp_residual: constructed complementary pairs always vanish") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> val(0.0, 10.0);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + trial % 8;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n), b = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      if (coin(rng))
        a[i] = val(rng);
      else
        b[i] = val(rng);
    }
    CHECK(comp_residual(a, b) == 0.0);
  }
}

TEST_CASE("mpcc validation: disjoint sides and zero lower bounds") {
  Mpcc m = toy_mpcc();
  CHECK_NOTHROW(m.validate());

  Mpcc bad = toy_mpcc();
  bad.groups[0].pairs.push_back({1, 0});  // 1 now on both sides
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  Mpcc bad2 = toy_mpcc();
  bad2.lb[0] = -1.0;
  CHECK_THROWS_AS(bad2.validate(), std::invalid_argument);
}

TEST_CASE("reformulate: structural behavior of each mode") {
  Mpcc m = toy_mpcc();

  SUBCASE("sigma must be positive, mode strings round-trip") {
    CHECK_THROWS_AS(reformulate(m, MpccMode::Relaxation, 0.0, 1e3), std::invalid_argument);
    CHECK(mpcc_mode_from_string(to_string(MpccMode::ElasticTwoSided)) ==
          MpccMode::ElasticTwoSided);
  }

  SUBCASE("relaxation at a feasible MPCC point is NLP-feasible for sigma=1") {
    Reformulation r = reformulate(m, MpccMode::Relaxation, 1.0, 1e3);
    REQUIRE(r.nlp.ineq.n_out() == 1);
    Eigen::VectorXd at = vec({1.0, 0.0});
    const double v = r.nlp.ineq(std::vector<Eigen::VectorXd>{at, r.nlp.p})[0];
    CHECK(v == doctest::Approx(1.0));  // sigma - 0 >= 0
  }

  SUBCASE("l1 penalty adds (1/sigma) * pairing to the objective") {
    Reformulation r = reformulate(m, MpccMode::L1Penalty, 0.1, 1e3);
    Eigen::VectorXd at = vec({2.0, 3.0});
    const double with = r.nlp.objective(std::vector<Eigen::VectorXd>{at, r.nlp.p})[0];
    const double base = (2.0 - 1.0) * (2.0 - 1.0) + (3.0 - 1.0) * (3.0 - 1.0);
    CHECK(with - base == doctest::Approx(10.0 * 6.0).epsilon(1e-12));
  }

  SUBCASE("elastic-ineq at gamma = 0 recovers exact complementarity") {
    Reformulation r = reformulate(m, MpccMode::ElasticIneq, 1.0, 1e3);
    REQUIRE(r.has_gamma);
    Eigen::VectorXd at(3);
    at << 0.4, 0.7, 0.0;  // gamma = 0
    const double v = r.nlp.ineq(std::vector<Eigen::VectorXd>{at, r.nlp.p})[0];
    CHECK(v == doctest::Approx(-0.28));  // gamma - w1 w2 < 0: infeasible unless pairing 0
  }

  SUBCASE("smoothing adds the equality pairing = sigma") {
    Reformulation r = reformulate(m, MpccMode::Smoothing, 0.25, 1e3);
    REQUIRE(r.nlp.eq.n_out() == 1);
    Eigen::VectorXd at = vec({0.5, 0.5});
    CHECK(r.nlp.eq(std::vector<Eigen::VectorXd>{at, r.nlp.p})[0] == doctest::Approx(0.0));
  }
}

TEST_CASE("homotopy: scalar toy MPCC solved by every mode") {
  Mpcc m = toy_mpcc();
  for (MpccMode mode : {MpccMode::Smoothing, MpccMode::Relaxation, MpccMode::L1Penalty,
                        MpccMode::ElasticEq, MpccMode::ElasticIneq, MpccMode::ElasticTwoSided}) {
    CAPTURE(to_string(mode));
    HomotopyConfig cfg;
    cfg.mode = mode;
    cfg.sigma0 = 1.0;
    cfg.kappa = 0.1;
    cfg.max_iterations = 20;
    cfg.tol_comp = 1e-12;
    cfg.nlp_tol = 1e-12;
    HomotopyRun run = homotopy_solve(m, cfg, m.w_init);
    CHECK(run.ok());
    CHECK(run.comp_res <= 1e-12);
    CHECK(std::abs(run.objective - 1.0) <= 1e-8);
    // one branch of the complementarity set, not the origin
    CHECK(std::max(run.w[0], run.w[1]) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("homotopy: sigma schedule is exactly sigma0 * kappa^i") {
  Mpcc m = toy_mpcc();
  HomotopyConfig cfg;
  cfg.sigma0 = 0.7;
  cfg.kappa = 0.25;
  cfg.max_iterations = 8;
  cfg.tol_comp = 1e-300;  // force all iterations to run
  HomotopyRun run = homotopy_solve(m, cfg, m.w_init);
  REQUIRE(static_cast<int>(run.iters.size()) == 8);
  for (int i = 0; i < 8; ++i)
    CHECK(run.iters[i].sigma == 0.7 * std::pow(0.25, i));
  CHECK(run.status == HomotopyStatus::MaxIterations);
}

TEST_CASE("homotopy: already-complementary start converges immediately") {
  Mpcc m = toy_mpcc();
  HomotopyConfig cfg;
  cfg.sigma0 = 1.0;
  cfg.kappa = 0.1;
  cfg.tol_comp = 1e-9;
  HomotopyRun run = homotopy_solve(m, cfg, vec({1.0, 0.0}));
  CHECK(run.ok());
  const double sigma_last = run.iters.back().sigma;
  CHECK(sigma_last >= 1.0 * std::pow(0.1, cfg.max_iterations));
}

TEST_CASE("homotopy: l1 mode reaches exact complementarity at finite sigma") {
  Mpcc m = toy_mpcc();
  HomotopyConfig cfg;
  cfg.mode = MpccMode::L1Penalty;
  cfg.max_iterations = 20;
  cfg.tol_comp = 1e-13;
  HomotopyRun run = homotopy_solve(m, cfg, m.w_init);
  REQUIRE(run.ok());
  double sigma_threshold = -1.0;
  for (const auto& it : run.iters) {
    if (it.comp_res <= 1e-12) {
      sigma_threshold = it.sigma;
      break;
    }
  }
  CHECK(sigma_threshold > 0.0);  // observed finite threshold
  MESSAGE("l1 exactness threshold observed at sigma = ", sigma_threshold);
}

TEST_CASE("homotopy: componentwise pairing constraints") {
  // Two independent pairs; componentwise mode emits one constraint per group.
  Mpcc m;
  m.n_w = 4;
  m.objective = pow(Expr::variable("w", 0) - 1.0, 2.0) + pow(Expr::variable("w", 1) - 1.0, 2.0) +
                pow(Expr::variable("w", 2) - 2.0, 2.0) + pow(Expr::variable("w", 3) - 1.0, 2.0);
  m.lb = Eigen::VectorXd::Zero(4);
  m.ub = Eigen::VectorXd::Constant(4, std::numeric_limits<double>::infinity());
  m.w_init = Eigen::VectorXd::Constant(4, 0.5);
  m.groups.push_back({{{0, 1}}});
  m.groups.push_back({{{2, 3}}});

  Reformulation agg = reformulate(m, MpccMode::Relaxation, 1.0, 1e3, false);
  Reformulation cw = reformulate(m, MpccMode::Relaxation, 1.0, 1e3, true);
  CHECK(agg.nlp.ineq.n_out() == 1);
  CHECK(cw.nlp.ineq.n_out() == 2);

  HomotopyConfig cfg;
  cfg.componentwise = true;
  cfg.max_iterations = 20;
  cfg.tol_comp = 1e-12;
  cfg.nlp_tol = 1e-12;
  HomotopyRun run = homotopy_solve(m, cfg, m.w_init);
  CHECK(run.ok());
  CHECK(run.w[2] == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(run.w[3] == doctest::Approx(0.0).epsilon(1e-6));
}
