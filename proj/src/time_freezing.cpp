#include "swoc/time_freezing.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace swoc {

double damping_ratio_for_restitution(double e) {
  if (!(e > 0.0 && e <= 1.0))
    throw std::invalid_argument("restitution coefficient must lie in (0, 1]");
  if (e == 1.0) return 0.0;
  const double l = std::log(e);
  return -l / std::sqrt(M_PI * M_PI + l * l);
}

namespace {

// The gap must be c = q_j - const for a unique j: its gradient w.r.t. x is
// checked at random points to be the j-th unit vector, constant.
int normal_position_index(const JumpModel& jm) {
  const int n_x = 2 * jm.n_q;
  const VecFunc jac = jm.c_gap.jacobian("x");
  std::mt19937 rng(12345);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);

  Eigen::VectorXd grad0;
  for (int trial = 0; trial < 4; ++trial) {
    Eigen::VectorXd x(n_x);
    for (int i = 0; i < n_x; ++i) x[i] = dist(rng);
    Eigen::VectorXd g = jac({x});
    if (trial == 0)
      grad0 = g;
    else if ((g - grad0).cwiseAbs().maxCoeff() > 1e-9)
      throw std::invalid_argument("time_freeze_elastic: gap function must be affine in q");
  }
  int j = -1;
  for (int i = 0; i < n_x; ++i) {
    if (std::abs(grad0[i]) > 1e-12) {
      if (j >= 0)
        throw std::invalid_argument(
            "time_freeze_elastic: gap must depend on a single position coordinate");
      j = i;
    }
  }
  if (j < 0) throw std::invalid_argument("time_freeze_elastic: gap gradient is zero");
  if (j >= jm.n_q)
    throw std::invalid_argument("time_freeze_elastic: gap must depend on q only");
  if (std::abs(grad0[j] - 1.0) > 1e-9)
    throw std::invalid_argument("time_freeze_elastic: gap must have unit gradient in q_j");
  return j;
}

}  // namespace

PssModel time_freeze_elastic(const JumpModel& jm, double k_aux) {
  if (k_aux <= 0.0) throw std::invalid_argument("time_freeze_elastic: k_aux must be positive");
  if (jm.n_q <= 0) throw std::invalid_argument("time_freeze_elastic: n_q must be positive");
  const int n_x = 2 * jm.n_q;
  if (jm.f_smooth.n_out() != n_x)
    throw std::invalid_argument("time_freeze_elastic: f_smooth output dimension mismatch");
  if (jm.c_gap.n_out() != 1)
    throw std::invalid_argument("time_freeze_elastic: gap function must be scalar");

  const double xi = damping_ratio_for_restitution(jm.restitution);
  const int j = normal_position_index(jm);
  const int n_u = jm.f_smooth.block_dim("u");
  const int n_aug = n_x + 1;

  // Augmented state y = (q, v, t). The original functions see y's first
  // n_x entries as x.
  std::vector<Expr> y(n_aug), u(n_u);
  for (int i = 0; i < n_aug; ++i) y[i] = Expr::variable("x", i);
  for (int i = 0; i < n_u; ++i) u[i] = Expr::variable("u", i);
  const std::vector<Expr> x_part(y.begin(), y.begin() + n_x);

  // Switching function: the gap itself.
  Expr c_expr = substitute(jm.c_gap.outputs()[0], {{"x", x_part}});
  VecFunc c_aug("c", {{"x", n_aug}}, {c_expr});

  Eigen::MatrixXd S(2, 1);
  S << 1.0, -1.0;  // region 0: gap > 0 (physical), region 1: gap < 0 (auxiliary)

  // Physical region: smooth dynamics, clock rate 1.
  std::vector<Expr> f1 = jm.f_smooth.at({{"x", x_part}, {"u", u}});
  f1.push_back(Expr::constant(1.0));
  VecFunc f_phys("f_phys", {{"x", n_aug}, {"u", n_u}}, std::move(f1));

  // Auxiliary region: damped oscillator on (q_j, v_j), everything else
  // (including the clock) frozen.
  std::vector<Expr> f2(n_aug, Expr::constant(0.0));
  f2[j] = y[jm.n_q + j];
  f2[jm.n_q + j] =
      Expr::constant(-k_aux) * c_expr - Expr::constant(2.0 * xi * std::sqrt(k_aux)) * y[jm.n_q + j];
  VecFunc f_aux("f_aux", {{"x", n_aug}, {"u", n_u}}, std::move(f2));

  const double inf = std::numeric_limits<double>::infinity();
  auto pad = [&](const Eigen::VectorXd& v, int dim, double fill) {
    if (v.size() == 0) return Eigen::VectorXd::Constant(dim, fill).eval();
    Eigen::VectorXd out(dim);
    out.head(v.size()) = v;
    if (dim > v.size()) out.tail(dim - v.size()).setConstant(fill);
    return out;
  };
  Eigen::VectorXd lbx = pad(jm.lbx, n_aug, -inf);
  Eigen::VectorXd ubx = pad(jm.ubx, n_aug, inf);
  lbx[n_x] = -inf;  // clock unconstrained; monotone by construction
  ubx[n_x] = inf;
  Eigen::VectorXd lbu = pad(jm.lbu, n_u, -inf);
  Eigen::VectorXd ubu = pad(jm.ubu, n_u, inf);

  Eigen::VectorXd x0(n_aug);
  if (jm.x0.size() != n_x)
    throw std::invalid_argument("time_freeze_elastic: x0 dimension mismatch");
  x0.head(n_x) = jm.x0;
  x0[n_x] = 0.0;

  return define_pss(std::move(c_aug), S, {std::move(f_phys), std::move(f_aux)}, std::move(lbx),
                    std::move(ubx), std::move(lbu), std::move(ubu), std::move(x0));
}

PhysicalTrajectory recover_physical_time(const FrozenTrajectory& ft, double freeze_rate_tol) {
  const int n = static_cast<int>(ft.tau.size());
  if (n < 1 || ft.states.cols() != n)
    throw std::invalid_argument("recover_physical_time: grid/state size mismatch");
  if (ft.clock_row < 0 || ft.clock_row >= ft.states.rows())
    throw std::invalid_argument("recover_physical_time: bad clock row");

  const Eigen::VectorXd clock = ft.states.row(ft.clock_row);
  const double scale = std::max(1.0, clock.cwiseAbs().maxCoeff());
  for (int i = 0; i + 1 < n; ++i) {
    if (clock[i + 1] < clock[i] - 1e-9 * scale)
      throw std::runtime_error("recover_physical_time: clock decreases at sample " +
                               std::to_string(i));
  }

  PhysicalTrajectory out;
  out.t.resize(n);
  const int n_rows = static_cast<int>(ft.states.rows()) - 1;
  out.states.resize(n_rows, n);
  for (int i = 0; i < n; ++i) {
    out.t[i] = std::max(clock[i], i > 0 ? out.t[i - 1] : clock[i]);  // clip roundoff dips
    int r = 0;
    for (int row = 0; row < ft.states.rows(); ++row) {
      if (row == ft.clock_row) continue;
      out.states(r++, i) = ft.states(row, i);
    }
  }
  out.duration = out.t.back();

  // A jump instant is the start of each maximal frozen span.
  bool in_frozen = false;
  for (int i = 0; i + 1 < n; ++i) {
    const double dtau = ft.tau[i + 1] - ft.tau[i];
    const double dt = clock[i + 1] - clock[i];
    const bool frozen = dtau > 0.0 && dt <= freeze_rate_tol * dtau;
    if (frozen && !in_frozen) out.jump_times.push_back(out.t[i]);
    in_frozen = frozen;
  }
  return out;
}

}  // namespace swoc
