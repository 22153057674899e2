#include "swoc/integrator.hpp"

#include <stdexcept>

namespace swoc {

using sym::Expr;

namespace {

std::vector<int> theta_support(const Eigen::MatrixXd& theta, double tol) {
  std::vector<int> out;
  for (int r = 0; r < theta.rows(); ++r)
    if (theta.row(r).maxCoeff() > tol) out.push_back(r);
  return out;
}

}  // namespace

SimulationResult integrator_fesd(const PssModel& model, const Eigen::VectorXd& x0, double T_sim,
                                 int N_sim, const IntegratorOptions& opts) {
  if (T_sim <= 0.0) throw std::invalid_argument("integrator_fesd: T_sim must be positive");
  if (N_sim < 1) throw std::invalid_argument("integrator_fesd: N_sim must be positive");
  if (x0.size() != model.n_x()) throw std::invalid_argument("integrator_fesd: x0 size mismatch");

  DiscretizationConfig cfg = opts.disc;
  cfg.validate();
  const ButcherTableau tab = butcher(cfg.scheme, cfg.n_s);
  const DcsSystem dcs(model);
  const int n_x = model.n_x(), n_f = model.n_f(), n_s = tab.n_s, N = cfg.n_fe;
  const double T_int = T_sim / N_sim;
  const bool fesd = cfg.mode == DiscMode::Fesd;

  Eigen::VectorXd u = opts.u.size() == model.n_u() ? opts.u : Eigen::VectorXd::Zero(model.n_u());

  // One interval problem, compiled once; the initial state is a parameter.
  VarLayout layout;
  IntervalOptions io;
  io.model = &model;
  io.dcs = &dcs;
  io.tab = &tab;
  io.cfg = cfg;
  io.h_nominal = T_int / N;
  io.apply_state_bounds = false;  // pure simulation: no box on the state
  for (int i = 0; i < n_x; ++i) io.s0.push_back(Expr::variable("p", i));
  for (int i = 0; i < model.n_u(); ++i) io.u.push_back(Expr::constant(u[i]));
  if (!fesd)
    for (int n = 0; n < N; ++n) io.h_fixed.push_back(Expr::constant(T_int / N));
  io.x_init_left = x0;
  io.x_init_right = x0;

  IntervalBuild built = build_interval(layout, io);

  Mpcc mpcc;
  mpcc.n_w = layout.size();
  mpcc.n_p = n_x;
  mpcc.objective = built.step_eq_penalty;
  mpcc.eq = built.eqs;
  if (fesd) mpcc.eq.push_back(built.sum_h - Expr::constant(T_int));
  mpcc.lb = layout.lb();
  mpcc.ub = layout.ub();
  mpcc.w_init = layout.init();
  mpcc.groups = built.groups;

  CompiledMpcc compiled(mpcc, opts.hom.mode, opts.hom.gamma_bar, opts.hom.componentwise);

  SimulationResult res;
  res.t_grid.push_back(0.0);
  res.x_grid.resize(n_x, N_sim * N + 1);
  res.x_grid.col(0) = x0;

  Eigen::VectorXd s0 = x0;
  double t_accum = 0.0;
  int col = 1;

  for (int k = 0; k < N_sim; ++k) {
    // Re-center the primal initialization on the current state.
    Eigen::VectorXd w_init = mpcc.w_init;
    for (int n = 0; n <= N; ++n) w_init.segment(built.refs.x_bnd(n), n_x) = s0;
    for (int n = 0; n < N; ++n) w_init.segment(built.refs.x_next(n), n_x) = s0;
    if (cfg.algebraic_init == AlgebraicInit::LpConsistent) {
      const FilippovPoint fp = filippov_lp_oracle(dcs.discriminants()({s0}));
      const double shift = cfg.theta_lambda_init;
      for (int n = 0; n < N; ++n) {
        for (int i = 0; i < n_s; ++i) {
          w_init.segment(built.refs.Th(n, i), n_f) = fp.theta;
          w_init.segment(built.refs.La(n, i), n_f) = fp.lambda.array() + shift;
          w_init[built.refs.M(n, i)] = fp.mu - shift;
        }
      }
    }

    HomotopyRun run = compiled.solve(opts.hom, w_init, s0);
    res.max_comp_residual = std::max(res.max_comp_residual, run.comp_res);

    IntervalSolution sol;
    const Eigen::VectorXd& w = run.w;
    sol.h.resize(N);
    for (int n = 0; n < N; ++n) sol.h[n] = fesd ? w[built.refs.h(n)] : T_int / N;
    sol.x_bnd.resize(n_x, N + 1);
    for (int n = 0; n <= N; ++n) sol.x_bnd.col(n) = w.segment(built.refs.x_bnd(n), n_x);
    for (int n = 0; n < N; ++n) {
      Eigen::MatrixXd th(n_f, n_s), la(n_f, n_s);
      Eigen::VectorXd mu(n_s);
      for (int i = 0; i < n_s; ++i) {
        th.col(i) = w.segment(built.refs.Th(n, i), n_f);
        la.col(i) = w.segment(built.refs.La(n, i), n_f);
        mu[i] = w[built.refs.M(n, i)];
      }
      sol.theta.push_back(th);
      sol.lambda.push_back(la);
      sol.mu.push_back(mu);
    }
    sol.run = std::move(run);

    const bool failed = !sol.run.ok();
    for (int n = 0; n < N; ++n) {
      t_accum += sol.h[n];
      res.t_grid.push_back(t_accum);
      res.x_grid.col(col++) = sol.x_bnd.col(n + 1);
      res.element_active_sets.push_back(theta_support(sol.theta[n], opts.theta_support_tol));
    }
    s0 = sol.x_bnd.col(N);
    res.intervals.push_back(std::move(sol));

    if (failed) {
      res.ok = false;
      res.failed_interval = k;
      res.message = "homotopy failed on interval " + std::to_string(k) + ": " +
                    res.intervals.back().run.message;
      res.x_grid.conservativeResize(n_x, col);
      return res;
    }
  }

  // Switches: active-set changes across element boundaries.
  for (std::size_t e = 1; e < res.element_active_sets.size(); ++e) {
    if (res.element_active_sets[e] != res.element_active_sets[e - 1])
      res.switch_times.push_back(res.t_grid[e]);
  }
  res.ok = true;
  return res;
}

FrozenTrajectory to_frozen(const SimulationResult& sim, int clock_row) {
  FrozenTrajectory ft;
  ft.tau = Eigen::Map<const Eigen::VectorXd>(sim.t_grid.data(), sim.t_grid.size());
  ft.states = sim.x_grid;
  ft.clock_row = clock_row;
  return ft;
}

}  // namespace swoc
