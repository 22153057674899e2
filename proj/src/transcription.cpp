#include <cmath>
#include <stdexcept>

#include "swoc/ocp.hpp"

namespace swoc {

using sym::Expr;

void OcpDefinition::validate() const {
  if (n_ctrl < 1) throw std::invalid_argument("OcpDefinition: n_ctrl must be >= 1");
  if (!time_optimal && T <= 0.0) throw std::invalid_argument("OcpDefinition: T must be positive");
  disc.validate();
  if (stage_cost.n_out() > 1 || terminal_cost.n_out() > 1)
    throw std::invalid_argument("OcpDefinition: costs must be scalar");
  if (time_freezing && (clock_state < 0 || clock_state >= model.n_x()))
    throw std::invalid_argument("OcpDefinition: bad clock state index");
  if (time_freezing && time_optimal)
    throw std::invalid_argument("OcpDefinition: time-optimal + time-freezing is not supported");
}

namespace {

TranscribedOcp transcribe_impl(const OcpDefinition& ocp, const TranscriptionOptions& opts,
                               bool apply_time_transform) {
  ocp.validate();
  const PssModel& model = ocp.model;
  const DiscretizationConfig& cfg = ocp.disc;
  const ButcherTableau tab = butcher(cfg.scheme, cfg.n_s);
  DcsSystem dcs(model);

  const int n_x = model.n_x(), n_u = model.n_u(), n_f = model.n_f();
  const int N = ocp.n_ctrl, NFE = cfg.n_fe, n_s = tab.n_s;
  const bool fesd = cfg.mode == DiscMode::Fesd;
  const bool horizon_var = apply_time_transform || ocp.time_freezing;

  TranscribedOcp t;
  t.ocp = ocp;
  t.options = opts;
  t.n_ctrl = N;
  t.n_x = n_x;
  t.n_u = n_u;
  t.n_f = n_f;
  t.n_s = n_s;
  t.n_fe = NFE;
  t.time_transform_applied = apply_time_transform;

  VarLayout& L = t.layout;

  // Nominal horizon for initialization and step bounds.
  double T_nom = ocp.T;
  if (apply_time_transform)
    T_nom = opts.T_init > 0.0 ? opts.T_init
                              : std::min(std::max(ocp.T, opts.T_min), opts.T_max);

  // Horizon variable first (time-optimal T, or the free numerical horizon
  // of a time-frozen problem).
  Expr T_expr = Expr::constant(ocp.T);
  if (horizon_var) {
    double lo = opts.T_min, hi = opts.T_max, init = T_nom;
    if (ocp.time_freezing) {
      lo = ocp.T;
      hi = opts.tf_horizon_factor * ocp.T;
      init = std::min(1.05 * ocp.T, hi);
      T_nom = init;
    }
    t.T_index = L.add("T", 1, lo, hi, init);
    T_expr = L.var(t.T_index);
  }

  // Controls.
  Eigen::VectorXd u_init = Eigen::VectorXd::Zero(n_u);
  if (opts.u_init.size() == n_u) u_init = opts.u_init;
  for (int i = 0; i < n_u; ++i)
    u_init[i] = std::min(std::max(u_init[i], model.lbu()[i]), model.ubu()[i]);
  for (int k = 0; k < N; ++k)
    t.q_start.push_back(L.add("q" + std::to_string(k), n_u, model.lbu(), model.ubu(), u_init));

  // Shooting nodes, initialized along a straight line to the terminal hint.
  const Eigen::VectorXd x_goal =
      opts.x_init_terminal.size() == n_x ? opts.x_init_terminal : model.x0();
  auto x_guess = [&](double frac) { return (model.x0() + frac * (x_goal - model.x0())).eval(); };
  for (int k = 0; k <= N; ++k)
    t.s_start.push_back(
        L.add("s" + std::to_string(k), n_x, model.lbx(), model.ubx(), x_guess(double(k) / N)));

  Mpcc& m = t.mpcc;
  Expr objective = Expr::constant(0.0);
  std::vector<Expr> ineq;

  // s_0 = x0.
  for (int r = 0; r < n_x; ++r)
    m.eq.push_back(L.var(t.s_start[0] + r) - Expr::constant(model.x0()[r]));

  const double h_nom = T_nom / (N * NFE);
  int lambda_left = -1;

  for (int k = 0; k < N; ++k) {
    IntervalOptions io;
    io.model = &model;
    io.dcs = &dcs;
    io.tab = &tab;
    io.cfg = cfg;
    io.prefix = "k" + std::to_string(k) + "_";
    io.s0 = L.vars(t.s_start[k], n_x);
    io.u = L.vars(t.q_start[k], n_u);
    io.h_nominal = h_nom;
    io.lambda_left_index = lambda_left;
    io.x_init_left = x_guess(double(k) / N);
    io.x_init_right = x_guess(double(k + 1) / N);
    if (!fesd) {
      // Fixed uniform steps; they scale with the horizon variable if any.
      for (int n = 0; n < NFE; ++n)
        io.h_fixed.push_back(T_expr * Expr::constant(1.0 / (N * NFE)));
    } else if (horizon_var) {
      // The box must cover every admissible horizon.
      const double lo_T = ocp.time_freezing ? ocp.T : opts.T_min;
      const double hi_T = ocp.time_freezing ? opts.tf_horizon_factor * ocp.T : opts.T_max;
      io.h_lb = std::max(1e-10, (1.0 - cfg.gamma_h) * lo_T / (N * NFE));
      io.h_ub = (1.0 + cfg.gamma_h) * hi_T / (N * NFE);
    }

    IntervalBuild built = build_interval(L, io);

    // Shooting continuity s_{k+1} = F(Z_k).
    for (int r = 0; r < n_x; ++r)
      m.eq.push_back(L.var(t.s_start[k + 1] + r) - built.x_end[r]);

    // Horizon distribution over the interval.
    if (fesd) {
      if (!horizon_var) {
        m.eq.push_back(built.sum_h - Expr::constant(ocp.T / N));
      } else if (opts.equidistant_control_grid || ocp.time_freezing) {
        m.eq.push_back(built.sum_h - T_expr * Expr::constant(1.0 / N));
      }
      // Free grid: only the global sum constraint below.
    }

    // Stage cost via the RK quadrature weights.
    if (ocp.stage_cost.n_out() == 1) {
      for (int n = 0; n < NFE; ++n) {
        for (int i = 0; i < n_s; ++i) {
          std::vector<Expr> xi = L.vars(built.refs.x_bnd(n), n_x);
          for (int j = 0; j < n_s; ++j) {
            if (tab.a(i, j) == 0.0) continue;
            for (int r = 0; r < n_x; ++r)
              xi[r] += built.h[n] * Expr::constant(tab.a(i, j)) *
                       L.var(built.refs.V(n, j) + r);
          }
          const Expr fq = ocp.stage_cost.at({{"x", xi}, {"u", io.u}})[0];
          objective += built.h[n] * Expr::constant(tab.b[i]) * fq;
        }
      }
    }

    objective += built.step_eq_penalty;
    for (auto& g : built.groups) m.groups.push_back(std::move(g));
    for (auto& e : built.eqs) m.eq.push_back(std::move(e));

    lambda_left = built.refs.La(NFE - 1, n_s - 1);
    t.intervals.push_back(std::move(built));
  }

  // Global horizon coupling for the free control grid.
  if (fesd && horizon_var && !(opts.equidistant_control_grid || ocp.time_freezing)) {
    Expr total = Expr::constant(0.0);
    for (const auto& b : t.intervals) total += b.sum_h;
    m.eq.push_back(total - T_expr);
  }

  // Path constraints at the shooting nodes (g <= 0 enters as -g >= 0).
  if (ocp.path_ineq.n_out() > 0) {
    for (int k = 0; k < N; ++k) {
      const auto rows =
          ocp.path_ineq.at({{"x", L.vars(t.s_start[k], n_x)}, {"u", L.vars(t.q_start[k], n_u)}});
      for (const auto& r : rows) ineq.push_back(-r);
    }
  }

  // Terminal constraints and cost at s_N.
  const std::vector<Expr> sN = L.vars(t.s_start[N], n_x);
  if (ocp.terminal_eq.n_out() > 0)
    for (const auto& r : ocp.terminal_eq.at({{"x", sN}})) m.eq.push_back(r);
  if (ocp.terminal_ineq.n_out() > 0)
    for (const auto& r : ocp.terminal_ineq.at({{"x", sN}})) ineq.push_back(-r);
  if (ocp.terminal_cost.n_out() == 1) objective += ocp.terminal_cost.at({{"x", sN}})[0];

  // Time-freezing: the physical horizon is pinned through the final clock.
  if (ocp.time_freezing)
    m.eq.push_back(L.var(t.s_start[N] + ocp.clock_state) - Expr::constant(ocp.T));

  // Minimum time.
  if (apply_time_transform) objective += T_expr;

  m.n_w = L.size();
  m.n_p = 0;
  m.objective = objective;
  m.ineq = std::move(ineq);
  m.lb = L.lb();
  m.ub = L.ub();
  m.w_init = L.init();
  m.validate();
  return t;
}

}  // namespace

TranscribedOcp transcribe(const OcpDefinition& ocp, const TranscriptionOptions& opts) {
  return transcribe_impl(ocp, opts, false);
}

TranscribedOcp time_optimal_transform(const TranscribedOcp& t) {
  if (!t.ocp.time_optimal)
    throw std::invalid_argument("time_optimal_transform: problem has a fixed horizon");
  if (t.time_transform_applied) return t;
  return transcribe_impl(t.ocp, t.options, true);
}

OcpSolution extract_solution(const TranscribedOcp& t, const Eigen::VectorXd& w) {
  if (w.size() < t.mpcc.n_w)
    throw std::invalid_argument("extract_solution: solution vector size mismatch");
  const OcpDefinition& ocp = t.ocp;
  OcpSolution sol;

  sol.T = ocp.T;
  sol.T_numerical = ocp.T;
  if (t.T_index >= 0) {
    if (ocp.time_freezing) {
      sol.T_numerical = w[t.T_index];
    } else {
      sol.T = w[t.T_index];
      sol.T_numerical = sol.T;
    }
  }

  sol.s.resize(t.n_x, t.n_ctrl + 1);
  for (int k = 0; k <= t.n_ctrl; ++k) sol.s.col(k) = w.segment(t.s_start[k], t.n_x);
  sol.q.resize(t.n_u, t.n_ctrl);
  for (int k = 0; k < t.n_ctrl; ++k) sol.q.col(k) = w.segment(t.q_start[k], t.n_u);

  const int total_elems = t.n_ctrl * t.n_fe;
  sol.h_all.resize(total_elems);
  sol.t_grid.assign(1, 0.0);
  sol.x_grid.resize(t.n_x, total_elems + 1);
  sol.x_grid.col(0) = sol.s.col(0);
  sol.t_shoot.assign(1, 0.0);

  double tcum = 0.0;
  int e = 0;
  for (int k = 0; k < t.n_ctrl; ++k) {
    const IntervalBuild& b = t.intervals[k];
    const bool fesd = ocp.disc.mode == DiscMode::Fesd;
    for (int n = 0; n < t.n_fe; ++n) {
      double h;
      if (fesd) {
        h = w[b.refs.h(n)];
      } else {
        h = sol.T_numerical / (t.n_ctrl * t.n_fe);
      }
      sol.h_all[e] = h;
      tcum += h;
      sol.t_grid.push_back(tcum);
      sol.x_grid.col(e + 1) = w.segment(b.refs.x_bnd(n + 1), t.n_x);

      Eigen::MatrixXd th(t.n_f, t.n_s), la(t.n_f, t.n_s);
      Eigen::VectorXd mu(t.n_s);
      for (int i = 0; i < t.n_s; ++i) {
        th.col(i) = w.segment(b.refs.Th(n, i), t.n_f);
        la.col(i) = w.segment(b.refs.La(n, i), t.n_f);
        mu[i] = w[b.refs.M(n, i)];
      }
      sol.theta.push_back(th);
      sol.lambda.push_back(la);
      sol.mu.push_back(mu);

      std::vector<int> support;
      for (int r = 0; r < t.n_f; ++r)
        if (th.row(r).maxCoeff() > 1e-4) support.push_back(r);
      sol.element_active_sets.push_back(support);
      ++e;
    }
    sol.t_shoot.push_back(tcum);
  }

  for (std::size_t i = 1; i < sol.element_active_sets.size(); ++i)
    if (sol.element_active_sets[i] != sol.element_active_sets[i - 1])
      sol.switch_times.push_back(sol.t_grid[i]);

  sol.comp_residual = comp_residual(t.mpcc, w.head(t.mpcc.n_w));

  Eigen::VectorXd pe(0);
  sym::VecFunc obj("obj", {{"w", t.mpcc.n_w}, {"p", 0}}, {t.mpcc.objective});
  sol.objective = obj({w.head(t.mpcc.n_w), pe})[0];

  if (ocp.time_freezing) {
    FrozenTrajectory ft;
    ft.tau = Eigen::Map<const Eigen::VectorXd>(sol.t_grid.data(), sol.t_grid.size());
    ft.states = sol.x_grid;
    ft.clock_row = ocp.clock_state;
    sol.physical = recover_physical_time(ft);
    sol.has_physical = true;
  }
  return sol;
}

OcpSolveResult solve_ocp(const OcpDefinition& ocp, const TranscriptionOptions& topts,
                         const HomotopyConfig& hom) {
  OcpSolveResult out;
  out.transcription = transcribe(ocp, topts);
  if (ocp.time_optimal) out.transcription = time_optimal_transform(out.transcription);
  out.run = homotopy_solve(out.transcription.mpcc, hom, out.transcription.mpcc.w_init);
  out.solution = extract_solution(out.transcription, out.run.w);
  return out;
}

}  // namespace swoc
