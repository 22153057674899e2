#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "swoc/fesd.hpp"
#include "swoc/integrator.hpp"
#include "swoc/time_freezing.hpp"

namespace swoc {

/// Continuous-time optimal control problem over a piecewise smooth system:
///   min  int f_q(x,u) dt + f_T(x(T))
///   s.t. x(0) = x0, PSS dynamics, g_ineq(x,u) <= 0, terminal constraints.
/// Every function slot is optional (default-constructed = absent).
struct OcpDefinition {
  PssModel model;
  sym::VecFunc stage_cost;     // scalar over (x, u)
  sym::VecFunc terminal_cost;  // scalar over (x)
  sym::VecFunc path_ineq;      // over (x, u); rows <= 0
  sym::VecFunc terminal_eq;    // over (x); rows = 0
  sym::VecFunc terminal_ineq;  // over (x); rows <= 0
  double T = 1.0;              // fixed horizon; for time-optimal runs the nominal value
  bool time_optimal = false;
  int n_ctrl = 1;
  DiscretizationConfig disc;
  // Set when the model came from the time-freezing transformation; the
  // horizon T is then physical and enforced via the terminal clock value,
  // while the numerical horizon stays free.
  bool time_freezing = false;
  int clock_state = -1;

  void validate() const;
};

struct TranscriptionOptions {
  double T_min = 1e-2;   // time-optimal horizon bounds
  double T_max = 1e3;
  double T_init = -1.0;  // < 0: initialize the horizon variable from ocp.T
  // Equal-length control intervals. Always the case for fixed horizons;
  // for time-optimal problems disabling this frees the per-interval
  // durations (the step sizes absorb the time scaling), which lets control
  // switching times coincide with the optimized grid.
  bool equidistant_control_grid = false;
  double tf_horizon_factor = 2.0;  // time-freezing: T_num in [T, factor * T]
  Eigen::VectorXd x_init_terminal;  // optional terminal state hint for initialization
  Eigen::VectorXd u_init;           // optional control initialization
};

struct TranscribedOcp {
  Mpcc mpcc;
  VarLayout layout;
  std::vector<IntervalBuild> intervals;
  std::vector<int> s_start;  // start of s_k, k = 0..n_ctrl
  std::vector<int> q_start;  // start of q_k, k = 0..n_ctrl-1
  int T_index = -1;          // horizon variable (time-optimal / time-freezing)
  bool time_transform_applied = false;
  int n_ctrl = 0, n_x = 0, n_u = 0, n_f = 0, n_s = 0, n_fe = 0;
  OcpDefinition ocp;               // kept for the time-optimal transform
  TranscriptionOptions options;
};

/// Multiple-shooting transcription: equal control intervals, per-interval
/// FESD (or standard RK) systems, shooting continuity, path constraints at
/// the shooting nodes, stage cost integrated with the RK weights.
TranscribedOcp transcribe(const OcpDefinition& ocp, const TranscriptionOptions& opts = {});

/// Minimum-time transform: introduces the horizon variable T with bounds,
/// adds it to the objective and routes it into the step-size constraints;
/// nothing else in the dynamics needs scaling. Requires ocp.time_optimal.
TranscribedOcp time_optimal_transform(const TranscribedOcp& t);

struct OcpSolution {
  double T = 0.0;            // physical horizon (fixed or optimized)
  double T_numerical = 0.0;  // differs from T only under time freezing
  double objective = 0.0;
  Eigen::MatrixXd s;  // n_x x (n_ctrl + 1)
  Eigen::MatrixXd q;  // n_u x n_ctrl
  std::vector<double> t_shoot;  // control-interval boundary times
  std::vector<double> t_grid;   // element boundary times
  Eigen::MatrixXd x_grid;       // states on the element grid
  Eigen::VectorXd h_all;
  std::vector<Eigen::MatrixXd> theta, lambda;  // per global element
  std::vector<Eigen::VectorXd> mu;
  std::vector<std::vector<int>> element_active_sets;
  std::vector<double> switch_times;
  double comp_residual = std::numeric_limits<double>::infinity();
  bool has_physical = false;
  PhysicalTrajectory physical;  // populated for time-frozen models
};

/// Reads a solution vector back into trajectories, ordered by cumulative
/// step size, with switch times at active-set changes; applies physical
/// time recovery for time-frozen models.
OcpSolution extract_solution(const TranscribedOcp& t, const Eigen::VectorXd& w);

struct OcpSolveResult {
  TranscribedOcp transcription;
  HomotopyRun run;
  OcpSolution solution;
  [[nodiscard]] bool ok() const { return run.ok(); }
};

/// transcribe -> (time-optimal transform when flagged) -> homotopy -> extract.
OcpSolveResult solve_ocp(const OcpDefinition& ocp, const TranscriptionOptions& topts,
                         const HomotopyConfig& hom);

}  // namespace swoc
