#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "swoc/fesd.hpp"
#include "swoc/time_freezing.hpp"

namespace swoc {

struct IntegratorOptions {
  DiscretizationConfig disc;
  HomotopyConfig hom;
  Eigen::VectorXd u;              // constant control over the horizon; empty = zeros
  double theta_support_tol = 1e-4;  // support threshold for active-set reads
};

struct IntervalSolution {
  Eigen::VectorXd h;
  Eigen::MatrixXd x_bnd;                // n_x x (n_fe + 1)
  std::vector<Eigen::MatrixXd> theta;   // per element: n_f x n_s
  std::vector<Eigen::MatrixXd> lambda;  // per element: n_f x n_s
  std::vector<Eigen::VectorXd> mu;      // per element: n_s
  HomotopyRun run;
};

struct SimulationResult {
  std::vector<double> t_grid;  // global element-boundary times
  Eigen::MatrixXd x_grid;      // n_x x t_grid.size()
  std::vector<std::vector<int>> element_active_sets;  // support of theta per element
  std::vector<double> switch_times;  // boundary times where the active set changes
  std::vector<IntervalSolution> intervals;
  double max_comp_residual = 0.0;
  bool ok = false;
  int failed_interval = -1;
  std::string message;
};

/// Splits [0, T_sim] into N_sim successive intervals and solves each one's
/// discrete-time system as a feasibility MPCC by homotopy, warm grid sizes
/// placing element boundaries on the switch times (fesd mode). Reports
/// per-interval solutions, detected switch times and active sets.
SimulationResult integrator_fesd(const PssModel& model, const Eigen::VectorXd& x0, double T_sim,
                                 int N_sim, const IntegratorOptions& opts);

/// View of a simulation of a time-frozen model as a frozen trajectory
/// (numerical-time grid plus clock row), ready for physical-time recovery.
FrozenTrajectory to_frozen(const SimulationResult& sim, int clock_row);

}  // namespace swoc
