#pragma once

#include <Eigen/Core>
#include <vector>

#include "swoc/pss.hpp"

namespace swoc {

/// ODE with elastic-impact state jumps: smooth flight dynamics on
/// x = (q, v), a scalar unilateral gap c_gap(q) >= 0, and the impact law
/// v_n+ = -e v_n- on the normal velocity when the gap closes.
struct JumpModel {
  int n_q = 0;             // positions; state is (q, v), n_x = 2 n_q
  VecFunc f_smooth;        // blocks (x, u), n_x outputs
  VecFunc c_gap;           // block (x), 1 output; must depend on q only
  double restitution = 1;  // e in (0, 1]
  Eigen::VectorXd x0;
  Eigen::VectorXd lbx, ubx, lbu, ubu;  // empty => unbounded
};

/// Damping ratio xi with exp(-xi pi / sqrt(1 - xi^2)) = e; xi = 0 for e = 1.
double damping_ratio_for_restitution(double e);

/// Transforms a jump model into a two-region PssModel on the augmented
/// state y = (q, v, t_clock). Region {c_gap > 0} integrates the smooth
/// dynamics with unit clock rate; region {c_gap < 0} runs a damped
/// oscillator on the normal (position, velocity) pair with the clock
/// frozen, so that one auxiliary pass scales the normal velocity by
/// exactly -e, independent of k_aux.
///
/// Requires the gap to be affine in a single position coordinate with unit
/// gradient (c = q_j - const); rejects anything else.
PssModel time_freeze_elastic(const JumpModel& jm, double k_aux = 100.0);

/// Index of the clock state in the augmented model.
inline int clock_index(const JumpModel& jm) { return 2 * jm.n_q; }

/// Trajectory of a time-frozen system over the numerical time grid.
struct FrozenTrajectory {
  Eigen::VectorXd tau;     // numerical-time grid, strictly increasing
  Eigen::MatrixXd states;  // one column per grid point, augmented state
  int clock_row = -1;      // row of t_clock within states
};

/// Physical-time view of a frozen trajectory: frozen spans collapse onto a
/// single physical instant, where the pre/post states exhibit the jump.
struct PhysicalTrajectory {
  std::vector<double> t;       // non-decreasing; repeated values at jumps
  Eigen::MatrixXd states;      // physical states (clock row removed), column-per-sample
  std::vector<double> jump_times;
  double duration = 0.0;       // final clock value
};

/// Re-parameterizes by the clock. Throws if the clock decreases (beyond
/// roundoff), which signals an invalid solution.
PhysicalTrajectory recover_physical_time(const FrozenTrajectory& ft,
                                         double freeze_rate_tol = 1e-6);

}  // namespace swoc
