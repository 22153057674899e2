#pragma once

#include <Eigen/Core>
#include <optional>
#include <vector>

#include "swoc/vecfunc.hpp"

namespace swoc {

using sym::Expr;
using sym::VecFunc;

/// Piecewise smooth system: regions R_i = { x : diag(S_i,.) c(x) > 0 },
/// one smooth vector field f_i per region, box bounds and an initial state.
class PssModel {
 public:
  PssModel() = default;  // empty placeholder; build real models via define_pss
  PssModel(VecFunc c, Eigen::MatrixXd sign_matrix, std::vector<VecFunc> dynamics,
           Eigen::VectorXd lbx, Eigen::VectorXd ubx, Eigen::VectorXd lbu,
           Eigen::VectorXd ubu, Eigen::VectorXd x0);

  [[nodiscard]] int n_x() const { return n_x_; }
  [[nodiscard]] int n_u() const { return n_u_; }
  [[nodiscard]] int n_c() const { return n_c_; }
  [[nodiscard]] int n_f() const { return n_f_; }

  [[nodiscard]] const VecFunc& switching_function() const { return c_; }
  [[nodiscard]] const Eigen::MatrixXd& sign_matrix() const { return S_; }
  [[nodiscard]] const VecFunc& dynamics(int region) const { return f_.at(region); }
  [[nodiscard]] const std::vector<VecFunc>& dynamics() const { return f_; }

  [[nodiscard]] const Eigen::VectorXd& lbx() const { return lbx_; }
  [[nodiscard]] const Eigen::VectorXd& ubx() const { return ubx_; }
  [[nodiscard]] const Eigen::VectorXd& lbu() const { return lbu_; }
  [[nodiscard]] const Eigen::VectorXd& ubu() const { return ubu_; }
  [[nodiscard]] const Eigen::VectorXd& x0() const { return x0_; }

 private:
  VecFunc c_;
  Eigen::MatrixXd S_;
  std::vector<VecFunc> f_;
  Eigen::VectorXd lbx_, ubx_, lbu_, ubu_, x0_;
  int n_x_ = 0, n_u_ = 0, n_c_ = 0, n_f_ = 0;
};

/// Validating constructor wrapper. c must have one block "x"; every f_i the
/// blocks ("x", "u"). S entries must be exactly +-1 with pairwise distinct
/// rows, one dynamics function per row.
PssModel define_pss(VecFunc c, const Eigen::MatrixXd& S, std::vector<VecFunc> dynamics,
                    Eigen::VectorXd lbx, Eigen::VectorXd ubx, Eigen::VectorXd lbu,
                    Eigen::VectorXd ubu, Eigen::VectorXd x0);

/// Convenience overload with unbounded boxes.
PssModel define_pss(VecFunc c, const Eigen::MatrixXd& S, std::vector<VecFunc> dynamics,
                    Eigen::VectorXd x0, int n_u);

/// One Filippov convex combination at a point, together with the
/// multipliers of the region-selection LP:
///   min_theta g^T theta  s.t.  e^T theta = 1, theta >= 0.
struct FilippovPoint {
  Eigen::VectorXd theta;        // simplex weights, e^T theta = 1
  Eigen::VectorXd lambda;       // >= 0, lambda = g - mu e
  double mu = 0.0;              // = min_j g_j
  std::vector<int> vertex_set;  // argmin indices (admissible active regions)
};

/// Brute-force solution of the region-selection LP from discriminant values.
/// Ties produce uniform weights over the argmin set; this is one valid LP
/// solution (the solution set is the whole face).
FilippovPoint filippov_lp_oracle(const Eigen::VectorXd& g_vals, double tie_tol = 1e-12);

/// C-function used when checking complementarity residuals numerically.
enum class CFunction { NaturalMin, FischerBurmeister };

double c_function(CFunction kind, double a, double b);

/// Stewart reformulation of a PssModel: discriminants g = -S c(x) and the
/// KKT residual of the selection LP. Inside NLPs the complementarity slot
/// is handled as nonnegativity plus bilinear pairings (see the MPCC layer);
/// the C-function form here is for validation and tests.
class DcsSystem {
 public:
  explicit DcsSystem(const PssModel& model, CFunction cfun = CFunction::NaturalMin);

  [[nodiscard]] const VecFunc& discriminants() const { return g_; }
  [[nodiscard]] CFunction c_function_kind() const { return cfun_; }
  [[nodiscard]] int n_f() const { return n_f_; }

  /// G_LP(x, theta, lambda, mu): stacks g(x) - lambda - mu e, 1 - e^T theta
  /// and the componentwise C-function of (theta, lambda); zero iff
  /// (theta, lambda, mu) solves the selection LP at x. Length 2 n_f + 1.
  [[nodiscard]] Eigen::VectorXd residual(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                         const Eigen::VectorXd& lambda, double mu) const;

  /// Filippov right-hand side F(x,u) theta as expressions.
  [[nodiscard]] std::vector<Expr> rhs(const std::vector<Expr>& x, const std::vector<Expr>& u,
                                      const std::vector<Expr>& theta) const;

  /// Discriminant expressions at a substituted state.
  [[nodiscard]] std::vector<Expr> g_at(const std::vector<Expr>& x) const;

 private:
  const PssModel* model_;
  VecFunc g_;
  CFunction cfun_;
  int n_f_ = 0;
};

/// Operation `discriminants`: g = -S c as a standalone function of x.
VecFunc discriminants(const PssModel& model);

/// Strict region membership test: the index i with diag(S_i,.) c(x) > 0
/// componentwise, or nullopt when x lies on a region boundary. Indices are
/// 0-based.
std::optional<int> region_of(const PssModel& model, const Eigen::VectorXd& x);

}  // namespace swoc
