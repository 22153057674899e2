#pragma once

#include <Eigen/Core>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "swoc/vecfunc.hpp"

namespace swoc {

/// Smooth NLP over one variable vector w (block "w"), with optional fixed
/// parameters (block "p"):
///   min f(w; p)  s.t.  c_E(w; p) = 0,  c_I(w; p) >= 0,  lb <= w <= ub.
struct NlpProblem {
  sym::VecFunc objective;  // scalar output
  sym::VecFunc eq;         // may be default-constructed (no equalities)
  sym::VecFunc ineq;       // may be default-constructed (no inequalities)
  Eigen::VectorXd lb, ub;
  Eigen::VectorXd x0;
  Eigen::VectorXd p;       // parameter values; empty when no "p" block
};

enum class NlpStatus { Optimal, MaxIter, InfeasibleDetected, NumericalFailure };

std::string to_string(NlpStatus s);

struct NlpIterRecord {
  int iter = 0;
  double mu = 0, obj = 0, feas = 0, stat = 0, comp = 0, alpha = 0, delta_w = 0;
};

struct NlpSolution {
  Eigen::VectorXd x;
  Eigen::VectorXd y_eq;    // convention: grad f + J_eq^T y_eq - J_ineq^T y_ineq - z_lb + z_ub = 0
  Eigen::VectorXd y_ineq;  // >= 0 for c_I >= 0 constraints
  Eigen::VectorXd z_lb, z_ub;
  NlpStatus status = NlpStatus::NumericalFailure;
  double obj = 0;
  double kkt_stationarity = 0, kkt_feasibility = 0, kkt_complementarity = 0;
  int iters = 0;
  std::string message;
  std::vector<NlpIterRecord> trace;

  [[nodiscard]] bool ok() const { return status == NlpStatus::Optimal; }
};

enum class KktBackend { Auto, Dense, Sparse };

struct NlpOptions {
  double tol = 1e-8;
  int max_iter = 400;
  double mu_init = 1e-1;
  double kappa_mu = 0.2;   // monotone Fiacco-McCormick reduction factor
  double theta_mu = 1.5;
  double kappa_eps = 10.0;
  double tau_min = 0.99;
  double bound_push = 1e-2;  // relative push of the initial point off its bounds
  KktBackend kkt = KktBackend::Auto;
  int dense_threshold = 500;  // auto backend: dense up to this KKT dimension
  int max_ls = 30;
  bool verbose = false;
  // Passed through to external adapters; string keys to scalar or string.
  std::map<std::string, std::variant<double, std::string>> backend_options;
};

/// Warm-start data; any empty vector falls back to the cold-start rule.
struct NlpWarmStart {
  Eigen::VectorXd x, y_eq, y_ineq, z_lb, z_ub;
  double mu = -1.0;  // < 0: pick from complementarity of the start point
};

/// Function-evaluation callback set: the contract consumed by the bundled
/// solver and by external solver adapters. All callbacks must be pure.
/// Jacobians and the Lagrangian Hessian are sparse (coordinate lists with
/// fixed structure). The Hessian is of
///   sigma * f + y_eq^T c_E + y_lag^T c_I
/// (lower triangle), where y_lag carries the internal sign (= -y_ineq of
/// the reported solution).
struct NlpCallbacks {
  int n = 0, m_eq = 0, m_ineq = 0;
  Eigen::VectorXd lb, ub, x0;
  std::function<double(const Eigen::VectorXd&)> obj;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> grad;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eq;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> ineq;
  std::vector<int> jac_eq_rows, jac_eq_cols;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> jac_eq_vals;
  std::vector<int> jac_ineq_rows, jac_ineq_cols;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> jac_ineq_vals;
  std::vector<int> hess_rows, hess_cols;  // lower triangle (row >= col)
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, double, const Eigen::VectorXd&,
                                const Eigen::VectorXd&)>
      hess_vals;

  void validate() const;  // throws on inconsistent dimensions/structure
};

/// A compiled NLP whose parameter vector may be rebound per solve without
/// re-deriving anything; the workhorse of the homotopy loop.
class ParametricNlp {
 public:
  explicit ParametricNlp(const NlpProblem& problem);

  [[nodiscard]] int n() const;
  [[nodiscard]] int m_eq() const;
  [[nodiscard]] int m_ineq() const;

  /// Callbacks with the parameter vector baked in.
  [[nodiscard]] NlpCallbacks callbacks(const Eigen::VectorXd& p) const;

  NlpSolution solve(const Eigen::VectorXd& p, const Eigen::VectorXd& x0, const NlpOptions& opts,
                    const NlpWarmStart* warm = nullptr) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Bundled primal-dual interior-point method on the callback contract.
NlpSolution solve_ip(const NlpCallbacks& cb, const NlpOptions& opts,
                     const NlpWarmStart* warm = nullptr);

/// One-shot convenience: compile + solve with the bundled method.
NlpSolution solve_nlp(const NlpProblem& p, const NlpOptions& opts = {},
                      const NlpWarmStart* warm = nullptr);

/// External solver adapter: any callable with the bundled solver's
/// signature can stand in for it. Dimension checks run before dispatch;
/// exceptions thrown by the backend are converted into a
/// NumericalFailure solution carrying the diagnostic.
using NlpBackend = std::function<NlpSolution(const NlpCallbacks&, const NlpOptions&)>;

NlpSolution solve_with_backend(const NlpProblem& p, const NlpBackend& backend,
                               const NlpOptions& opts = {});

}  // namespace swoc
