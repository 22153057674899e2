#pragma once

#include <Eigen/Core>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "swoc/nlp.hpp"

namespace swoc {

/// One complementarity group: index pairs (i, j) into the variable vector
/// whose products w_i * w_j must all vanish. Grouping is the granularity
/// at which componentwise reformulations emit constraints; aggregated
/// reformulations sum over every pair of every group.
struct CompGroup {
  std::vector<std::pair<int, int>> pairs;
};

/// Mathematical program with complementarity constraints:
///   min f(w)  s.t.  eq(w) = 0,  ineq(w) >= 0,  lb <= w <= ub,
///   0 <= w_1 perp w_2 >= 0  encoded by `groups`.
/// Expressions live over blocks ("w", n_w) and ("p", n_p); homotopy
/// reformulations append the relaxation parameter sigma at p[n_p].
struct Mpcc {
  int n_w = 0;
  int n_p = 0;
  sym::Expr objective;
  std::vector<sym::Expr> eq;
  std::vector<sym::Expr> ineq;
  Eigen::VectorXd lb, ub;
  Eigen::VectorXd w_init;
  std::vector<CompGroup> groups;

  /// Checks the structural invariants: pair sides are disjoint index sets,
  /// both sides carry lower bound 0, indices in range.
  void validate() const;

  [[nodiscard]] std::vector<std::pair<int, int>> all_pairs() const;
};

enum class MpccMode {
  Smoothing,      // w1^T w2  = sigma
  Relaxation,     // w1^T w2 <= sigma
  L1Penalty,      // objective += (1/sigma) w1^T w2
  ElasticEq,      // gamma in [0, gbar], w1^T w2  = gamma, objective += gamma/sigma
  ElasticIneq,    // gamma in [0, gbar], w1^T w2 <= gamma, objective += gamma/sigma
  ElasticTwoSided // gamma in [0, gbar], -gamma <= w1^T w2 <= gamma, ...
};

std::string to_string(MpccMode m);
MpccMode mpcc_mode_from_string(const std::string& s);

/// sup-norm of the natural complementarity residual: max_i min(w1_i, w2_i).
/// Throws when a component is negative (bound violation upstream).
double comp_residual(const Eigen::VectorXd& w1, const Eigen::VectorXd& w2);

/// Same metric gathered over all pairs of an MPCC at the point w.
double comp_residual(const Mpcc& m, const Eigen::VectorXd& w);

struct Reformulation {
  NlpProblem nlp;               // p extended: [caller p; sigma]
  bool has_gamma = false;       // elastic modes append gamma as variable n_w
  int gamma_index = -1;
};

/// Produces the smooth NLP of one homotopy iteration. The nonnegativity of
/// the pair variables is kept untouched in the bounds; only the bilinear
/// pairing changes per mode. sigma enters as the value of p[n_p].
/// componentwise = one pairing constraint per group instead of one
/// aggregated over all groups.
Reformulation reformulate(const Mpcc& m, MpccMode mode, double sigma, double gamma_bar,
                          bool componentwise = false);

enum class HomotopyStatus { Converged, MaxIterations, NlpFailure, Stagnation };

std::string to_string(HomotopyStatus s);

struct HomotopyConfig {
  MpccMode mode = MpccMode::Relaxation;
  double sigma0 = 1.0;
  double kappa = 0.1;
  int max_iterations = 15;
  double tol_comp = 1e-9;
  double nlp_tol = 1e-8;
  double nlp_tol_early = 1e-6;        // while sigma >= sigma_relax_threshold
  double sigma_relax_threshold = 1e-3;
  double gamma_bar = 1e3;
  bool componentwise = false;         // aggregated inner product by default
  NlpOptions nlp;                     // backend options for all iterations
  bool verbose = false;

  void validate() const;  // kappa in (0,1), sigma0 > 0, ...
};

struct HomotopyIterRecord {
  int iter = 0;
  double sigma = 0;
  NlpStatus nlp_status = NlpStatus::NumericalFailure;
  double objective = 0;      // original MPCC objective at the iterate
  double comp_res = 0;
  int nlp_iters = 0;
  double wall_seconds = 0;
};

struct HomotopyRun {
  std::vector<HomotopyIterRecord> iters;
  Eigen::VectorXd w;         // final point, original variables only
  NlpSolution last_nlp;
  HomotopyStatus status = HomotopyStatus::NlpFailure;
  double comp_res = std::numeric_limits<double>::infinity();
  double objective = 0;
  std::string message;

  [[nodiscard]] bool ok() const { return status == HomotopyStatus::Converged; }
};

/// An MPCC compiled once for a fixed reformulation mode; repeated solves
/// rebind (p, sigma) without re-deriving anything.
class CompiledMpcc {
 public:
  CompiledMpcc(const Mpcc& m, MpccMode mode, double gamma_bar, bool componentwise);

  [[nodiscard]] HomotopyRun solve(const HomotopyConfig& cfg, const Eigen::VectorXd& w_init,
                                  const Eigen::VectorXd& p_base = Eigen::VectorXd()) const;

  [[nodiscard]] int n_w() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

/// Solves a sequence of relaxed NLPs with sigma_i = sigma0 * kappa^i, each
/// warm-started with the previous solution.
HomotopyRun homotopy_solve(const Mpcc& m, const HomotopyConfig& cfg,
                           const Eigen::VectorXd& w_init,
                           const Eigen::VectorXd& p_base = Eigen::VectorXd());

}  // namespace swoc
