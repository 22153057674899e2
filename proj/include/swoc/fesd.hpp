#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "swoc/butcher.hpp"
#include "swoc/mpcc.hpp"
#include "swoc/pss.hpp"

namespace swoc {

enum class DiscMode { Standard, Fesd };
enum class CrossCompMode { ElementAggregate, PerPair, PerComponent };
enum class StepEqMode { Off, PenaltyHeuristic, Constraint };

/// Initialization of the stage algebraics (theta, lambda, mu):
/// Uniform: theta = e/n_f, lambda = shift, mu = 0.
/// LpConsistent: the selection-LP solution at the state guess, with the
/// interior shift applied to lambda and subtracted from mu so the KKT
/// rows stay exact.
enum class AlgebraicInit { Uniform, LpConsistent };

std::string to_string(DiscMode m);
DiscMode disc_mode_from_string(const std::string& s);

struct DiscretizationConfig {
  DiscMode mode = DiscMode::Fesd;
  RkScheme scheme = RkScheme::RadauIIA;
  int n_s = 2;
  int n_fe = 2;
  CrossCompMode cross_mode = CrossCompMode::ElementAggregate;
  StepEqMode step_eq = StepEqMode::PenaltyHeuristic;
  double step_eq_weight = 1.0;     // penalty weight rho
  double eta_normalization = 1.0;  // positive constant dividing the eta product
  double gamma_h = 0.9;            // h in [(1-g) hbar, (1+g) hbar]
  double theta_lambda_init = 1e-1; // interior shift for the algebraic start
  double mu0_init = 0.0;
  AlgebraicInit algebraic_init = AlgebraicInit::LpConsistent;

  void validate() const;  // throws on unusable combinations
};

/// Assigns contiguous slices of the decision vector "w"; keeps names,
/// bounds and initial values for extraction and NLP assembly.
class VarLayout {
 public:
  int add(const std::string& name, int dim, const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
          const Eigen::VectorXd& init);
  int add(const std::string& name, int dim, double lb, double ub, double init);

  [[nodiscard]] int size() const { return static_cast<int>(lb_.size()); }
  [[nodiscard]] sym::Expr var(int index) const { return sym::Expr::variable("w", index); }
  [[nodiscard]] std::vector<sym::Expr> vars(int start, int dim) const;

  [[nodiscard]] Eigen::VectorXd lb() const;
  [[nodiscard]] Eigen::VectorXd ub() const;
  [[nodiscard]] Eigen::VectorXd init() const;

  struct Entry {
    std::string name;
    int start = 0, dim = 0;
  };
  [[nodiscard]] const std::vector<Entry>& entries() const { return entries_; }
  [[nodiscard]] int find(const std::string& name) const;  // start index, -1 when absent

  void set_init(int index, double v) { init_[index] = v; }
  void set_bounds(int index, double lo, double hi);

 private:
  std::vector<double> lb_, ub_, init_;
  std::vector<Entry> entries_;
};

/// Index bookkeeping for one control interval's variables.
struct IntervalRefs {
  int n_x = 0, n_f = 0, n_s = 0, n_fe = 0;
  int x_bnd0 = -1, x_next0 = -1, V0 = -1, Th0 = -1, La0 = -1, M0 = -1, h0 = -1;

  [[nodiscard]] int x_bnd(int n) const { return x_bnd0 + n * n_x; }
  [[nodiscard]] int x_next(int n) const { return x_next0 + n * n_x; }
  [[nodiscard]] int V(int n, int i) const { return V0 + (n * n_s + i) * n_x; }
  [[nodiscard]] int Th(int n, int i) const { return Th0 + (n * n_s + i) * n_f; }
  [[nodiscard]] int La(int n, int i) const { return La0 + (n * n_s + i) * n_f; }
  [[nodiscard]] int M(int n, int i) const { return M0 + n * n_s + i; }
  [[nodiscard]] int h(int n) const { return h0 + n; }
};

struct IntervalOptions {
  const PssModel* model = nullptr;
  const DcsSystem* dcs = nullptr;
  const ButcherTableau* tab = nullptr;
  DiscretizationConfig cfg;
  std::vector<sym::Expr> s0;  // initial-state expressions (variables or parameters)
  std::vector<sym::Expr> u;   // control expressions
  double h_nominal = 0.0;     // nominal element length (bounds and init)
  std::vector<sym::Expr> h_fixed;   // standard mode: fixed step expressions
  double h_lb = -1.0, h_ub = -1.0;  // fesd bound overrides; < 0 uses the gamma_h box
  bool apply_state_bounds = true;   // off for pure simulation
  Eigen::VectorXd x_init_left, x_init_right;  // linear state initialization
  // Start index (n_f block) of the previous interval's last-stage lambda in
  // the same layout; -1 when this interval has no left boundary multiplier.
  // The boundary mu needs no counterpart: it enters no constraint.
  int lambda_left_index = -1;
  std::string prefix;  // variable naming prefix
};

struct IntervalBuild {
  IntervalRefs refs;
  std::vector<sym::Expr> h;  // per-element step (variables in fesd, expressions in standard)
  sym::Expr sum_h;
  std::vector<sym::Expr> eqs;     // smooth equality rows (no C-function rows)
  std::vector<CompGroup> groups;  // complementarity pairs, diagonal + cross
  sym::Expr step_eq_penalty;      // objective term when StepEqMode::PenaltyHeuristic
  std::vector<sym::Expr> cross_entries;  // G_cross entries per cross_mode
  std::vector<sym::Expr> eta;            // inner-point switch indicators
  std::vector<sym::Expr> x_end;          // x_{N_FE}
  std::vector<sym::Expr> lambda_right;   // last-stage multipliers, aliased onward
  sym::Expr mu_right;
};

/// Emits the RK + DCS equations of one control interval into the layout:
/// boundary states, stage derivatives, stage algebraics, step equations,
/// plus complementarity pairs and step equilibration per configuration.
/// Boundary multipliers are not fresh variables: within the interval they
/// alias the previous element's last stage, and across intervals the caller
/// passes lambda_left/mu_left.
IntervalBuild build_interval(VarLayout& layout, const IntervalOptions& opt);

// ---------------------------------------------------------------------------
// Residual evaluators: evaluate the discrete-time systems at numeric points,
// completing the complementarity slots with a C-function. They serve
// validation and tests; NLP assembly goes through build_interval.
// ---------------------------------------------------------------------------

/// Numeric values of all internal variables of one control interval.
struct IntervalPoint {
  Eigen::MatrixXd x_bnd;                // n_x x (n_fe+1)
  Eigen::MatrixXd x_next;               // n_x x n_fe
  std::vector<Eigen::MatrixXd> V;       // per element: n_x x n_s
  std::vector<Eigen::MatrixXd> theta;   // per element: n_f x n_s
  std::vector<Eigen::MatrixXd> lambda;  // per element: n_f x n_s
  std::vector<Eigen::VectorXd> mu;      // per element: n_s
  Eigen::VectorXd h;                    // n_fe
};

/// G_rk of one finite element: stage-derivative equations, the stage KKT
/// residuals of the selection LP, and the step equation, stacked in that
/// order; dimension n_s n_x + n_s (2 n_f + 1) + n_x.
class RkElementEval {
 public:
  RkElementEval(const PssModel& model, const ButcherTableau& tab,
                CFunction cfun = CFunction::NaturalMin);

  [[nodiscard]] int dim() const;
  [[nodiscard]] Eigen::VectorXd operator()(const Eigen::VectorXd& x_next,
                                           const Eigen::VectorXd& x, const Eigen::MatrixXd& V,
                                           const Eigen::MatrixXd& theta,
                                           const Eigen::MatrixXd& lambda,
                                           const Eigen::VectorXd& mu, double h,
                                           const Eigen::VectorXd& q) const;

 private:
  const PssModel* model_;
  ButcherTableau tab_;
  VecFunc g_;
  CFunction cfun_;
};

RkElementEval build_rk_element(const PssModel& model, const ButcherTableau& tab,
                               CFunction cfun = CFunction::NaturalMin);

/// G_std over a full control interval: x_0 = s0, chained element residuals
/// and continuity x_{n+1} = x_n^next; F_std returns x_{N_FE}.
class StdIntervalEval {
 public:
  StdIntervalEval(const PssModel& model, const ButcherTableau& tab, int n_fe,
                  CFunction cfun = CFunction::NaturalMin);

  [[nodiscard]] int dim() const;
  [[nodiscard]] Eigen::VectorXd operator()(const IntervalPoint& Z, const Eigen::VectorXd& s0,
                                           const Eigen::VectorXd& q) const;
  [[nodiscard]] Eigen::VectorXd f_std(const IntervalPoint& Z) const;

 private:
  RkElementEval elem_;
  int n_fe_, n_x_;
};

StdIntervalEval build_std_interval(const PssModel& model, const ButcherTableau& tab, int n_fe,
                                   CFunction cfun = CFunction::NaturalMin);

/// Cross-complementarity entries of one control interval: for element n,
/// theta stages pair against all other lambda stages of the same element,
/// including the left boundary point (the previous element's last stage,
/// or lambda_left for element 0 when supplied).
Eigen::VectorXd cross_complementarity(const std::vector<Eigen::MatrixXd>& theta,
                                      const std::vector<Eigen::MatrixXd>& lambda,
                                      const Eigen::VectorXd* lambda_left, CrossCompMode mode);

/// Step equilibration: eta per inner grid point, the constraint residuals
/// (h_n - h_{n-1}) eta_n, and the scalar penalty sum (h_n - h_{n-1})^2 eta_n.
struct StepEqEval {
  Eigen::VectorXd eta;       // n_fe - 1
  Eigen::VectorXd residual;  // constraint mode values
  double penalty = 0.0;      // weight * sum of squared-difference terms
};

StepEqEval step_equilibration(const Eigen::VectorXd& h, const std::vector<Eigen::MatrixXd>& theta,
                              const std::vector<Eigen::MatrixXd>& lambda,
                              const Eigen::VectorXd* lambda_left, StepEqMode mode,
                              double normalization = 1.0, double weight = 1.0);

/// G_fesd = (G_std, G_cross, G_eq, sum h - T); F_fesd = x_{N_FE}.
class FesdIntervalEval {
 public:
  FesdIntervalEval(const PssModel& model, const ButcherTableau& tab, DiscretizationConfig cfg,
                   CFunction cfun = CFunction::NaturalMin);

  [[nodiscard]] int dim() const;
  [[nodiscard]] Eigen::VectorXd operator()(const IntervalPoint& Z, const Eigen::VectorXd& s0,
                                           const Eigen::VectorXd& q, double T) const;
  [[nodiscard]] Eigen::VectorXd f_fesd(const IntervalPoint& Z) const;

 private:
  StdIntervalEval std_;
  DiscretizationConfig cfg_;
  int n_f_ = 0;
};

FesdIntervalEval build_fesd_interval(const PssModel& model, const ButcherTableau& tab,
                                     const DiscretizationConfig& cfg,
                                     CFunction cfun = CFunction::NaturalMin);

}  // namespace swoc
