#include "swoc/fesd.hpp"

#include <cmath>
#include <stdexcept>

namespace swoc {

using sym::Expr;

std::string to_string(DiscMode m) { return m == DiscMode::Fesd ? "fesd" : "std"; }

DiscMode disc_mode_from_string(const std::string& s) {
  if (s == "fesd") return DiscMode::Fesd;
  if (s == "std" || s == "standard") return DiscMode::Standard;
  throw std::invalid_argument("unknown discretization mode '" + s + "'");
}

void DiscretizationConfig::validate() const {
  if (n_fe < 1) throw std::invalid_argument("DiscretizationConfig: n_fe must be positive");
  if (mode == DiscMode::Fesd && n_fe < 2)
    throw std::invalid_argument(
        "DiscretizationConfig: fesd requires n_fe >= 2 for interior switch capture");
  if (eta_normalization <= 0.0)
    throw std::invalid_argument("DiscretizationConfig: eta_normalization must be positive");
  if (!(gamma_h > 0.0 && gamma_h < 1.0))
    throw std::invalid_argument("DiscretizationConfig: gamma_h must lie in (0,1)");
  const ButcherTableau tab = butcher(scheme, n_s);
  if (!tab.stiffly_accurate())
    throw std::invalid_argument(
        "DiscretizationConfig: scheme must be stiffly accurate (c_{n_s} = 1)");
}

// ---------------------------------------------------------------------------
// VarLayout
// ---------------------------------------------------------------------------

int VarLayout::add(const std::string& name, int dim, const Eigen::VectorXd& lb,
                   const Eigen::VectorXd& ub, const Eigen::VectorXd& init) {
  if (lb.size() != dim || ub.size() != dim || init.size() != dim)
    throw std::invalid_argument("VarLayout: dimension mismatch for '" + name + "'");
  const int start = size();
  for (int i = 0; i < dim; ++i) {
    lb_.push_back(lb[i]);
    ub_.push_back(ub[i]);
    init_.push_back(std::min(std::max(init[i], lb[i]), ub[i]));
  }
  entries_.push_back({name, start, dim});
  return start;
}

int VarLayout::add(const std::string& name, int dim, double lb, double ub, double init) {
  return add(name, dim, Eigen::VectorXd::Constant(dim, lb), Eigen::VectorXd::Constant(dim, ub),
             Eigen::VectorXd::Constant(dim, init));
}

std::vector<Expr> VarLayout::vars(int start, int dim) const {
  std::vector<Expr> out;
  out.reserve(dim);
  for (int i = 0; i < dim; ++i) out.push_back(var(start + i));
  return out;
}

Eigen::VectorXd VarLayout::lb() const {
  return Eigen::Map<const Eigen::VectorXd>(lb_.data(), lb_.size());
}
Eigen::VectorXd VarLayout::ub() const {
  return Eigen::Map<const Eigen::VectorXd>(ub_.data(), ub_.size());
}
Eigen::VectorXd VarLayout::init() const {
  return Eigen::Map<const Eigen::VectorXd>(init_.data(), init_.size());
}

int VarLayout::find(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.start;
  return -1;
}

void VarLayout::set_bounds(int index, double lo, double hi) {
  lb_[index] = lo;
  ub_[index] = hi;
}

// ---------------------------------------------------------------------------
// build_interval
// ---------------------------------------------------------------------------

namespace {

std::vector<Expr> expr_sum(const std::vector<std::vector<Expr>>& vecs) {
  std::vector<Expr> out(vecs.front().size(), Expr::constant(0.0));
  for (const auto& v : vecs)
    for (std::size_t k = 0; k < v.size(); ++k) out[k] += v[k];
  return out;
}

}  // namespace

IntervalBuild build_interval(VarLayout& L, const IntervalOptions& opt) {
  if (!opt.model || !opt.dcs || !opt.tab) throw std::invalid_argument("build_interval: null input");
  const PssModel& model = *opt.model;
  const DcsSystem& dcs = *opt.dcs;
  const ButcherTableau& tab = *opt.tab;
  const DiscretizationConfig& cfg = opt.cfg;
  cfg.validate();

  const int n_x = model.n_x(), n_f = model.n_f(), n_s = tab.n_s, N = cfg.n_fe;
  const bool fesd = cfg.mode == DiscMode::Fesd;
  if (static_cast<int>(opt.s0.size()) != n_x)
    throw std::invalid_argument("build_interval: s0 dimension mismatch");
  if (static_cast<int>(opt.u.size()) != model.n_u())
    throw std::invalid_argument("build_interval: control dimension mismatch");
  if (!fesd && static_cast<int>(opt.h_fixed.size()) != N)
    throw std::invalid_argument("build_interval: standard mode needs fixed steps");
  if (opt.lambda_left_index >= 0 && opt.lambda_left_index + n_f > L.size())
    throw std::invalid_argument("build_interval: lambda_left_index out of range");

  IntervalBuild B;
  B.refs.n_x = n_x;
  B.refs.n_f = n_f;
  B.refs.n_s = n_s;
  B.refs.n_fe = N;

  // Interpolated state initialization along the element grid.
  Eigen::VectorXd xa = opt.x_init_left.size() == n_x ? opt.x_init_left : model.x0();
  Eigen::VectorXd xb = opt.x_init_right.size() == n_x ? opt.x_init_right : xa;
  auto x_guess = [&](double frac) { return (xa + frac * (xb - xa)).eval(); };

  // Variables.
  const double inf0 = std::numeric_limits<double>::infinity();
  const Eigen::VectorXd state_lb =
      opt.apply_state_bounds ? model.lbx() : Eigen::VectorXd::Constant(n_x, -inf0);
  const Eigen::VectorXd state_ub =
      opt.apply_state_bounds ? model.ubx() : Eigen::VectorXd::Constant(n_x, inf0);
  {
    Eigen::VectorXd lbx((N + 1) * n_x), ubx((N + 1) * n_x), ix((N + 1) * n_x);
    for (int n = 0; n <= N; ++n) {
      lbx.segment(n * n_x, n_x) = state_lb;
      ubx.segment(n * n_x, n_x) = state_ub;
      ix.segment(n * n_x, n_x) = x_guess(static_cast<double>(n) / N);
    }
    B.refs.x_bnd0 = L.add(opt.prefix + "x", (N + 1) * n_x, lbx, ubx, ix);
  }
  {
    Eigen::VectorXd lbx(N * n_x), ubx(N * n_x), ix(N * n_x);
    for (int n = 0; n < N; ++n) {
      lbx.segment(n * n_x, n_x) = state_lb;
      ubx.segment(n * n_x, n_x) = state_ub;
      ix.segment(n * n_x, n_x) = x_guess(static_cast<double>(n + 1) / N);
    }
    B.refs.x_next0 = L.add(opt.prefix + "xn", N * n_x, lbx, ubx, ix);
  }
  const double inf = std::numeric_limits<double>::infinity();
  B.refs.V0 = L.add(opt.prefix + "V", N * n_s * n_x, -inf, inf, 0.0);

  Eigen::VectorXd th_init(N * n_s * n_f), la_init(N * n_s * n_f), mu_init(N * n_s);
  if (cfg.algebraic_init == AlgebraicInit::LpConsistent) {
    for (int n = 0; n < N; ++n) {
      const Eigen::VectorXd xm = x_guess((n + 0.5) / N);
      const Eigen::VectorXd g = dcs.discriminants()({xm});
      const FilippovPoint fp = filippov_lp_oracle(g);
      const double shift = cfg.theta_lambda_init;
      for (int i = 0; i < n_s; ++i) {
        th_init.segment((n * n_s + i) * n_f, n_f) = fp.theta;
        la_init.segment((n * n_s + i) * n_f, n_f) = fp.lambda.array() + shift;
        mu_init[n * n_s + i] = fp.mu - shift;
      }
    }
  } else {
    th_init.setConstant(1.0 / n_f);
    la_init.setConstant(cfg.theta_lambda_init);
    mu_init.setConstant(cfg.mu0_init);
  }
  B.refs.Th0 = L.add(opt.prefix + "Th", N * n_s * n_f, Eigen::VectorXd::Zero(N * n_s * n_f),
                     Eigen::VectorXd::Constant(N * n_s * n_f, inf), th_init);
  B.refs.La0 = L.add(opt.prefix + "La", N * n_s * n_f, Eigen::VectorXd::Zero(N * n_s * n_f),
                     Eigen::VectorXd::Constant(N * n_s * n_f, inf), la_init);
  B.refs.M0 = L.add(opt.prefix + "M", N * n_s, Eigen::VectorXd::Constant(N * n_s, -inf),
                    Eigen::VectorXd::Constant(N * n_s, inf), mu_init);
  if (fesd) {
    const double lo = opt.h_lb >= 0.0 ? opt.h_lb : (1.0 - cfg.gamma_h) * opt.h_nominal;
    const double hi = opt.h_ub >= 0.0 ? opt.h_ub : (1.0 + cfg.gamma_h) * opt.h_nominal;
    B.refs.h0 = L.add(opt.prefix + "h", N, lo, hi, opt.h_nominal);
  }

  for (int n = 0; n < N; ++n)
    B.h.push_back(fesd ? L.var(B.refs.h(n)) : opt.h_fixed[n]);
  B.sum_h = Expr::constant(0.0);
  for (const auto& hn : B.h) B.sum_h += hn;

  // x_0 = s0.
  for (int r = 0; r < n_x; ++r) B.eqs.push_back(L.var(B.refs.x_bnd(0) + r) - opt.s0[r]);

  // Element equations.
  for (int n = 0; n < N; ++n) {
    const std::vector<Expr> xn = L.vars(B.refs.x_bnd(n), n_x);
    const std::vector<Expr> xnext = L.vars(B.refs.x_next(n), n_x);
    std::vector<std::vector<Expr>> V(n_s), Th(n_s), La(n_s);
    std::vector<Expr> Mu(n_s);
    for (int i = 0; i < n_s; ++i) {
      V[i] = L.vars(B.refs.V(n, i), n_x);
      Th[i] = L.vars(B.refs.Th(n, i), n_f);
      La[i] = L.vars(B.refs.La(n, i), n_f);
      Mu[i] = L.var(B.refs.M(n, i));
    }

    // Stage states xi_i = x_n + h_n sum_j a_ij V_j.
    std::vector<std::vector<Expr>> xi(n_s);
    for (int i = 0; i < n_s; ++i) {
      xi[i] = xn;
      for (int j = 0; j < n_s; ++j) {
        if (tab.a(i, j) == 0.0) continue;
        for (int r = 0; r < n_x; ++r)
          xi[i][r] += B.h[n] * Expr::constant(tab.a(i, j)) * V[j][r];
      }
    }

    for (int i = 0; i < n_s; ++i) {
      // v_{n,i} = F(xi_i, q) theta_{n,i}
      const std::vector<Expr> rhs = dcs.rhs(xi[i], opt.u, Th[i]);
      for (int r = 0; r < n_x; ++r) B.eqs.push_back(V[i][r] - rhs[r]);
    }
    for (int i = 0; i < n_s; ++i) {
      // g(xi_i) - lambda - mu e = 0 and the simplex row.
      const std::vector<Expr> g = dcs.g_at(xi[i]);
      for (int r = 0; r < n_f; ++r) B.eqs.push_back(g[r] - La[i][r] - Mu[i]);
      Expr simplex = Expr::constant(1.0);
      for (int r = 0; r < n_f; ++r) simplex -= Th[i][r];
      B.eqs.push_back(simplex);
    }
    // Step equation.
    for (int r = 0; r < n_x; ++r) {
      Expr step = xnext[r] - xn[r];
      for (int i = 0; i < n_s; ++i)
        step -= B.h[n] * Expr::constant(tab.b[i]) * V[i][r];
      B.eqs.push_back(step);
    }
    // Continuity with the next boundary state.
    for (int r = 0; r < n_x; ++r)
      B.eqs.push_back(L.var(B.refs.x_bnd(n + 1) + r) - xnext[r]);
  }

  // Complementarity pairs: per element, every theta stage against every
  // lambda source of that element. Sources are the left boundary point
  // (previous element's last stage; for element 0 the caller-supplied one)
  // and the element's own stages. Standard mode keeps only the stagewise
  // diagonal.
  for (int n = 0; n < N; ++n) {
    std::vector<int> lam_src;
    std::vector<int> diag_stage;  // theta stage a source is diagonal with; -1 none
    if (fesd) {
      const int left = (n == 0) ? opt.lambda_left_index : B.refs.La(n - 1, n_s - 1);
      if (left >= 0) {
        lam_src.push_back(left);
        diag_stage.push_back(-1);
      }
    }
    for (int j = 0; j < n_s; ++j) {
      lam_src.push_back(B.refs.La(n, j));
      diag_stage.push_back(j);
    }

    CompGroup element_group;
    for (int i = 0; i < n_s; ++i) {
      const int th0 = B.refs.Th(n, i);
      for (std::size_t s = 0; s < lam_src.size(); ++s) {
        const bool diagonal = diag_stage[s] == i;
        if (!fesd && !diagonal) continue;
        CompGroup pair_group;
        for (int k = 0; k < n_f; ++k) {
          const std::pair<int, int> pr{th0 + k, lam_src[s] + k};
          switch (cfg.cross_mode) {
            case CrossCompMode::ElementAggregate:
              element_group.pairs.push_back(pr);
              break;
            case CrossCompMode::PerPair:
              pair_group.pairs.push_back(pr);
              break;
            case CrossCompMode::PerComponent:
              B.groups.push_back({{pr}});
              break;
          }
        }
        if (cfg.cross_mode == CrossCompMode::PerPair && !pair_group.pairs.empty())
          B.groups.push_back(std::move(pair_group));
      }
    }
    if (cfg.cross_mode == CrossCompMode::ElementAggregate && !element_group.pairs.empty())
      B.groups.push_back(std::move(element_group));
  }

  // Cross-complementarity entries (diagnostics; the pairs above are what
  // the homotopy relaxes). Diagonal terms belong to the stage KKT systems
  // and are excluded here.
  if (fesd) {
    for (int n = 0; n < N; ++n) {
      std::vector<int> lam_src;
      std::vector<int> diag_stage;
      const int left = (n == 0) ? opt.lambda_left_index : B.refs.La(n - 1, n_s - 1);
      if (left >= 0) {
        lam_src.push_back(left);
        diag_stage.push_back(-1);
      }
      for (int j = 0; j < n_s; ++j) {
        lam_src.push_back(B.refs.La(n, j));
        diag_stage.push_back(j);
      }
      Expr element_sum = Expr::constant(0.0);
      bool any = false;
      for (int i = 0; i < n_s; ++i) {
        for (std::size_t s = 0; s < lam_src.size(); ++s) {
          if (diag_stage[s] == i) continue;
          Expr pair_sum = Expr::constant(0.0);
          for (int k = 0; k < n_f; ++k) {
            Expr prod = L.var(B.refs.Th(n, i) + k) * L.var(lam_src[s] + k);
            if (cfg.cross_mode == CrossCompMode::PerComponent) B.cross_entries.push_back(prod);
            pair_sum += prod;
          }
          if (cfg.cross_mode == CrossCompMode::PerPair) B.cross_entries.push_back(pair_sum);
          element_sum += pair_sum;
          any = true;
        }
      }
      if (cfg.cross_mode == CrossCompMode::ElementAggregate && any)
        B.cross_entries.push_back(element_sum);
    }
  }

  // Step equilibration over inner grid points.
  B.step_eq_penalty = Expr::constant(0.0);
  if (fesd && N >= 2 && cfg.step_eq != StepEqMode::Off) {
    std::vector<std::vector<Expr>> sig_th(N), sig_la(N);
    for (int n = 0; n < N; ++n) {
      sig_th[n].assign(n_f, Expr::constant(0.0));
      sig_la[n].assign(n_f, Expr::constant(0.0));
      for (int i = 0; i < n_s; ++i) {
        for (int k = 0; k < n_f; ++k) {
          sig_th[n][k] += L.var(B.refs.Th(n, i) + k);
          sig_la[n][k] += L.var(B.refs.La(n, i) + k);
        }
      }
      const int left = (n == 0) ? opt.lambda_left_index : B.refs.La(n - 1, n_s - 1);
      if (left >= 0)
        for (int k = 0; k < n_f; ++k) sig_la[n][k] += L.var(left + k);
    }
    for (int n = 1; n < N; ++n) {
      Expr eta = Expr::constant(1.0 / cfg.eta_normalization);
      for (int k = 0; k < n_f; ++k)
        eta = eta * (sig_la[n - 1][k] * sig_la[n][k] + sig_th[n - 1][k] * sig_th[n][k]);
      B.eta.push_back(eta);
      const Expr dh = B.h[n] - B.h[n - 1];
      if (cfg.step_eq == StepEqMode::Constraint)
        B.eqs.push_back(dh * eta);
      else
        B.step_eq_penalty += Expr::constant(cfg.step_eq_weight) * dh * dh * eta;
    }
  }

  B.x_end = L.vars(B.refs.x_bnd(N), n_x);
  B.lambda_right = L.vars(B.refs.La(N - 1, n_s - 1), n_f);
  B.mu_right = L.var(B.refs.M(N - 1, n_s - 1));
  return B;
}

// ---------------------------------------------------------------------------
// Residual evaluators
// ---------------------------------------------------------------------------

RkElementEval::RkElementEval(const PssModel& model, const ButcherTableau& tab, CFunction cfun)
    : model_(&model), tab_(tab), g_(discriminants(model)), cfun_(cfun) {}

int RkElementEval::dim() const {
  const int n_x = model_->n_x(), n_f = model_->n_f(), n_s = tab_.n_s;
  return n_s * n_x + n_s * (2 * n_f + 1) + n_x;
}

Eigen::VectorXd RkElementEval::operator()(const Eigen::VectorXd& x_next, const Eigen::VectorXd& x,
                                          const Eigen::MatrixXd& V, const Eigen::MatrixXd& theta,
                                          const Eigen::MatrixXd& lambda, const Eigen::VectorXd& mu,
                                          double h, const Eigen::VectorXd& q) const {
  const int n_x = model_->n_x(), n_f = model_->n_f(), n_s = tab_.n_s;
  if (x_next.size() != n_x || x.size() != n_x || V.rows() != n_x || V.cols() != n_s ||
      theta.rows() != n_f || theta.cols() != n_s || lambda.rows() != n_f ||
      lambda.cols() != n_s || mu.size() != n_s || q.size() != model_->n_u())
    throw std::invalid_argument("RkElementEval: dimension mismatch");

  Eigen::VectorXd out(dim());
  int at = 0;

  std::vector<Eigen::VectorXd> xi(n_s);
  for (int i = 0; i < n_s; ++i) {
    xi[i] = x;
    for (int j = 0; j < n_s; ++j) xi[i] += h * tab_.a(i, j) * V.col(j);
  }

  for (int i = 0; i < n_s; ++i) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_x);
    for (int r = 0; r < n_f; ++r)
      rhs += theta(r, i) * model_->dynamics(r)({xi[i], q});
    out.segment(at, n_x) = V.col(i) - rhs;
    at += n_x;
  }
  for (int i = 0; i < n_s; ++i) {
    const Eigen::VectorXd g = g_({xi[i]});
    out.segment(at, n_f) = g - lambda.col(i) - Eigen::VectorXd::Constant(n_f, mu[i]);
    at += n_f;
    out[at++] = 1.0 - theta.col(i).sum();
    for (int r = 0; r < n_f; ++r) out[at++] = c_function(cfun_, theta(r, i), lambda(r, i));
  }
  Eigen::VectorXd step = x_next - x;
  for (int i = 0; i < n_s; ++i) step -= h * tab_.b[i] * V.col(i);
  out.segment(at, n_x) = step;
  return out;
}

RkElementEval build_rk_element(const PssModel& model, const ButcherTableau& tab, CFunction cfun) {
  return RkElementEval(model, tab, cfun);
}

StdIntervalEval::StdIntervalEval(const PssModel& model, const ButcherTableau& tab, int n_fe,
                                 CFunction cfun)
    : elem_(model, tab, cfun), n_fe_(n_fe), n_x_(model.n_x()) {
  if (n_fe < 1) throw std::invalid_argument("build_std_interval: n_fe must be positive");
}

int StdIntervalEval::dim() const { return n_x_ + n_fe_ * (elem_.dim() + n_x_); }

Eigen::VectorXd StdIntervalEval::operator()(const IntervalPoint& Z, const Eigen::VectorXd& s0,
                                            const Eigen::VectorXd& q) const {
  if (Z.x_bnd.cols() != n_fe_ + 1 || Z.x_next.cols() != n_fe_ ||
      static_cast<int>(Z.V.size()) != n_fe_ || Z.h.size() != n_fe_)
    throw std::invalid_argument("StdIntervalEval: interval point shape mismatch");
  Eigen::VectorXd out(dim());
  int at = 0;
  out.segment(at, n_x_) = Z.x_bnd.col(0) - s0;
  at += n_x_;
  for (int n = 0; n < n_fe_; ++n) {
    out.segment(at, elem_.dim()) = elem_(Z.x_next.col(n), Z.x_bnd.col(n), Z.V[n], Z.theta[n],
                                         Z.lambda[n], Z.mu[n], Z.h[n], q);
    at += elem_.dim();
    out.segment(at, n_x_) = Z.x_bnd.col(n + 1) - Z.x_next.col(n);
    at += n_x_;
  }
  return out;
}

Eigen::VectorXd StdIntervalEval::f_std(const IntervalPoint& Z) const {
  return Z.x_bnd.col(n_fe_);
}

StdIntervalEval build_std_interval(const PssModel& model, const ButcherTableau& tab, int n_fe,
                                   CFunction cfun) {
  return StdIntervalEval(model, tab, n_fe, cfun);
}

Eigen::VectorXd cross_complementarity(const std::vector<Eigen::MatrixXd>& theta,
                                      const std::vector<Eigen::MatrixXd>& lambda,
                                      const Eigen::VectorXd* lambda_left, CrossCompMode mode) {
  const int N = static_cast<int>(theta.size());
  if (static_cast<int>(lambda.size()) != N || N == 0)
    throw std::invalid_argument("cross_complementarity: element count mismatch");
  const int n_f = static_cast<int>(theta[0].rows());
  const int n_s = static_cast<int>(theta[0].cols());

  std::vector<double> vals;
  for (int n = 0; n < N; ++n) {
    std::vector<Eigen::VectorXd> lam_src;
    std::vector<int> diag_stage;
    if (n == 0) {
      if (lambda_left) {
        lam_src.push_back(*lambda_left);
        diag_stage.push_back(-1);
      }
    } else {
      lam_src.push_back(lambda[n - 1].col(n_s - 1));
      diag_stage.push_back(-1);
    }
    for (int j = 0; j < n_s; ++j) {
      lam_src.push_back(lambda[n].col(j));
      diag_stage.push_back(j);
    }
    double element_sum = 0.0;
    bool any = false;
    for (int i = 0; i < n_s; ++i) {
      for (std::size_t s = 0; s < lam_src.size(); ++s) {
        if (diag_stage[s] == i) continue;
        double pair_sum = 0.0;
        for (int k = 0; k < n_f; ++k) {
          const double prod = theta[n](k, i) * lam_src[s][k];
          if (mode == CrossCompMode::PerComponent) vals.push_back(prod);
          pair_sum += prod;
        }
        if (mode == CrossCompMode::PerPair) vals.push_back(pair_sum);
        element_sum += pair_sum;
        any = true;
      }
    }
    if (mode == CrossCompMode::ElementAggregate && any) vals.push_back(element_sum);
  }
  return Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
}

StepEqEval step_equilibration(const Eigen::VectorXd& h, const std::vector<Eigen::MatrixXd>& theta,
                              const std::vector<Eigen::MatrixXd>& lambda,
                              const Eigen::VectorXd* lambda_left, StepEqMode mode,
                              double normalization, double weight) {
  const int N = static_cast<int>(theta.size());
  if (N < 2) throw std::invalid_argument("step_equilibration: needs at least two elements");
  if (h.size() != N) throw std::invalid_argument("step_equilibration: h size mismatch");
  const int n_f = static_cast<int>(theta[0].rows());
  const int n_s = static_cast<int>(theta[0].cols());

  std::vector<Eigen::VectorXd> sig_th(N), sig_la(N);
  for (int n = 0; n < N; ++n) {
    sig_th[n] = theta[n].rowwise().sum();
    sig_la[n] = lambda[n].rowwise().sum();
    if (n == 0) {
      if (lambda_left) sig_la[n] += *lambda_left;
    } else {
      sig_la[n] += lambda[n - 1].col(n_s - 1);
    }
  }

  StepEqEval out;
  out.eta.resize(N - 1);
  out.residual.resize(mode == StepEqMode::Constraint ? N - 1 : 0);
  for (int n = 1; n < N; ++n) {
    double eta = 1.0 / normalization;
    for (int k = 0; k < n_f; ++k)
      eta *= sig_la[n - 1][k] * sig_la[n][k] + sig_th[n - 1][k] * sig_th[n][k];
    out.eta[n - 1] = eta;
    const double dh = h[n] - h[n - 1];
    if (mode == StepEqMode::Constraint) out.residual[n - 1] = dh * eta;
    if (mode == StepEqMode::PenaltyHeuristic) out.penalty += weight * dh * dh * eta;
  }
  return out;
}

FesdIntervalEval::FesdIntervalEval(const PssModel& model, const ButcherTableau& tab,
                                   DiscretizationConfig cfg, CFunction cfun)
    : std_(model, tab, cfg.n_fe, cfun), cfg_(cfg), n_f_(model.n_f()) {
  cfg_.validate();
  if (cfg_.mode != DiscMode::Fesd)
    throw std::invalid_argument("build_fesd_interval: config mode must be fesd");
}

int FesdIntervalEval::dim() const {
  const int N = cfg_.n_fe, n_s = cfg_.n_s;
  const ButcherTableau tab = butcher(cfg_.scheme, n_s);
  int cross = 0;
  for (int n = 0; n < N; ++n) {
    const int combos = n == 0 ? n_s * (n_s - 1) : n_s * n_s;  // non-diagonal (i, j)
    if (combos == 0) continue;
    switch (cfg_.cross_mode) {
      case CrossCompMode::ElementAggregate: cross += 1; break;
      case CrossCompMode::PerPair: cross += combos; break;
      case CrossCompMode::PerComponent: cross += combos * n_f_; break;
    }
  }
  const int eq_rows = cfg_.step_eq == StepEqMode::Constraint ? N - 1 : 0;
  return std_.dim() + cross + eq_rows + 1;
}

Eigen::VectorXd FesdIntervalEval::operator()(const IntervalPoint& Z, const Eigen::VectorXd& s0,
                                             const Eigen::VectorXd& q, double T) const {
  const Eigen::VectorXd g_std = std_(Z, s0, q);
  const Eigen::VectorXd g_cross =
      cross_complementarity(Z.theta, Z.lambda, nullptr, cfg_.cross_mode);
  Eigen::VectorXd g_eq(0);
  if (cfg_.step_eq == StepEqMode::Constraint && cfg_.n_fe >= 2)
    g_eq = step_equilibration(Z.h, Z.theta, Z.lambda, nullptr, StepEqMode::Constraint,
                              cfg_.eta_normalization)
               .residual;
  Eigen::VectorXd out(g_std.size() + g_cross.size() + g_eq.size() + 1);
  out << g_std, g_cross, g_eq, Z.h.sum() - T;
  return out;
}

Eigen::VectorXd FesdIntervalEval::f_fesd(const IntervalPoint& Z) const { return std_.f_std(Z); }

FesdIntervalEval build_fesd_interval(const PssModel& model, const ButcherTableau& tab,
                                     const DiscretizationConfig& cfg, CFunction cfun) {
  return FesdIntervalEval(model, tab, cfg, cfun);
}

}  // namespace swoc
