#include <Eigen/Sparse>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <vector>

#include <lapacke.h>

#include "swoc/nlp.hpp"

namespace swoc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Symmetric indefinite KKT solves with inertia reporting. Values change
// between factorizations, the pattern never does.
// ---------------------------------------------------------------------------

struct Inertia {
  int neg = 0;
  int zero = 0;
  bool failed = false;
};

class DenseKkt {
 public:
  explicit DenseKkt(int dim) : dim_(dim), A_(dim, dim), ipiv_(dim) {}

  Inertia factorize(const std::vector<int>& rows, const std::vector<int>& cols,
                    const std::vector<double>& vals) {
    A_.setZero();
    for (std::size_t k = 0; k < rows.size(); ++k) A_(rows[k], cols[k]) += vals[k];
    Inertia inertia;
    const lapack_int info = LAPACKE_dsytrf(LAPACK_COL_MAJOR, 'L', dim_, A_.data(), dim_, ipiv_.data());
    if (info < 0) {
      inertia.failed = true;
      return inertia;
    }
    if (info > 0) inertia.zero += 1;  // exact zero pivot encountered
    int k = 0;
    while (k < dim_) {
      if (ipiv_[k] > 0) {
        const double d = A_(k, k);
        if (d < 0.0) ++inertia.neg;
        if (d == 0.0) ++inertia.zero;
        ++k;
      } else {
        const double a = A_(k, k), c = A_(k + 1, k + 1), b = A_(k + 1, k);
        const double det = a * c - b * b;
        if (det < 0.0)
          ++inertia.neg;  // one positive, one negative eigenvalue
        else if (a + c < 0.0)
          inertia.neg += 2;
        if (det == 0.0) ++inertia.zero;
        k += 2;
      }
    }
    return inertia;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    Eigen::VectorXd x = rhs;
    LAPACKE_dsytrs(LAPACK_COL_MAJOR, 'L', dim_, 1, A_.data(), dim_, ipiv_.data(), x.data(), dim_);
    return x;
  }

 private:
  int dim_;
  Eigen::MatrixXd A_;
  std::vector<lapack_int> ipiv_;
};

class SparseKkt {
 public:
  explicit SparseKkt(int dim) : dim_(dim) {}

  Inertia factorize(const std::vector<int>& rows, const std::vector<int>& cols,
                    const std::vector<double>& vals) {
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(rows.size());
    for (std::size_t k = 0; k < rows.size(); ++k) trips.emplace_back(rows[k], cols[k], vals[k]);
    Eigen::SparseMatrix<double> A(dim_, dim_);
    A.setFromTriplets(trips.begin(), trips.end());

    if (!analyzed_) {
      ldlt_.analyzePattern(A);
      analyzed_ = true;
    }
    ldlt_.factorize(A);
    Inertia inertia;
    if (ldlt_.info() != Eigen::Success) {
      inertia.failed = true;
      return inertia;
    }
    const auto& D = ldlt_.vectorD();
    const double dmax = D.cwiseAbs().maxCoeff();
    for (int i = 0; i < D.size(); ++i) {
      if (D[i] < 0.0) ++inertia.neg;
      if (std::abs(D[i]) <= 1e-14 * std::max(1.0, dmax)) ++inertia.zero;
    }
    return inertia;
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return ldlt_.solve(rhs); }

 private:
  int dim_;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>, Eigen::Lower> ldlt_;
};

class KktSolver {
 public:
  KktSolver(int dim, bool dense) : dense_(dense) {
    if (dense_)
      d_ = std::make_unique<DenseKkt>(dim);
    else
      s_ = std::make_unique<SparseKkt>(dim);
  }
  Inertia factorize(const std::vector<int>& r, const std::vector<int>& c,
                    const std::vector<double>& v) {
    return dense_ ? d_->factorize(r, c, v) : s_->factorize(r, c, v);
  }
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const {
    return dense_ ? d_->solve(rhs) : s_->solve(rhs);
  }

 private:
  bool dense_;
  std::unique_ptr<DenseKkt> d_;
  std::unique_ptr<SparseKkt> s_;
};

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

NlpSolution solve_ip(const NlpCallbacks& cb, const NlpOptions& opts, const NlpWarmStart* warm) {
  cb.validate();

  const int n = cb.n, mE = cb.m_eq, mI = cb.m_ineq;
  const int nxt = n + mI;      // variables plus inequality slacks
  const int m = mE + mI;       // internal equality constraints
  const int N = nxt + m;       // KKT dimension

  const bool dense = opts.kkt == KktBackend::Dense ||
                     (opts.kkt == KktBackend::Auto && N <= opts.dense_threshold);
  KktSolver kkt(N, dense);

  // Bounds of the extended variable vector (x, s).
  Eigen::VectorXd lb(nxt), ub(nxt);
  lb.head(n) = cb.lb;
  ub.head(n) = cb.ub;
  if (mI > 0) {
    lb.tail(mI).setZero();
    ub.tail(mI).setConstant(kInf);
  }
  std::vector<bool> has_l(nxt), has_u(nxt);
  int n_bounded = 0;
  for (int i = 0; i < nxt; ++i) {
    has_l[i] = std::isfinite(lb[i]);
    has_u[i] = std::isfinite(ub[i]);
    n_bounded += has_l[i] + has_u[i];
  }

  NlpSolution sol;
  auto fail = [&](NlpStatus st, const std::string& msg, const Eigen::VectorXd& x_now,
                  int iters) {
    sol.status = st;
    sol.message = msg;
    sol.iters = iters;
    if (sol.x.size() != n) sol.x = x_now.head(n);
    return sol;
  };

  // ---- initial point ----
  Eigen::VectorXd xt(nxt);
  {
    Eigen::VectorXd x0 = (warm && warm->x.size() == n) ? warm->x : cb.x0;
    const double push = std::max(opts.bound_push, 1e-12);
    for (int i = 0; i < n; ++i) {
      double v = x0[i];
      if (has_l[i] && has_u[i]) {
        const double pl = std::min(push * std::max(1.0, std::abs(lb[i])), 0.25 * (ub[i] - lb[i]));
        const double pu = std::min(push * std::max(1.0, std::abs(ub[i])), 0.25 * (ub[i] - lb[i]));
        v = std::min(std::max(v, lb[i] + pl), ub[i] - pu);
      } else if (has_l[i]) {
        v = std::max(v, lb[i] + push * std::max(1.0, std::abs(lb[i])));
      } else if (has_u[i]) {
        v = std::min(v, ub[i] - push * std::max(1.0, std::abs(ub[i])));
      }
      xt[i] = v;
    }
    if (mI > 0) {
      Eigen::VectorXd ci = cb.ineq(xt.head(n));
      if (!ci.allFinite()) return fail(NlpStatus::NumericalFailure, "inequalities non-finite at start", xt, 0);
      for (int j = 0; j < mI; ++j)
        xt[n + j] = std::max(ci[j], push * std::max(1.0, std::abs(ci[j])));
    }
  }

  double mu = opts.mu_init;
  Eigen::VectorXd y = Eigen::VectorXd::Zero(m);
  if (warm) {
    if (warm->y_eq.size() == mE) y.head(mE) = warm->y_eq;
    if (warm->y_ineq.size() == mI) y.tail(mI) = -warm->y_ineq;
  }
  Eigen::VectorXd zl = Eigen::VectorXd::Zero(nxt), zu = Eigen::VectorXd::Zero(nxt);
  for (int i = 0; i < nxt; ++i) {
    if (has_l[i]) zl[i] = std::clamp(mu / (xt[i] - lb[i]), 1e-8, 1e8);
    if (has_u[i]) zu[i] = std::clamp(mu / (ub[i] - xt[i]), 1e-8, 1e8);
  }
  if (warm) {
    if (warm->z_lb.size() == n)
      for (int i = 0; i < n; ++i)
        if (has_l[i]) zl[i] = std::max(warm->z_lb[i], 1e-12);
    if (warm->z_ub.size() == n)
      for (int i = 0; i < n; ++i)
        if (has_u[i]) zu[i] = std::max(warm->z_ub[i], 1e-12);
    if (warm->y_ineq.size() == mI)
      for (int j = 0; j < mI; ++j) zl[n + j] = std::max(warm->y_ineq[j], 1e-12);
    if (warm->mu > 0.0) {
      mu = warm->mu;
    } else {
      double avg = 0.0;
      int cnt = 0;
      for (int i = 0; i < nxt; ++i) {
        if (has_l[i]) { avg += (xt[i] - lb[i]) * zl[i]; ++cnt; }
        if (has_u[i]) { avg += (ub[i] - xt[i]) * zu[i]; ++cnt; }
      }
      if (cnt > 0) mu = std::clamp(avg / cnt, opts.tol, opts.mu_init);
    }
  }

  const double mu_min = opts.tol / 11.0;
  double tau = std::max(opts.tau_min, 1.0 - mu);
  double delta_w_last = 0.0;

  // Filter line search state: pairs (theta, phi) = (l1 infeasibility,
  // barrier objective) that future iterates must not dominate.
  std::vector<std::pair<double, double>> filter;
  double theta_max = -1.0, theta_min_ftype = -1.0;
  auto filter_reset = [&]() { filter.clear(); };
  auto filter_add = [&](double th, double ph) {
    const double gt = 1e-5, gp = 1e-8;
    filter.emplace_back((1.0 - gt) * th, ph - gp * th);
  };
  auto filter_ok = [&](double th, double ph) {
    if (theta_max > 0.0 && th > theta_max) return false;
    for (const auto& [tj, pj] : filter)
      if (th >= tj && ph >= pj) return false;
    return true;
  };

  // KKT pattern: Hessian entries, full extended diagonal, Jacobian block,
  // slack columns, dual regularization diagonal.
  const std::size_t n_hess = cb.hess_rows.size();
  const std::size_t n_jeq = cb.jac_eq_rows.size();
  const std::size_t n_jiq = cb.jac_ineq_rows.size();
  std::vector<int> Kr, Kc;
  std::vector<double> Kv;
  const std::size_t nnz = n_hess + nxt + n_jeq + n_jiq + mI + m;
  Kr.reserve(nnz);
  Kc.reserve(nnz);
  Kv.assign(nnz, 0.0);
  for (std::size_t k = 0; k < n_hess; ++k) {
    Kr.push_back(cb.hess_rows[k]);
    Kc.push_back(cb.hess_cols[k]);
  }
  for (int i = 0; i < nxt; ++i) {
    Kr.push_back(i);
    Kc.push_back(i);
  }
  for (std::size_t k = 0; k < n_jeq; ++k) {
    Kr.push_back(nxt + cb.jac_eq_rows[k]);
    Kc.push_back(cb.jac_eq_cols[k]);
  }
  for (std::size_t k = 0; k < n_jiq; ++k) {
    Kr.push_back(nxt + mE + cb.jac_ineq_rows[k]);
    Kc.push_back(cb.jac_ineq_cols[k]);
  }
  for (int j = 0; j < mI; ++j) {
    Kr.push_back(nxt + mE + j);
    Kc.push_back(n + j);
  }
  for (int k = 0; k < m; ++k) {
    Kr.push_back(nxt + k);
    Kc.push_back(nxt + k);
  }

  Eigen::VectorXd yeq_view(mE), ylag_view(mI);

  int iter = 0;
  int last_y_refresh = -100;
  for (; iter < opts.max_iter; ++iter) {
    const Eigen::VectorXd x = xt.head(n);
    const double f = cb.obj(x);
    const Eigen::VectorXd g = cb.grad(x);
    Eigen::VectorXd cE = mE > 0 ? cb.eq(x) : Eigen::VectorXd(0);
    Eigen::VectorXd cI = mI > 0 ? cb.ineq(x) : Eigen::VectorXd(0);
    if (!std::isfinite(f) || !g.allFinite() || !cE.allFinite() || !cI.allFinite())
      return fail(NlpStatus::NumericalFailure, "non-finite function evaluation", xt, iter);
    if (std::abs(f) > 1e18 || inf_norm(xt) > 1e18)
      return fail(NlpStatus::NumericalFailure, "iterates diverged", xt, iter);

    Eigen::VectorXd ctil(m);
    if (mE > 0) ctil.head(mE) = cE;
    if (mI > 0) ctil.tail(mI) = cI - xt.tail(mI);

    const Eigen::VectorXd jeq_v = mE > 0 ? cb.jac_eq_vals(x) : Eigen::VectorXd(0);
    const Eigen::VectorXd jiq_v = mI > 0 ? cb.jac_ineq_vals(x) : Eigen::VectorXd(0);

    // r_stat = grad_L over (x, s) with current multipliers.
    Eigen::VectorXd rstat = Eigen::VectorXd::Zero(nxt);
    rstat.head(n) = g;
    for (std::size_t k = 0; k < n_jeq; ++k)
      rstat[cb.jac_eq_cols[k]] += jeq_v[k] * y[cb.jac_eq_rows[k]];
    for (std::size_t k = 0; k < n_jiq; ++k)
      rstat[cb.jac_ineq_cols[k]] += jiq_v[k] * y[mE + cb.jac_ineq_rows[k]];
    for (int j = 0; j < mI; ++j) rstat[n + j] -= y[mE + j];
    for (int i = 0; i < nxt; ++i) rstat[i] += -zl[i] + zu[i];

    // Optimality error at mu and at 0 (scaled as in standard practice).
    double comp0 = 0.0, comp_mu = 0.0;
    for (int i = 0; i < nxt; ++i) {
      if (has_l[i]) {
        const double c = (xt[i] - lb[i]) * zl[i];
        comp0 = std::max(comp0, std::abs(c));
        comp_mu = std::max(comp_mu, std::abs(c - mu));
      }
      if (has_u[i]) {
        const double c = (ub[i] - xt[i]) * zu[i];
        comp0 = std::max(comp0, std::abs(c));
        comp_mu = std::max(comp_mu, std::abs(c - mu));
      }
    }
    const double s_max = 100.0;
    double mult_sum = y.lpNorm<1>() + zl.lpNorm<1>() + zu.lpNorm<1>();
    const double denom = std::max(1, m + n_bounded);
    const double s_d = std::max(s_max, mult_sum / denom) / s_max;
    const double feas = inf_norm(ctil);
    const double stat = inf_norm(rstat);
    const double err0 = std::max({stat / s_d, feas, comp0 / s_d});
    const double err_mu = std::max({stat / s_d, feas, comp_mu / s_d});

    sol.trace.push_back({iter, mu, f, feas, stat, comp0, 0.0, delta_w_last});
    if (opts.verbose)
      std::printf("ip %3d mu=%8.2e f=%14.8e feas=%8.2e stat=%8.2e comp=%8.2e |y|=%8.2e |z|=%8.2e\n",
                  iter, mu, f, feas, stat, comp0, inf_norm(y),
                  std::max(inf_norm(zl), inf_norm(zu)));

    if (err0 <= opts.tol) {
      sol.status = NlpStatus::Optimal;
      sol.message = "converged";
      break;
    }

    while (mu > mu_min && err_mu <= opts.kappa_eps * mu) {
      mu = std::max(mu_min, std::min(opts.kappa_mu * mu, std::pow(mu, opts.theta_mu)));
      tau = std::max(opts.tau_min, 1.0 - mu);
      filter_reset();
    }

    // Dual stall: feasible and complementary but the multiplier estimate is
    // far off (typical at degenerate actives). Refresh y by damped least
    // squares on the stationarity residual and re-enter the iteration.
    if (m > 0 && stat > 100.0 * std::max(mu, opts.tol) &&
        feas < std::min(1e-4, 1e3 * opts.tol) && iter - last_y_refresh >= 8) {
      std::size_t q = 0;
      for (std::size_t k = 0; k < n_hess; ++k) Kv[q++] = 0.0;
      for (int i = 0; i < nxt; ++i) Kv[q++] = 1.0;
      for (std::size_t k = 0; k < n_jeq; ++k) Kv[q++] = jeq_v[k];
      for (std::size_t k = 0; k < n_jiq; ++k) Kv[q++] = jiq_v[k];
      for (int j = 0; j < mI; ++j) Kv[q++] = -1.0;
      for (int k = 0; k < m; ++k) Kv[q++] = -1e-8;
      const Inertia li = kkt.factorize(Kr, Kc, Kv);
      if (!li.failed) {
        Eigen::VectorXd ls_rhs = Eigen::VectorXd::Zero(N);
        Eigen::VectorXd gz = Eigen::VectorXd::Zero(nxt);
        gz.head(n) = g;
        for (int i = 0; i < nxt; ++i) gz[i] += -zl[i] + zu[i];
        ls_rhs.head(nxt) = -gz;
        const Eigen::VectorXd ls_sol = kkt.solve(ls_rhs);
        const Eigen::VectorXd y_new = ls_sol.tail(m);
        // Accept only if it actually reduces the stationarity residual.
        Eigen::VectorXd r_new = gz;
        for (std::size_t k = 0; k < n_jeq; ++k)
          r_new[cb.jac_eq_cols[k]] += jeq_v[k] * y_new[cb.jac_eq_rows[k]];
        for (std::size_t k = 0; k < n_jiq; ++k)
          r_new[cb.jac_ineq_cols[k]] += jiq_v[k] * y_new[mE + cb.jac_ineq_rows[k]];
        for (int j = 0; j < mI; ++j) r_new[n + j] -= y_new[mE + j];
        if (inf_norm(r_new) < 0.5 * stat) {
          y = y_new;
          last_y_refresh = iter;
          continue;
        }
        last_y_refresh = iter;  // do not retry immediately even if rejected
      }
    }

    // Lagrangian Hessian with internal multipliers.
    yeq_view = y.head(mE);
    ylag_view = y.tail(mI);
    const Eigen::VectorXd hv = cb.hess_vals(x, 1.0, yeq_view, ylag_view);
    if (!hv.allFinite())
      return fail(NlpStatus::NumericalFailure, "non-finite Hessian", xt, iter);

    // Barrier gradient.
    Eigen::VectorXd grad_phi = Eigen::VectorXd::Zero(nxt);
    grad_phi.head(n) = g;
    for (int i = 0; i < nxt; ++i) {
      if (has_l[i]) grad_phi[i] -= mu / (xt[i] - lb[i]);
      if (has_u[i]) grad_phi[i] += mu / (ub[i] - xt[i]);
    }

    Eigen::VectorXd sigma(nxt);
    for (int i = 0; i < nxt; ++i) {
      double s = 0.0;
      if (has_l[i]) s += zl[i] / (xt[i] - lb[i]);
      if (has_u[i]) s += zu[i] / (ub[i] - xt[i]);
      sigma[i] = s;
    }

    Eigen::VectorXd rhs(N);
    {
      Eigen::VectorXd jty = Eigen::VectorXd::Zero(nxt);
      for (std::size_t k = 0; k < n_jeq; ++k)
        jty[cb.jac_eq_cols[k]] += jeq_v[k] * y[cb.jac_eq_rows[k]];
      for (std::size_t k = 0; k < n_jiq; ++k)
        jty[cb.jac_ineq_cols[k]] += jiq_v[k] * y[mE + cb.jac_ineq_rows[k]];
      for (int j = 0; j < mI; ++j) jty[n + j] -= y[mE + j];
      rhs.head(nxt) = -(grad_phi + jty);
      rhs.tail(m) = -ctil;
    }

    // Direction with inertia correction; retry the whole step with more
    // regularization if the line search cannot make progress.
    Eigen::VectorXd dxt, dy;
    bool accepted = false;
    double alpha_used = 0.0, alpha_z = 0.0;
    double delta_w = 0.0;
    const double delta_c = 1e-8;

    for (int attempt = 0; attempt < 3 && !accepted; ++attempt) {
      bool have_direction = false;
      double dw = (attempt == 0) ? 0.0
                                 : std::max(1e-4, delta_w * 100.0);
      for (int tries = 0; tries < 40; ++tries) {
        // Fill values in pattern order.
        std::size_t q = 0;
        for (std::size_t k = 0; k < n_hess; ++k) Kv[q++] = hv[k];
        for (int i = 0; i < nxt; ++i) Kv[q++] = sigma[i] + dw;
        for (std::size_t k = 0; k < n_jeq; ++k) Kv[q++] = jeq_v[k];
        for (std::size_t k = 0; k < n_jiq; ++k) Kv[q++] = jiq_v[k];
        for (int j = 0; j < mI; ++j) Kv[q++] = -1.0;
        for (int k = 0; k < m; ++k) Kv[q++] = -delta_c;

        const Inertia inertia = kkt.factorize(Kr, Kc, Kv);
        if (!inertia.failed && inertia.zero == 0 && inertia.neg == m) {
          have_direction = true;
          break;
        }
        dw = (dw == 0.0) ? std::max(1e-8, delta_w_last / 3.0) : dw * 8.0;
        if (dw > 1e14) break;
      }
      if (!have_direction)
        return fail(NlpStatus::NumericalFailure, "KKT inertia correction failed", xt, iter);
      delta_w = dw;
      delta_w_last = std::max(dw, 1e-8);

      const Eigen::VectorXd step = kkt.solve(rhs);
      dxt = step.head(nxt);
      dy = step.tail(m);

      // Fraction-to-boundary limits.
      double amax = 1.0;
      for (int i = 0; i < nxt; ++i) {
        if (has_l[i] && dxt[i] < 0.0) amax = std::min(amax, tau * (xt[i] - lb[i]) / (-dxt[i]));
        if (has_u[i] && dxt[i] > 0.0) amax = std::min(amax, tau * (ub[i] - xt[i]) / dxt[i]);
      }

      // Filter line search (no penalty weight; duals never enter the
      // acceptance test).
      auto barrier_obj = [&](const Eigen::VectorXd& xv, double fv) {
        double phi = fv;
        for (int i = 0; i < nxt; ++i) {
          if (has_l[i]) phi -= mu * std::log(xv[i] - lb[i]);
          if (has_u[i]) phi -= mu * std::log(ub[i] - xv[i]);
        }
        return phi;
      };
      const double theta0 = ctil.lpNorm<1>();
      const double phi0 = barrier_obj(xt, f);
      const double dphi = grad_phi.dot(dxt);
      if (theta_max < 0.0) {
        theta_max = 1e4 * std::max(1.0, theta0);
        theta_min_ftype = 1e-4 * std::max(1.0, theta0);
      }
      const double gamma_theta = 1e-5, gamma_phi = 1e-8, eta_phi = 1e-8;

      double alpha = amax;
      for (int ls = 0; ls <= opts.max_ls; ++ls, alpha *= 0.5) {
        Eigen::VectorXd xtrial = xt + alpha * dxt;
        const Eigen::VectorXd xtr = xtrial.head(n);
        const double ftr = cb.obj(xtr);
        Eigen::VectorXd ctr(m);
        if (mE > 0) ctr.head(mE) = cb.eq(xtr);
        if (mI > 0) ctr.tail(mI) = cb.ineq(xtr) - xtrial.tail(mI);
        if (!std::isfinite(ftr) || !ctr.allFinite()) continue;

        const double theta_t = ctr.lpNorm<1>();
        const double phi_t = barrier_obj(xtrial, ftr);
        if (!filter_ok(theta_t, phi_t)) continue;

        const bool f_type = dphi < 0.0 && theta0 <= theta_min_ftype &&
                            alpha * std::pow(-dphi, 2.3) > std::pow(theta0, 1.1);
        bool ok;
        if (f_type) {
          ok = phi_t <= phi0 + eta_phi * alpha * dphi;
        } else {
          ok = theta_t <= (1.0 - gamma_theta) * theta0 || phi_t <= phi0 - gamma_phi * theta0;
        }
        if (!ok) continue;

        if (!f_type) filter_add(theta0, phi0);
        // Dual update consistent with the realized primal step: the bound
        // duals move toward centrality at the accepted point, never
        // overshooting while the primal is held up by the line search.
        Eigen::VectorXd dzl = Eigen::VectorXd::Zero(nxt), dzu = Eigen::VectorXd::Zero(nxt);
        alpha_z = 1.0;
        for (int i = 0; i < nxt; ++i) {
          if (has_l[i]) {
            dzl[i] = (mu - zl[i] * alpha * dxt[i]) / (xt[i] - lb[i]) - zl[i];
            if (dzl[i] < 0.0) alpha_z = std::min(alpha_z, tau * zl[i] / (-dzl[i]));
          }
          if (has_u[i]) {
            dzu[i] = (mu + zu[i] * alpha * dxt[i]) / (ub[i] - xt[i]) - zu[i];
            if (dzu[i] < 0.0) alpha_z = std::min(alpha_z, tau * zu[i] / (-dzu[i]));
          }
        }
        xt = xtrial;
        y += alpha * dy;
        for (int i = 0; i < nxt; ++i) {
          if (has_l[i]) zl[i] += alpha_z * dzl[i];
          if (has_u[i]) zu[i] += alpha_z * dzu[i];
        }
        alpha_used = alpha;
        accepted = true;
        break;
      }
    }

    if (!accepted) {
      if (opts.verbose) {
        int worst = -1;
        double dmin = kInf;
        for (int i = 0; i < nxt; ++i) {
          if (has_l[i] && xt[i] - lb[i] < dmin) { dmin = xt[i] - lb[i]; worst = i; }
          if (has_u[i] && ub[i] - xt[i] < dmin) { dmin = ub[i] - xt[i]; worst = i; }
        }
        std::printf("ip: line search failed; tightest bound var %d at distance %.3e\n", worst,
                    dmin);
      }
      if (inf_norm(ctil) <= 1e3 * opts.tol) {
        // Stalled with negligible constraint violation: report the iterate
        // instead of failing hard; callers treat this like an iteration cap.
        sol.status = NlpStatus::MaxIter;
        sol.message = "stalled near a feasible point (line search exhausted)";
        break;
      }
      if (iter > 10 && inf_norm(ctil) > 1e-4 && stat < 1e-2 * std::max(1.0, inf_norm(ctil)))
        return fail(NlpStatus::InfeasibleDetected,
                    "no progress with infeasible iterates (problem may be locally infeasible)",
                    xt, iter);
      return fail(NlpStatus::NumericalFailure, "line search failed", xt, iter);
    }
    sol.trace.back().alpha = alpha_used;
    sol.trace.back().delta_w = delta_w;
    if (opts.verbose) std::printf("      accepted a=%8.2e az=%8.2e dw=%8.2e\n", alpha_used, alpha_z, delta_w);

    // Keep multipliers consistent with the barrier scale. A tight clip box
    // prevents the bound duals from running away while the primal is held
    // up by the line search (which would poison Sigma and the merit weight).
    const double ks = 1e2;
    for (int i = 0; i < nxt; ++i) {
      if (has_l[i]) zl[i] = std::clamp(zl[i], mu / (ks * (xt[i] - lb[i])), ks * mu / (xt[i] - lb[i]));
      if (has_u[i]) zu[i] = std::clamp(zu[i], mu / (ks * (ub[i] - xt[i])), ks * mu / (ub[i] - xt[i]));
    }
  }

  if (sol.status != NlpStatus::Optimal && iter >= opts.max_iter) {
    sol.status = NlpStatus::MaxIter;
    sol.message = "iteration limit reached";
  }

  // ---- report in the original variable space ----
  const Eigen::VectorXd x = xt.head(n);
  sol.x = x;
  sol.obj = cb.obj(x);
  sol.iters = iter;
  sol.y_eq = y.head(mE);
  sol.y_ineq = Eigen::VectorXd(mI);
  for (int j = 0; j < mI; ++j) sol.y_ineq[j] = zl[n + j];
  sol.z_lb = Eigen::VectorXd::Zero(n);
  sol.z_ub = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < n; ++i) {
    if (has_l[i]) sol.z_lb[i] = zl[i];
    if (has_u[i]) sol.z_ub[i] = zu[i];
  }

  // Reported KKT residuals recomputed from the reported multipliers.
  {
    Eigen::VectorXd r = cb.grad(x);
    if (mE > 0) {
      const Eigen::VectorXd jv = cb.jac_eq_vals(x);
      for (std::size_t k = 0; k < cb.jac_eq_rows.size(); ++k)
        r[cb.jac_eq_cols[k]] += jv[k] * sol.y_eq[cb.jac_eq_rows[k]];
    }
    if (mI > 0) {
      const Eigen::VectorXd jv = cb.jac_ineq_vals(x);
      for (std::size_t k = 0; k < cb.jac_ineq_rows.size(); ++k)
        r[cb.jac_ineq_cols[k]] -= jv[k] * sol.y_ineq[cb.jac_ineq_rows[k]];
    }
    r -= sol.z_lb;
    r += sol.z_ub;
    sol.kkt_stationarity = inf_norm(r);

    double feas = 0.0;
    if (mE > 0) feas = inf_norm(cb.eq(x));
    double comp = 0.0;
    if (mI > 0) {
      const Eigen::VectorXd ci = cb.ineq(x);
      for (int j = 0; j < mI; ++j) {
        feas = std::max(feas, std::max(0.0, -ci[j]));
        comp = std::max(comp, std::abs(ci[j] * sol.y_ineq[j]));
      }
    }
    for (int i = 0; i < n; ++i) {
      if (std::isfinite(cb.lb[i])) comp = std::max(comp, std::abs((x[i] - cb.lb[i]) * sol.z_lb[i]));
      if (std::isfinite(cb.ub[i])) comp = std::max(comp, std::abs((cb.ub[i] - x[i]) * sol.z_ub[i]));
    }
    sol.kkt_feasibility = feas;
    sol.kkt_complementarity = comp;
  }
  return sol;
}

}  // namespace swoc
