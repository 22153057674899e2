#include <map>
#include <stdexcept>
#include <utility>

#include "swoc/nlp.hpp"

namespace swoc {

using sym::Block;
using sym::Expr;
using sym::VecFunc;

namespace {

void split_additive(const Expr& e, double sign, std::vector<std::pair<double, Expr>>& out) {
  const auto& n = e.node();
  switch (n.op) {
    case sym::Op::Add:
      split_additive(Expr::adopt(n.a), sign, out);
      split_additive(Expr::adopt(n.b), sign, out);
      break;
    case sym::Op::Sub:
      split_additive(Expr::adopt(n.a), sign, out);
      split_additive(Expr::adopt(n.b), -sign, out);
      break;
    case sym::Op::Neg:
      split_additive(Expr::adopt(n.a), -sign, out);
      break;
    default:
      out.emplace_back(sign, e);
  }
}

std::vector<int> w_support(const Expr& e) {
  std::vector<int> out;
  for (const auto& v : sym::collect_vars(e))
    if (v.block == "w") out.push_back(v.index);
  return out;
}

}  // namespace

std::string to_string(NlpStatus s) {
  switch (s) {
    case NlpStatus::Optimal: return "optimal";
    case NlpStatus::MaxIter: return "max-iter";
    case NlpStatus::InfeasibleDetected: return "infeasible-detected";
    case NlpStatus::NumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

void NlpCallbacks::validate() const {
  if (n <= 0) throw std::invalid_argument("NlpCallbacks: empty variable vector");
  if (lb.size() != n || ub.size() != n || x0.size() != n)
    throw std::invalid_argument("NlpCallbacks: bound/start dimension mismatch");
  if (!obj || !grad) throw std::invalid_argument("NlpCallbacks: missing objective callbacks");
  if (m_eq > 0 && (!eq || !jac_eq_vals))
    throw std::invalid_argument("NlpCallbacks: missing equality callbacks");
  if (m_ineq > 0 && (!ineq || !jac_ineq_vals))
    throw std::invalid_argument("NlpCallbacks: missing inequality callbacks");
  if (!hess_vals) throw std::invalid_argument("NlpCallbacks: missing Hessian callback");
  if (jac_eq_rows.size() != jac_eq_cols.size() || jac_ineq_rows.size() != jac_ineq_cols.size() ||
      hess_rows.size() != hess_cols.size())
    throw std::invalid_argument("NlpCallbacks: ragged sparsity structure");
  for (std::size_t k = 0; k < jac_eq_rows.size(); ++k)
    if (jac_eq_rows[k] < 0 || jac_eq_rows[k] >= m_eq || jac_eq_cols[k] < 0 || jac_eq_cols[k] >= n)
      throw std::invalid_argument("NlpCallbacks: equality Jacobian index out of range");
  for (std::size_t k = 0; k < jac_ineq_rows.size(); ++k)
    if (jac_ineq_rows[k] < 0 || jac_ineq_rows[k] >= m_ineq || jac_ineq_cols[k] < 0 ||
        jac_ineq_cols[k] >= n)
      throw std::invalid_argument("NlpCallbacks: inequality Jacobian index out of range");
  for (std::size_t k = 0; k < hess_rows.size(); ++k)
    if (hess_rows[k] < hess_cols[k] || hess_rows[k] >= n || hess_cols[k] < 0)
      throw std::invalid_argument("NlpCallbacks: Hessian structure must be lower-triangular");
  for (int i = 0; i < n; ++i)
    if (lb[i] > ub[i]) throw std::invalid_argument("NlpCallbacks: lb > ub");
}

struct ParametricNlp::Impl {
  int n = 0, np = 0, m_eq = 0, m_ineq = 0;
  Eigen::VectorXd lb, ub, x0;
  VecFunc f_obj, f_grad, f_eq, f_ineq;
  std::vector<int> jeq_r, jeq_c, jiq_r, jiq_c, h_r, h_c;
  VecFunc f_jeq, f_jiq, f_hess;
};

ParametricNlp::ParametricNlp(const NlpProblem& problem) {
  auto impl = std::make_shared<Impl>();

  if (problem.objective.n_out() != 1)
    throw std::invalid_argument("NlpProblem: objective must be scalar");
  if (!problem.objective.has_block("w"))
    throw std::invalid_argument("NlpProblem: objective must declare block 'w'");
  impl->n = problem.objective.block_dim("w");
  impl->np = problem.objective.has_block("p") ? problem.objective.block_dim("p") : 0;
  if (impl->np == 0 && problem.p.size() > 0) impl->np = static_cast<int>(problem.p.size());

  impl->m_eq = problem.eq.n_out();
  impl->m_ineq = problem.ineq.n_out();
  impl->lb = problem.lb;
  impl->ub = problem.ub;
  impl->x0 = problem.x0;
  if (impl->lb.size() != impl->n || impl->ub.size() != impl->n || impl->x0.size() != impl->n)
    throw std::invalid_argument("NlpProblem: bound/start dimension mismatch");
  for (int i = 0; i < impl->n; ++i) {
    if (impl->lb[i] > impl->ub[i]) throw std::invalid_argument("NlpProblem: lb > ub");
    if (impl->lb[i] == impl->ub[i])
      throw std::invalid_argument(
          "NlpProblem: fixed variable (lb == ub); use an equality constraint");
  }

  const std::vector<Block> wp = {{"w", impl->n}, {"p", impl->np}};
  const Expr obj_expr = problem.objective.outputs()[0];
  std::vector<Expr> eq_exprs = impl->m_eq > 0 ? problem.eq.outputs() : std::vector<Expr>{};
  std::vector<Expr> iq_exprs = impl->m_ineq > 0 ? problem.ineq.outputs() : std::vector<Expr>{};

  impl->f_obj = VecFunc("obj", wp, {obj_expr});
  if (impl->m_eq > 0) impl->f_eq = VecFunc("eq", wp, eq_exprs);
  if (impl->m_ineq > 0) impl->f_ineq = VecFunc("ineq", wp, iq_exprs);

  // Gradient: differentiate additive objective terms so that each diff
  // touches a small support.
  std::vector<std::pair<double, Expr>> terms;
  split_additive(obj_expr, 1.0, terms);
  std::vector<Expr> grad(impl->n, Expr::constant(0.0));
  for (const auto& [sgn, t] : terms) {
    for (int a : w_support(t)) {
      Expr d = sym::diff(t, "w", a);
      if (d.is_constant(0.0)) continue;
      grad[a] += (sgn < 0 ? -d : d);
    }
  }
  impl->f_grad = VecFunc("grad", wp, std::move(grad));

  auto build_jac = [&](const std::vector<Expr>& rows, std::vector<int>& R, std::vector<int>& C,
                       const char* nm) {
    sym::SparseExprJac J = sym::sparse_jacobian(rows, "w");
    R = std::move(J.rows);
    C = std::move(J.cols);
    return J.vals.empty() ? VecFunc(nm, wp, {Expr::constant(0.0)})
                          : VecFunc(nm, wp, std::move(J.vals));
  };
  if (impl->m_eq > 0) impl->f_jeq = build_jac(eq_exprs, impl->jeq_r, impl->jeq_c, "jac_eq");
  if (impl->m_ineq > 0) impl->f_jiq = build_jac(iq_exprs, impl->jiq_r, impl->jiq_c, "jac_ineq");

  // Lagrangian Hessian entries: sigma * f + y_eq^T c_E + y_lag^T c_I,
  // accumulated per lower-triangle (a, b) over additive pieces.
  std::map<std::pair<int, int>, Expr> H;
  auto accumulate = [&](const Expr& fn, const Expr& weight) {
    std::vector<std::pair<double, Expr>> parts;
    split_additive(fn, 1.0, parts);
    for (const auto& [sgn, t] : parts) {
      const std::vector<int> sup = w_support(t);
      for (int a : sup) {
        Expr ga = sym::diff(t, "w", a);
        if (ga.is_constant(0.0)) continue;
        for (int b : sup) {
          if (b > a) continue;
          Expr hab = sym::diff(ga, "w", b);
          if (hab.is_constant(0.0)) continue;
          Expr term = weight * (sgn < 0 ? -hab : hab);
          auto it = H.find({a, b});
          if (it == H.end())
            H.emplace(std::make_pair(a, b), term);
          else
            it->second += term;
        }
      }
    }
  };
  accumulate(obj_expr, Expr::variable("sobj", 0));
  for (int i = 0; i < impl->m_eq; ++i) accumulate(eq_exprs[i], Expr::variable("leq", i));
  for (int j = 0; j < impl->m_ineq; ++j) accumulate(iq_exprs[j], Expr::variable("liq", j));

  std::vector<Expr> hvals;
  for (const auto& [key, e] : H) {
    impl->h_r.push_back(key.first);
    impl->h_c.push_back(key.second);
    hvals.push_back(e);
  }
  const std::vector<Block> hblocks = {{"w", impl->n},
                                      {"p", impl->np},
                                      {"leq", impl->m_eq},
                                      {"liq", impl->m_ineq},
                                      {"sobj", 1}};
  impl->f_hess = VecFunc("hess", hblocks,
                         hvals.empty() ? std::vector<Expr>{Expr::constant(0.0)} : std::move(hvals));

  impl_ = std::move(impl);
}

int ParametricNlp::n() const { return impl_->n; }
int ParametricNlp::m_eq() const { return impl_->m_eq; }
int ParametricNlp::m_ineq() const { return impl_->m_ineq; }

NlpCallbacks ParametricNlp::callbacks(const Eigen::VectorXd& p) const {
  const auto impl = impl_;
  if (p.size() != impl->np)
    throw std::invalid_argument("ParametricNlp: parameter dimension mismatch");

  NlpCallbacks cb;
  cb.n = impl->n;
  cb.m_eq = impl->m_eq;
  cb.m_ineq = impl->m_ineq;
  cb.lb = impl->lb;
  cb.ub = impl->ub;
  cb.x0 = impl->x0;

  auto eval2 = [impl, p](const VecFunc& f, const Eigen::VectorXd& x) {
    return f(std::vector<Eigen::VectorXd>{x, p});
  };
  cb.obj = [impl, p](const Eigen::VectorXd& x) {
    return impl->f_obj(std::vector<Eigen::VectorXd>{x, p})[0];
  };
  cb.grad = [impl, eval2](const Eigen::VectorXd& x) { return eval2(impl->f_grad, x); };
  if (impl->m_eq > 0) {
    cb.eq = [impl, eval2](const Eigen::VectorXd& x) { return eval2(impl->f_eq, x); };
    cb.jac_eq_rows = impl->jeq_r;
    cb.jac_eq_cols = impl->jeq_c;
    cb.jac_eq_vals = [impl, eval2](const Eigen::VectorXd& x) {
      Eigen::VectorXd v = eval2(impl->f_jeq, x);
      if (impl->jeq_r.empty()) v.resize(0);
      return v;
    };
  }
  if (impl->m_ineq > 0) {
    cb.ineq = [impl, eval2](const Eigen::VectorXd& x) { return eval2(impl->f_ineq, x); };
    cb.jac_ineq_rows = impl->jiq_r;
    cb.jac_ineq_cols = impl->jiq_c;
    cb.jac_ineq_vals = [impl, eval2](const Eigen::VectorXd& x) {
      Eigen::VectorXd v = eval2(impl->f_jiq, x);
      if (impl->jiq_r.empty()) v.resize(0);
      return v;
    };
  }
  cb.hess_rows = impl->h_r;
  cb.hess_cols = impl->h_c;
  cb.hess_vals = [impl, p](const Eigen::VectorXd& x, double sobj, const Eigen::VectorXd& yeq,
                           const Eigen::VectorXd& ylag) {
    Eigen::VectorXd s(1);
    s[0] = sobj;
    Eigen::VectorXd v =
        impl->f_hess(std::vector<Eigen::VectorXd>{x, p, yeq, ylag, s});
    if (impl->h_r.empty()) v.resize(0);
    return v;
  };
  return cb;
}

NlpSolution ParametricNlp::solve(const Eigen::VectorXd& p, const Eigen::VectorXd& x0,
                                 const NlpOptions& opts, const NlpWarmStart* warm) const {
  NlpCallbacks cb = callbacks(p);
  if (x0.size() == cb.n) cb.x0 = x0;
  return solve_ip(cb, opts, warm);
}

NlpSolution solve_nlp(const NlpProblem& p, const NlpOptions& opts, const NlpWarmStart* warm) {
  ParametricNlp compiled(p);
  return compiled.solve(p.p, p.x0, opts, warm);
}

NlpSolution solve_with_backend(const NlpProblem& p, const NlpBackend& backend,
                               const NlpOptions& opts) {
  if (!backend) throw std::invalid_argument("solve_with_backend: empty backend");
  ParametricNlp compiled(p);
  NlpCallbacks cb = compiled.callbacks(p.p);
  cb.validate();
  try {
    return backend(cb, opts);
  } catch (const std::exception& e) {
    NlpSolution bad;
    bad.status = NlpStatus::NumericalFailure;
    bad.message = std::string("adapter transport failure: ") + e.what();
    bad.x = cb.x0;
    return bad;
  }
}

}  // namespace swoc
