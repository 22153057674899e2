#include "swoc/mpcc.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <stdexcept>

namespace swoc {

using sym::Expr;
using sym::VecFunc;

void Mpcc::validate() const {
  if (n_w <= 0) throw std::invalid_argument("Mpcc: empty variable vector");
  if (lb.size() != n_w || ub.size() != n_w || w_init.size() != n_w)
    throw std::invalid_argument("Mpcc: bound/init dimension mismatch");
  std::set<int> side1, side2;
  for (const auto& g : groups) {
    for (const auto& [i, j] : g.pairs) {
      if (i < 0 || i >= n_w || j < 0 || j >= n_w)
        throw std::invalid_argument("Mpcc: pair index out of range");
      side1.insert(i);
      side2.insert(j);
      if (lb[i] != 0.0 || lb[j] != 0.0)
        throw std::invalid_argument("Mpcc: complementarity variables must have lower bound 0");
    }
  }
  for (int i : side1)
    if (side2.count(i))
      throw std::invalid_argument("Mpcc: w1 and w2 index sets must be disjoint");
}

std::vector<std::pair<int, int>> Mpcc::all_pairs() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& g : groups) out.insert(out.end(), g.pairs.begin(), g.pairs.end());
  return out;
}

std::string to_string(MpccMode m) {
  switch (m) {
    case MpccMode::Smoothing: return "smoothing";
    case MpccMode::Relaxation: return "relaxation";
    case MpccMode::L1Penalty: return "l1-penalty";
    case MpccMode::ElasticEq: return "elastic-eq";
    case MpccMode::ElasticIneq: return "elastic-ineq";
    case MpccMode::ElasticTwoSided: return "elastic-two-sided";
  }
  return "?";
}

MpccMode mpcc_mode_from_string(const std::string& s) {
  if (s == "smoothing") return MpccMode::Smoothing;
  if (s == "relaxation") return MpccMode::Relaxation;
  if (s == "l1-penalty" || s == "l1") return MpccMode::L1Penalty;
  if (s == "elastic-eq") return MpccMode::ElasticEq;
  if (s == "elastic-ineq" || s == "elastic") return MpccMode::ElasticIneq;
  if (s == "elastic-two-sided") return MpccMode::ElasticTwoSided;
  throw std::invalid_argument("unknown MPCC mode '" + s + "'");
}

std::string to_string(HomotopyStatus s) {
  switch (s) {
    case HomotopyStatus::Converged: return "converged";
    case HomotopyStatus::MaxIterations: return "max-iterations";
    case HomotopyStatus::NlpFailure: return "nlp-failure";
    case HomotopyStatus::Stagnation: return "stagnation";
  }
  return "?";
}

double comp_residual(const Eigen::VectorXd& w1, const Eigen::VectorXd& w2) {
  if (w1.size() != w2.size()) throw std::invalid_argument("comp_residual: size mismatch");
  double r = 0.0;
  for (int i = 0; i < w1.size(); ++i) {
    if (w1[i] < -1e-12 || w2[i] < -1e-12)
      throw std::invalid_argument("comp_residual: negative input component");
    r = std::max(r, std::min(std::max(w1[i], 0.0), std::max(w2[i], 0.0)));
  }
  return r;
}

double comp_residual(const Mpcc& m, const Eigen::VectorXd& w) {
  const auto pairs = m.all_pairs();
  Eigen::VectorXd a(pairs.size()), b(pairs.size());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    a[k] = w[pairs[k].first];
    b[k] = w[pairs[k].second];
  }
  return pairs.empty() ? 0.0 : comp_residual(a, b);
}

namespace {

Expr group_pairing(const CompGroup& g) {
  Expr sum = Expr::constant(0.0);
  for (const auto& [i, j] : g.pairs)
    sum += Expr::variable("w", i) * Expr::variable("w", j);
  return sum;
}

struct BuiltReformulation {
  NlpProblem nlp;  // p block is [caller p; sigma]; p VALUES left empty
  bool has_gamma = false;
  int gamma_index = -1;
  int n_w = 0, n_p = 0;
};

BuiltReformulation build_reformulation(const Mpcc& m, MpccMode mode, double gamma_bar,
                                       bool componentwise) {
  m.validate();
  if (gamma_bar <= 0.0) throw std::invalid_argument("reformulate: gamma_bar must be positive");

  BuiltReformulation out;
  out.n_w = m.n_w;
  out.n_p = m.n_p;
  const bool elastic = mode == MpccMode::ElasticEq || mode == MpccMode::ElasticIneq ||
                       mode == MpccMode::ElasticTwoSided;
  const int n_total = m.n_w + (elastic ? 1 : 0);
  const Expr sigma = Expr::variable("p", m.n_p);

  std::vector<Expr> pairings;
  if (componentwise) {
    for (const auto& g : m.groups)
      if (!g.pairs.empty()) pairings.push_back(group_pairing(g));
  } else {
    Expr total = Expr::constant(0.0);
    bool any = false;
    for (const auto& g : m.groups) {
      if (g.pairs.empty()) continue;
      total += group_pairing(g);
      any = true;
    }
    if (any) pairings.push_back(total);
  }

  Expr obj = m.objective;
  std::vector<Expr> eq = m.eq;
  std::vector<Expr> ineq = m.ineq;
  Eigen::VectorXd lb(n_total), ub(n_total);
  lb.head(m.n_w) = m.lb;
  ub.head(m.n_w) = m.ub;

  Expr gamma;
  if (elastic) {
    out.has_gamma = true;
    out.gamma_index = m.n_w;
    gamma = Expr::variable("w", out.gamma_index);
    lb[out.gamma_index] = 0.0;
    ub[out.gamma_index] = gamma_bar;
    obj += gamma / sigma;
  }

  for (const Expr& psi : pairings) {
    switch (mode) {
      case MpccMode::Smoothing:
        eq.push_back(psi - sigma);
        break;
      case MpccMode::Relaxation:
        ineq.push_back(sigma - psi);
        break;
      case MpccMode::L1Penalty:
        obj += psi / sigma;
        break;
      case MpccMode::ElasticEq:
        eq.push_back(psi - gamma);
        break;
      case MpccMode::ElasticIneq:
        ineq.push_back(gamma - psi);
        break;
      case MpccMode::ElasticTwoSided:
        ineq.push_back(gamma - psi);
        ineq.push_back(psi + gamma);
        break;
    }
  }

  const std::vector<sym::Block> wp = {{"w", n_total}, {"p", m.n_p + 1}};
  out.nlp.objective = VecFunc("mpcc_obj", wp, {obj});
  if (!eq.empty()) out.nlp.eq = VecFunc("mpcc_eq", wp, eq);
  if (!ineq.empty()) out.nlp.ineq = VecFunc("mpcc_ineq", wp, ineq);
  out.nlp.lb = lb;
  out.nlp.ub = ub;
  out.nlp.x0 = Eigen::VectorXd::Zero(n_total);
  out.nlp.x0.head(m.n_w) = m.w_init;
  return out;
}

double pairing_value(const Mpcc& m, const Eigen::VectorXd& w) {
  double v = 0.0;
  for (const auto& [i, j] : m.all_pairs()) v += w[i] * w[j];
  return v;
}

}  // namespace

Reformulation reformulate(const Mpcc& m, MpccMode mode, double sigma, double gamma_bar,
                          bool componentwise) {
  if (sigma <= 0.0) throw std::invalid_argument("reformulate: sigma must be positive");
  BuiltReformulation b = build_reformulation(m, mode, gamma_bar, componentwise);
  Reformulation out;
  out.nlp = std::move(b.nlp);
  out.has_gamma = b.has_gamma;
  out.gamma_index = b.gamma_index;
  out.nlp.p = Eigen::VectorXd(m.n_p + 1);
  out.nlp.p[m.n_p] = sigma;
  if (b.has_gamma) out.nlp.x0[b.gamma_index] = std::min(pairing_value(m, m.w_init), gamma_bar);
  return out;
}

void HomotopyConfig::validate() const {
  if (!(kappa > 0.0 && kappa < 1.0))
    throw std::invalid_argument("HomotopyConfig: kappa must lie in (0, 1)");
  if (sigma0 <= 0.0) throw std::invalid_argument("HomotopyConfig: sigma0 must be positive");
  if (max_iterations < 1) throw std::invalid_argument("HomotopyConfig: max_iterations < 1");
  if (gamma_bar <= 0.0) throw std::invalid_argument("HomotopyConfig: gamma_bar must be positive");
}

struct CompiledMpcc::Impl {
  Mpcc m;  // kept for residual metric and objective reporting
  MpccMode mode;
  bool has_gamma = false;
  int gamma_index = -1;
  std::unique_ptr<ParametricNlp> compiled;
  std::unique_ptr<VecFunc> obj_fn;  // original objective over (w, p)
};

CompiledMpcc::CompiledMpcc(const Mpcc& m, MpccMode mode, double gamma_bar, bool componentwise) {
  auto impl = std::make_shared<Impl>();
  impl->m = m;
  impl->mode = mode;
  BuiltReformulation b = build_reformulation(m, mode, gamma_bar, componentwise);
  impl->has_gamma = b.has_gamma;
  impl->gamma_index = b.gamma_index;
  b.nlp.p = Eigen::VectorXd::Zero(m.n_p + 1);  // placeholder values; rebound per solve
  b.nlp.p[m.n_p] = 1.0;
  impl->compiled = std::make_unique<ParametricNlp>(b.nlp);
  impl->obj_fn = std::make_unique<VecFunc>(
      "orig_obj", std::vector<sym::Block>{{"w", m.n_w}, {"p", m.n_p}}, std::vector<Expr>{m.objective});
  impl_ = std::move(impl);
}

int CompiledMpcc::n_w() const { return impl_->m.n_w; }

HomotopyRun CompiledMpcc::solve(const HomotopyConfig& cfg, const Eigen::VectorXd& w_init,
                                const Eigen::VectorXd& p_base) const {
  cfg.validate();
  const auto& impl = *impl_;
  const Mpcc& m = impl.m;
  if (w_init.size() != m.n_w) throw std::invalid_argument("homotopy_solve: w_init size mismatch");
  if (p_base.size() != m.n_p) throw std::invalid_argument("homotopy_solve: p_base size mismatch");

  HomotopyRun run;
  const int n_total = m.n_w + (impl.has_gamma ? 1 : 0);
  Eigen::VectorXd x_cur(n_total);
  x_cur.head(m.n_w) = w_init;
  if (impl.has_gamma) x_cur[impl.gamma_index] = std::min(pairing_value(m, w_init), cfg.gamma_bar);

  Eigen::VectorXd p(m.n_p + 1);
  p.head(m.n_p) = p_base;

  NlpWarmStart warm;
  bool have_warm = false;
  run.status = HomotopyStatus::MaxIterations;

  for (int i = 0; i < cfg.max_iterations; ++i) {
    const double sigma = cfg.sigma0 * std::pow(cfg.kappa, i);
    p[m.n_p] = sigma;

    NlpOptions nopt = cfg.nlp;
    nopt.tol = sigma >= cfg.sigma_relax_threshold ? cfg.nlp_tol_early : cfg.nlp_tol;
    if (have_warm) nopt.bound_push = 1e-9;

    const auto t0 = std::chrono::steady_clock::now();
    NlpSolution sol = impl.compiled->solve(p, x_cur, nopt, have_warm ? &warm : nullptr);

    auto comp_of = [&](const NlpSolution& s) {
      try {
        return comp_residual(m, s.x.head(m.n_w));
      } catch (const std::invalid_argument&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    double comp = comp_of(sol);

    // A stalled or failed subproblem is often unstuck by discarding the
    // stale multipliers and pushing the primal point off its bounds.
    if (sol.status != NlpStatus::Optimal && comp > cfg.tol_comp && have_warm) {
      NlpOptions nres = nopt;
      nres.bound_push = 1e-2;
      NlpSolution retry = impl.compiled->solve(p, sol.x, nres, nullptr);
      const double comp_retry = comp_of(retry);
      const bool better = (retry.status == NlpStatus::Optimal && sol.status != NlpStatus::Optimal) ||
                          (retry.status == sol.status && comp_retry < comp);
      if (better) {
        sol = std::move(retry);
        comp = comp_retry;
      }
    }
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const double obj =
        (*impl.obj_fn)(std::vector<Eigen::VectorXd>{sol.x.head(m.n_w), p_base})[0];

    run.iters.push_back({i, sigma, sol.status, obj, comp, sol.iters, wall});
    if (cfg.verbose)
      std::printf("homotopy %2d sigma=%8.2e nlp=%s obj=%14.8e comp=%8.2e (%d it, %.3fs)\n", i,
                  sigma, to_string(sol.status).c_str(), obj, comp, sol.iters, wall);

    if (sol.status == NlpStatus::NumericalFailure || sol.status == NlpStatus::InfeasibleDetected) {
      run.status = HomotopyStatus::NlpFailure;
      run.message = "NLP " + to_string(sol.status) + " at sigma=" + std::to_string(sigma) + ": " +
                    sol.message;
      run.last_nlp = std::move(sol);
      break;
    }

    x_cur = sol.x;
    warm.x = sol.x;
    warm.y_eq = sol.y_eq;
    warm.y_ineq = sol.y_ineq;
    warm.z_lb = sol.z_lb;
    warm.z_ub = sol.z_ub;
    warm.mu = -1.0;
    have_warm = true;

    run.comp_res = comp;
    run.objective = obj;
    run.last_nlp = std::move(sol);

    if (comp <= cfg.tol_comp && run.last_nlp.status == NlpStatus::Optimal) {
      run.status = HomotopyStatus::Converged;
      break;
    }

    // Residual stagnation: sigma is already far below the target residual
    // yet the residual stopped improving; further tightening cannot help.
    const int wsize = 4;
    if (sigma <= 1e-3 * cfg.tol_comp && static_cast<int>(run.iters.size()) > wsize) {
      const double prev = run.iters[run.iters.size() - 1 - wsize].comp_res;
      if (comp > cfg.tol_comp && comp > 0.9 * prev &&
          prev < std::numeric_limits<double>::infinity()) {
        run.status = HomotopyStatus::Stagnation;
        run.message = "complementarity residual stagnated";
        break;
      }
    }
  }

  run.w = x_cur.head(m.n_w);
  return run;
}

HomotopyRun homotopy_solve(const Mpcc& m, const HomotopyConfig& cfg,
                           const Eigen::VectorXd& w_init, const Eigen::VectorXd& p_base) {
  CompiledMpcc compiled(m, cfg.mode, cfg.gamma_bar, cfg.componentwise);
  return compiled.solve(cfg, w_init, p_base);
}

}  // namespace swoc
