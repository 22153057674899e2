#include "swoc/pss.hpp"

#include <cmath>
#include <stdexcept>

namespace swoc {

PssModel::PssModel(VecFunc c, Eigen::MatrixXd S, std::vector<VecFunc> dynamics,
                   Eigen::VectorXd lbx, Eigen::VectorXd ubx, Eigen::VectorXd lbu,
                   Eigen::VectorXd ubu, Eigen::VectorXd x0)
    : c_(std::move(c)),
      S_(std::move(S)),
      f_(std::move(dynamics)),
      lbx_(std::move(lbx)),
      ubx_(std::move(ubx)),
      lbu_(std::move(lbu)),
      ubu_(std::move(ubu)),
      x0_(std::move(x0)) {
  n_c_ = c_.n_out();
  n_f_ = static_cast<int>(S_.rows());
  if (!c_.has_block("x")) throw std::invalid_argument("PssModel: c must declare block 'x'");
  n_x_ = c_.block_dim("x");

  if (S_.cols() != n_c_)
    throw std::invalid_argument("PssModel: sign matrix has " + std::to_string(S_.cols()) +
                                " columns but c has " + std::to_string(n_c_) + " outputs");
  if (static_cast<int>(f_.size()) != n_f_)
    throw std::invalid_argument("PssModel: " + std::to_string(f_.size()) +
                                " dynamics for " + std::to_string(n_f_) + " sign-matrix rows");
  if (n_f_ < 1) throw std::invalid_argument("PssModel: at least one region required");

  for (int i = 0; i < S_.rows(); ++i)
    for (int j = 0; j < S_.cols(); ++j)
      if (S_(i, j) != 1.0 && S_(i, j) != -1.0)
        throw std::invalid_argument("PssModel: sign matrix entries must be +1 or -1");

  for (int i = 0; i < S_.rows(); ++i)
    for (int k = i + 1; k < S_.rows(); ++k)
      if ((S_.row(i) - S_.row(k)).cwiseAbs().maxCoeff() == 0.0)
        throw std::invalid_argument("PssModel: repeated sign-matrix rows " + std::to_string(i) +
                                    " and " + std::to_string(k));

  n_u_ = -1;
  for (const auto& fi : f_) {
    if (!fi.has_block("x") || !fi.has_block("u"))
      throw std::invalid_argument("PssModel: dynamics must declare blocks 'x' and 'u'");
    if (fi.block_dim("x") != n_x_)
      throw std::invalid_argument("PssModel: dynamics state dimension mismatch");
    if (fi.n_out() != n_x_)
      throw std::invalid_argument("PssModel: dynamics output dimension mismatch");
    if (n_u_ < 0) n_u_ = fi.block_dim("u");
    if (fi.block_dim("u") != n_u_)
      throw std::invalid_argument("PssModel: dynamics control dimension mismatch");
  }

  if (x0_.size() != n_x_) throw std::invalid_argument("PssModel: x0 dimension mismatch");
  if (lbx_.size() != n_x_ || ubx_.size() != n_x_)
    throw std::invalid_argument("PssModel: state bound dimension mismatch");
  if (lbu_.size() != n_u_ || ubu_.size() != n_u_)
    throw std::invalid_argument("PssModel: control bound dimension mismatch");
  for (int i = 0; i < n_x_; ++i)
    if (lbx_[i] > ubx_[i]) throw std::invalid_argument("PssModel: lbx > ubx");
  for (int i = 0; i < n_u_; ++i)
    if (lbu_[i] > ubu_[i]) throw std::invalid_argument("PssModel: lbu > ubu");
}

PssModel define_pss(VecFunc c, const Eigen::MatrixXd& S, std::vector<VecFunc> dynamics,
                    Eigen::VectorXd lbx, Eigen::VectorXd ubx, Eigen::VectorXd lbu,
                    Eigen::VectorXd ubu, Eigen::VectorXd x0) {
  return PssModel(std::move(c), S, std::move(dynamics), std::move(lbx), std::move(ubx),
                  std::move(lbu), std::move(ubu), std::move(x0));
}

PssModel define_pss(VecFunc c, const Eigen::MatrixXd& S, std::vector<VecFunc> dynamics,
                    Eigen::VectorXd x0, int n_u) {
  const double inf = std::numeric_limits<double>::infinity();
  const int n_x = static_cast<int>(x0.size());
  return define_pss(std::move(c), S, std::move(dynamics),
                    Eigen::VectorXd::Constant(n_x, -inf), Eigen::VectorXd::Constant(n_x, inf),
                    Eigen::VectorXd::Constant(n_u, -inf), Eigen::VectorXd::Constant(n_u, inf),
                    std::move(x0));
}

FilippovPoint filippov_lp_oracle(const Eigen::VectorXd& g_vals, double tie_tol) {
  if (g_vals.size() == 0) throw std::invalid_argument("filippov_lp_oracle: empty input");
  if (!g_vals.allFinite()) throw std::invalid_argument("filippov_lp_oracle: non-finite input");

  FilippovPoint fp;
  fp.mu = g_vals.minCoeff();
  fp.lambda = g_vals.array() - fp.mu;
  const double scale = std::max(1.0, g_vals.cwiseAbs().maxCoeff());
  for (int i = 0; i < g_vals.size(); ++i)
    if (fp.lambda[i] <= tie_tol * scale) fp.vertex_set.push_back(i);
  // Clamp argmin components to exactly zero so theta^T lambda = 0 holds.
  for (int i : fp.vertex_set) fp.lambda[i] = 0.0;
  fp.theta = Eigen::VectorXd::Zero(g_vals.size());
  for (int i : fp.vertex_set) fp.theta[i] = 1.0 / static_cast<double>(fp.vertex_set.size());
  return fp;
}

double c_function(CFunction kind, double a, double b) {
  switch (kind) {
    case CFunction::NaturalMin:
      return std::min(a, b);
    case CFunction::FischerBurmeister:
      return a + b - std::sqrt(a * a + b * b);
  }
  return 0.0;
}

DcsSystem::DcsSystem(const PssModel& model, CFunction cfun)
    : model_(&model), g_(swoc::discriminants(model)), cfun_(cfun), n_f_(model.n_f()) {}

Eigen::VectorXd DcsSystem::residual(const Eigen::VectorXd& x, const Eigen::VectorXd& theta,
                                    const Eigen::VectorXd& lambda, double mu) const {
  if (x.size() != model_->n_x() || theta.size() != n_f_ || lambda.size() != n_f_)
    throw std::invalid_argument("DcsSystem::residual: dimension mismatch");
  const Eigen::VectorXd g = g_({x});
  Eigen::VectorXd r(2 * n_f_ + 1);
  r.head(n_f_) = g - lambda - Eigen::VectorXd::Constant(n_f_, mu);
  r[n_f_] = 1.0 - theta.sum();
  for (int i = 0; i < n_f_; ++i) r[n_f_ + 1 + i] = c_function(cfun_, theta[i], lambda[i]);
  return r;
}

std::vector<Expr> DcsSystem::rhs(const std::vector<Expr>& x, const std::vector<Expr>& u,
                                 const std::vector<Expr>& theta) const {
  if (static_cast<int>(theta.size()) != n_f_)
    throw std::invalid_argument("DcsSystem::rhs: theta dimension mismatch");
  std::vector<Expr> out(model_->n_x(), Expr::constant(0.0));
  for (int i = 0; i < n_f_; ++i) {
    const std::vector<Expr> fi = model_->dynamics(i).at({{"x", x}, {"u", u}});
    for (int r = 0; r < model_->n_x(); ++r) out[r] += fi[r] * theta[i];
  }
  return out;
}

std::vector<Expr> DcsSystem::g_at(const std::vector<Expr>& x) const {
  return g_.at({{"x", x}});
}

VecFunc discriminants(const PssModel& model) {
  const auto& c = model.switching_function();
  const auto& S = model.sign_matrix();
  std::vector<Expr> g(model.n_f());
  const auto& c_out = c.outputs();
  for (int i = 0; i < model.n_f(); ++i) {
    Expr gi = Expr::constant(0.0);
    for (int j = 0; j < model.n_c(); ++j) gi += Expr::constant(-S(i, j)) * c_out[j];
    g[i] = gi;
  }
  return VecFunc("g", {{"x", model.n_x()}}, std::move(g));
}

std::optional<int> region_of(const PssModel& model, const Eigen::VectorXd& x) {
  if (!x.allFinite()) throw std::invalid_argument("region_of: non-finite state");
  const Eigen::VectorXd c = model.switching_function()({x});
  for (int i = 0; i < model.n_f(); ++i) {
    bool inside = true;
    for (int j = 0; j < model.n_c(); ++j) {
      if (model.sign_matrix()(i, j) * c[j] <= 0.0) {
        inside = false;
        break;
      }
    }
    if (inside) return i;
  }
  return std::nullopt;
}

}  // namespace swoc
