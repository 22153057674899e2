#pragma once

#include <Eigen/Core>
#include <string>

namespace swoc {

enum class RkScheme { RadauIIA, ImplicitEuler };

/// Coefficients of an implicit Runge-Kutta method. The discretization layer
/// requires a stiffly accurate tableau (c_{n_s} = 1) so that the last stage
/// coincides with the element boundary.
struct ButcherTableau {
  RkScheme scheme = RkScheme::RadauIIA;
  int n_s = 0;
  Eigen::MatrixXd a;
  Eigen::VectorXd b;
  Eigen::VectorXd c;

  [[nodiscard]] bool stiffly_accurate(double tol = 1e-12) const {
    return std::abs(c[n_s - 1] - 1.0) <= tol && (a.row(n_s - 1).transpose() - b).cwiseAbs().maxCoeff() <= tol;
  }
};

/// Builds the tableau of a supported scheme: Radau IIA with 1..3 stages
/// (orders 1, 3, 5) or implicit Euler. Throws on anything else.
ButcherTableau butcher(RkScheme scheme, int n_s);

std::string to_string(RkScheme s);
RkScheme rk_scheme_from_string(const std::string& s);

}  // namespace swoc
