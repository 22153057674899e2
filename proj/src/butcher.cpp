#include "swoc/butcher.hpp"

#include <cmath>
#include <stdexcept>

namespace swoc {

ButcherTableau butcher(RkScheme scheme, int n_s) {
  ButcherTableau t;
  t.scheme = scheme;
  t.n_s = n_s;

  if (scheme == RkScheme::ImplicitEuler) {
    if (n_s != 1) throw std::invalid_argument("butcher: implicit Euler has exactly one stage");
    t.a = Eigen::MatrixXd::Constant(1, 1, 1.0);
    t.b = Eigen::VectorXd::Constant(1, 1.0);
    t.c = Eigen::VectorXd::Constant(1, 1.0);
    return t;
  }

  switch (n_s) {
    case 1:
      t.a = Eigen::MatrixXd::Constant(1, 1, 1.0);
      t.b = Eigen::VectorXd::Constant(1, 1.0);
      t.c = Eigen::VectorXd::Constant(1, 1.0);
      break;
    case 2:
      t.a.resize(2, 2);
      t.a << 5.0 / 12.0, -1.0 / 12.0,
             3.0 / 4.0,   1.0 / 4.0;
      t.b.resize(2);
      t.b << 3.0 / 4.0, 1.0 / 4.0;
      t.c.resize(2);
      t.c << 1.0 / 3.0, 1.0;
      break;
    case 3: {
      const double s6 = std::sqrt(6.0);
      t.a.resize(3, 3);
      t.a << (88.0 - 7.0 * s6) / 360.0, (296.0 - 169.0 * s6) / 1800.0, (-2.0 + 3.0 * s6) / 225.0,
             (296.0 + 169.0 * s6) / 1800.0, (88.0 + 7.0 * s6) / 360.0, (-2.0 - 3.0 * s6) / 225.0,
             (16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0;
      t.b.resize(3);
      t.b << (16.0 - s6) / 36.0, (16.0 + s6) / 36.0, 1.0 / 9.0;
      t.c.resize(3);
      t.c << (4.0 - s6) / 10.0, (4.0 + s6) / 10.0, 1.0;
      break;
    }
    default:
      throw std::invalid_argument("butcher: Radau IIA supported for n_s in {1,2,3}, got " +
                                  std::to_string(n_s));
  }
  return t;
}

std::string to_string(RkScheme s) {
  return s == RkScheme::RadauIIA ? "radau-iia" : "implicit-euler";
}

RkScheme rk_scheme_from_string(const std::string& s) {
  if (s == "radau-iia" || s == "radau" || s == "radauiia") return RkScheme::RadauIIA;
  if (s == "implicit-euler" || s == "euler") return RkScheme::ImplicitEuler;
  throw std::invalid_argument("unknown RK scheme '" + s + "'");
}

}  // namespace swoc
