#include "swoc/expr.hpp"

#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

namespace swoc::sym {

bool Expr::is_constant() const { return node_ && node_->op == Op::Const; }

bool Expr::is_constant(double v) const {
  return is_constant() && node_->value == v;
}

double Expr::constant_value() const { return node_->value; }

Expr Expr::variable(std::string block, int index) {
  if (index < 0) throw std::invalid_argument("Expr: negative variable index");
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Var;
  n->index = index;
  n->block = std::move(block);
  return Expr(std::move(n));
}

Expr Expr::constant(double v) {
  auto n = std::make_shared<ExprNode>();
  n->op = Op::Const;
  n->value = v;
  return Expr(std::move(n));
}

Expr Expr::make(Op op, const Expr& a, const Expr& b, double payload) {
  auto n = std::make_shared<ExprNode>();
  n->op = op;
  n->value = payload;
  n->a = a.node_;
  n->b = b.node_;
  return Expr(std::move(n));
}

// Binary constructors fold constants and strip arithmetic identities.
// The rewrites are exact in floating point (no reassociation), which keeps
// derivative graphs small without perturbing values.

Expr operator+(const Expr& x, const Expr& y) {
  if (x.is_constant() && y.is_constant()) return Expr::constant(x.constant_value() + y.constant_value());
  if (x.is_constant(0.0)) return y;
  if (y.is_constant(0.0)) return x;
  return Expr::make(Op::Add, x, y);
}

Expr operator-(const Expr& x, const Expr& y) {
  if (x.is_constant() && y.is_constant()) return Expr::constant(x.constant_value() - y.constant_value());
  if (y.is_constant(0.0)) return x;
  if (x.is_constant(0.0)) return -y;
  return Expr::make(Op::Sub, x, y);
}

Expr operator*(const Expr& x, const Expr& y) {
  if (x.is_constant() && y.is_constant()) return Expr::constant(x.constant_value() * y.constant_value());
  if (x.is_constant(0.0) || y.is_constant(0.0)) return Expr::constant(0.0);
  if (x.is_constant(1.0)) return y;
  if (y.is_constant(1.0)) return x;
  return Expr::make(Op::Mul, x, y);
}

Expr operator/(const Expr& x, const Expr& y) {
  if (x.is_constant() && y.is_constant()) return Expr::constant(x.constant_value() / y.constant_value());
  if (x.is_constant(0.0)) return Expr::constant(0.0);
  if (y.is_constant(1.0)) return x;
  return Expr::make(Op::Div, x, y);
}

Expr operator-(const Expr& x) {
  if (x.is_constant()) return Expr::constant(-x.constant_value());
  if (x.node().op == Op::Neg) return Expr::adopt(x.node().a);
  return Expr::make(Op::Neg, x);
}

Expr pow(const Expr& x, double p) {
  if (p == 0.0) return Expr::constant(1.0);
  if (p == 1.0) return x;
  if (x.is_constant()) return Expr::constant(std::pow(x.constant_value(), p));
  return Expr::make(Op::Pow, x, Expr(), p);
}

Expr exp(const Expr& x) {
  if (x.is_constant()) return Expr::constant(std::exp(x.constant_value()));
  return Expr::make(Op::Exp, x);
}

Expr log(const Expr& x) {
  if (x.is_constant()) return Expr::constant(std::log(x.constant_value()));
  return Expr::make(Op::Log, x);
}

Expr sin(const Expr& x) {
  if (x.is_constant()) return Expr::constant(std::sin(x.constant_value()));
  return Expr::make(Op::Sin, x);
}

Expr cos(const Expr& x) {
  if (x.is_constant()) return Expr::constant(std::cos(x.constant_value()));
  return Expr::make(Op::Cos, x);
}

Expr sqrt(const Expr& x) {
  if (x.is_constant()) return Expr::constant(std::sqrt(x.constant_value()));
  return Expr::make(Op::Sqrt, x);
}

Expr diff(const Expr& e, const std::string& block, int index) {
  if (!e.valid()) throw std::invalid_argument("diff: empty expression");
  std::unordered_map<const ExprNode*, Expr> memo;

  std::function<Expr(const Expr&)> d = [&](const Expr& x) -> Expr {
    const ExprNode& n = x.node();
    if (auto it = memo.find(&n); it != memo.end()) return it->second;

    Expr res;
    const Expr a = n.a ? Expr::adopt(n.a) : Expr();
    const Expr b = n.b ? Expr::adopt(n.b) : Expr();
    switch (n.op) {
      case Op::Var:
        res = (n.block == block && n.index == index) ? Expr::constant(1.0)
                                                     : Expr::constant(0.0);
        break;
      case Op::Const:
        res = Expr::constant(0.0);
        break;
      case Op::Add:
        res = d(a) + d(b);
        break;
      case Op::Sub:
        res = d(a) - d(b);
        break;
      case Op::Mul:
        res = d(a) * b + a * d(b);
        break;
      case Op::Div:
        // (a/b)' = a'/b - a*b'/b^2
        res = d(a) / b - a * d(b) / (b * b);
        break;
      case Op::Neg:
        res = -d(a);
        break;
      case Op::Pow:
        res = Expr::constant(n.value) * pow(a, n.value - 1.0) * d(a);
        break;
      case Op::Exp:
        res = x * d(a);
        break;
      case Op::Log:
        res = d(a) / a;
        break;
      case Op::Sin:
        res = cos(a) * d(a);
        break;
      case Op::Cos:
        res = -(sin(a) * d(a));
        break;
      case Op::Sqrt:
        res = d(a) / (Expr::constant(2.0) * x);
        break;
    }
    memo.emplace(&n, res);
    return res;
  };
  return d(e);
}

Expr substitute(const Expr& e,
                const std::unordered_map<std::string, std::vector<Expr>>& args) {
  if (!e.valid()) throw std::invalid_argument("substitute: empty expression");
  std::unordered_map<const ExprNode*, Expr> memo;

  std::function<Expr(const Expr&)> s = [&](const Expr& x) -> Expr {
    const ExprNode& n = x.node();
    if (auto it = memo.find(&n); it != memo.end()) return it->second;

    Expr res;
    switch (n.op) {
      case Op::Var: {
        auto it = args.find(n.block);
        if (it == args.end()) {
          res = x;
        } else {
          if (n.index >= static_cast<int>(it->second.size()))
            throw std::invalid_argument("substitute: index out of range for block '" + n.block + "'");
          res = it->second[n.index];
        }
        break;
      }
      case Op::Const:
        res = x;
        break;
      default: {
        const Expr a = n.a ? s(Expr::adopt(n.a)) : Expr();
        const Expr b = n.b ? s(Expr::adopt(n.b)) : Expr();
        switch (n.op) {
          case Op::Add: res = a + b; break;
          case Op::Sub: res = a - b; break;
          case Op::Mul: res = a * b; break;
          case Op::Div: res = a / b; break;
          case Op::Neg: res = -a; break;
          case Op::Pow: res = pow(a, n.value); break;
          case Op::Exp: res = exp(a); break;
          case Op::Log: res = log(a); break;
          case Op::Sin: res = sin(a); break;
          case Op::Cos: res = cos(a); break;
          case Op::Sqrt: res = sqrt(a); break;
          default: break;
        }
        break;
      }
    }
    memo.emplace(&n, res);
    return res;
  };
  return s(e);
}

std::vector<VarRef> collect_vars(const Expr& e) {
  std::set<VarRef> out;
  std::unordered_map<const ExprNode*, bool> seen;
  std::function<void(const ExprNode*)> walk = [&](const ExprNode* n) {
    if (!n || seen.count(n)) return;
    seen[n] = true;
    if (n->op == Op::Var) out.insert({n->block, n->index});
    walk(n->a.get());
    walk(n->b.get());
  };
  walk(e.ptr().get());
  return {out.begin(), out.end()};
}

std::string to_string(const Expr& e) {
  if (!e.valid()) return "<null>";
  std::function<void(const ExprNode*, std::ostringstream&)> w =
      [&](const ExprNode* n, std::ostringstream& os) {
        switch (n->op) {
          case Op::Var: os << n->block << "[" << n->index << "]"; break;
          case Op::Const: os << n->value; break;
          case Op::Add: os << "("; w(n->a.get(), os); os << " + "; w(n->b.get(), os); os << ")"; break;
          case Op::Sub: os << "("; w(n->a.get(), os); os << " - "; w(n->b.get(), os); os << ")"; break;
          case Op::Mul: os << "("; w(n->a.get(), os); os << "*"; w(n->b.get(), os); os << ")"; break;
          case Op::Div: os << "("; w(n->a.get(), os); os << "/"; w(n->b.get(), os); os << ")"; break;
          case Op::Neg: os << "(-"; w(n->a.get(), os); os << ")"; break;
          case Op::Pow: os << "pow("; w(n->a.get(), os); os << ", " << n->value << ")"; break;
          case Op::Exp: os << "exp("; w(n->a.get(), os); os << ")"; break;
          case Op::Log: os << "log("; w(n->a.get(), os); os << ")"; break;
          case Op::Sin: os << "sin("; w(n->a.get(), os); os << ")"; break;
          case Op::Cos: os << "cos("; w(n->a.get(), os); os << ")"; break;
          case Op::Sqrt: os << "sqrt("; w(n->a.get(), os); os << ")"; break;
        }
      };
  std::ostringstream os;
  w(e.ptr().get(), os);
  return os.str();
}

}  // namespace swoc::sym
