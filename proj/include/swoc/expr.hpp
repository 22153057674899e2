#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

namespace swoc::sym {

/// Node kinds of the expression graph. The op set is closed under
/// differentiation: the derivative of every op is expressible with the
/// same ops. min/max are deliberately absent; nonsmoothness is modeled
/// through complementarity structure downstream, never inside the graph.
enum class Op : std::uint8_t {
  Var,
  Const,
  Add,
  Sub,
  Mul,
  Div,
  Neg,
  Pow,  // constant real exponent, payload in value
  Exp,
  Log,
  Sin,
  Cos,
  Sqrt,
};

struct ExprNode;

/// Immutable scalar expression; a cheap handle onto a shared acyclic graph.
/// Graphs are never mutated after construction, so expressions may be
/// copied and evaluated concurrently from any number of threads.
class Expr {
 public:
  Expr() = default;  // empty handle; only valid as a target of assignment

  static Expr variable(std::string block, int index);
  static Expr constant(double v);

  /// Wraps an existing node. Internal plumbing for graph algorithms.
  static Expr adopt(std::shared_ptr<const ExprNode> n) { return Expr(std::move(n)); }

  [[nodiscard]] bool valid() const { return node_ != nullptr; }
  [[nodiscard]] const ExprNode& node() const { return *node_; }
  [[nodiscard]] const std::shared_ptr<const ExprNode>& ptr() const { return node_; }

  [[nodiscard]] bool is_constant() const;
  [[nodiscard]] bool is_constant(double v) const;
  [[nodiscard]] double constant_value() const;

  friend Expr operator+(const Expr& x, const Expr& y);
  friend Expr operator-(const Expr& x, const Expr& y);
  friend Expr operator*(const Expr& x, const Expr& y);
  friend Expr operator/(const Expr& x, const Expr& y);
  friend Expr operator-(const Expr& x);

  friend Expr operator+(const Expr& x, double c) { return x + Expr::constant(c); }
  friend Expr operator+(double c, const Expr& x) { return Expr::constant(c) + x; }
  friend Expr operator-(const Expr& x, double c) { return x - Expr::constant(c); }
  friend Expr operator-(double c, const Expr& x) { return Expr::constant(c) - x; }
  friend Expr operator*(const Expr& x, double c) { return x * Expr::constant(c); }
  friend Expr operator*(double c, const Expr& x) { return Expr::constant(c) * x; }
  friend Expr operator/(const Expr& x, double c) { return x / Expr::constant(c); }
  friend Expr operator/(double c, const Expr& x) { return Expr::constant(c) / x; }

  Expr& operator+=(const Expr& y) { return *this = *this + y; }
  Expr& operator-=(const Expr& y) { return *this = *this - y; }
  Expr& operator*=(const Expr& y) { return *this = *this * y; }

 private:
  explicit Expr(std::shared_ptr<const ExprNode> n) : node_(std::move(n)) {}
  static Expr make(Op op, const Expr& a, const Expr& b = Expr(), double payload = 0.0);

  std::shared_ptr<const ExprNode> node_;

  friend Expr pow(const Expr&, double);
  friend Expr exp(const Expr&);
  friend Expr log(const Expr&);
  friend Expr sin(const Expr&);
  friend Expr cos(const Expr&);
  friend Expr sqrt(const Expr&);
};

struct ExprNode {
  Op op;
  double value = 0.0;  // Const payload or Pow exponent
  int index = -1;      // Var: index within its block
  std::string block;   // Var: block name
  std::shared_ptr<const ExprNode> a;
  std::shared_ptr<const ExprNode> b;
};

Expr pow(const Expr& x, double p);
Expr exp(const Expr& x);
Expr log(const Expr& x);
Expr sin(const Expr& x);
Expr cos(const Expr& x);
Expr sqrt(const Expr& x);

/// Exact symbolic derivative of e with respect to variable (block, index).
/// Shared subgraphs are differentiated once (memoized over nodes).
Expr diff(const Expr& e, const std::string& block, int index);

/// Replaces every variable of the named blocks with the supplied
/// expressions; variables of other blocks are left untouched.
Expr substitute(const Expr& e,
                const std::unordered_map<std::string, std::vector<Expr>>& args);

/// A (block, index) variable reference.
struct VarRef {
  std::string block;
  int index = 0;
  bool operator==(const VarRef&) const = default;
  bool operator<(const VarRef& o) const {
    return block != o.block ? block < o.block : index < o.index;
  }
};

/// Collects the distinct variables e depends on, sorted by (block, index).
std::vector<VarRef> collect_vars(const Expr& e);

/// Render for diagnostics; not a stable serialization format.
std::string to_string(const Expr& e);

}  // namespace swoc::sym
