#pragma once

#include <Eigen/Core>
#include <string>
#include <unordered_map>
#include <vector>

#include "swoc/expr.hpp"

namespace swoc::sym {

/// A named input vector of fixed dimension.
struct Block {
  std::string name;
  int dim = 0;
};

/// A multivariate vector function over named input blocks, compiled at
/// construction into a flat instruction tape for repeated evaluation.
/// Output count and input dimensions are fixed; evaluation is pure and
/// reentrant (each call owns its workspace unless one is supplied).
class VecFunc {
 public:
  VecFunc() = default;
  VecFunc(std::string name, std::vector<Block> blocks, std::vector<Expr> outputs);

  [[nodiscard]] const std::string& name() const { return name_; }
  [[nodiscard]] int n_out() const { return static_cast<int>(out_slots_.size()); }
  [[nodiscard]] const std::vector<Block>& blocks() const { return blocks_; }
  [[nodiscard]] bool has_block(const std::string& b) const;
  [[nodiscard]] int block_dim(const std::string& b) const;  // throws on unknown block
  [[nodiscard]] const std::vector<Expr>& outputs() const { return outputs_; }

  /// Evaluates with one vector per declared block, in declaration order.
  [[nodiscard]] Eigen::VectorXd operator()(const std::vector<Eigen::VectorXd>& inputs) const;

  /// Workspace-reusing evaluation for hot loops. block_ptrs[i] must point
  /// at block_dim(blocks()[i]) doubles; out at n_out() doubles.
  void eval_into(const double* const* block_ptrs, double* out,
                 std::vector<double>& workspace) const;

  /// Derivative of every output w.r.t. every variable of the named block,
  /// flattened row-major: entry i*n + j is d out_i / d block_j.
  [[nodiscard]] VecFunc jacobian(const std::string& block) const;

  /// Output expressions with the given blocks substituted by expressions.
  [[nodiscard]] std::vector<Expr> at(
      const std::unordered_map<std::string, std::vector<Expr>>& args) const;

  /// Indices of the block's variables each output actually depends on.
  [[nodiscard]] std::vector<std::vector<int>> output_support(const std::string& block) const;

 private:
  struct Instr {
    Op op;
    int a = -1;       // child slot (or block ordinal for Var)
    int b = -1;       // child slot (or index within block for Var)
    double payload = 0.0;
  };

  std::string name_;
  std::vector<Block> blocks_;
  std::vector<Expr> outputs_;
  std::vector<Instr> tape_;
  std::vector<int> out_slots_;
};

/// Sparse first-derivative structure of a stack of expressions w.r.t. one
/// block: value k of `vals` is d expr[rows[k]] / d block[cols[k]].
struct SparseExprJac {
  std::vector<int> rows;
  std::vector<int> cols;
  std::vector<Expr> vals;
};

SparseExprJac sparse_jacobian(const std::vector<Expr>& outputs, const std::string& block);

}  // namespace swoc::sym
