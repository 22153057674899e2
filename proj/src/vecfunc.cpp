#include "swoc/vecfunc.hpp"

#include <cmath>
#include <stdexcept>

namespace swoc::sym {

VecFunc::VecFunc(std::string name, std::vector<Block> blocks, std::vector<Expr> outputs)
    : name_(std::move(name)), blocks_(std::move(blocks)), outputs_(std::move(outputs)) {
  for (const auto& b : blocks_) {
    if (b.dim < 0) throw std::invalid_argument(name_ + ": negative block dimension");
  }

  std::unordered_map<std::string, int> block_ordinal;
  for (int i = 0; i < static_cast<int>(blocks_.size()); ++i) block_ordinal[blocks_[i].name] = i;

  // Flatten the DAG into a tape: iterative post-order, one slot per node.
  std::unordered_map<const ExprNode*, int> slot;
  struct Frame {
    const ExprNode* n;
    bool expanded;
  };
  std::vector<Frame> stack;

  auto push = [&](const ExprNode* n) {
    if (n && !slot.count(n)) stack.push_back({n, false});
  };

  for (const auto& out : outputs_) {
    if (!out.valid()) throw std::invalid_argument(name_ + ": empty output expression");
    push(out.ptr().get());
    while (!stack.empty()) {
      Frame& f = stack.back();
      if (slot.count(f.n)) {
        stack.pop_back();
        continue;
      }
      if (!f.expanded) {
        f.expanded = true;
        const ExprNode* n = f.n;  // push_back below invalidates f
        push(n->b.get());
        push(n->a.get());
        continue;
      }
      Instr ins;
      ins.op = f.n->op;
      ins.payload = f.n->value;
      if (f.n->op == Op::Var) {
        auto it = block_ordinal.find(f.n->block);
        if (it == block_ordinal.end())
          throw std::invalid_argument(name_ + ": undeclared variable block '" + f.n->block + "'");
        if (f.n->index >= blocks_[it->second].dim)
          throw std::invalid_argument(name_ + ": variable index " + std::to_string(f.n->index) +
                                      " out of range for block '" + f.n->block + "'");
        ins.a = it->second;
        ins.b = f.n->index;
      } else {
        if (f.n->a) ins.a = slot.at(f.n->a.get());
        if (f.n->b) ins.b = slot.at(f.n->b.get());
      }
      slot[f.n] = static_cast<int>(tape_.size());
      tape_.push_back(ins);
      stack.pop_back();
    }
  }
  out_slots_.reserve(outputs_.size());
  for (const auto& out : outputs_) out_slots_.push_back(slot.at(out.ptr().get()));
}

bool VecFunc::has_block(const std::string& b) const {
  for (const auto& blk : blocks_)
    if (blk.name == b) return true;
  return false;
}

int VecFunc::block_dim(const std::string& b) const {
  for (const auto& blk : blocks_)
    if (blk.name == b) return blk.dim;
  throw std::invalid_argument(name_ + ": unknown block '" + b + "'");
}

void VecFunc::eval_into(const double* const* block_ptrs, double* out,
                        std::vector<double>& ws) const {
  ws.resize(tape_.size());
  double* w = ws.data();
  for (std::size_t k = 0; k < tape_.size(); ++k) {
    const Instr& I = tape_[k];
    switch (I.op) {
      case Op::Var: w[k] = block_ptrs[I.a][I.b]; break;
      case Op::Const: w[k] = I.payload; break;
      case Op::Add: w[k] = w[I.a] + w[I.b]; break;
      case Op::Sub: w[k] = w[I.a] - w[I.b]; break;
      case Op::Mul: w[k] = w[I.a] * w[I.b]; break;
      case Op::Div: w[k] = w[I.a] / w[I.b]; break;
      case Op::Neg: w[k] = -w[I.a]; break;
      case Op::Pow: w[k] = std::pow(w[I.a], I.payload); break;
      case Op::Exp: w[k] = std::exp(w[I.a]); break;
      case Op::Log: w[k] = std::log(w[I.a]); break;
      case Op::Sin: w[k] = std::sin(w[I.a]); break;
      case Op::Cos: w[k] = std::cos(w[I.a]); break;
      case Op::Sqrt: w[k] = std::sqrt(w[I.a]); break;
    }
  }
  for (std::size_t i = 0; i < out_slots_.size(); ++i) out[i] = w[out_slots_[i]];
}

Eigen::VectorXd VecFunc::operator()(const std::vector<Eigen::VectorXd>& inputs) const {
  if (inputs.size() != blocks_.size())
    throw std::invalid_argument(name_ + ": expected " + std::to_string(blocks_.size()) +
                                " input blocks, got " + std::to_string(inputs.size()));
  std::vector<const double*> ptrs(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != blocks_[i].dim)
      throw std::invalid_argument(name_ + ": block '" + blocks_[i].name + "' expects dimension " +
                                  std::to_string(blocks_[i].dim) + ", got " +
                                  std::to_string(inputs[i].size()));
    ptrs[i] = inputs[i].data();
  }
  Eigen::VectorXd out(n_out());
  std::vector<double> ws;
  eval_into(ptrs.data(), out.data(), ws);
  return out;
}

VecFunc VecFunc::jacobian(const std::string& block) const {
  const int n = block_dim(block);  // throws on unknown block
  std::vector<Expr> entries;
  entries.reserve(outputs_.size() * n);
  for (const auto& out : outputs_)
    for (int j = 0; j < n; ++j) entries.push_back(diff(out, block, j));
  return VecFunc(name_ + "_jac_" + block, blocks_, std::move(entries));
}

std::vector<Expr> VecFunc::at(
    const std::unordered_map<std::string, std::vector<Expr>>& args) const {
  for (const auto& [bname, exprs] : args) {
    if (!has_block(bname))
      throw std::invalid_argument(name_ + ": unknown block '" + bname + "'");
    if (static_cast<int>(exprs.size()) != block_dim(bname))
      throw std::invalid_argument(name_ + ": substitution dimension mismatch for block '" + bname + "'");
  }
  std::vector<Expr> out;
  out.reserve(outputs_.size());
  for (const auto& o : outputs_) out.push_back(substitute(o, args));
  return out;
}

std::vector<std::vector<int>> VecFunc::output_support(const std::string& block) const {
  std::vector<std::vector<int>> sup(outputs_.size());
  for (std::size_t i = 0; i < outputs_.size(); ++i) {
    for (const auto& v : collect_vars(outputs_[i]))
      if (v.block == block) sup[i].push_back(v.index);
  }
  return sup;
}

SparseExprJac sparse_jacobian(const std::vector<Expr>& outputs, const std::string& block) {
  SparseExprJac J;
  for (int i = 0; i < static_cast<int>(outputs.size()); ++i) {
    for (const auto& v : collect_vars(outputs[i])) {
      if (v.block != block) continue;
      Expr d = diff(outputs[i], block, v.index);
      if (d.is_constant(0.0)) continue;
      J.rows.push_back(i);
      J.cols.push_back(v.index);
      J.vals.push_back(d);
    }
  }
  return J;
}

}  // namespace swoc::sym
