#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "claimworthy/tensor.hpp"

namespace claimworthy::autograd {

// Reverse-mode automatic differentiation over a tape of matrix operations.
// A tape is built per forward pass; backward() replays it in reverse and
// accumulates gradients into every node whose subgraph contains a parameter.
// Constants never receive gradients, which is how the frozen base model is
// excluded from differentiation.
class Tape {
 public:
  using VarId = std::size_t;

  VarId constant(Tensor value);
  VarId parameter(Tensor value);

  const Tensor& value(VarId id) const { return nodes_[id].value; }
  const Tensor& grad(VarId id) const { return nodes_[id].grad; }
  bool requires_grad(VarId id) const { return nodes_[id].requires_grad; }

  VarId matmul(VarId a, VarId b);
  VarId transpose(VarId a);
  VarId add(VarId a, VarId b);
  VarId scale(VarId a, double factor);
  VarId relu(VarId a);
  // Per row: y = x * gain / sqrt(mean(x^2) + eps); gain is 1 x cols.
  VarId rmsnorm_rows(VarId x, VarId gain, double eps = 1e-5);
  // Row i is a softmax over columns 0..i; columns above the diagonal are 0.
  VarId causal_softmax_rows(VarId scores);
  VarId concat_rows(VarId top, VarId bottom);
  VarId row_slice(VarId x, std::size_t r0, std::size_t r1);
  VarId col_slice(VarId x, std::size_t c0, std::size_t c1);
  VarId concat_cols(std::span<const VarId> parts);
  // logits2 is 1x2; returns a 1x1 loss: logsumexp(logits2) - logits2[gold].
  VarId two_way_cross_entropy(VarId logits2, std::size_t gold_index);

  // Seeds d(loss)/d(loss) = 1 and propagates; loss must be 1x1.
  void backward(VarId loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::function<void(Tape&)> backprop;  // empty for leaves
  };

  VarId emplace(Tensor value, bool requires_grad,
                std::function<void(Tape&)> backprop);
  Tensor& grad_mut(VarId id) { return nodes_[id].grad; }

  std::vector<Node> nodes_;
};

}  // namespace claimworthy::autograd
