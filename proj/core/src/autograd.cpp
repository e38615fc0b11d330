#include "claimworthy/autograd.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>

namespace claimworthy::autograd {

Tape::VarId Tape::emplace(Tensor value, bool requires_grad,
                          std::function<void(Tape&)> backprop) {
  Node node;
  node.grad = Tensor(value.rows, value.cols);
  node.value = std::move(value);
  node.requires_grad = requires_grad;
  node.backprop = std::move(backprop);
  nodes_.push_back(std::move(node));
  return nodes_.size() - 1;
}

Tape::VarId Tape::constant(Tensor value) {
  return emplace(std::move(value), false, {});
}

Tape::VarId Tape::parameter(Tensor value) {
  return emplace(std::move(value), true, {});
}

Tape::VarId Tape::matmul(VarId a, VarId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  assert(A.cols == B.rows);
  Tensor C(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t k = 0; k < A.cols; ++k) {
      const double aik = A.at(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < B.cols; ++j) {
        C.at(i, j) += aik * B.at(k, j);
      }
    }
  }
  const bool needs = requires_grad(a) || requires_grad(b);
  VarId out = emplace(std::move(C), needs, {});
  nodes_[out].backprop = [a, b, out](Tape& tape) {
    const Tensor& dC = tape.grad(out);
    const Tensor& A = tape.value(a);
    const Tensor& B = tape.value(b);
    if (tape.requires_grad(a)) {
      Tensor& dA = tape.grad_mut(a);
      for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t j = 0; j < B.cols; ++j) {
          const double d = dC.at(i, j);
          if (d == 0.0) continue;
          for (std::size_t k = 0; k < A.cols; ++k) {
            dA.at(i, k) += d * B.at(k, j);
          }
        }
      }
    }
    if (tape.requires_grad(b)) {
      Tensor& dB = tape.grad_mut(b);
      for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t k = 0; k < A.cols; ++k) {
          const double aik = A.at(i, k);
          if (aik == 0.0) continue;
          for (std::size_t j = 0; j < B.cols; ++j) {
            dB.at(k, j) += aik * dC.at(i, j);
          }
        }
      }
    }
  };
  return out;
}

Tape::VarId Tape::transpose(VarId a) {
  const Tensor& A = value(a);
  Tensor T(A.cols, A.rows);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t j = 0; j < A.cols; ++j) T.at(j, i) = A.at(i, j);
  }
  VarId out = emplace(std::move(T), requires_grad(a), {});
  nodes_[out].backprop = [a, out](Tape& tape) {
    if (!tape.requires_grad(a)) return;
    const Tensor& dT = tape.grad(out);
    Tensor& dA = tape.grad_mut(a);
    for (std::size_t i = 0; i < dA.rows; ++i) {
      for (std::size_t j = 0; j < dA.cols; ++j) dA.at(i, j) += dT.at(j, i);
    }
  };
  return out;
}

Tape::VarId Tape::add(VarId a, VarId b) {
  const Tensor& A = value(a);
  const Tensor& B = value(b);
  assert(A.same_shape(B));
  Tensor C = A;
  for (std::size_t i = 0; i < C.size(); ++i) C.data[i] += B.data[i];
  VarId out = emplace(std::move(C), requires_grad(a) || requires_grad(b), {});
  nodes_[out].backprop = [a, b, out](Tape& tape) {
    const Tensor& dC = tape.grad(out);
    for (VarId input : {a, b}) {
      if (!tape.requires_grad(input)) continue;
      Tensor& dX = tape.grad_mut(input);
      for (std::size_t i = 0; i < dX.size(); ++i) dX.data[i] += dC.data[i];
    }
  };
  return out;
}

Tape::VarId Tape::scale(VarId a, double factor) {
  Tensor C = value(a);
  for (double& x : C.data) x *= factor;
  VarId out = emplace(std::move(C), requires_grad(a), {});
  nodes_[out].backprop = [a, factor, out](Tape& tape) {
    if (!tape.requires_grad(a)) return;
    const Tensor& dC = tape.grad(out);
    Tensor& dA = tape.grad_mut(a);
    for (std::size_t i = 0; i < dA.size(); ++i) {
      dA.data[i] += factor * dC.data[i];
    }
  };
  return out;
}

Tape::VarId Tape::relu(VarId a) {
  Tensor C = value(a);
  for (double& x : C.data) x = std::max(x, 0.0);
  VarId out = emplace(std::move(C), requires_grad(a), {});
  nodes_[out].backprop = [a, out](Tape& tape) {
    if (!tape.requires_grad(a)) return;
    const Tensor& A = tape.value(a);
    const Tensor& dC = tape.grad(out);
    Tensor& dA = tape.grad_mut(a);
    for (std::size_t i = 0; i < dA.size(); ++i) {
      if (A.data[i] > 0.0) dA.data[i] += dC.data[i];
    }
  };
  return out;
}

Tape::VarId Tape::rmsnorm_rows(VarId x, VarId gain, double eps) {
  const Tensor& X = value(x);
  const Tensor& G = value(gain);
  assert(G.rows == 1 && G.cols == X.cols);
  Tensor Y(X.rows, X.cols);
  for (std::size_t r = 0; r < X.rows; ++r) {
    double mean_square = 0.0;
    for (std::size_t c = 0; c < X.cols; ++c) {
      mean_square += X.at(r, c) * X.at(r, c);
    }
    mean_square /= static_cast<double>(X.cols);
    const double inv_rms = 1.0 / std::sqrt(mean_square + eps);
    for (std::size_t c = 0; c < X.cols; ++c) {
      Y.at(r, c) = X.at(r, c) * G.at(0, c) * inv_rms;
    }
  }
  VarId out = emplace(std::move(Y), requires_grad(x) || requires_grad(gain), {});
  nodes_[out].backprop = [x, gain, eps, out](Tape& tape) {
    const Tensor& X = tape.value(x);
    const Tensor& G = tape.value(gain);
    const Tensor& dY = tape.grad(out);
    const std::size_t n = X.cols;
    for (std::size_t r = 0; r < X.rows; ++r) {
      double mean_square = 0.0;
      for (std::size_t c = 0; c < n; ++c) {
        mean_square += X.at(r, c) * X.at(r, c);
      }
      mean_square /= static_cast<double>(n);
      const double rms = std::sqrt(mean_square + eps);
      const double inv_rms = 1.0 / rms;
      if (tape.requires_grad(x)) {
        // dL/dx_j = g_j dy_j / rms - x_j / (n rms^3) * sum_k dy_k g_k x_k
        double dot = 0.0;
        for (std::size_t c = 0; c < n; ++c) {
          dot += dY.at(r, c) * G.at(0, c) * X.at(r, c);
        }
        const double scale = dot / (static_cast<double>(n) * rms * rms * rms);
        Tensor& dX = tape.grad_mut(x);
        for (std::size_t c = 0; c < n; ++c) {
          dX.at(r, c) +=
              dY.at(r, c) * G.at(0, c) * inv_rms - X.at(r, c) * scale;
        }
      }
      if (tape.requires_grad(gain)) {
        Tensor& dG = tape.grad_mut(gain);
        for (std::size_t c = 0; c < n; ++c) {
          dG.at(0, c) += dY.at(r, c) * X.at(r, c) * inv_rms;
        }
      }
    }
  };
  return out;
}

Tape::VarId Tape::causal_softmax_rows(VarId scores) {
  const Tensor& S = value(scores);
  Tensor P(S.rows, S.cols);
  for (std::size_t r = 0; r < S.rows; ++r) {
    const std::size_t visible = std::min(r + 1, S.cols);
    double row_max = S.at(r, 0);
    for (std::size_t c = 1; c < visible; ++c) {
      row_max = std::max(row_max, S.at(r, c));
    }
    double denom = 0.0;
    for (std::size_t c = 0; c < visible; ++c) {
      P.at(r, c) = std::exp(S.at(r, c) - row_max);
      denom += P.at(r, c);
    }
    for (std::size_t c = 0; c < visible; ++c) P.at(r, c) /= denom;
  }
  VarId out = emplace(std::move(P), requires_grad(scores), {});
  nodes_[out].backprop = [scores, out](Tape& tape) {
    if (!tape.requires_grad(scores)) return;
    const Tensor& P = tape.value(out);
    const Tensor& dP = tape.grad(out);
    Tensor& dS = tape.grad_mut(scores);
    for (std::size_t r = 0; r < P.rows; ++r) {
      const std::size_t visible = std::min(r + 1, P.cols);
      double dot = 0.0;
      for (std::size_t c = 0; c < visible; ++c) {
        dot += dP.at(r, c) * P.at(r, c);
      }
      for (std::size_t c = 0; c < visible; ++c) {
        dS.at(r, c) += P.at(r, c) * (dP.at(r, c) - dot);
      }
    }
  };
  return out;
}

Tape::VarId Tape::concat_rows(VarId top, VarId bottom) {
  const Tensor& A = value(top);
  const Tensor& B = value(bottom);
  assert(A.cols == B.cols);
  Tensor C(A.rows + B.rows, A.cols);
  std::copy(A.data.begin(), A.data.end(), C.data.begin());
  std::copy(B.data.begin(), B.data.end(), C.data.begin() + A.data.size());
  VarId out = emplace(std::move(C), requires_grad(top) || requires_grad(bottom), {});
  nodes_[out].backprop = [top, bottom, out](Tape& tape) {
    const Tensor& dC = tape.grad(out);
    const std::size_t top_size = tape.value(top).size();
    if (tape.requires_grad(top)) {
      Tensor& dA = tape.grad_mut(top);
      for (std::size_t i = 0; i < top_size; ++i) dA.data[i] += dC.data[i];
    }
    if (tape.requires_grad(bottom)) {
      Tensor& dB = tape.grad_mut(bottom);
      for (std::size_t i = 0; i < dB.size(); ++i) {
        dB.data[i] += dC.data[top_size + i];
      }
    }
  };
  return out;
}

Tape::VarId Tape::row_slice(VarId x, std::size_t r0, std::size_t r1) {
  const Tensor& X = value(x);
  assert(r0 < r1 && r1 <= X.rows);
  Tensor Y(r1 - r0, X.cols);
  std::copy(X.data.begin() + r0 * X.cols, X.data.begin() + r1 * X.cols,
            Y.data.begin());
  VarId out = emplace(std::move(Y), requires_grad(x), {});
  nodes_[out].backprop = [x, r0, out](Tape& tape) {
    if (!tape.requires_grad(x)) return;
    const Tensor& dY = tape.grad(out);
    Tensor& dX = tape.grad_mut(x);
    for (std::size_t i = 0; i < dY.size(); ++i) {
      dX.data[r0 * dX.cols + i] += dY.data[i];
    }
  };
  return out;
}

Tape::VarId Tape::col_slice(VarId x, std::size_t c0, std::size_t c1) {
  const Tensor& X = value(x);
  assert(c0 < c1 && c1 <= X.cols);
  Tensor Y(X.rows, c1 - c0);
  for (std::size_t r = 0; r < X.rows; ++r) {
    for (std::size_t c = c0; c < c1; ++c) Y.at(r, c - c0) = X.at(r, c);
  }
  VarId out = emplace(std::move(Y), requires_grad(x), {});
  nodes_[out].backprop = [x, c0, out](Tape& tape) {
    if (!tape.requires_grad(x)) return;
    const Tensor& dY = tape.grad(out);
    Tensor& dX = tape.grad_mut(x);
    for (std::size_t r = 0; r < dY.rows; ++r) {
      for (std::size_t c = 0; c < dY.cols; ++c) {
        dX.at(r, c0 + c) += dY.at(r, c);
      }
    }
  };
  return out;
}

Tape::VarId Tape::concat_cols(std::span<const VarId> parts) {
  assert(!parts.empty());
  std::size_t total_cols = 0;
  bool needs = false;
  for (VarId part : parts) {
    total_cols += value(part).cols;
    needs = needs || requires_grad(part);
  }
  const std::size_t rows = value(parts.front()).rows;
  Tensor C(rows, total_cols);
  std::size_t offset = 0;
  for (VarId part : parts) {
    const Tensor& P = value(part);
    assert(P.rows == rows);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < P.cols; ++c) {
        C.at(r, offset + c) = P.at(r, c);
      }
    }
    offset += P.cols;
  }
  std::vector<VarId> inputs(parts.begin(), parts.end());
  VarId out = emplace(std::move(C), needs, {});
  nodes_[out].backprop = [inputs, out](Tape& tape) {
    const Tensor& dC = tape.grad(out);
    std::size_t offset = 0;
    for (VarId part : inputs) {
      const std::size_t part_cols = tape.value(part).cols;
      if (tape.requires_grad(part)) {
        Tensor& dP = tape.grad_mut(part);
        for (std::size_t r = 0; r < dP.rows; ++r) {
          for (std::size_t c = 0; c < part_cols; ++c) {
            dP.at(r, c) += dC.at(r, offset + c);
          }
        }
      }
      offset += part_cols;
    }
  };
  return out;
}

Tape::VarId Tape::two_way_cross_entropy(VarId logits2, std::size_t gold_index) {
  const Tensor& L = value(logits2);
  assert(L.rows == 1 && L.cols == 2 && gold_index < 2);
  const double l0 = L.at(0, 0);
  const double l1 = L.at(0, 1);
  const double m = std::max(l0, l1);
  const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
  Tensor loss(1, 1);
  loss.at(0, 0) = lse - L.at(0, gold_index);
  VarId out = emplace(std::move(loss), requires_grad(logits2), {});
  nodes_[out].backprop = [logits2, gold_index, out](Tape& tape) {
    if (!tape.requires_grad(logits2)) return;
    const Tensor& L = tape.value(logits2);
    const double upstream = tape.grad(out).at(0, 0);
    const double l0 = L.at(0, 0);
    const double l1 = L.at(0, 1);
    const double m = std::max(l0, l1);
    const double e0 = std::exp(l0 - m);
    const double e1 = std::exp(l1 - m);
    const double denom = e0 + e1;
    Tensor& dL = tape.grad_mut(logits2);
    dL.at(0, 0) += upstream * (e0 / denom - (gold_index == 0 ? 1.0 : 0.0));
    dL.at(0, 1) += upstream * (e1 / denom - (gold_index == 1 ? 1.0 : 0.0));
  };
  return out;
}

void Tape::backward(VarId loss) {
  assert(value(loss).rows == 1 && value(loss).cols == 1);
  for (Node& node : nodes_) {
    std::fill(node.grad.data.begin(), node.grad.data.end(), 0.0);
  }
  grad_mut(loss).at(0, 0) = 1.0;
  // Nodes only reference earlier nodes, so the reverse index order is a
  // valid topological order.
  for (std::size_t i = nodes_.size(); i-- > 0;) {
    if (i > loss) continue;
    Node& node = nodes_[i];
    if (!node.requires_grad || !node.backprop) continue;
    bool has_signal = false;
    for (double g : node.grad.data) {
      if (g != 0.0) {
        has_signal = true;
        break;
      }
    }
    if (has_signal) node.backprop(*this);
  }
}

}  // namespace claimworthy::autograd
