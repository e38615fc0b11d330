#pragma once

#include <cstddef>
#include <vector>

namespace claimworthy {

// Dense row-major matrix of doubles. Everything numeric in the tiny LM and
// the soft-prompt optimizer runs in double precision.
struct Tensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::size_t size() const { return data.size(); }

  bool same_shape(const Tensor& other) const {
    return rows == other.rows && cols == other.cols;
  }
};

}  // namespace claimworthy
