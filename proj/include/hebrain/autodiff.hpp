#pragma once
// Reverse-mode differentiation over Matrix values.
//
// A Tape records every operation of one forward pass. Leaves are either
// constants or parameters; a parameter leaf remembers a slot index so that
// accumulate_param_grads() can add its gradient into the caller's buffer.
// Tapes are single-use and single-threaded; independent tapes may be built
// concurrently against the same (unmodified) parameters.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "hebrain/matrix.hpp"

namespace hebrain::ad {

class Tape;

struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Matrix& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Var constant(Matrix value);
  Var parameter(const Matrix& value, std::size_t slot);

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& value(Var v) const { return nodes_[v.id].value; }
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  // Gradient of the last backward() target w.r.t. v (zeros if unreached).
  Matrix grad(Var v) const;

  // Reverse sweep from a 1x1 loss. seed multiplies the unit upstream grad.
  void backward(Var loss, double seed = 1.0);

  // grads[slot] += d loss / d parameter for every parameter leaf.
  void accumulate_param_grads(std::span<Matrix> grads) const;

  std::size_t size() const { return nodes_.size(); }

  // Used by the op implementations.
  Var push(Matrix value, std::vector<std::size_t> parents, BackwardFn fn);
  Matrix& grad_ref(std::size_t id);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    long slot = -1;
    BackwardFn backward;
  };
  std::vector<Node> nodes_;
};

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double s);
// a * x + b elementwise with scalar a, b.
Var affine(Var x, double a, double b);
Var transpose(Var a);
Var relu(Var a);
Var sigmoid(Var a);
// log(max(x, floor)); the gradient is zero where the clamp is active.
Var log_clamped(Var a, double floor);
Var softmax_rows(Var a);
Var sum(Var a);
Var mean(Var a);

// x (n x d) with every row multiplied / shifted by row (1 x d).
Var mul_row(Var x, Var row);
Var add_row(Var x, Var row);
// x plus a 1x1 scalar broadcast to every entry.
Var add_scalar(Var x, Var s);
// Row i of x multiplied by the constant factors[i].
Var scale_rows(Var x, std::span<const double> factors);
Var gather_rows(Var x, std::span<const std::size_t> index);
// n_rows x d zero matrix with x's rows placed at index.
Var scatter_rows(Var x, std::span<const std::size_t> index, std::size_t n_rows);
Var vstack(Var top, Var bottom);
// m x 1 column of per-row dot products of two m x d matrices.
Var rowwise_dot(Var a, Var b);
// 1x1 view of a single entry.
Var element(Var x, std::size_t r, std::size_t c);

}  // namespace hebrain::ad
