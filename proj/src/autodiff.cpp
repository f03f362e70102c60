#include "hebrain/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "hebrain/errors.hpp"
#include "hebrain/kernels.hpp"

namespace hebrain::ad {

const Matrix& Var::value() const { return tape->value(id); }

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, -1, {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::parameter(const Matrix& value, std::size_t slot) {
  nodes_.push_back(Node{value, {}, true, static_cast<long>(slot), {}});
  return Var{this, nodes_.size() - 1};
}

Var Tape::push(Matrix value, std::vector<std::size_t> parents, BackwardFn fn) {
  const bool needs = std::any_of(parents.begin(), parents.end(),
                                 [this](std::size_t p) { return nodes_[p].needs_grad; });
  nodes_.push_back(Node{std::move(value), {}, needs, -1, needs ? std::move(fn) : nullptr});
  return Var{this, nodes_.size() - 1};
}

Matrix& Tape::grad_ref(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(Var loss, double seed) {
  if (loss.tape != this) throw ContractError("backward: variable belongs to another tape");
  const Matrix& lv = nodes_[loss.id].value;
  if (lv.rows() != 1 || lv.cols() != 1)
    throw ContractError("backward: loss must be a 1x1 scalar, got " + lv.shape_string());
  for (Node& n : nodes_) n.grad = Matrix();
  grad_ref(loss.id)(0, 0) = seed;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, id);
  }
}

void Tape::accumulate_param_grads(std::span<Matrix> grads) const {
  for (const Node& n : nodes_) {
    if (n.slot < 0 || n.grad.empty()) continue;
    const auto slot = static_cast<std::size_t>(n.slot);
    if (slot >= grads.size()) throw IndexError("parameter slot out of range");
    grads[slot].add_scaled(n.grad);
  }
}

namespace {

void accumulate(Tape& t, std::size_t target, const Matrix& g) {
  if (!t.needs_grad(target)) return;
  t.grad_ref(target).add_scaled(g);
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  return t.push(hebrain::matmul(a.value(), b.value()), {a.id, b.id},
                [a = a.id, b = b.id](Tape& t, std::size_t self) {
                  const Matrix& g = t.grad_ref(self);
                  if (t.needs_grad(a)) accumulate(t, a, matmul_nt(g, t.value(b)));
                  if (t.needs_grad(b)) accumulate(t, b, matmul_tn(t.value(a), g));
                });
}

Var add(Var a, Var b) {
  Tape& t = *a.tape;
  return t.push(hebrain::add(a.value(), b.value()), {a.id, b.id},
                [a = a.id, b = b.id](Tape& t, std::size_t self) {
                  const Matrix g = t.grad_ref(self);
                  accumulate(t, a, g);
                  accumulate(t, b, g);
                });
}

Var sub(Var a, Var b) {
  Tape& t = *a.tape;
  return t.push(hebrain::sub(a.value(), b.value()), {a.id, b.id},
                [a = a.id, b = b.id](Tape& t, std::size_t self) {
                  const Matrix g = t.grad_ref(self);
                  accumulate(t, a, g);
                  if (t.needs_grad(b)) t.grad_ref(b).add_scaled(g, -1.0);
                });
}

Var hadamard(Var a, Var b) {
  Tape& t = *a.tape;
  return t.push(hebrain::hadamard(a.value(), b.value()), {a.id, b.id},
                [a = a.id, b = b.id](Tape& t, std::size_t self) {
                  const Matrix g = t.grad_ref(self);
                  if (t.needs_grad(a)) accumulate(t, a, hebrain::hadamard(g, t.value(b)));
                  if (t.needs_grad(b)) accumulate(t, b, hebrain::hadamard(g, t.value(a)));
                });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape;
  return t.push(hebrain::scale(a.value(), s), {a.id},
                [a = a.id, s](Tape& t, std::size_t self) {
                  const Matrix g = t.grad_ref(self);
                  t.grad_ref(a).add_scaled(g, s);
                });
}

Var affine(Var x, double a, double b) {
  Tape& t = *x.tape;
  Matrix out = x.value();
  for (double& v : out.data()) v = a * v + b;
  return t.push(std::move(out), {x.id}, [x = x.id, a](Tape& t, std::size_t self) {
    const Matrix g = t.grad_ref(self);
    t.grad_ref(x).add_scaled(g, a);
  });
}

Var transpose(Var a) {
  Tape& t = *a.tape;
  return t.push(hebrain::transpose(a.value()), {a.id},
                [a = a.id](Tape& t, std::size_t self) {
                  accumulate(t, a, hebrain::transpose(t.grad_ref(self)));
                });
}

Var relu(Var a) {
  Tape& t = *a.tape;
  return t.push(hebrain::relu(a.value()), {a.id}, [a = a.id](Tape& t, std::size_t self) {
    Matrix g = t.grad_ref(self);
    const Matrix& x = t.value(a);
    auto gd = g.data();
    auto xd = x.data();
    for (std::size_t i = 0; i < gd.size(); ++i)
      if (!(xd[i] > 0.0)) gd[i] = 0.0;
    accumulate(t, a, g);
  });
}

Var sigmoid(Var a) {
  Tape& t = *a.tape;
  return t.push(hebrain::sigmoid(a.value()), {a.id}, [a = a.id](Tape& t, std::size_t self) {
    Matrix g = t.grad_ref(self);
    const Matrix& y = t.value(self);
    auto gd = g.data();
    auto yd = y.data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] *= yd[i] * (1.0 - yd[i]);
    accumulate(t, a, g);
  });
}

Var log_clamped(Var a, double floor) {
  Tape& t = *a.tape;
  Matrix out = a.value();
  for (double& v : out.data()) v = std::log(std::max(v, floor));
  return t.push(std::move(out), {a.id}, [a = a.id, floor](Tape& t, std::size_t self) {
    Matrix g = t.grad_ref(self);
    const Matrix& x = t.value(a);
    auto gd = g.data();
    auto xd = x.data();
    for (std::size_t i = 0; i < gd.size(); ++i) gd[i] = xd[i] > floor ? gd[i] / xd[i] : 0.0;
    accumulate(t, a, g);
  });
}

Var softmax_rows(Var a) {
  Tape& t = *a.tape;
  return t.push(hebrain::softmax_rows(a.value()), {a.id},
                [a = a.id](Tape& t, std::size_t self) {
                  const Matrix& y = t.value(self);
                  const Matrix& g = t.grad_ref(self);
                  Matrix dx(y.rows(), y.cols());
                  for (std::size_t i = 0; i < y.rows(); ++i) {
                    double dotp = 0.0;
                    for (std::size_t j = 0; j < y.cols(); ++j) dotp += g(i, j) * y(i, j);
                    for (std::size_t j = 0; j < y.cols(); ++j)
                      dx(i, j) = y(i, j) * (g(i, j) - dotp);
                  }
                  accumulate(t, a, dx);
                });
}

Var sum(Var a) {
  Tape& t = *a.tape;
  return t.push(Matrix(1, 1, hebrain::sum(a.value())), {a.id},
                [a = a.id](Tape& t, std::size_t self) {
                  const double g = t.grad_ref(self)(0, 0);
                  Matrix& ga = t.grad_ref(a);
                  for (double& v : ga.data()) v += g;
                });
}

Var mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("mean of an empty matrix");
  return scale(sum(a), 1.0 / static_cast<double>(n));
}

Var mul_row(Var x, Var row) {
  const Matrix& xv = x.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != xv.cols())
    throw ShapeError("mul_row: shape mismatch " + xv.shape_string() + " vs " +
                     rv.shape_string());
  Matrix out(xv.rows(), xv.cols());
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < xv.rows(); ++i)
    k.mul(xv.row(i).data(), rv.data().data(), out.row(i).data(), xv.cols());
  Tape& t = *x.tape;
  return t.push(std::move(out), {x.id, row.id},
                [x = x.id, r = row.id](Tape& t, std::size_t self) {
                  const Matrix g = t.grad_ref(self);
                  const Matrix& xv = t.value(x);
                  const Matrix& rv = t.value(r);
                  const auto& k = kernels::active();
                  if (t.needs_grad(x)) {
                    Matrix& gx = t.grad_ref(x);
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      auto gi = g.row(i);
                      auto gxi = gx.row(i);
                      for (std::size_t j = 0; j < g.cols(); ++j) gxi[j] += gi[j] * rv(0, j);
                    }
                  }
                  if (t.needs_grad(r)) {
                    Matrix& gr = t.grad_ref(r);
                    Matrix prod(1, g.cols());
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      k.mul(g.row(i).data(), xv.row(i).data(), prod.data().data(), g.cols());
                      gr.add_scaled(prod);
                    }
                  }
                });
}

Var add_row(Var x, Var row) {
  const Matrix& xv = x.value();
  const Matrix& rv = row.value();
  if (rv.rows() != 1 || rv.cols() != xv.cols())
    throw ShapeError("add_row: shape mismatch " + xv.shape_string() + " vs " +
                     rv.shape_string());
  Matrix out = xv;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto o = out.row(i);
    for (std::size_t j = 0; j < o.size(); ++j) o[j] += rv(0, j);
  }
  Tape& t = *x.tape;
  return t.push(std::move(out), {x.id, row.id},
                [x = x.id, r = row.id](Tape& t, std::size_t self) {
                  const Matrix g = t.grad_ref(self);
                  accumulate(t, x, g);
                  if (t.needs_grad(r)) {
                    Matrix& gr = t.grad_ref(r);
                    for (std::size_t i = 0; i < g.rows(); ++i)
                      for (std::size_t j = 0; j < g.cols(); ++j) gr(0, j) += g(i, j);
                  }
                });
}

Var add_scalar(Var x, Var s) {
  const Matrix& sv = s.value();
  if (sv.rows() != 1 || sv.cols() != 1)
    throw ShapeError("add_scalar: expected 1x1 scalar, got " + sv.shape_string());
  Matrix out = x.value();
  for (double& v : out.data()) v += sv(0, 0);
  Tape& t = *x.tape;
  return t.push(std::move(out), {x.id, s.id},
                [x = x.id, s = s.id](Tape& t, std::size_t self) {
                  const Matrix g = t.grad_ref(self);
                  accumulate(t, x, g);
                  if (t.needs_grad(s)) t.grad_ref(s)(0, 0) += hebrain::sum(g);
                });
}

Var scale_rows(Var x, std::span<const double> factors) {
  const Matrix& xv = x.value();
  if (factors.size() != xv.rows())
    throw ShapeError("scale_rows: " + std::to_string(factors.size()) +
                     " factors for shape " + xv.shape_string());
  Matrix out(xv.rows(), xv.cols());
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < xv.rows(); ++i)
    k.scale(factors[i], xv.row(i).data(), out.row(i).data(), xv.cols());
  std::vector<double> f(factors.begin(), factors.end());
  Tape& t = *x.tape;
  return t.push(std::move(out), {x.id},
                [x = x.id, f = std::move(f)](Tape& t, std::size_t self) {
                  const Matrix g = t.grad_ref(self);
                  Matrix& gx = t.grad_ref(x);
                  const auto& k = kernels::active();
                  for (std::size_t i = 0; i < g.rows(); ++i)
                    k.axpy(f[i], g.row(i).data(), gx.row(i).data(), g.cols());
                });
}

Var gather_rows(Var x, std::span<const std::size_t> index) {
  const Matrix& xv = x.value();
  Matrix out(index.size(), xv.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= xv.rows()) throw IndexError("gather_rows: row index out of range");
    std::copy(xv.row(index[i]).begin(), xv.row(index[i]).end(), out.row(i).begin());
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  Tape& t = *x.tape;
  return t.push(std::move(out), {x.id},
                [x = x.id, idx = std::move(idx)](Tape& t, std::size_t self) {
                  const Matrix g = t.grad_ref(self);
                  Matrix& gx = t.grad_ref(x);
                  const auto& k = kernels::active();
                  for (std::size_t i = 0; i < idx.size(); ++i)
                    k.axpy(1.0, g.row(i).data(), gx.row(idx[i]).data(), g.cols());
                });
}

Var scatter_rows(Var x, std::span<const std::size_t> index, std::size_t n_rows) {
  const Matrix& xv = x.value();
  if (index.size() != xv.rows())
    throw ShapeError("scatter_rows: " + std::to_string(index.size()) +
                     " indices for shape " + xv.shape_string());
  Matrix out(n_rows, xv.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= n_rows) throw IndexError("scatter_rows: row index out of range");
    auto o = out.row(index[i]);
    auto in = xv.row(i);
    for (std::size_t j = 0; j < o.size(); ++j) o[j] += in[j];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  Tape& t = *x.tape;
  return t.push(std::move(out), {x.id},
                [x = x.id, idx = std::move(idx)](Tape& t, std::size_t self) {
                  const Matrix g = t.grad_ref(self);
                  Matrix& gx = t.grad_ref(x);
                  const auto& k = kernels::active();
                  for (std::size_t i = 0; i < idx.size(); ++i)
                    k.axpy(1.0, g.row(idx[i]).data(), gx.row(i).data(), g.cols());
                });
}

Var vstack(Var top, Var bottom) {
  const Matrix& a = top.value();
  const Matrix& b = bottom.value();
  if (a.cols() != b.cols())
    throw ShapeError("vstack: shape mismatch " + a.shape_string() + " vs " +
                     b.shape_string());
  Matrix out(a.rows() + b.rows(), a.cols());
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + a.size());
  Tape& t = *top.tape;
  return t.push(std::move(out), {top.id, bottom.id},
                [a = top.id, b = bottom.id](Tape& t, std::size_t self) {
                  const Matrix g = t.grad_ref(self);
                  const std::size_t na = t.value(a).size();
                  if (t.needs_grad(a)) {
                    Matrix& ga = t.grad_ref(a);
                    for (std::size_t i = 0; i < na; ++i) ga.data()[i] += g.data()[i];
                  }
                  if (t.needs_grad(b)) {
                    Matrix& gb = t.grad_ref(b);
                    for (std::size_t i = 0; i < gb.size(); ++i)
                      gb.data()[i] += g.data()[na + i];
                  }
                });
}

Var rowwise_dot(Var a, Var b) {
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  require_same_shape(av, bv, "rowwise_dot");
  Matrix out(av.rows(), 1);
  const auto& k = kernels::active();
  for (std::size_t i = 0; i < av.rows(); ++i)
    out(i, 0) = k.dot(av.row(i).data(), bv.row(i).data(), av.cols());
  Tape& t = *a.tape;
  return t.push(std::move(out), {a.id, b.id},
                [a = a.id, b = b.id](Tape& t, std::size_t self) {
                  const Matrix g = t.grad_ref(self);
                  const auto& k = kernels::active();
                  const Matrix& av = t.value(a);
                  const Matrix& bv = t.value(b);
                  if (t.needs_grad(a)) {
                    Matrix& ga = t.grad_ref(a);
                    for (std::size_t i = 0; i < g.rows(); ++i)
                      k.axpy(g(i, 0), bv.row(i).data(), ga.row(i).data(), av.cols());
                  }
                  if (t.needs_grad(b)) {
                    Matrix& gb = t.grad_ref(b);
                    for (std::size_t i = 0; i < g.rows(); ++i)
                      k.axpy(g(i, 0), av.row(i).data(), gb.row(i).data(), av.cols());
                  }
                });
}

Var element(Var x, std::size_t r, std::size_t c) {
  const Matrix& xv = x.value();
  if (r >= xv.rows() || c >= xv.cols()) throw IndexError("element: index out of range");
  Tape& t = *x.tape;
  return t.push(Matrix(1, 1, xv(r, c)), {x.id}, [x = x.id, r, c](Tape& t, std::size_t self) {
    t.grad_ref(x)(r, c) += t.grad_ref(self)(0, 0);
  });
}

}  // namespace hebrain::ad
