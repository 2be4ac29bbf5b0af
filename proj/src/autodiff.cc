// Copyright 2026 The spkmrc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spkmrc/autodiff.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "spkmrc/errors.h"

namespace spkmrc {
namespace {

using RowMatrix =
    Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;

MatrixMap AsMatrix(Tensor& t) {
  return MatrixMap(t.ptr(), static_cast<Eigen::Index>(t.rows()),
                   static_cast<Eigen::Index>(t.cols()));
}
ConstMatrixMap AsMatrix(const Tensor& t) {
  return ConstMatrixMap(t.ptr(), static_cast<Eigen::Index>(t.rows()),
                        static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void ThrowShape(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.ShapeString() +
                   " and " + b.ShapeString());
}

Tape& OwnerOf(const Var& a) {
  if (!a.valid()) throw Error("operation on an unbound Var");
  return *a.tape();
}

Tape& OwnerOf(const Var& a, const Var& b) {
  Tape& t = OwnerOf(a);
  if (b.tape() != &t) throw Error("operands recorded on different tapes");
  return t;
}

bool IsRowBroadcast(const Tensor& a, const Tensor& b) {
  return b.rows() == 1 && b.cols() == a.cols() && a.rows() != 1;
}

// Adds g into the gradient of a row vector broadcast over g's rows.
void AccumulateRowBroadcast(Tensor& slot, const Tensor& g) {
  for (std::size_t r = 0; r < g.rows(); ++r) {
    const Real* src = g.ptr() + r * g.cols();
    for (std::size_t c = 0; c < g.cols(); ++c) slot[c] += src[c];
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(std::size_t rows, std::size_t cols, Real fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<Real> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows * cols) {
    throw ShapeError("Tensor: " + std::to_string(data_.size()) +
                     " values do not fill shape (" + std::to_string(rows) +
                     "x" + std::to_string(cols) + ")");
  }
}

Real Tensor::item() const {
  if (rows_ != 1 || cols_ != 1) {
    throw NotScalar("item: tensor of shape " + ShapeString() + " is not 1x1");
  }
  return data_[0];
}

void Tensor::Fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

void Tensor::AddInPlace(const Tensor& other) {
  if (!SameShape(other)) ThrowShape("AddInPlace", *this, other);
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
}

std::string Tensor::ShapeString() const {
  std::ostringstream os;
  os << "(" << rows_ << "x" << cols_ << ")";
  return os.str();
}

Tensor SoftmaxRows(const Tensor& x) {
  Tensor y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const Real* in = x.ptr() + r * x.cols();
    Real* out = y.ptr() + r * x.cols();
    Real mx = -std::numeric_limits<Real>::infinity();
    for (std::size_t c = 0; c < x.cols(); ++c) mx = std::max(mx, in[c]);
    Real total = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      out[c] = std::exp(in[c] - mx);
      total += out[c];
    }
    const Real inv = 1.0 / total;
    for (std::size_t c = 0; c < x.cols(); ++c) out[c] *= inv;
  }
  return y;
}

// ---------------------------------------------------------------------------
// Var / Tape

const Tensor& Var::value() const {
  if (!valid()) throw Error("value() of an unbound Var");
  return tape_->value(id_);
}

Tensor Var::grad() const {
  if (!valid()) throw Error("grad() of an unbound Var");
  return tape_->grad(id_);
}

void Tape::CheckOwner(const Var& v) const {
  if (v.tape_ != this) throw Error("Var does not belong to this tape");
}

Var Tape::Constant(Tensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::Leaf(Tensor value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::Param(Parameter& p) {
  auto it = param_nodes_.find(&p);
  if (it != param_nodes_.end()) return Var(this, it->second);
  Node n;
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_nodes_.emplace(&p, id);
  return Var(this, id);
}

Var Tape::Record(Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn fn) {
  return Record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

Var Tape::Record(Tensor value, std::span<const Var> inputs, BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    CheckOwner(in);
    if (nodes_[in.id_].requires_grad) n.requires_grad = true;
  }
  if (n.requires_grad) n.backward = std::move(fn);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Tensor& Tape::GradSlot(const Var& v) {
  Node& n = nodes_[v.id_];
  if (n.grad.empty() && !n.value.empty()) {
    n.grad = Tensor(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

Tensor Tape::grad(int id) const {
  const Node& n = nodes_[id];
  if (n.grad.empty()) return Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::Backward(const Var& loss) {
  CheckOwner(loss);
  const Tensor& lv = nodes_[loss.id_].value;
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw NotScalar("backward: loss has shape " + lv.ShapeString() +
                    ", expected (1x1)");
  }
  if (backward_done_) throw Error("backward: tape already consumed");
  backward_done_ = true;
  if (!nodes_[loss.id_].requires_grad) return;

  GradSlot(loss)[0] = 1.0;
  for (int id = loss.id_; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, n.value, n.grad);
    if (n.param != nullptr) n.param->grad.AddInPlace(n.grad);
  }
}

// ---------------------------------------------------------------------------
// Primitives

Var matmul(const Var& a, const Var& b) {
  Tape& t = OwnerOf(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) ThrowShape("matmul", av, bv);
  Tensor out(av.rows(), bv.cols());
  AsMatrix(out).noalias() = AsMatrix(av) * AsMatrix(bv);
  return t.Record(std::move(out), {a, b},
                  [a, b](Tape& t, const Tensor&, const Tensor& g) {
                    if (t.RequiresGrad(a)) {
                      AsMatrix(t.GradSlot(a)).noalias() +=
                          AsMatrix(g) * AsMatrix(b.value()).transpose();
                    }
                    if (t.RequiresGrad(b)) {
                      AsMatrix(t.GradSlot(b)).noalias() +=
                          AsMatrix(a.value()).transpose() * AsMatrix(g);
                    }
                  });
}

namespace {

Var AddOrSub(const char* op, const Var& a, const Var& b, Real sign) {
  Tape& t = OwnerOf(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const bool broadcast = IsRowBroadcast(av, bv);
  if (!broadcast && !av.SameShape(bv)) ThrowShape(op, av, bv);
  Tensor out = av;
  const std::size_t cols = av.cols();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] += sign * bv[broadcast ? i % cols : i];
  }
  return t.Record(std::move(out), {a, b},
                  [a, b, broadcast, sign](Tape& t, const Tensor&, const Tensor& g) {
                    if (t.RequiresGrad(a)) t.GradSlot(a).AddInPlace(g);
                    if (t.RequiresGrad(b)) {
                      Tensor& slot = t.GradSlot(b);
                      if (broadcast) {
                        Tensor scaled = g;
                        if (sign != 1.0) {
                          for (std::size_t i = 0; i < scaled.size(); ++i)
                            scaled[i] *= sign;
                        }
                        AccumulateRowBroadcast(slot, scaled);
                      } else {
                        for (std::size_t i = 0; i < g.size(); ++i)
                          slot[i] += sign * g[i];
                      }
                    }
                  });
}

}  // namespace

Var add(const Var& a, const Var& b) { return AddOrSub("add", a, b, 1.0); }
Var sub(const Var& a, const Var& b) { return AddOrSub("sub", a, b, -1.0); }

Var mul(const Var& a, const Var& b) {
  Tape& t = OwnerOf(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (!av.SameShape(bv)) ThrowShape("mul", av, bv);
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return t.Record(std::move(out), {a, b},
                  [a, b](Tape& t, const Tensor&, const Tensor& g) {
                    if (t.RequiresGrad(a)) {
                      Tensor& slot = t.GradSlot(a);
                      const Tensor& bv = b.value();
                      for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * bv[i];
                    }
                    if (t.RequiresGrad(b)) {
                      Tensor& slot = t.GradSlot(b);
                      const Tensor& av = a.value();
                      for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * av[i];
                    }
                  });
}

Var add_constant(const Var& a, const Tensor& c) {
  Tape& t = OwnerOf(a);
  const Tensor& av = a.value();
  const bool broadcast = IsRowBroadcast(av, c);
  if (!broadcast && !av.SameShape(c)) ThrowShape("add_constant", av, c);
  Tensor out = av;
  const std::size_t cols = av.cols();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += c[broadcast ? i % cols : i];
  return t.Record(std::move(out), {a}, [a](Tape& t, const Tensor&, const Tensor& g) {
    t.GradSlot(a).AddInPlace(g);
  });
}

Var scale(const Var& a, Real s) {
  Tape& t = OwnerOf(a);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  return t.Record(std::move(out), {a}, [a, s](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& slot = t.GradSlot(a);
    for (std::size_t i = 0; i < g.size(); ++i) slot[i] += s * g[i];
  });
}

Var add_scalar(const Var& a, Real s) {
  Tape& t = OwnerOf(a);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s;
  return t.Record(std::move(out), {a}, [a](Tape& t, const Tensor&, const Tensor& g) {
    t.GradSlot(a).AddInPlace(g);
  });
}

Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  Tape& t = OwnerOf(parts[0]);
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw Error("operands recorded on different tapes");
    if (p.rows() != rows) ThrowShape("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(pv.ptr() + r * pv.cols(), pv.cols(), out.ptr() + r * cols + offset);
    }
    offset += pv.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.Record(std::move(out), parts,
                  [inputs](Tape& t, const Tensor&, const Tensor& g) {
                    std::size_t offset = 0;
                    for (const Var& p : inputs) {
                      const std::size_t pc = p.cols();
                      if (t.RequiresGrad(p)) {
                        Tensor& slot = t.GradSlot(p);
                        for (std::size_t r = 0; r < g.rows(); ++r) {
                          const Real* src = g.ptr() + r * g.cols() + offset;
                          Real* dst = slot.ptr() + r * pc;
                          for (std::size_t c = 0; c < pc; ++c) dst[c] += src[c];
                        }
                      }
                      offset += pc;
                    }
                  });
}

Var concat_rows(std::initializer_list<Var> parts) {
  return concat_rows(std::span<const Var>(parts.begin(), parts.size()));
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  Tape& t = OwnerOf(parts[0]);
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  for (const Var& p : parts) {
    if (p.tape() != &t) throw Error("operands recorded on different tapes");
    if (p.cols() != cols) ThrowShape("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
  }
  Tensor out(rows, cols);
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const Tensor& pv = p.value();
    std::copy_n(pv.ptr(), pv.size(), out.ptr() + offset);
    offset += pv.size();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return t.Record(std::move(out), parts,
                  [inputs](Tape& t, const Tensor&, const Tensor& g) {
                    std::size_t offset = 0;
                    for (const Var& p : inputs) {
                      const std::size_t n = p.value().size();
                      if (t.RequiresGrad(p)) {
                        Tensor& slot = t.GradSlot(p);
                        for (std::size_t i = 0; i < n; ++i) slot[i] += g[offset + i];
                      }
                      offset += n;
                    }
                  });
}

Var slice_cols(const Var& a, std::size_t begin, std::size_t end) {
  Tape& t = OwnerOf(a);
  const Tensor& av = a.value();
  if (begin > end || end > av.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") outside " + av.ShapeString());
  }
  const std::size_t width = end - begin;
  Tensor out(av.rows(), width);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy_n(av.ptr() + r * av.cols() + begin, width, out.ptr() + r * width);
  }
  return t.Record(std::move(out), {a},
                  [a, begin, width](Tape& t, const Tensor&, const Tensor& g) {
                    Tensor& slot = t.GradSlot(a);
                    const std::size_t cols = slot.cols();
                    for (std::size_t r = 0; r < g.rows(); ++r) {
                      for (std::size_t c = 0; c < width; ++c)
                        slot[r * cols + begin + c] += g[r * width + c];
                    }
                  });
}

Var slice_rows(const Var& a, std::size_t begin, std::size_t end) {
  Tape& t = OwnerOf(a);
  const Tensor& av = a.value();
  if (begin > end || end > av.rows()) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") outside " + av.ShapeString());
  }
  const std::size_t cols = av.cols();
  Tensor out(end - begin, cols);
  std::copy_n(av.ptr() + begin * cols, out.size(), out.ptr());
  return t.Record(std::move(out), {a},
                  [a, begin](Tape& t, const Tensor&, const Tensor& g) {
                    Tensor& slot = t.GradSlot(a);
                    const std::size_t offset = begin * slot.cols();
                    for (std::size_t i = 0; i < g.size(); ++i) slot[offset + i] += g[i];
                  });
}

Var transpose(const Var& a) {
  Tape& t = OwnerOf(a);
  const Tensor& av = a.value();
  Tensor out(av.cols(), av.rows());
  AsMatrix(out) = AsMatrix(av).transpose();
  return t.Record(std::move(out), {a}, [a](Tape& t, const Tensor&, const Tensor& g) {
    AsMatrix(t.GradSlot(a)) += AsMatrix(g).transpose();
  });
}

Var softmax_rows(const Var& a) {
  Tape& t = OwnerOf(a);
  return t.Record(SoftmaxRows(a.value()), {a},
                  [a](Tape& t, const Tensor& y, const Tensor& g) {
                    Tensor& slot = t.GradSlot(a);
                    const std::size_t cols = y.cols();
                    for (std::size_t r = 0; r < y.rows(); ++r) {
                      const Real* yr = y.ptr() + r * cols;
                      const Real* gr = g.ptr() + r * cols;
                      Real dot = 0.0;
                      for (std::size_t c = 0; c < cols; ++c) dot += yr[c] * gr[c];
                      Real* sr = slot.ptr() + r * cols;
                      for (std::size_t c = 0; c < cols; ++c) sr[c] += yr[c] * (gr[c] - dot);
                    }
                  });
}

Var relu(const Var& a) {
  Tape& t = OwnerOf(a);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
  return t.Record(std::move(out), {a}, [a](Tape& t, const Tensor& y, const Tensor& g) {
    Tensor& slot = t.GradSlot(a);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (y[i] > 0.0) slot[i] += g[i];
    }
  });
}

Var sigmoid(const Var& a) {
  Tape& t = OwnerOf(a);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Real x = out[i];
    // Split by sign so exp never overflows.
    if (x >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-x));
    } else {
      const Real e = std::exp(x);
      out[i] = e / (1.0 + e);
    }
  }
  return t.Record(std::move(out), {a}, [a](Tape& t, const Tensor& y, const Tensor& g) {
    Tensor& slot = t.GradSlot(a);
    for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var gather_rows(const Var& table, std::span<const int> ids) {
  Tape& t = OwnerOf(table);
  const Tensor& tv = table.value();
  const std::size_t cols = tv.cols();
  Tensor out(ids.size(), cols);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const int id = ids[r];
    if (id < 0 || static_cast<std::size_t>(id) >= tv.rows()) {
      throw IndexError("gather_rows: id " + std::to_string(id) +
                       " out of range for table " + tv.ShapeString());
    }
    std::copy_n(tv.ptr() + static_cast<std::size_t>(id) * cols, cols,
                out.ptr() + r * cols);
  }
  std::vector<int> index(ids.begin(), ids.end());
  return t.Record(std::move(out), {table},
                  [table, index = std::move(index)](Tape& t, const Tensor&,
                                                    const Tensor& g) {
                    Tensor& slot = t.GradSlot(table);
                    const std::size_t cols = g.cols();
                    for (std::size_t r = 0; r < index.size(); ++r) {
                      Real* dst = slot.ptr() + static_cast<std::size_t>(index[r]) * cols;
                      const Real* src = g.ptr() + r * cols;
                      for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
                    }
                  });
}

Var layer_norm(const Var& x, const Var& gamma, const Var& beta, Real eps) {
  Tape& t = OwnerOf(x, gamma);
  OwnerOf(x, beta);
  const Tensor& xv = x.value();
  const std::size_t rows = xv.rows();
  const std::size_t cols = xv.cols();
  if (gamma.rows() != 1 || gamma.cols() != cols) {
    ThrowShape("layer_norm", xv, gamma.value());
  }
  if (beta.rows() != 1 || beta.cols() != cols) ThrowShape("layer_norm", xv, beta.value());

  Tensor normalized(rows, cols);
  std::vector<Real> inv_std(rows);
  Tensor out(rows, cols);
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* in = xv.ptr() + r * cols;
    Real mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += in[c];
    mean /= static_cast<Real>(cols);
    Real var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) var += (in[c] - mean) * (in[c] - mean);
    var /= static_cast<Real>(cols);
    const Real inv = 1.0 / std::sqrt(var + eps);
    inv_std[r] = inv;
    for (std::size_t c = 0; c < cols; ++c) {
      const Real xhat = (in[c] - mean) * inv;
      normalized(r, c) = xhat;
      out(r, c) = xhat * gv[c] + bv[c];
    }
  }
  return t.Record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](Tape& t, const Tensor&, const Tensor& g) {
        const std::size_t rows = g.rows();
        const std::size_t cols = g.cols();
        const Tensor& gv = gamma.value();
        if (t.RequiresGrad(gamma)) {
          Tensor& slot = t.GradSlot(gamma);
          for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) slot[c] += g(r, c) * normalized(r, c);
        }
        if (t.RequiresGrad(beta)) AccumulateRowBroadcast(t.GradSlot(beta), g);
        if (t.RequiresGrad(x)) {
          Tensor& slot = t.GradSlot(x);
          const Real n = static_cast<Real>(cols);
          std::vector<Real> dxhat(cols);
          for (std::size_t r = 0; r < rows; ++r) {
            Real sum_d = 0.0;
            Real sum_dx = 0.0;
            for (std::size_t c = 0; c < cols; ++c) {
              dxhat[c] = g(r, c) * gv[c];
              sum_d += dxhat[c];
              sum_dx += dxhat[c] * normalized(r, c);
            }
            for (std::size_t c = 0; c < cols; ++c) {
              slot(r, c) += inv_std[r] / n *
                            (n * dxhat[c] - sum_d - normalized(r, c) * sum_dx);
            }
          }
        }
      });
}

Var cross_entropy(const Var& logits, int target) {
  Tape& t = OwnerOf(logits);
  const Tensor& lv = logits.value();
  if (lv.rows() != 1) {
    throw ShapeError("cross_entropy: logits must be a single row, got " +
                     lv.ShapeString());
  }
  if (target < 0 || static_cast<std::size_t>(target) >= lv.cols()) {
    throw IndexError("cross_entropy: target " + std::to_string(target) +
                     " outside " + std::to_string(lv.cols()) + " classes");
  }
  Tensor probs = SoftmaxRows(lv);
  Real mx = lv[0];
  for (std::size_t c = 1; c < lv.cols(); ++c) mx = std::max(mx, lv[c]);
  Real total = 0.0;
  for (std::size_t c = 0; c < lv.cols(); ++c) total += std::exp(lv[c] - mx);
  const Real loss = mx + std::log(total) - lv[static_cast<std::size_t>(target)];
  return t.Record(Tensor::Scalar(loss), {logits},
                  [logits, target, probs = std::move(probs)](Tape& t, const Tensor&,
                                                            const Tensor& g) {
                    Tensor& slot = t.GradSlot(logits);
                    const Real scale = g[0];
                    for (std::size_t c = 0; c < probs.size(); ++c) {
                      const Real onehot = static_cast<int>(c) == target ? 1.0 : 0.0;
                      slot[c] += scale * (probs[c] - onehot);
                    }
                  });
}

Var sum(const Var& a) {
  Tape& t = OwnerOf(a);
  Real total = 0.0;
  for (Real v : a.value().data()) total += v;
  return t.Record(Tensor::Scalar(total), {a}, [a](Tape& t, const Tensor&, const Tensor& g) {
    Tensor& slot = t.GradSlot(a);
    for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += g[0];
  });
}

Var weighted_sum(const Var& a, const Tensor& w) {
  Tape& t = OwnerOf(a);
  const Tensor& av = a.value();
  if (!av.SameShape(w)) ThrowShape("weighted_sum", av, w);
  Real total = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) total += av[i] * w[i];
  return t.Record(Tensor::Scalar(total), {a},
                  [a, w](Tape& t, const Tensor&, const Tensor& g) {
                    Tensor& slot = t.GradSlot(a);
                    for (std::size_t i = 0; i < slot.size(); ++i) slot[i] += g[0] * w[i];
                  });
}

Var dropout(const Var& a, Real rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw Error("dropout: rate must be below 1");
  Tape& t = OwnerOf(a);
  const Tensor& av = a.value();
  Tensor mask(av.rows(), av.cols());
  std::bernoulli_distribution keep(1.0 - rate);
  const Real scale = 1.0 / (1.0 - rate);
  for (std::size_t i = 0; i < mask.size(); ++i) mask[i] = keep(rng) ? scale : 0.0;
  Tensor out(av.rows(), av.cols());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * mask[i];
  return t.Record(std::move(out), {a},
                  [a, mask = std::move(mask)](Tape& t, const Tensor&, const Tensor& g) {
                    Tensor& slot = t.GradSlot(a);
                    for (std::size_t i = 0; i < g.size(); ++i) slot[i] += g[i] * mask[i];
                  });
}

}  // namespace spkmrc
