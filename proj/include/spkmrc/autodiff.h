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

// Dense row-major tensors and a reverse-mode gradient tape.
//
// Every tensor is two-dimensional (rows x cols); vectors are 1 x n and
// scalars are 1 x 1. Values are 64-bit. Operations on Var record a node on
// the owning Tape; Tape::backward() walks the nodes in reverse creation order,
// which is a topological order because a node can only reference nodes that
// existed when it was created.

#ifndef SPKMRC_AUTODIFF_H_
#define SPKMRC_AUTODIFF_H_

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace spkmrc {

using Real = double;

// Stand-in for -infinity in additive masks. exp(-kLarge) underflows to exactly
// zero, so masked softmax weights vanish without producing NaN.
inline constexpr Real kLarge = 1e9;

class Tensor {
 public:
  Tensor() = default;
  Tensor(std::size_t rows, std::size_t cols, Real fill = 0.0);
  Tensor(std::size_t rows, std::size_t cols, std::vector<Real> data);

  static Tensor Scalar(Real v) { return Tensor(1, 1, v); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  std::vector<std::size_t> shape() const { return {rows_, cols_}; }
  bool empty() const { return data_.empty(); }

  Real& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  Real operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }
  Real& operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  Real* ptr() { return data_.data(); }
  const Real* ptr() const { return data_.data(); }
  std::span<Real> data() { return data_; }
  std::span<const Real> data() const { return data_; }
  std::span<const Real> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  // Value of a 1 x 1 tensor.
  Real item() const;

  void Fill(Real v);
  void AddInPlace(const Tensor& other);
  bool SameShape(const Tensor& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string ShapeString() const;

  // Bitwise value equality (including shape).
  bool operator==(const Tensor& other) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<Real> data_;
};

// A named learnable tensor with its accumulated gradient. Gradients are only
// ever added to; call ZeroGrad() (or ModelParams::ZeroGrad) explicitly.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.rows(), value.cols()) {}
  void ZeroGrad() { grad.Fill(0.0); }
};

class Tape;

// Handle to a node on a Tape. Cheap to copy; only valid while the tape lives.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  // Gradient after Tape::backward(); a zero tensor if nothing reached it.
  Tensor grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  // Receives the node's forward value and its accumulated gradient, and adds
  // into the gradients of the node's inputs.
  using BackwardFn =
      std::function<void(Tape&, const Tensor& out_value, const Tensor& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // A value that never receives a gradient.
  Var Constant(Tensor value);
  // A free leaf whose gradient can be read after backward().
  Var Leaf(Tensor value);
  // The node for a parameter. Repeated calls return the same node; backward()
  // adds the node's gradient into p.grad.
  Var Param(Parameter& p);

  // Records a primitive. The node requires a gradient iff any input does; fn
  // is only stored (and later run) in that case.
  Var Record(Tensor value, std::initializer_list<Var> inputs, BackwardFn fn);
  Var Record(Tensor value, std::span<const Var> inputs, BackwardFn fn);

  // Seeds d(loss)/d(loss) = 1 and propagates. loss must be 1 x 1.
  void Backward(const Var& loss);

  bool RequiresGrad(const Var& v) const { return nodes_[v.id_].requires_grad; }
  // Gradient slot of v, allocated as zeros on first use. Only call from
  // backward functions, and only for inputs that require a gradient.
  Tensor& GradSlot(const Var& v);

  const Tensor& value(int id) const { return nodes_[id].value; }
  Tensor grad(int id) const;
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Parameter* param = nullptr;
    BackwardFn backward;
  };

  void CheckOwner(const Var& v) const;

  // A deque keeps value() references valid while new nodes are recorded.
  std::deque<Node> nodes_;
  std::unordered_map<const Parameter*, int> param_nodes_;
  bool backward_done_ = false;
};

// ---------------------------------------------------------------------------
// Primitives. All throw ShapeError on incompatible shapes.

Var matmul(const Var& a, const Var& b);
// a + b. b may also be a 1 x cols row that is broadcast over a's rows.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
// Elementwise product.
Var mul(const Var& a, const Var& b);
// a + c for a constant c (same shape, or a broadcast 1 x cols row).
Var add_constant(const Var& a, const Tensor& c);
Var scale(const Var& a, Real s);
Var add_scalar(const Var& a, Real s);
// Concatenation along the last dimension / along rows.
Var concat_cols(std::span<const Var> parts);
Var concat_cols(std::initializer_list<Var> parts);
Var concat_rows(std::span<const Var> parts);
Var concat_rows(std::initializer_list<Var> parts);
// Half-open [begin, end) ranges.
Var slice_cols(const Var& a, std::size_t begin, std::size_t end);
Var slice_rows(const Var& a, std::size_t begin, std::size_t end);
Var transpose(const Var& a);
Var softmax_rows(const Var& a);
Var relu(const Var& a);
Var sigmoid(const Var& a);
// Rows of table selected by ids (embedding lookup / row gather). Throws
// IndexError on an out-of-range id.
Var gather_rows(const Var& table, std::span<const int> ids);
inline Var embedding_lookup(const Var& table, std::span<const int> ids) {
  return gather_rows(table, ids);
}
// Row-wise layer normalization; gamma and beta are 1 x cols.
Var layer_norm(const Var& x, const Var& gamma, const Var& beta,
               Real eps = 1e-5);
// Softmax cross-entropy of a 1 x n logit row against class `target`.
Var cross_entropy(const Var& logits, int target);
// Sum of all entries, as a 1 x 1.
Var sum(const Var& a);
// sum(a .* w) for a constant weight tensor w.
Var weighted_sum(const Var& a, const Tensor& w);
// Inverted dropout. rate == 0 returns a unchanged.
Var dropout(const Var& a, Real rate, std::mt19937_64& rng);

// Plain (non-recorded) helpers.
Tensor SoftmaxRows(const Tensor& x);

}  // namespace spkmrc

#endif  // SPKMRC_AUTODIFF_H_
