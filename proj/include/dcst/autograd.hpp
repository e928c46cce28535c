#pragma once

#include <deque>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace dcst {

using Matrix = Eigen::MatrixXd;

class Rng;
struct Param;

namespace ad {

class Tape;

// Handle to a node on a tape. Cheap to copy; valid as long as its tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const { return value()(0, 0); }
  bool needs_grad() const;

  Tape* tape() const noexcept { return tape_; }
  int id() const noexcept { return id_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Records primitive operations during a forward pass; backward() replays them
// in reverse, accumulating gradients additively. Parameter leaves push their
// gradient into Param::grad.
class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf bound to a parameter. With track = false the parameter is treated as
  // a constant and receives no gradient.
  Var param(Param& p, bool track = true);
  // Untracked leaf reading a parameter in place.
  Var param(const Param& p);
  Var constant(Matrix value);
  Var push(Matrix value, std::initializer_list<Var> inputs, Backward backward);
  Var push(Matrix value, std::span<const Var> inputs, Backward backward);

  void backward(Var root);

  const Matrix& value(int id) const {
    const Node& n = nodes_[id];
    return n.ref ? *n.ref : n.value;
  }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  // Adds g into the gradient of node id (no-op for constants).
  void accumulate(int id, const Matrix& g);
  template <class Expr>
  void accumulate_expr(int id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      const Matrix& v = n.ref ? *n.ref : n.value;
      n.grad = Matrix::Zero(v.rows(), v.cols());
    }
    n.grad += g;
  }
  Matrix& grad_buffer(int id);
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;  // parameter leaves alias Param::value
    Matrix grad;
    Backward backward;
    Param* param = nullptr;
    bool needs_grad = false;
  };
  std::deque<Node> nodes_;
};

// ---- primitives -----------------------------------------------------------
// Shapes follow the row convention: a sequence of m vectors of width d is an
// m x d matrix, a single vector is 1 x d.

Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);           // element-wise
Var scale(Var a, double s);
Var one_minus(Var a);            // 1 - a
Var add_row(Var a, Var row);     // broadcast a 1 x n row over every row of a
Var affine(Var x, Var w, Var b); // x w + b (b broadcast as a row)
Var transpose(Var a);
Var sum(Var a);                  // 1 x 1

Var sigmoid(Var a);
Var tanh(Var a);
Var elu(Var a);
Var relu(Var a);
Var softmax_rows(Var a);

// Train: zero each entry with probability p and scale survivors by 1/(1-p).
// Eval (train = false) or p = 0: identity.
Var dropout(Var a, double p, bool train, Rng& rng);

// Rows of table selected by index; index -1 yields a zero row.
Var lookup_rows(Var table, std::span<const int> indices);
Var gather_rows(Var a, std::span<const int> indices);
Var slice_rows(Var a, Eigen::Index start, Eigen::Index count);
Var slice_cols(Var a, Eigen::Index start, Eigen::Index count);
Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
inline Var concat_cols(std::initializer_list<Var> parts) {
  return concat_cols(std::span<const Var>(parts.begin(), parts.size()));
}
inline Var concat_rows(std::initializer_list<Var> parts) {
  return concat_rows(std::span<const Var>(parts.begin(), parts.size()));
}

// Column-wise max over rows: L x n -> 1 x n.
Var max_rows(Var a);
// Sliding windows of `width` consecutive rows with zero padding of
// (width - 1) / 2 on each side: L x c -> L x (width * c).
Var window_rows(Var a, int width);

// Sum over rows of -log softmax(logits_row)[gold]. Rows with gold < 0 are
// skipped. Returns 1 x 1.
Var cross_entropy_rows(Var logits, std::span<const int> gold);
Var softmax_cross_entropy(Var logits, int gold);

// out(i, k) = a_i U_k b_i^T where U is stacked as (K * d) x d.
Var bilinear_rows(Var a, Var b, Var u);

// Fused LSTM recurrence over precomputed input projections x_proj (m x 4H,
// gate order i, f, g, o) with recurrent weights w_hh (H x 4H). Zero initial
// state. reverse = true runs from the last row to the first. Returns m x H
// hidden states in input order.
Var lstm_sequence(Var x_proj, Var w_hh, bool reverse);

// Element-wise softmax across streams of the given scores followed by the
// weighted sum of streams: g = sum_i softmax_i(scores) * streams_i.
Var mix_softmax(std::span<const Var> scores, std::span<const Var> streams);

// Per-element softmax across a list of equally shaped score matrices.
std::vector<Matrix> stream_softmax(std::span<const Matrix> scores);

}  // namespace ad
}  // namespace dcst
