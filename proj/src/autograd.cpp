#include "dcst/autograd.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "dcst/errors.hpp"
#include "dcst/params.hpp"
#include "dcst/rng.hpp"

namespace dcst::ad {
namespace {

std::string shape_str(const Matrix& m) {
  std::ostringstream os;
  os << m.rows() << "x" << m.cols();
  return os.str();
}

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + shape_str(a) +
                   " and " + shape_str(b));
}

Tape& tape_of(Var v) {
  if (!v.valid()) throw UsageError("operation on an unbound Var");
  return *v.tape();
}

}  // namespace

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }
bool Var::needs_grad() const { return tape_->needs_grad(id_); }

Var Tape::param(Param& p, bool track) {
  Node n;
  n.ref = &p.value;
  n.needs_grad = track;
  if (track) n.param = &p;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::param(const Param& p) {
  Node n;
  n.ref = &p.value;
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::push(Matrix value, std::initializer_list<Var> inputs,
               Backward backward) {
  return push(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
              std::move(backward));
}

Var Tape::push(Matrix value, std::span<const Var> inputs, Backward backward) {
  Node n;
  n.value = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape() != this) throw UsageError("mixing Vars from different tapes");
    n.needs_grad = n.needs_grad || nodes_[in.id()].needs_grad;
  }
  if (n.needs_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

void Tape::accumulate(int id, const Matrix& g) { accumulate_expr(id, g); }

Matrix& Tape::grad_buffer(int id) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) n.grad = Matrix::Zero(value(id).rows(), value(id).cols());
  return n.grad;
}

void Tape::backward(Var root) {
  if (root.tape() != this) throw UsageError("backward: foreign Var");
  if (root.value().size() != 1)
    throw ShapeError("backward: root must be a scalar, got " +
                     shape_str(root.value()));
  Node& r = nodes_[root.id()];
  if (!r.needs_grad) return;
  r.grad = Matrix::Ones(1, 1);
  for (int id = root.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.needs_grad || n.grad.size() == 0) continue;
    if (n.param) {
      if (n.param->grad.size() == 0)
        n.param->grad = Matrix::Zero(value(id).rows(), value(id).cols());
      n.param->grad += n.grad;
    } else if (n.backward) {
      n.backward(*this, id);
    }
  }
}

// ---- linear algebra -------------------------------------------------------

Var matmul(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.cols() != B.rows()) shape_fail("matmul", A, B);
  Matrix out = A * B;
  const int ia = a.id(), ib = b.id();
  return tape_of(a).push(std::move(out), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    if (t.needs_grad(ia)) t.accumulate_expr(ia, G * t.value(ib).transpose());
    if (t.needs_grad(ib)) t.accumulate_expr(ib, t.value(ia).transpose() * G);
  });
}

Var add(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.rows() != B.rows() || A.cols() != B.cols()) shape_fail("add", A, B);
  const int ia = a.id(), ib = b.id();
  return tape_of(a).push(A + B, {a, b}, [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate(ib, t.grad(self));
  });
}

Var sub(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.rows() != B.rows() || A.cols() != B.cols()) shape_fail("sub", A, B);
  const int ia = a.id(), ib = b.id();
  return tape_of(a).push(A - B, {a, b}, [ia, ib](Tape& t, int self) {
    t.accumulate(ia, t.grad(self));
    t.accumulate_expr(ib, -t.grad(self));
  });
}

Var mul(Var a, Var b) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  if (A.rows() != B.rows() || A.cols() != B.cols()) shape_fail("mul", A, B);
  const int ia = a.id(), ib = b.id();
  return tape_of(a).push(A.cwiseProduct(B), {a, b}, [ia, ib](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    t.accumulate_expr(ia, G.cwiseProduct(t.value(ib)));
    t.accumulate_expr(ib, G.cwiseProduct(t.value(ia)));
  });
}

Var scale(Var a, double s) {
  const int ia = a.id();
  return tape_of(a).push(a.value() * s, {a}, [ia, s](Tape& t, int self) {
    t.accumulate_expr(ia, t.grad(self) * s);
  });
}

Var one_minus(Var a) {
  const int ia = a.id();
  Matrix out = (1.0 - a.value().array()).matrix();
  return tape_of(a).push(std::move(out), {a}, [ia](Tape& t, int self) {
    t.accumulate_expr(ia, -t.grad(self));
  });
}

Var add_row(Var a, Var row) {
  const Matrix& A = a.value();
  const Matrix& R = row.value();
  if (R.rows() != 1 || R.cols() != A.cols()) shape_fail("add_row", A, R);
  Matrix out = A.rowwise() + R.row(0);
  const int ia = a.id(), ir = row.id();
  return tape_of(a).push(std::move(out), {a, row}, [ia, ir](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    t.accumulate(ia, G);
    t.accumulate_expr(ir, G.colwise().sum());
  });
}

Var affine(Var x, Var w, Var b) { return add_row(matmul(x, w), b); }

Var transpose(Var a) {
  const int ia = a.id();
  return tape_of(a).push(a.value().transpose(), {a}, [ia](Tape& t, int self) {
    t.accumulate_expr(ia, t.grad(self).transpose());
  });
}

Var sum(Var a) {
  const int ia = a.id();
  Matrix out(1, 1);
  out(0, 0) = a.value().sum();
  return tape_of(a).push(std::move(out), {a}, [ia](Tape& t, int self) {
    const double g = t.grad(self)(0, 0);
    const Matrix& v = t.value(ia);
    t.accumulate_expr(ia, Matrix::Constant(v.rows(), v.cols(), g));
  });
}

// ---- element-wise nonlinearities ------------------------------------------

Var sigmoid(Var a) {
  Matrix y = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  const int ia = a.id();
  return tape_of(a).push(std::move(y), {a}, [ia](Tape& t, int self) {
    const auto y = t.value(self).array();
    t.accumulate_expr(ia, (t.grad(self).array() * y * (1.0 - y)).matrix());
  });
}

Var tanh(Var a) {
  Matrix y = a.value().array().tanh().matrix();
  const int ia = a.id();
  return tape_of(a).push(std::move(y), {a}, [ia](Tape& t, int self) {
    const auto y = t.value(self).array();
    t.accumulate_expr(ia, (t.grad(self).array() * (1.0 - y * y)).matrix());
  });
}

Var elu(Var a) {
  const auto x = a.value().array();
  Matrix y = (x > 0.0).select(x, x.exp() - 1.0).matrix();
  const int ia = a.id();
  return tape_of(a).push(std::move(y), {a}, [ia](Tape& t, int self) {
    const auto x = t.value(ia).array();
    const auto y = t.value(self).array();
    auto d = (x > 0.0).select(Eigen::ArrayXXd::Ones(x.rows(), x.cols()), y + 1.0);
    t.accumulate_expr(ia, (t.grad(self).array() * d).matrix());
  });
}

Var relu(Var a) {
  Matrix y = a.value().cwiseMax(0.0);
  const int ia = a.id();
  return tape_of(a).push(std::move(y), {a}, [ia](Tape& t, int self) {
    const auto x = t.value(ia).array();
    t.accumulate_expr(
        ia, (x > 0.0).select(t.grad(self).array(), 0.0).matrix());
  });
}

namespace {
Matrix softmax_rows_value(const Matrix& x) {
  Matrix y(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mx = x.row(r).maxCoeff();
    y.row(r) = (x.row(r).array() - mx).exp().matrix();
    y.row(r) /= y.row(r).sum();
  }
  return y;
}
}  // namespace

Var softmax_rows(Var a) {
  const int ia = a.id();
  return tape_of(a).push(softmax_rows_value(a.value()), {a},
                         [ia](Tape& t, int self) {
    const Matrix& y = t.value(self);
    const Matrix& G = t.grad(self);
    Eigen::VectorXd dot = G.cwiseProduct(y).rowwise().sum();
    Matrix gx = y.cwiseProduct(G.colwise() - dot);
    t.accumulate(ia, gx);
  });
}

Var dropout(Var a, double p, bool train, Rng& rng) {
  if (p < 0.0 || p >= 1.0)
    throw UsageError("dropout probability must lie in [0, 1)");
  if (!train || p == 0.0) return a;
  const Matrix& x = a.value();
  Matrix mask(x.rows(), x.cols());
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      mask(i, j) = rng.uniform() < p ? 0.0 : keep;
  Matrix y = x.cwiseProduct(mask);
  const int ia = a.id();
  return tape_of(a).push(std::move(y), {a},
                         [ia, mask = std::move(mask)](Tape& t, int self) {
    t.accumulate_expr(ia, t.grad(self).cwiseProduct(mask));
  });
}

// ---- indexing -------------------------------------------------------------

Var lookup_rows(Var table, std::span<const int> indices) {
  const Matrix& T = table.value();
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(indices.size()), T.cols());
  std::vector<int> idx(indices.begin(), indices.end());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    if (idx[r] >= T.rows() || idx[r] < -1)
      throw ShapeError("lookup_rows: index " + std::to_string(idx[r]) +
                       " outside table of " + std::to_string(T.rows()) + " rows");
    if (idx[r] >= 0) out.row(static_cast<Eigen::Index>(r)) = T.row(idx[r]);
  }
  const int it = table.id();
  return tape_of(table).push(std::move(out), {table},
                             [it, idx = std::move(idx)](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& gt = t.grad_buffer(it);
    for (std::size_t r = 0; r < idx.size(); ++r)
      if (idx[r] >= 0) gt.row(idx[r]) += G.row(static_cast<Eigen::Index>(r));
  });
}

Var gather_rows(Var a, std::span<const int> indices) {
  return lookup_rows(a, indices);
}

Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
  const Matrix& A = a.value();
  if (start < 0 || count < 0 || start + count > A.rows())
    throw ShapeError("slice_rows: range [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " + shape_str(A));
  const int ia = a.id();
  return tape_of(a).push(A.middleRows(start, count), {a},
                         [ia, start, count](Tape& t, int self) {
    t.grad_buffer(ia).middleRows(start, count) += t.grad(self);
  });
}

Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
  const Matrix& A = a.value();
  if (start < 0 || count < 0 || start + count > A.cols())
    throw ShapeError("slice_cols: range [" + std::to_string(start) + ", " +
                     std::to_string(start + count) + ") outside " + shape_str(A));
  const int ia = a.id();
  return tape_of(a).push(A.middleCols(start, count), {a},
                         [ia, start, count](Tape& t, int self) {
    t.grad_buffer(ia).middleCols(start, count) += t.grad(self);
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    if (p.rows() != rows) shape_fail("concat_cols", parts[0].value(), p.value());
    cols += p.cols();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    spans.emplace_back(p.id(), c);
    c += p.cols();
  }
  return tape_of(parts[0]).push(std::move(out), parts,
                                [spans](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    for (auto [id, start] : spans)
      if (t.needs_grad(id))
        t.grad_buffer(id) += G.middleCols(start, t.value(id).cols());
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  for (const Var& p : parts) {
    if (p.cols() != cols) shape_fail("concat_rows", parts[0].value(), p.value());
    rows += p.rows();
  }
  Matrix out(rows, cols);
  std::vector<std::pair<int, Eigen::Index>> spans;
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    spans.emplace_back(p.id(), r);
    r += p.rows();
  }
  return tape_of(parts[0]).push(std::move(out), parts,
                                [spans](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    for (auto [id, start] : spans)
      if (t.needs_grad(id))
        t.grad_buffer(id) += G.middleRows(start, t.value(id).rows());
  });
}

Var max_rows(Var a) {
  const Matrix& A = a.value();
  if (A.rows() == 0) throw ShapeError("max_rows: empty input");
  Matrix out(1, A.cols());
  std::vector<Eigen::Index> arg(A.cols());
  for (Eigen::Index j = 0; j < A.cols(); ++j) out(0, j) = A.col(j).maxCoeff(&arg[j]);
  const int ia = a.id();
  return tape_of(a).push(std::move(out), {a},
                         [ia, arg = std::move(arg)](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& ga = t.grad_buffer(ia);
    for (std::size_t j = 0; j < arg.size(); ++j)
      ga(arg[j], static_cast<Eigen::Index>(j)) += G(0, static_cast<Eigen::Index>(j));
  });
}

Var window_rows(Var a, int width) {
  if (width < 1 || width % 2 == 0)
    throw ShapeError("window_rows: width must be a positive odd number");
  const Matrix& A = a.value();
  const Eigen::Index L = A.rows(), c = A.cols();
  const int pad = (width - 1) / 2;
  Matrix out = Matrix::Zero(L, width * c);
  for (Eigen::Index r = 0; r < L; ++r)
    for (int w = 0; w < width; ++w) {
      const Eigen::Index src = r + w - pad;
      if (src >= 0 && src < L) out.block(r, w * c, 1, c) = A.row(src);
    }
  const int ia = a.id();
  return tape_of(a).push(std::move(out), {a},
                         [ia, width, pad, L, c](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    Matrix& ga = t.grad_buffer(ia);
    for (Eigen::Index r = 0; r < L; ++r)
      for (int w = 0; w < width; ++w) {
        const Eigen::Index src = r + w - pad;
        if (src >= 0 && src < L) ga.row(src) += G.block(r, w * c, 1, c);
      }
  });
}

// ---- losses ---------------------------------------------------------------

Var cross_entropy_rows(Var logits, std::span<const int> gold) {
  const Matrix& X = logits.value();
  if (static_cast<Eigen::Index>(gold.size()) != X.rows())
    throw ShapeError("cross_entropy_rows: " + std::to_string(gold.size()) +
                     " targets for " + shape_str(X) + " logits");
  std::vector<int> g(gold.begin(), gold.end());
  double total = 0.0;
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const int k = g[static_cast<std::size_t>(r)];
    if (k < 0) continue;
    if (k >= X.cols())
      throw ShapeError("cross_entropy_rows: gold index " + std::to_string(k) +
                       " outside " + std::to_string(X.cols()) + " classes");
    const double mx = X.row(r).maxCoeff();
    const double lse = mx + std::log((X.row(r).array() - mx).exp().sum());
    total += lse - X(r, k);
  }
  Matrix out(1, 1);
  out(0, 0) = total;
  const int ix = logits.id();
  return tape_of(logits).push(std::move(out), {logits},
                              [ix, g = std::move(g)](Tape& t, int self) {
    const double scale = t.grad(self)(0, 0);
    const Matrix& X = t.value(ix);
    Matrix gx = Matrix::Zero(X.rows(), X.cols());
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const int k = g[static_cast<std::size_t>(r)];
      if (k < 0) continue;
      const double mx = X.row(r).maxCoeff();
      Eigen::RowVectorXd p = (X.row(r).array() - mx).exp().matrix();
      p /= p.sum();
      p(k) -= 1.0;
      gx.row(r) = scale * p;
    }
    t.accumulate(ix, gx);
  });
}

Var softmax_cross_entropy(Var logits, int gold) {
  if (logits.rows() != 1)
    throw ShapeError("softmax_cross_entropy: expects a single row of logits");
  const int g[1] = {gold};
  if (gold < 0 || gold >= logits.cols())
    throw ShapeError("softmax_cross_entropy: gold index " +
                     std::to_string(gold) + " out of range");
  return cross_entropy_rows(logits, g);
}

// ---- structured ops -------------------------------------------------------

Var bilinear_rows(Var a, Var b, Var u) {
  const Matrix& A = a.value();
  const Matrix& B = b.value();
  const Matrix& U = u.value();
  const Eigen::Index da = A.cols(), db = B.cols();
  if (A.rows() != B.rows() || U.cols() != db || da == 0 || U.rows() % da != 0)
    throw ShapeError("bilinear_rows: shapes " + shape_str(A) + ", " +
                     shape_str(B) + ", " + shape_str(U));
  const Eigen::Index K = U.rows() / da;
  Matrix out(A.rows(), K);
  for (Eigen::Index k = 0; k < K; ++k) {
    Matrix AU = A * U.middleRows(k * da, da);
    out.col(k) = AU.cwiseProduct(B).rowwise().sum();
  }
  const int ia = a.id(), ib = b.id(), iu = u.id();
  return tape_of(a).push(std::move(out), {a, b, u},
                         [ia, ib, iu, da, K](Tape& t, int self) {
    const Matrix& G = t.grad(self);
    const Matrix& A = t.value(ia);
    const Matrix& B = t.value(ib);
    const Matrix& U = t.value(iu);
    for (Eigen::Index k = 0; k < K; ++k) {
      const auto Uk = U.middleRows(k * da, da);
      const auto gk = G.col(k).asDiagonal();
      if (t.needs_grad(ib)) t.accumulate_expr(ib, gk * (A * Uk));
      Matrix GB = gk * B;
      if (t.needs_grad(ia)) t.accumulate_expr(ia, GB * Uk.transpose());
      if (t.needs_grad(iu))
        t.grad_buffer(iu).middleRows(k * da, da) += A.transpose() * GB;
    }
  });
}

Var lstm_sequence(Var x_proj, Var w_hh, bool reverse) {
  const Matrix& X = x_proj.value();
  const Matrix& W = w_hh.value();
  const Eigen::Index H = W.rows();
  const Eigen::Index m = X.rows();
  if (W.cols() != 4 * H || X.cols() != 4 * H)
    throw ShapeError("lstm_sequence: projections " + shape_str(X) +
                     " and recurrent weights " + shape_str(W));
  if (m == 0) throw ShapeError("lstm_sequence: empty sequence");

  Matrix gates(m, 4 * H);  // activated i, f, g, o
  Matrix cells(m, H);
  Matrix hidden(m, H);
  Eigen::RowVectorXd h = Eigen::RowVectorXd::Zero(H);
  Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(H);
  for (Eigen::Index s = 0; s < m; ++s) {
    const Eigen::Index t = reverse ? m - 1 - s : s;
    Eigen::RowVectorXd pre = X.row(t) + h * W;
    auto gi = pre.segment(0, H).array();
    auto gf = pre.segment(H, H).array();
    auto gg = pre.segment(2 * H, H).array();
    auto go = pre.segment(3 * H, H).array();
    gi = 1.0 / (1.0 + (-gi).exp());
    gf = 1.0 / (1.0 + (-gf).exp());
    gg = gg.tanh();
    go = 1.0 / (1.0 + (-go).exp());
    c = (gf * c.array() + gi * gg).matrix();
    h = (go * c.array().tanh()).matrix();
    gates.row(t) = pre;
    cells.row(t) = c;
    hidden.row(t) = h;
  }

  const int ix = x_proj.id(), iw = w_hh.id();
  Matrix out = hidden;
  return tape_of(x_proj).push(
      std::move(out), {x_proj, w_hh},
      [ix, iw, reverse, H, m, gates = std::move(gates),
       cells = std::move(cells)](Tape& t, int self) {
        const Matrix& G = t.grad(self);
        const Matrix& W = t.value(iw);
        const Matrix& hidden = t.value(self);
        Matrix dX(m, 4 * H);
        Matrix dW = Matrix::Zero(H, 4 * H);
        Eigen::RowVectorXd dh_next = Eigen::RowVectorXd::Zero(H);
        Eigen::RowVectorXd dc_next = Eigen::RowVectorXd::Zero(H);
        for (Eigen::Index s = m - 1; s >= 0; --s) {
          const Eigen::Index tt = reverse ? m - 1 - s : s;
          const bool first = s == 0;
          const Eigen::Index prev = reverse ? tt + 1 : tt - 1;
          auto gi = gates.row(tt).segment(0, H).array();
          auto gf = gates.row(tt).segment(H, H).array();
          auto gg = gates.row(tt).segment(2 * H, H).array();
          auto go = gates.row(tt).segment(3 * H, H).array();
          Eigen::ArrayXXd c_prev =
              first ? Eigen::ArrayXXd::Zero(1, H) : Eigen::ArrayXXd(cells.row(prev).array());
          Eigen::ArrayXXd tc = cells.row(tt).array().tanh();
          Eigen::ArrayXXd dh = G.row(tt).array() + dh_next.array();
          Eigen::ArrayXXd dc = dc_next.array() + dh * go * (1.0 - tc * tc);
          Eigen::RowVectorXd dpre(4 * H);
          dpre.segment(0, H) = (dc * gg * gi * (1.0 - gi)).matrix();
          dpre.segment(H, H) = (dc * c_prev * gf * (1.0 - gf)).matrix();
          dpre.segment(2 * H, H) = (dc * gi * (1.0 - gg * gg)).matrix();
          dpre.segment(3 * H, H) = (dh * tc * go * (1.0 - go)).matrix();
          dX.row(tt) = dpre;
          if (!first) dW += hidden.row(prev).transpose() * dpre;
          dh_next = dpre * W.transpose();
          dc_next = (dc * gf).matrix();
        }
        t.accumulate(ix, dX);
        t.accumulate(iw, dW);
      });
}

std::vector<Matrix> stream_softmax(std::span<const Matrix> scores) {
  if (scores.empty()) throw ShapeError("stream_softmax: no streams");
  const Eigen::Index r = scores[0].rows(), c = scores[0].cols();
  for (const auto& s : scores)
    if (s.rows() != r || s.cols() != c) shape_fail("stream_softmax", scores[0], s);
  Matrix mx = scores[0];
  for (const auto& s : scores) mx = mx.cwiseMax(s);
  std::vector<Matrix> w;
  Matrix total = Matrix::Zero(r, c);
  for (const auto& s : scores) {
    w.push_back((s - mx).array().exp().matrix());
    total += w.back();
  }
  for (auto& x : w) x = x.cwiseQuotient(total);
  return w;
}

Var mix_softmax(std::span<const Var> scores, std::span<const Var> streams) {
  if (scores.size() != streams.size() || scores.empty())
    throw ShapeError("mix_softmax: need one score matrix per stream");
  std::vector<Matrix> s;
  for (const Var& v : scores) s.push_back(v.value());
  std::vector<Matrix> w = stream_softmax(s);
  Matrix out = Matrix::Zero(w[0].rows(), w[0].cols());
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const Matrix& x = streams[i].value();
    if (x.rows() != out.rows() || x.cols() != out.cols())
      shape_fail("mix_softmax", out, x);
    out += w[i].cwiseProduct(x);
  }
  std::vector<Var> inputs(scores.begin(), scores.end());
  inputs.insert(inputs.end(), streams.begin(), streams.end());
  std::vector<int> score_ids, stream_ids;
  for (const Var& v : scores) score_ids.push_back(v.id());
  for (const Var& v : streams) stream_ids.push_back(v.id());
  return tape_of(scores[0]).push(
      std::move(out), inputs,
      [score_ids, stream_ids, w = std::move(w)](Tape& t, int self) {
        const Matrix& G = t.grad(self);
        const std::size_t n = w.size();
        std::vector<Matrix> dw(n);
        Matrix avg = Matrix::Zero(G.rows(), G.cols());
        for (std::size_t i = 0; i < n; ++i) {
          dw[i] = G.cwiseProduct(t.value(stream_ids[i]));
          avg += w[i].cwiseProduct(dw[i]);
          t.accumulate_expr(stream_ids[i], G.cwiseProduct(w[i]));
        }
        for (std::size_t i = 0; i < n; ++i)
          t.accumulate_expr(score_ids[i], w[i].cwiseProduct(dw[i] - avg));
      });
}

}  // namespace dcst::ad
