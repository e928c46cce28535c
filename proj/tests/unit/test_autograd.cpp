#include "doctest.h"

#include <cmath>

#include "dcst/autograd.hpp"
#include "dcst/errors.hpp"
#include "dcst/gradcheck.hpp"
#include "dcst/layers.hpp"
#include "dcst/params.hpp"
#include "dcst/rng.hpp"

using namespace dcst;
using ad::Var;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
  return m;
}

// A store with named random parameters plus a fixed weighting matrix per
// output shape, so that every check differentiates a non-trivial scalar.
struct Fixture {
  ParameterStore store;
  Rng rng{1234};

  Param& add(const std::string& name, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
    Param& p = store.add(name, r, c);
    p.value = random_matrix(r, c, rng, scale);
    return p;
  }

  // sum(f(...) .* R) with R fixed per call site.
  Var weighted(Var x, const Matrix& r) {
    return ad::sum(ad::mul(x, x.tape()->constant(r)));
  }

  void check(const std::function<Var(Binder&)>& f, Eigen::Index rows, Eigen::Index cols) {
    const Matrix r = random_matrix(rows, cols, rng);
    GradCheckReport rep = grad_check(
        [&](ad::Tape& tape) {
          Binder bind(tape, store);
          return weighted(f(bind), r);
        },
        store);
    INFO(rep.describe());
    CHECK(rep.ok());
    CHECK(rep.max_rel_error <= 1e-4);
  }
};

}  // namespace

TEST_CASE("grad_check on a quadratic") {
  ParameterStore store;
  Param& w = store.add("w", 1, 1);
  w.value(0, 0) = 3.0;
  ad::Tape tape;
  Binder bind(tape, store);
  Var x = bind("w");
  Var y = ad::mul(x, x);
  tape.backward(y);
  CHECK(w.grad(0, 0) == doctest::Approx(6.0).epsilon(1e-12));
  GradCheckReport rep = grad_check(
      [&](ad::Tape& t) {
        Binder b(t, store);
        Var v = b("w");
        return ad::mul(v, v);
      },
      store);
  CHECK(rep.ok());
  CHECK(rep.max_rel_error < 1e-7);
}

TEST_CASE("primitive closed forms") {
  ad::Tape tape;
  Matrix zero = Matrix::Zero(1, 1);
  CHECK(ad::sigmoid(tape.constant(zero)).scalar() == 0.5);
  Matrix big(1, 2);
  big << -1e4, 2.5;
  Var e = ad::elu(tape.constant(big));
  CHECK(e.value()(0, 0) == doctest::Approx(-1.0));
  CHECK(e.value()(0, 1) == 2.5);
  Var sm = ad::softmax_rows(tape.constant(Matrix::Constant(1, 4, 0.7)));
  for (int k = 0; k < 4; ++k) CHECK(sm.value()(0, k) == doctest::Approx(0.25).epsilon(1e-15));
  Matrix onehot = Matrix::Zero(1, 5);
  onehot(0, 2) = 1e6;
  CHECK(ad::softmax_cross_entropy(tape.constant(onehot), 2).scalar() == doctest::Approx(0.0));

  // d sigmoid / dx at 0 is 1/4.
  ParameterStore store;
  Param& x = store.add("x", 1, 1);
  ad::Tape t2;
  Binder bind(t2, store);
  t2.backward(ad::sigmoid(bind("x")));
  CHECK(x.grad(0, 0) == doctest::Approx(0.25));
}

TEST_CASE("gradients of every primitive") {
  Fixture fx;
  fx.add("a", 3, 4);
  fx.add("b", 4, 2);
  fx.add("c", 3, 4);
  fx.add("row", 1, 4);
  fx.add("row2", 1, 2);
  fx.add("sq", 3, 3);
  fx.add("u", 2 * 4, 4, 0.5);
  fx.add("tab", 6, 4);

  SUBCASE("matmul") { fx.check([](Binder& b) { return ad::matmul(b("a"), b("b")); }, 3, 2); }
  SUBCASE("add/sub/mul/scale") {
    fx.check([](Binder& b) { return ad::add(b("a"), b("c")); }, 3, 4);
    fx.check([](Binder& b) { return ad::sub(b("a"), b("c")); }, 3, 4);
    fx.check([](Binder& b) { return ad::mul(b("a"), b("c")); }, 3, 4);
    fx.check([](Binder& b) { return ad::scale(b("a"), -1.7); }, 3, 4);
    fx.check([](Binder& b) { return ad::one_minus(b("a")); }, 3, 4);
  }
  SUBCASE("broadcast and affine") {
    fx.check([](Binder& b) { return ad::add_row(b("a"), b("row")); }, 3, 4);
    fx.check([](Binder& b) { return ad::affine(b("c"), b("b"), b("row2")); }, 3, 2);
  }
  SUBCASE("transpose and sum") {
    fx.check([](Binder& b) { return ad::transpose(b("a")); }, 4, 3);
    fx.check([](Binder& b) { return ad::sum(b("a")); }, 1, 1);
  }
  SUBCASE("nonlinearities") {
    fx.check([](Binder& b) { return ad::sigmoid(b("a")); }, 3, 4);
    fx.check([](Binder& b) { return ad::tanh(b("a")); }, 3, 4);
    fx.check([](Binder& b) { return ad::elu(b("a")); }, 3, 4);
    fx.check([](Binder& b) { return ad::relu(b("a")); }, 3, 4);
    fx.check([](Binder& b) { return ad::softmax_rows(b("a")); }, 3, 4);
  }
  SUBCASE("dropout with a fixed mask") {
    fx.check(
        [](Binder& b) {
          Rng r(7);
          return ad::dropout(b("a"), 0.4, true, r);
        },
        3, 4);
  }
  SUBCASE("row selection") {
    const std::vector<int> ids = {2, -1, 5, 2};
    fx.check([&](Binder& b) { return ad::lookup_rows(b("tab"), ids); }, 4, 4);
    const std::vector<int> rows = {0, 2, 2, 1};
    fx.check([&](Binder& b) { return ad::gather_rows(b("a"), rows); }, 4, 4);
    fx.check([](Binder& b) { return ad::slice_rows(b("a"), 1, 2); }, 2, 4);
    fx.check([](Binder& b) { return ad::slice_cols(b("a"), 1, 3); }, 3, 3);
  }
  SUBCASE("concatenation") {
    fx.check([](Binder& b) { return ad::concat_cols({b("a"), b("c")}); }, 3, 8);
    fx.check([](Binder& b) { return ad::concat_rows({b("a"), b("row")}); }, 4, 4);
  }
  SUBCASE("max_rows and window_rows") {
    fx.check([](Binder& b) { return ad::max_rows(b("a")); }, 1, 4);
    fx.check([](Binder& b) { return ad::window_rows(b("a"), 3); }, 3, 12);
  }
  SUBCASE("losses") {
    const std::vector<int> gold = {1, -1, 3};
    fx.check([&](Binder& b) { return ad::cross_entropy_rows(b("a"), gold); }, 1, 1);
    fx.check([](Binder& b) { return ad::softmax_cross_entropy(ad::slice_rows(b("a"), 0, 1), 2); },
             1, 1);
  }
  SUBCASE("bilinear_rows") {
    fx.check([](Binder& b) { return ad::bilinear_rows(b("a"), b("c"), b("u")); }, 3, 2);
  }
  SUBCASE("mix_softmax") {
    fx.check(
        [](Binder& b) {
          const Var scores[] = {b("a"), b("c"), ad::scale(b("a"), 0.3)};
          const Var streams[] = {b("c"), b("a"), ad::tanh(b("c"))};
          return ad::mix_softmax(scores, streams);
        },
        3, 4);
  }
}

TEST_CASE("LSTM: fused recurrence matches the stepwise reference") {
  Fixture fx;
  fx.add("x", 5, 3);
  Rng rng(3);
  add_lstm_params(fx.store, "lstm", 3, 4, rng);
  for (bool reverse : {false, true}) {
    ad::Tape tape;
    Binder bind(tape, fx.store);
    const LstmWeights w = bind_lstm(bind, "lstm");
    const Matrix fused = lstm_run(bind("x"), w, reverse).value();
    const Matrix steps = lstm_run_stepwise(bind("x"), w, reverse).value();
    CHECK((fused - steps).cwiseAbs().maxCoeff() < 1e-12);
  }
  fx.check(
      [](Binder& b) { return lstm_run(b("x"), bind_lstm(b, "lstm"), false); }, 5, 4);
  fx.check(
      [](Binder& b) { return lstm_run(b("x"), bind_lstm(b, "lstm"), true); }, 5, 4);
}

TEST_CASE("LSTM: zero weights and inputs stay at the zero fixed point") {
  ParameterStore store;
  Rng rng(1);
  add_lstm_params(store, "lstm", 3, 4, rng);
  for (auto& [name, p] : store) p.value.setZero();
  ad::Tape tape;
  Binder bind(tape, store);
  const LstmWeights w = bind_lstm(bind, "lstm");
  auto [h, c] = lstm_step(tape.constant(Matrix::Zero(1, 3)), tape.constant(Matrix::Zero(1, 4)),
                          tape.constant(Matrix::Zero(1, 4)), w);
  CHECK(h.value().isZero());
  CHECK(c.value().isZero());
}

TEST_CASE("BiLSTM: reversing the input swaps the direction halves") {
  ParameterStore store;
  Rng rng(8);
  BiLstmSpec spec{3, 4, 1};
  add_bilstm_params(store, "bi", spec, rng);
  for (const char* part : {".w_ih", ".w_hh", ".b"})
    store.get(std::string("bi.l0.bwd") + part).value = store.get(std::string("bi.l0.fwd") + part).value;
  const Matrix x = random_matrix(5, 3, rng);
  const Matrix xr = x.colwise().reverse();
  ad::Tape tape;
  Binder bind(tape, store);
  const Matrix out = bilstm_encode(bind, "bi", spec, tape.constant(x), Ctx{}).value();
  const Matrix outr = bilstm_encode(bind, "bi", spec, tape.constant(xr), Ctx{}).value();
  const Matrix fwd = out.leftCols(4), bwd = out.rightCols(4);
  const Matrix fwd_r = outr.leftCols(4), bwd_r = outr.rightCols(4);
  CHECK((fwd - Matrix(bwd_r.colwise().reverse())).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((bwd - Matrix(fwd_r.colwise().reverse())).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("Adam: first step moves by lr against the gradient sign") {
  ParameterStore store;
  Param& p = store.add("p", 1, 2);
  p.value << 1.0, -2.0;
  p.grad << 0.5, -3.0;
  AdamConfig cfg;
  cfg.lr = 0.002;
  adam_update(store, cfg);
  CHECK(std::abs(p.value(0, 0) - 0.998) < 1e-9);
  CHECK(std::abs(p.value(0, 1) - (-1.998)) < 1e-9);
  CHECK(store.step() == 1);
}

TEST_CASE("Tape rejects non-finite values during grad_check") {
  ParameterStore store;
  store.add("w", 1, 1).value(0, 0) = 0.0;
  CHECK_THROWS_AS(grad_check(
                      [&](ad::Tape& t) {
                        Binder b(t, store);
                        return ad::scale(b("w"), std::numeric_limits<double>::infinity());
                      },
                      store),
                  NumericError);
}

TEST_CASE("untracked binders leave parameter gradients untouched") {
  ParameterStore store;
  Param& w = store.add("w", 2, 2);
  w.value.setConstant(1.0);
  store.zero_grad();
  ad::Tape tape;
  Binder frozen(tape, store, false);
  tape.backward(ad::sum(ad::mul(frozen("w"), frozen("w"))));
  CHECK(w.grad.isZero());
}
