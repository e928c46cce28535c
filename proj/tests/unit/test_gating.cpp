#include "doctest.h"

#include <cmath>

#include "dcst/gating.hpp"
#include "dcst/gradcheck.hpp"
#include "dcst/params.hpp"
#include "dcst/rng.hpp"

using namespace dcst;

namespace {

Matrix random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  return m;
}

void zero_all(ParameterStore& store) {
  for (auto& [name, p] : store) p.value.setZero();
}

Matrix apply(ParameterStore& store, const GateSpec& spec, const Matrix& hp,
             const std::vector<Matrix>& ht) {
  ad::Tape tape;
  Binder bind(tape, store);
  std::vector<ad::Var> taggers;
  for (const auto& h : ht) taggers.push_back(tape.constant(h));
  return apply_gate(bind, "gate", spec, tape.constant(hp), taggers).value();
}

}  // namespace

TEST_CASE("zero-parameter gates return the exact stream mean") {
  Rng rng(17);
  for (int n = 1; n <= 3; ++n) {
    const GateSpec spec{6, n};
    ParameterStore store;
    add_gate_params(store, "gate", spec, rng);
    zero_all(store);
    const Matrix hp = random_matrix(4, 6, rng);
    std::vector<Matrix> ht;
    for (int i = 0; i < n; ++i) ht.push_back(random_matrix(4, 6, rng));
    Matrix mean = hp;
    for (const auto& h : ht) mean += h;
    mean /= static_cast<double>(n + 1);
    const Matrix g = apply(store, spec, hp, ht);
    CHECK((g - mean).cwiseAbs().maxCoeff() <= 1e-12);

    const auto weights = gate_weights(store, "gate", spec, hp, ht);
    REQUIRE(weights.size() == static_cast<std::size_t>(n + 1));
    for (const auto& w : weights)
      CHECK((w.array() - 1.0 / (n + 1)).abs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("gate2 saturates toward the parser stream for a large bias") {
  Rng rng(2);
  const GateSpec spec{5, 1};
  ParameterStore store;
  add_gate_params(store, "gate", spec, rng);
  zero_all(store);
  store.get("gate.b").value.setConstant(60.0);
  const Matrix hp = random_matrix(3, 5, rng), ht = random_matrix(3, 5, rng);
  CHECK((apply(store, spec, hp, {ht}) - hp).cwiseAbs().maxCoeff() < 1e-12);
  store.get("gate.b").value.setConstant(-60.0);
  CHECK((apply(store, spec, hp, {ht}) - ht).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("mixing weights are a per-element distribution") {
  Rng rng(23);
  const GateSpec spec{7, 3};
  ParameterStore store;
  add_gate_params(store, "gate", spec, rng);
  for (auto& [name, p] : store) p.value = 2.0 * random_matrix(p.value.rows(), p.value.cols(), rng);
  const Matrix hp = random_matrix(5, 7, rng);
  std::vector<Matrix> ht;
  for (int i = 0; i < 3; ++i) ht.push_back(random_matrix(5, 7, rng));
  const auto w = gate_weights(store, "gate", spec, hp, ht);
  Matrix total = Matrix::Zero(5, 7);
  for (const auto& a : w) {
    CHECK(a.minCoeff() >= 0.0);
    total += a;
  }
  CHECK((total.array() - 1.0).abs().maxCoeff() < 1e-12);
  // The fused output is the weighted sum of the streams.
  Matrix expect = w[0].cwiseProduct(hp);
  for (int i = 0; i < 3; ++i) expect += w[i + 1].cwiseProduct(ht[i]);
  CHECK((apply(store, spec, hp, ht) - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gate gradients match finite differences") {
  for (int n : {1, 3}) {
    Rng rng(40 + n);
    const GateSpec spec{8, n};
    ParameterStore store;
    add_gate_params(store, "gate", spec, rng);
    for (auto& [name, p] : store) p.value = 0.5 * random_matrix(p.value.rows(), p.value.cols(), rng);
    store.add("hp", 3, 8).value = random_matrix(3, 8, rng);
    for (int i = 0; i < n; ++i) store.add("ht" + std::to_string(i), 3, 8).value = random_matrix(3, 8, rng);
    const Matrix r = random_matrix(3, 8, rng);
    GradCheckReport rep = grad_check(
        [&](ad::Tape& tape) {
          Binder bind(tape, store);
          std::vector<ad::Var> ht;
          for (int i = 0; i < n; ++i) ht.push_back(bind("ht" + std::to_string(i)));
          ad::Var g = apply_gate(bind, "gate", spec, bind("hp"), ht);
          return ad::sum(ad::mul(g, tape.constant(r)));
        },
        store);
    INFO(rep.describe());
    CHECK(rep.ok());
  }
}
