#include "doctest.h"

#include <cmath>

#include "dcst/config.hpp"
#include "dcst/errors.hpp"
#include "dcst/gradcheck.hpp"
#include "dcst/parser.hpp"
#include "dcst/rng.hpp"
#include "dcst/synth.hpp"
#include "dcst/tree.hpp"
#include "support.hpp"

using namespace dcst;

namespace {

ModelConfig micro_config() {
  RunConfig rc;
  rc.set("profile", "tiny");
  ModelConfig c = rc.model();
  c.word_dim = 4;
  c.char_dim = 3;
  c.char_filters = 3;
  c.pos_dim = 3;
  c.hidden = 3;
  c.layers = 1;
  c.arc_mlp = 4;
  c.label_mlp = 3;
  c.epochs = 3;
  c.dropout = 0.0;
  return c;
}

FusedEncoder random_encoder(const ModelConfig& c, const Corpus& corpus, const std::string& name,
                            std::uint64_t seed) {
  FusedEncoder f;
  f.name = name;
  f.encoder = Encoder(c.encoder_spec(), InputVocab::build(corpus));
  Rng rng(seed);
  f.encoder.add_params(f.store, FusedEncoder::kPrefix, rng);
  return f;
}

}  // namespace

TEST_CASE("uniform scores give the closed-form loss") {
  for (int m : {1, 3, 7}) {
    for (int k : {1, 4, 9}) {
      ad::Tape tape;
      ad::Var arcs = tape.constant(Matrix::Zero(m, m + 1));
      ad::Var labels = tape.constant(Matrix::Zero(m, k));
      std::vector<int> heads(m, 0), ids(m, 0);
      for (int i = 1; i < m; ++i) heads[i] = i;
      const double loss = parse_loss(arcs, labels, heads, ids).scalar();
      const double expect = m * (std::log(m + 1.0) + std::log(static_cast<double>(k)));
      CHECK(std::abs(loss - expect) <= 1e-9);
    }
  }
}

TEST_CASE("zero biaffine parameters give zero scores") {
  ad::Tape tape;
  Rng rng(4);
  Matrix r(4, 3);
  for (Eigen::Index i = 0; i < r.size(); ++i) r.data()[i] = rng.normal();
  ad::Var s = biaffine_arcs(tape.constant(r), tape.constant(Matrix::Zero(3, 3)),
                            tape.constant(Matrix::Zero(3, 1)));
  CHECK(s.rows() == 3);
  CHECK(s.cols() == 4);
  CHECK(s.value().isZero());
}

TEST_CASE("biaffine arc scores follow r_i U r_j^T + r_j w") {
  Rng rng(6);
  Matrix r(4, 2), u(2, 2), w(2, 1);
  for (auto* m : {&r, &u, &w})
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = rng.normal();
  ad::Tape tape;
  const Matrix s = biaffine_arcs(tape.constant(r), tape.constant(u), tape.constant(w)).value();
  for (int i = 1; i <= 3; ++i)
    for (int j = 0; j <= 3; ++j) {
      const double expect = (r.row(i) * u * r.row(j).transpose())(0, 0) + (r.row(j) * w)(0, 0);
      CHECK(s(i - 1, j) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("gradient check: full biaffine loss on a 4-token sentence") {
  const ModelConfig c = micro_config();
  Corpus train = {testing::make_sentence({2, 0, 4, 2}, {"DET", "NOUN", "ADP", "NOUN"},
                                         {"det", "root", "case", "nmod"})};
  ParserModel model = ParserModel::create(c, train);
  GradCheckReport rep = grad_check(
      [&](ad::Tape& tape) { return model.loss(tape, train[0], Ctx{}); }, model.store());
  INFO(rep.describe());
  CHECK(rep.ok());
}

TEST_CASE("gradient check: hybrid with three gated encoders on a 3-token sentence") {
  const ModelConfig c = micro_config();
  Corpus train = {testing::make_sentence({2, 0, 2}, {"PRON", "VERB", "NOUN"},
                                         {"nsubj", "root", "obj"})};
  ParserModel model = ParserModel::create(c, train, nullptr, "hybrid");
  std::vector<FusedEncoder> enc;
  for (int i = 0; i < 3; ++i) enc.push_back(random_encoder(c, train, "t" + std::to_string(i), 50 + i));
  model.attach_encoders(std::move(enc));
  std::vector<NamedStore> stores = {{"parser", &model.store()}};
  for (auto& f : model.fused()) stores.push_back({f.name, &f.store});
  GradCheckReport rep = grad_check(
      [&](ad::Tape& tape) { return model.loss(tape, train[0], Ctx{}); }, stores);
  INFO(rep.describe());
  CHECK(rep.ok());
}

TEST_CASE("frozen fused encoders receive no gradient") {
  const ModelConfig c = micro_config();
  Corpus train = {testing::make_sentence({2, 0, 2})};
  ParserModel model = ParserModel::create(c, train);
  std::vector<FusedEncoder> enc;
  enc.push_back(random_encoder(c, train, "t", 9));
  enc[0].frozen = true;
  model.attach_encoders(std::move(enc));
  model.fused()[0].store.zero_grad();
  ad::Tape tape;
  tape.backward(model.loss(tape, train[0], Ctx{}));
  for (const auto& [name, p] : model.fused()[0].store) CHECK(p.grad.isZero());
  CHECK(model.trainable_stores().size() == 1);
}

TEST_CASE("encoder width mismatch is rejected") {
  const ModelConfig c = micro_config();
  Corpus train = {testing::make_sentence({2, 0, 2})};
  ParserModel model = ParserModel::create(c, train);
  ModelConfig wide = c;
  wide.hidden = 5;
  std::vector<FusedEncoder> enc;
  enc.push_back(random_encoder(wide, train, "t", 1));
  CHECK_THROWS_AS(model.attach_encoders(std::move(enc)), ShapeError);
}

TEST_CASE("predictions are valid trees and archives round trip") {
  ModelConfig c = micro_config();
  const Corpus corpus = generate_synthetic_corpus(20, 3);
  ParserModel model = ParserModel::create(c, corpus);
  std::vector<FusedEncoder> enc;
  enc.push_back(random_encoder(c, corpus, "nc", 2));
  enc.push_back(random_encoder(c, corpus, "dr", 3));
  model.attach_encoders(std::move(enc));

  const Archive a = model.to_archive();
  const ParserModel back = ParserModel::from_archive(
      deserialize_archive(serialize_archive(a), "<memory>"));
  CHECK(back.labels() == model.labels());
  CHECK(back.fused().size() == 2);
  for (const auto& s : corpus) {
    const DepTree t = model.predict(s);
    CHECK(is_valid_tree(t.heads));
    CHECK(t.labels.size() == s.size());
    CHECK(back.predict(s) == t);
    CHECK((back.arc_scores(s) - model.arc_scores(s)).cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(serialize_archive(back.to_archive()) == serialize_archive(a));
}

TEST_CASE("corrupted archives raise DataError") {
  const ModelConfig c = micro_config();
  const Corpus corpus = generate_synthetic_corpus(5, 3);
  Archive a = ParserModel::create(c, corpus).to_archive();
  a.tensors.erase(a.tensors.begin());
  CHECK_THROWS_AS(ParserModel::from_archive(a), DataError);
  Archive b = ParserModel::create(c, corpus).to_archive();
  b.meta.erase("config");
  CHECK_THROWS_AS(ParserModel::from_archive(b), DataError);
  CHECK_THROWS_AS(deserialize_archive("garbage", "x"), DataError);
}

TEST_CASE("training is deterministic under a seed and lowers the loss") {
  ModelConfig c = micro_config();
  c.epochs = 4;
  c.dropout = 0.2;
  const Corpus corpus = generate_synthetic_corpus(30, 5);
  const Corpus train(corpus.begin(), corpus.begin() + 20);
  const Corpus dev(corpus.begin() + 20, corpus.end());
  TrainReport r1, r2;
  ParserModel a = train_parser(train, dev, c, &r1);
  ParserModel b = train_parser(train, dev, c, &r2);
  CHECK(a.store().values_equal(b.store()));
  CHECK(r1.train_loss == r2.train_loss);
  REQUIRE(r1.train_loss.size() >= 2);
  CHECK(r1.train_loss.back() < r1.train_loss.front());
  CHECK(r1.best_dev == doctest::Approx(dev_las(a, dev)));

  c.seed = 2;
  ParserModel other = train_parser(train, dev, c);
  CHECK_FALSE(other.store().values_equal(a.store()));
}

TEST_CASE("training rejects an empty corpus") {
  CHECK_THROWS_AS(train_parser(Corpus{}, Corpus{}, micro_config()), UsageError);
}
