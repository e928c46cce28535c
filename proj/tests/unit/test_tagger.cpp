#include "doctest.h"

#include "dcst/errors.hpp"
#include "dcst/synth.hpp"
#include "dcst/tagger.hpp"
#include "support.hpp"

using namespace dcst;
using testing::micro_config;

namespace {

Sentence words(const std::vector<std::string>& forms) {
  Sentence s;
  for (std::size_t i = 0; i < forms.size(); ++i) {
    Token t;
    t.id = static_cast<int>(i) + 1;
    t.form = forms[i];
    s.tokens.push_back(t);
  }
  return s;
}

// Pushes every prediction onto the unknown class.
void favour_unknown(TaggerModel& model, const std::string& decoder) {
  model.store().get(decoder + ".out.b").value(0, 0) = 1e3;
}

}  // namespace

TEST_CASE("LM targets are the next word forward and the previous word backward") {
  const Corpus train = {words({"a", "b", "c"}), words({"b", "d"})};
  const TaggerModel lm = TaggerModel::create_lm(micro_config(), train);
  const Vocab& v = lm.tags();
  const TaggedCorpus c = lm_corpus(train);
  REQUIRE(c.size() == 2);
  CHECK(c.scheme == Scheme::LM);
  const std::vector<int> expect = {v.id("b"), v.id("c"), -1, -1, v.id("a"), v.id("b")};
  CHECK(lm.targets(train[0], c.tags[0]) == expect);
  // Words outside the LM vocabulary are a legitimate target: the unknown class.
  const std::vector<Sentence> unseen = {words({"a", "zzz"})};
  CHECK(lm.targets(unseen[0], lm_corpus(unseen).tags[0]) ==
        std::vector<int>{Vocab::kUnk, -1, -1, v.id("a")});
}

TEST_CASE("LM vocabulary keeps the most frequent forms, ties by string order") {
  const Corpus corpus = {words({"x", "y", "y", "z"}), words({"z", "w"})};
  const Vocab v = build_lm_vocab(corpus, 3);
  REQUIRE(v.size() == 4);  // plus the unknown entry
  CHECK(v.token(1) == "y");
  CHECK(v.token(2) == "z");
  CHECK(v.token(3) == "w");
}

TEST_CASE("the unknown class never counts as a correct prediction") {
  const Corpus corpus = generate_synthetic_corpus(6, 2);
  const TaggedCorpus nc = derive_tagged_corpus(corpus, Scheme::NC);
  TaggerModel tagger = TaggerModel::create(micro_config(), nc);
  favour_unknown(tagger, "dec");
  const AccuracyReport r = tag_accuracy(tagger, nc);
  CHECK(r.correct == 0);
  CHECK(r.total > 0);
  CHECK(r.accuracy == 0.0);

  // LM: the sentence below has only unknown neighbours, so the model predicts
  // every target "correctly" as unknown and still scores zero.
  const Corpus train = {words({"a", "b"})};
  TaggerModel lm = TaggerModel::create_lm(micro_config(), train);
  favour_unknown(lm, "fwd_dec");
  favour_unknown(lm, "bwd_dec");
  const std::vector<Sentence> unseen = {words({"p", "q", "r"}), words({"p"})};
  const AccuracyReport u = tag_accuracy(lm, lm_corpus(unseen));
  CHECK(u.total == 4);  // the one-word sentence has no targets and is skipped
  CHECK(u.correct == 0);
  CHECK(u.sentence_index == std::vector<std::size_t>{0});
}

TEST_CASE("tag_accuracy rejects empty corpora and scheme mismatches") {
  const Corpus corpus = generate_synthetic_corpus(4, 2);
  const TaggedCorpus nc = derive_tagged_corpus(corpus, Scheme::NC);
  const TaggerModel tagger = TaggerModel::create(micro_config(), nc);
  CHECK_THROWS_AS(tag_accuracy(tagger, TaggedCorpus{Scheme::NC, {}, {}}), UsageError);
  CHECK_THROWS_AS(tag_accuracy(tagger, derive_tagged_corpus(corpus, Scheme::DR)), UsageError);
  CHECK_THROWS_AS(train_tagger(TaggedCorpus{}, nc, micro_config()), UsageError);
}

TEST_CASE("extracted encoders carry the tagger's encoder weights") {
  const Corpus corpus = generate_synthetic_corpus(8, 4);
  const TaggedCorpus dr = derive_tagged_corpus(corpus, Scheme::DR);
  const TaggerModel tagger = TaggerModel::create(micro_config(), dr);
  const FusedEncoder f = tagger.extract_encoder("dr", true);
  CHECK(f.name == "dr");
  CHECK(f.frozen);
  std::size_t n = 0;
  for (const auto& [name, p] : tagger.store()) {
    if (name.rfind(std::string(TaggerModel::kEncoderPrefix) + ".", 0) != 0) continue;
    REQUIRE(f.store.contains(name));
    CHECK(f.store.get(name).value == p.value);
    ++n;
  }
  CHECK(n == f.store.size());
  CHECK(n > 0);
}

TEST_CASE("tagger archives round trip") {
  const Corpus corpus = generate_synthetic_corpus(10, 5);
  for (Scheme scheme : {Scheme::NC, Scheme::DR, Scheme::RPE}) {
    const TaggedCorpus tc = derive_tagged_corpus(corpus, scheme);
    const TaggerModel t = TaggerModel::create(micro_config(), tc);
    const TaggerModel back =
        TaggerModel::from_archive(deserialize_archive(serialize_archive(t.to_archive()), "mem"));
    CHECK(back.scheme() == scheme);
    CHECK(back.tags() == t.tags());
    CHECK(back.store().values_equal(t.store()));
    for (const auto& s : corpus) CHECK(back.predict(s) == t.predict(s));
  }
  const TaggerModel lm = TaggerModel::create_lm(micro_config(), corpus);
  const TaggerModel lm_back = TaggerModel::from_archive(lm.to_archive());
  CHECK(lm_back.scheme() == Scheme::LM);
  CHECK(lm_back.predict(corpus[0]) == lm.predict(corpus[0]));
}

TEST_CASE("a small tagger fits its training data") {
  ModelConfig c = micro_config();
  c.hidden = 24;
  c.tagger_fc1 = 24;
  c.tagger_fc2 = 16;
  c.epochs = 40;
  c.patience = 40;
  c.lr = 0.005;
  c.dropout = 0.0;
  const Corpus corpus = generate_synthetic_corpus(20, 8);
  const TaggedCorpus nc = derive_tagged_corpus(corpus, Scheme::NC);
  TrainReport report;
  const TaggerModel t = train_tagger(nc, nc, c, &report);
  CHECK(tag_accuracy(t, nc).accuracy > 0.8);
  CHECK(report.train_loss.back() < report.train_loss.front());
}
