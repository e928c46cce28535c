#include "doctest.h"

#include "dcst/conllu.hpp"
#include "dcst/errors.hpp"
#include "dcst/rng.hpp"
#include "support.hpp"

using namespace dcst;

namespace {

const char* kThree =
    "# sent_id = 1\n"
    "1\tThe\tthe\tDET\t_\t_\t2\tdet\t_\t_\n"
    "2\tdog\tdog\tNOUN\t_\t_\t3\tnsubj\t_\t_\n"
    "3\tbarks\tbark\tVERB\t_\t_\t0\troot\t_\t_\n"
    "\n";

}  // namespace

TEST_CASE("a three-token block becomes one sentence") {
  Corpus c = parse_conllu(kThree);
  REQUIRE(c.size() == 1);
  REQUIRE(c[0].size() == 3);
  CHECK(c[0].tokens[1].form == "dog");
  CHECK(c[0].tokens[1].upos == "NOUN");
  CHECK(c[0].tokens[1].head == 3);
  CHECK(c[0].tokens[1].deprel == "nsubj");
  CHECK(c[0].tokens[2].head == 0);
}

TEST_CASE("multiword ranges and empty nodes are skipped") {
  const char* text =
      "1-2\tvamonos\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "1\tvamos\tir\tVERB\t_\t_\t0\troot\t_\t_\n"
      "2\tnos\tnosotros\tPRON\t_\t_\t1\tobj\t_\t_\n"
      "2.1\tx\t_\t_\t_\t_\t_\t_\t_\t_\n"
      "3\t!\t!\tPUNCT\t_\t_\t1\tpunct\t_\t_\n\n";
  Corpus c = parse_conllu(text);
  REQUIRE(c.size() == 1);
  REQUIRE(c[0].size() == 3);
  for (int i = 0; i < 3; ++i) CHECK(c[0].tokens[i].id == i + 1);
}

TEST_CASE("a row with nine columns is reported with its line number") {
  const char* text =
      "1\tA\ta\tDET\t_\t_\t2\tdet\t_\t_\n"
      "2\tB\tb\tNOUN\t_\t_\t0\troot\t_\n\n";
  try {
    parse_conllu(text, "bad.conllu");
    FAIL("expected a DataError");
  } catch (const DataError& e) {
    CHECK(e.line() == 2);
    CHECK(e.source() == "bad.conllu");
    CHECK(std::string(e.what()).find("bad.conllu:2") != std::string::npos);
  }
}

TEST_CASE("writing: empty corpus, single blank line terminator") {
  CHECK(write_conllu({}) == "");
  const std::string out = write_conllu(parse_conllu(kThree));
  REQUIRE(out.size() >= 2);
  CHECK(out.substr(out.size() - 2) == "\n\n");
  CHECK(out.substr(out.size() - 3) != "\n\n\n");
}

TEST_CASE("parse . write . parse is a fixpoint on random corpora") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    Corpus c;
    const int n = 1 + static_cast<int>(rng.below(5));
    for (int k = 0; k < n; ++k) {
      const int m = 1 + static_cast<int>(rng.below(9));
      c.push_back(testing::make_sentence(testing::random_heads(m, rng),
                                         testing::random_pos(m, rng)));
    }
    const std::string once = write_conllu(c);
    const Corpus back = parse_conllu(once);
    CHECK(back == c);
    CHECK(write_conllu(back) == once);
  }
}

TEST_CASE("strip_annotations drops heads and labels and is idempotent") {
  Corpus c = parse_conllu(kThree);
  Sentence s = strip_annotations(c[0]);
  REQUIRE(s.size() == 3);
  for (std::size_t i = 0; i < s.size(); ++i) {
    CHECK(s.tokens[i].form == c[0].tokens[i].form);
    CHECK(s.tokens[i].upos == c[0].tokens[i].upos);
    CHECK_FALSE(s.tokens[i].head.has_value());
    CHECK_FALSE(s.tokens[i].deprel.has_value());
  }
  CHECK_FALSE(s.has_heads());
  CHECK(strip_annotations(s) == s);
}
