#include "doctest.h"

#include "dcst/mst.hpp"
#include "dcst/rng.hpp"
#include "dcst/tree.hpp"

using namespace dcst;

namespace {

Matrix random_scores(int m, Rng& rng, bool integer) {
  Matrix s(m, m + 1);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= m; ++j)
      s(i, j) = integer ? static_cast<double>(rng.below(4)) : rng.uniform(-3.0, 3.0);
  return s;
}

}  // namespace

TEST_CASE("single-rooted tree counts") {
  CHECK(count_single_root_trees(1) == 1);
  CHECK(count_single_root_trees(2) == 2);
  CHECK(count_single_root_trees(3) == 9);
  CHECK(count_single_root_trees(4) == 64);
}

TEST_CASE("tree_score sums the chosen arcs") {
  Matrix s(2, 3);
  s << 9, 9, 1,
       2, 5, 9;
  CHECK(tree_score(s, std::vector<int>{2, 0}) == doctest::Approx(3.0));
  CHECK(tree_score(s, std::vector<int>{0, 1}) == doctest::Approx(14.0));
}

TEST_CASE("decode_mst prefers a single root over a better multi-root forest") {
  // Both tokens love ROOT, but only one may attach there.
  Matrix s(2, 3);
  s << 10, 0, 1,
       10, 2, 0;
  const auto heads = decode_mst(s);
  CHECK(is_valid_tree(heads));
  CHECK(heads == std::vector<int>{0, 1});
}

TEST_CASE("decode_mst breaks cycles") {
  Matrix s(3, 4);
  s << 1, 0, 10, 0,
       0, 10, 0, 0,
       5, 0, 0, 0;
  // 1 <-> 2 is the strongest pair of arcs but forms a cycle; the best tree
  // keeps one of them and scores 15.
  const auto heads = decode_mst(s);
  CHECK(is_valid_tree(heads));
  CHECK(tree_score(s, heads) == doctest::Approx(15.0));
  CHECK(tree_score(s, heads) == doctest::Approx(tree_score(s, brute_force_best_tree(s))));
}

TEST_CASE("decode_mst matches brute force, m = 1..6") {
  Rng rng(99);
  for (int m = 1; m <= 6; ++m) {
    for (int trial = 0; trial < 100; ++trial) {
      const bool integer = trial % 2 == 1;  // ties on purpose
      const Matrix s = random_scores(m, rng, integer);
      const auto mst = decode_mst(s);
      const auto best = brute_force_best_tree(s);
      REQUIRE(is_valid_tree(mst));
      CHECK(tree_score(s, mst) == doctest::Approx(tree_score(s, best)).epsilon(1e-12));
    }
  }
}

TEST_CASE("decode_mst on a long sentence returns a valid tree") {
  Rng rng(3);
  const Matrix s = random_scores(40, rng, false);
  CHECK(is_valid_tree(decode_mst(s)));
}
