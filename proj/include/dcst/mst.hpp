#pragma once

#include <span>
#include <vector>

#include "dcst/autograd.hpp"

namespace dcst {

// Arc scores for an m-token sentence are an m x (m + 1) matrix: row i - 1 is
// dependent i, column j is candidate head j (column 0 = ROOT).

double tree_score(const Matrix& scores, std::span<const int> heads);

// Maximum spanning arborescence rooted at ROOT with exactly one ROOT child
// (Chu-Liu/Edmonds, run once per candidate root child). Diagonal entries are
// ignored.
std::vector<int> decode_mst(const Matrix& scores);

// Exhaustive search over all single-rooted trees; ties go to the
// lexicographically smallest head array. Requires m <= 7.
std::vector<int> brute_force_best_tree(const Matrix& scores);

// Number of single-rooted trees over m tokens, by enumeration (m <= 7).
long count_single_root_trees(int m);

}  // namespace dcst
