#include "dcst/mst.hpp"

#include <cmath>
#include <limits>

#include "dcst/errors.hpp"
#include "dcst/tree.hpp"

namespace dcst {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_shape(const Matrix& scores) {
  if (scores.rows() < 1 || scores.cols() != scores.rows() + 1)
    throw ShapeError("arc scores must be m x (m + 1) with m >= 1");
}

// Maximum arborescence over nodes 0..n-1 rooted at 0, weights w[h][d].
// Returns parent per node (parent[0] = -1).
std::vector<int> chu_liu_edmonds(const std::vector<std::vector<double>>& w) {
  const int n = static_cast<int>(w.size());
  std::vector<int> parent(n, -1);
  for (int d = 1; d < n; ++d) {
    double best = kNegInf;
    int arg = -1;
    for (int h = 0; h < n; ++h) {
      if (h == d) continue;
      if (arg < 0 || w[h][d] > best) {
        best = w[h][d];
        arg = h;
      }
    }
    parent[d] = arg;
  }

  // Find a cycle.
  std::vector<int> mark(n, -1);
  std::vector<int> cycle;
  for (int start = 1; start < n && cycle.empty(); ++start) {
    int v = start;
    while (v > 0 && mark[v] < 0) {
      mark[v] = start;
      v = parent[v];
    }
    if (v > 0 && mark[v] == start) {
      int u = v;
      do {
        cycle.push_back(u);
        u = parent[u];
      } while (u != v);
    }
  }
  if (cycle.empty()) return parent;

  // Contract the cycle into a single node.
  std::vector<bool> in_cycle(n, false);
  for (int v : cycle) in_cycle[v] = true;
  std::vector<int> to_new(n, -1);
  std::vector<int> to_old;
  for (int v = 0; v < n; ++v)
    if (!in_cycle[v]) {
      to_new[v] = static_cast<int>(to_old.size());
      to_old.push_back(v);
    }
  const int c = static_cast<int>(to_old.size());
  const int n2 = c + 1;
  std::vector<std::vector<double>> w2(n2, std::vector<double>(n2, kNegInf));
  std::vector<int> enter_at(n2, -1);   // cycle node entered from outside node u
  std::vector<int> leave_from(n2, -1); // cycle node that heads outside node v

  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      if (!in_cycle[u] && !in_cycle[v]) {
        w2[to_new[u]][to_new[v]] = w[u][v];
      } else if (!in_cycle[u] && in_cycle[v]) {
        const double s = w[u][v] - w[parent[v]][v];
        if (enter_at[to_new[u]] < 0 || s > w2[to_new[u]][c]) {
          w2[to_new[u]][c] = s;
          enter_at[to_new[u]] = v;
        }
      } else if (in_cycle[u] && !in_cycle[v]) {
        if (leave_from[to_new[v]] < 0 || w[u][v] > w2[c][to_new[v]]) {
          w2[c][to_new[v]] = w[u][v];
          leave_from[to_new[v]] = u;
        }
      }
    }
  }

  std::vector<int> sub = chu_liu_edmonds(w2);
  std::vector<int> result = parent;  // cycle nodes keep their cycle heads
  for (int v2 = 1; v2 < n2; ++v2) {
    const int h2 = sub[v2];
    if (v2 == c) {
      const int u = to_old[h2];
      result[enter_at[h2]] = u;
    } else {
      const int v = to_old[v2];
      result[v] = h2 == c ? leave_from[v2] : to_old[h2];
    }
  }
  return result;
}

}  // namespace

double tree_score(const Matrix& scores, std::span<const int> heads) {
  check_shape(scores);
  if (static_cast<Eigen::Index>(heads.size()) != scores.rows())
    throw ShapeError("tree_score: head array length differs from score rows");
  double total = 0.0;
  for (std::size_t i = 0; i < heads.size(); ++i)
    total += scores(static_cast<Eigen::Index>(i), heads[i]);
  return total;
}

std::vector<int> decode_mst(const Matrix& scores) {
  check_shape(scores);
  const int m = static_cast<int>(scores.rows());
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= m; ++j)
      if (j != i + 1 && !std::isfinite(scores(i, j)))
        throw NumericError("decode_mst: non-finite arc score");

  const int n = m + 1;
  std::vector<std::vector<double>> w(n, std::vector<double>(n, kNegInf));
  for (int d = 1; d <= m; ++d)
    for (int h = 0; h <= m; ++h)
      if (h != d) w[h][d] = scores(d - 1, h);

  std::vector<int> best;
  double best_score = kNegInf;
  for (int r = 1; r <= m; ++r) {
    auto wr = w;
    for (int d = 1; d <= m; ++d)
      if (d != r) wr[0][d] = kNegInf;
    std::vector<int> parent = chu_liu_edmonds(wr);
    std::vector<int> heads(parent.begin() + 1, parent.end());
    const double s = tree_score(scores, heads);
    if (best.empty() || s > best_score) {
      best_score = s;
      best = std::move(heads);
    }
  }
  return best;
}

std::vector<int> brute_force_best_tree(const Matrix& scores) {
  check_shape(scores);
  const int m = static_cast<int>(scores.rows());
  if (m > 7) throw UsageError("brute_force_best_tree: m must be <= 7");
  std::vector<int> heads(m, 0);
  std::vector<int> best;
  double best_score = kNegInf;
  // Odometer over [0..m]^m in lexicographic order.
  while (true) {
    int roots = 0;
    for (int h : heads) roots += h == 0;
    if (roots == 1 && is_valid_tree(heads)) {
      const double s = tree_score(scores, heads);
      if (best.empty() || s > best_score) {
        best_score = s;
        best = heads;
      }
    }
    int pos = m - 1;
    while (pos >= 0 && heads[pos] == m) heads[pos--] = 0;
    if (pos < 0) break;
    ++heads[pos];
  }
  return best;
}

long count_single_root_trees(int m) {
  if (m < 1 || m > 7) throw UsageError("count_single_root_trees: m must be in 1..7");
  std::vector<int> heads(m, 0);
  long count = 0;
  while (true) {
    if (is_valid_tree(heads)) ++count;
    int pos = m - 1;
    while (pos >= 0 && heads[pos] == m) heads[pos--] = 0;
    if (pos < 0) break;
    ++heads[pos];
  }
  return count;
}

}  // namespace dcst
