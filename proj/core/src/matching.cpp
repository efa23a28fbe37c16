#include "ata/matching.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ata/error.hpp"

namespace ata {
namespace {

constexpr double kDegenerateNorm = 1e-12;
// Reduced-cost slack under which an edge counts as tight (part of some optimum).
constexpr double kTightSlack = 1e-9;
constexpr double kScoreTieSlack = 1e-9;
constexpr std::size_t kBruteForceLimit = 10;

void require_finite(const SimilarityMatrix& s, const char* who) {
  if (!s.all_finite()) throw NumericError(std::string(who) + ": similarity matrix has non-finite entries");
}

// Classic O(n^3) shortest-augmenting-path Hungarian method. Returns the
// row->column assignment and fills the optimal dual potentials.
std::vector<std::size_t> hungarian_min_cost(const std::vector<double>& cost, std::size_t n, std::vector<double>& u,
                                            std::vector<double>& v) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  u.assign(n + 1, 0.0);
  v.assign(n + 1, 0.0);
  std::vector<std::size_t> owner(n + 1, 0);  // owner[j]: 1-based row holding column j
  std::vector<std::size_t> way(n + 1, 0);
  std::vector<double> minv(n + 1);
  std::vector<char> used(n + 1);

  for (std::size_t i = 1; i <= n; ++i) {
    owner[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = owner[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      const double* crow = cost.data() + (i0 - 1) * n;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = crow[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (owner[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      owner[j0] = owner[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<std::size_t> row_to_col(n);
  for (std::size_t j = 1; j <= n; ++j) row_to_col[owner[j] - 1] = j - 1;
  return row_to_col;
}

// Rewrites `match` into the lexicographically smallest perfect matching of
// the tight-edge graph. Rows before the current one stay fixed; a smaller
// column for row i is accepted when an alternating path over later rows
// hands the column it frees to the displaced row.
void lexicographic_refine(const std::vector<double>& cost, std::size_t n, const std::vector<double>& u,
                          const std::vector<double>& v, std::vector<std::size_t>& match) {
  auto tight = [&](std::size_t i, std::size_t j) { return cost[i * n + j] - u[i + 1] - v[j + 1] <= kTightSlack; };

  std::vector<std::size_t> owner(n);
  for (std::size_t i = 0; i < n; ++i) owner[match[i]] = i;

  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> parent_col(n);   // column through which a row was reached
  std::vector<std::size_t> parent_row(n);   // row that reached a column
  std::vector<char> seen_col(n);
  std::vector<std::size_t> queue;

  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t freed = match[i];
    for (std::size_t j = 0; j < freed; ++j) {
      if (!tight(i, j) || owner[j] < i) continue;
      // Row r = owner[j] (> i) must move; search r -> ... -> freed.
      std::fill(seen_col.begin(), seen_col.end(), 0);
      std::fill(parent_col.begin(), parent_col.end(), kNone);
      seen_col[j] = 1;
      queue.assign(1, owner[j]);
      parent_col[owner[j]] = j;
      std::size_t end_row = kNone;
      for (std::size_t qi = 0; qi < queue.size() && end_row == kNone; ++qi) {
        const std::size_t r = queue[qi];
        for (std::size_t c = 0; c < n; ++c) {
          if (seen_col[c] || !tight(r, c)) continue;
          if (c == freed) {
            parent_row[c] = r;
            end_row = r;
            break;
          }
          if (owner[c] <= i) continue;  // fixed rows keep their columns
          seen_col[c] = 1;
          parent_row[c] = r;
          parent_col[owner[c]] = c;
          queue.push_back(owner[c]);
        }
      }
      if (end_row == kNone) continue;
      // Shift along the path: each row on it takes the column that led away from it.
      std::size_t c = freed;
      while (true) {
        const std::size_t r = parent_row[c];
        const std::size_t prev = match[r];
        match[r] = c;
        owner[c] = r;
        if (prev == j) break;
        c = prev;
      }
      match[i] = j;
      owner[j] = i;
      break;
    }
  }
}

}  // namespace

SimilarityMatrix::SimilarityMatrix(std::size_t n, std::vector<double> values) : n_(n), values_(std::move(values)) {
  if (n_ == 0) throw ShapeError("SimilarityMatrix: n must be at least 1");
  if (values_.size() != n_ * n_)
    throw ShapeError("SimilarityMatrix: expected " + std::to_string(n_ * n_) + " entries, got " +
                     std::to_string(values_.size()));
}

bool SimilarityMatrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return std::isfinite(x); });
}

bool SimilarityMatrix::in_cosine_range() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return x >= -1.0 - 1e-12 && x <= 1.0 + 1e-12; });
}

SimilarityMatrix cosine_similarity_matrix(MatrixView prev, MatrixView curr) {
  if (prev.rows != curr.rows || prev.cols != curr.cols)
    throw ShapeError("cosine_similarity_matrix: frames differ in shape");
  const std::size_t n = prev.rows, c = prev.cols;
  auto normalized = [c](MatrixView m) {
    std::vector<double> out(m.data.begin(), m.data.end());
    for (std::size_t i = 0; i < m.rows; ++i) {
      double norm = 0.0;
      for (std::size_t k = 0; k < c; ++k) norm += out[i * c + k] * out[i * c + k];
      norm = std::sqrt(norm);
      for (std::size_t k = 0; k < c; ++k) out[i * c + k] = norm < kDegenerateNorm ? 0.0 : out[i * c + k] / norm;
    }
    return out;
  };
  const auto a = normalized(prev);
  const auto b = normalized(curr);
  std::vector<double> s(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < c; ++k) dot += a[i * c + k] * b[j * c + k];
      s[i * n + j] = std::clamp(dot, -1.0, 1.0);
    }
  return SimilarityMatrix(n, std::move(s));
}

double matching_score(const SimilarityMatrix& s, const Permutation& p) {
  if (p.size() != s.n())
    throw ShapeError("matching_score: permutation size " + std::to_string(p.size()) + " vs matrix " +
                     std::to_string(s.n()));
  double total = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) total += s(j, p[j]);
  return total;
}

Permutation solve_assignment_exact(const SimilarityMatrix& s) {
  require_finite(s, "solve_assignment_exact");
  const std::size_t n = s.n();
  std::vector<double> cost(n * n);
  for (std::size_t k = 0; k < cost.size(); ++k) cost[k] = 1.0 - s.values()[k];
  std::vector<double> u, v;
  auto match = hungarian_min_cost(cost, n, u, v);
  lexicographic_refine(cost, n, u, v, match);
  return Permutation::from_map(std::move(match));
}

Permutation solve_assignment_bruteforce(const SimilarityMatrix& s) {
  require_finite(s, "solve_assignment_bruteforce");
  const std::size_t n = s.n();
  if (n > kBruteForceLimit)
    throw std::invalid_argument("solve_assignment_bruteforce: n=" + std::to_string(n) + " exceeds " +
                                std::to_string(kBruteForceLimit));
  std::vector<std::size_t> map(n);
  std::iota(map.begin(), map.end(), std::size_t{0});
  auto score = [&] {
    double t = 0.0;
    for (std::size_t j = 0; j < n; ++j) t += s(j, map[j]);
    return t;
  };
  double best = -std::numeric_limits<double>::infinity();
  do best = std::max(best, score());
  while (std::next_permutation(map.begin(), map.end()));

  std::iota(map.begin(), map.end(), std::size_t{0});
  do {
    if (score() >= best - kScoreTieSlack) break;
  } while (std::next_permutation(map.begin(), map.end()));
  return Permutation::from_map(std::move(map));
}

Permutation solve_assignment_greedy(const SimilarityMatrix& s) {
  const std::size_t n = s.n();
  require_finite(s, "solve_assignment_greedy");
  std::vector<std::size_t> order(n * n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return s.values()[a] > s.values()[b]; });
  std::vector<std::size_t> map(n);
  std::vector<char> row_used(n), col_used(n);
  std::size_t assigned = 0;
  for (std::size_t k : order) {
    const std::size_t i = k / n, j = k % n;
    if (row_used[i] || col_used[j]) continue;
    map[i] = j;
    row_used[i] = col_used[j] = 1;
    if (++assigned == n) break;
  }
  return Permutation::from_map(std::move(map));
}

}  // namespace ata
