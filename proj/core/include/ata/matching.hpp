#pragma once

#include <cstddef>
#include <vector>

#include "ata/matrix_view.hpp"
#include "ata/permutation.hpp"

namespace ata {

/// Square similarity matrix; entry (i, j) compares patch i of the earlier
/// frame with patch j of the later frame.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  SimilarityMatrix(std::size_t n, std::vector<double> values);

  std::size_t n() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  const std::vector<double>& values() const { return values_; }

  bool all_finite() const;
  /// True when every entry lies in [-1 - 1e-12, 1 + 1e-12].
  bool in_cosine_range() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

/// Cosine similarity between every row of `prev` and every row of `curr`.
/// Rows with norm below 1e-12 get similarity 0 to every partner.
SimilarityMatrix cosine_similarity_matrix(MatrixView prev, MatrixView curr);

/// Total similarity of the pairing in which earlier-frame slot j receives
/// later-frame patch p[j]: sum_j S(j, p[j]).
double matching_score(const SimilarityMatrix& s, const Permutation& p);

/// Maximum-score perfect matching via the Hungarian method on 1 - S.
/// Among optimal matchings the lexicographically smallest map is returned.
Permutation solve_assignment_exact(const SimilarityMatrix& s);

/// Exhaustive search for n <= 10, with the same tie-break as the exact solver.
Permutation solve_assignment_bruteforce(const SimilarityMatrix& s);

/// Repeatedly takes the largest remaining (i, j) pair. Not optimal in general.
Permutation solve_assignment_greedy(const SimilarityMatrix& s);

}  // namespace ata
