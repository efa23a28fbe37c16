#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ata/alignment.hpp"
#include "ata/matrix_view.hpp"

namespace ata {

/// k-means centroids defining the discrete alphabet used for entropy estimates.
struct Codebook {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::vector<double> centroids;  // [k x dim]
  std::uint64_t seed = 0;

  MatrixView view() const { return MatrixView(centroids, k, dim); }
};

/// One symbol per patch, in patch order.
struct LabelSequence {
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }
  friend bool operator==(const LabelSequence&, const LabelSequence&) = default;
};

inline constexpr std::size_t kDefaultCodebookSize = 16;

/// k-means++ seeding followed by Lloyd iterations (at most 100, stop when
/// every centroid moves less than 1e-6). Deterministic for a given seed.
Codebook fit_codebook(MatrixView patches, std::size_t k, std::uint64_t seed);

/// Codebook over every patch of every frame of the clip. k shrinks to the
/// number of distinct patches when the clip has fewer.
Codebook fit_clip_codebook(const FeatureVolume& x, std::size_t k, std::uint64_t seed);

/// Nearest centroid per row; ties go to the lower index.
LabelSequence quantize(MatrixView frame, const Codebook& cb);

/// Empirical Shannon entropy in nats.
double entropy(const LabelSequence& a);
/// H(b | a) from the positional pairing (a_i, b_i).
double conditional_entropy(const LabelSequence& a, const LabelSequence& b);
/// H(b) - H(b | a).
double mutual_information(const LabelSequence& a, const LabelSequence& b);

struct AdjacentInformation {
  double mi = 0.0;
  double h_prev = 0.0;
  double h_curr = 0.0;
  double h_cond = 0.0;
};

/// Averages over all adjacent frame pairs (t-1, t). Requires T >= 2.
AdjacentInformation clip_adjacent_information(const FeatureVolume& x, const Codebook& cb);
double clip_adjacent_mi(const FeatureVolume& x, const Codebook& cb);

}  // namespace ata
