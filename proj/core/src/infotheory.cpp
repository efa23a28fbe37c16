#include "ata/infotheory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>

#include "ata/error.hpp"

namespace ata {
namespace {

constexpr int kMaxIterations = 100;
constexpr double kShiftTolerance = 1e-6;

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

std::size_t nearest(std::span<const double> x, MatrixView centroids, double* dist = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.rows; ++c) {
    const double d = sq_dist(x, centroids.row(c));
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

template <typename Key>
double entropy_of_counts(const std::map<Key, std::size_t>& counts, std::size_t total) {
  double h = 0.0;
  for (const auto& [key, count] : counts) {
    const double p = static_cast<double>(count) / static_cast<double>(total);
    h -= p * std::log(p);
  }
  return h;
}

void require_paired(const LabelSequence& a, const LabelSequence& b, const char* who) {
  if (a.size() != b.size())
    throw ShapeError(std::string(who) + ": label sequences differ in length (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  if (a.size() == 0) throw ShapeError(std::string(who) + ": empty label sequences");
}

}  // namespace

Codebook fit_codebook(MatrixView patches, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("fit_codebook: k must be positive");
  const std::size_t n = patches.rows, dim = patches.cols;
  {
    std::set<std::vector<double>> distinct;
    for (std::size_t i = 0; i < n && distinct.size() < k; ++i)
      distinct.emplace(patches.row(i).begin(), patches.row(i).end());
    if (distinct.size() < k)
      throw std::invalid_argument("fit_codebook: need at least " + std::to_string(k) + " distinct patches, found " +
                                  std::to_string(distinct.size()));
  }

  std::mt19937_64 rng(seed);
  Codebook cb{k, dim, std::vector<double>(k * dim), seed};
  auto set_centroid = [&](std::size_t c, std::span<const double> src) {
    std::copy(src.begin(), src.end(), cb.centroids.begin() + static_cast<std::ptrdiff_t>(c * dim));
  };

  // k-means++ seeding. Already chosen points have weight 0, so seeds are distinct.
  set_centroid(0, patches.row(std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(patches.row(i), MatrixView(cb.centroids, k, dim).row(0));
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (double v : d2) total += v;
    double r = std::uniform_real_distribution<double>(0.0, total)(rng);
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0.0) continue;
      pick = i;
      if ((r -= d2[i]) < 0.0) break;
    }
    set_centroid(c, patches.row(pick));
    const auto centroid = MatrixView(cb.centroids, k, dim).row(c);
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], sq_dist(patches.row(i), centroid));
  }

  std::vector<std::size_t> assign(n);
  std::vector<double> sums(k * dim);
  std::vector<std::size_t> counts(k);
  std::vector<double> dist(n);
  for (int iter = 0; iter < kMaxIterations; ++iter) {
    for (std::size_t i = 0; i < n; ++i) assign[i] = nearest(patches.row(i), cb.view(), &dist[i]);
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      for (std::size_t j = 0; j < dim; ++j) sums[assign[i] * dim + j] += patches(i, j);
    }
    double max_shift = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
      std::vector<double> next(dim);
      if (counts[c] == 0) {
        // Empty cluster: move it onto the point worst served by its centroid.
        const auto far = static_cast<std::size_t>(std::max_element(dist.begin(), dist.end()) - dist.begin());
        std::copy(patches.row(far).begin(), patches.row(far).end(), next.begin());
        dist[far] = 0.0;
      } else {
        for (std::size_t j = 0; j < dim; ++j) next[j] = sums[c * dim + j] / static_cast<double>(counts[c]);
      }
      max_shift = std::max(max_shift, std::sqrt(sq_dist(next, cb.view().row(c))));
      set_centroid(c, next);
    }
    if (max_shift < kShiftTolerance) break;
  }
  return cb;
}

Codebook fit_clip_codebook(const FeatureVolume& x, std::size_t k, std::uint64_t seed) {
  if (k == 0) throw std::invalid_argument("fit_clip_codebook: k must be positive");
  const MatrixView all(x.values(), x.t_len() * x.patches(), x.c());
  std::set<std::vector<double>> distinct;
  for (std::size_t i = 0; i < all.rows && distinct.size() < k; ++i) distinct.emplace(all.row(i).begin(), all.row(i).end());
  return fit_codebook(all, std::min(k, distinct.size()), seed);
}

LabelSequence quantize(MatrixView frame, const Codebook& cb) {
  if (frame.cols != cb.dim)
    throw ShapeError("quantize: patch width " + std::to_string(frame.cols) + " vs codebook width " +
                     std::to_string(cb.dim));
  LabelSequence out;
  out.labels.reserve(frame.rows);
  for (std::size_t i = 0; i < frame.rows; ++i) out.labels.push_back(nearest(frame.row(i), cb.view()));
  return out;
}

double entropy(const LabelSequence& a) {
  if (a.size() == 0) throw ShapeError("entropy: empty label sequence");
  std::map<std::size_t, std::size_t> counts;
  for (auto l : a.labels) ++counts[l];
  return entropy_of_counts(counts, a.size());
}

double conditional_entropy(const LabelSequence& a, const LabelSequence& b) {
  require_paired(a, b, "conditional_entropy");
  std::map<std::pair<std::size_t, std::size_t>, std::size_t> joint;
  for (std::size_t i = 0; i < a.size(); ++i) ++joint[{a.labels[i], b.labels[i]}];
  return entropy_of_counts(joint, a.size()) - entropy(a);
}

double mutual_information(const LabelSequence& a, const LabelSequence& b) {
  require_paired(a, b, "mutual_information");
  return entropy(b) - conditional_entropy(a, b);
}

AdjacentInformation clip_adjacent_information(const FeatureVolume& x, const Codebook& cb) {
  if (x.t_len() < 2) throw std::invalid_argument("clip_adjacent_mi: need at least 2 frames");
  std::vector<LabelSequence> labels;
  for (std::size_t t = 0; t < x.t_len(); ++t) labels.push_back(quantize(x.frame(t), cb));
  AdjacentInformation acc;
  for (std::size_t t = 1; t < x.t_len(); ++t) {
    const double h_cond = conditional_entropy(labels[t - 1], labels[t]);
    const double h_curr = entropy(labels[t]);
    acc.h_prev += entropy(labels[t - 1]);
    acc.h_curr += h_curr;
    acc.h_cond += h_cond;
    acc.mi += h_curr - h_cond;
  }
  const double pairs = static_cast<double>(x.t_len() - 1);
  acc.mi /= pairs;
  acc.h_prev /= pairs;
  acc.h_curr /= pairs;
  acc.h_cond /= pairs;
  return acc;
}

double clip_adjacent_mi(const FeatureVolume& x, const Codebook& cb) { return clip_adjacent_information(x, cb).mi; }

}  // namespace ata
