#include "ata/alignment.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ata/error.hpp"
#include "ata/matching.hpp"

namespace ata {

FeatureVolume::FeatureVolume(std::size_t t_len, std::size_t h, std::size_t w, std::size_t c)
    : FeatureVolume(t_len, h, w, c, std::vector<double>(t_len * h * w * c, 0.0)) {}

FeatureVolume::FeatureVolume(std::size_t t_len, std::size_t h, std::size_t w, std::size_t c, std::vector<double> values)
    : t_len_(t_len), h_(h), w_(w), c_(c), values_(std::move(values)) {
  if (t_len == 0 || h == 0 || w == 0 || c == 0) throw ShapeError("FeatureVolume: dimensions must be positive");
  if (values_.size() != t_len * h * w * c)
    throw ShapeError("FeatureVolume: expected " + std::to_string(t_len * h * w * c) + " values, got " +
                     std::to_string(values_.size()));
}

MatrixView FeatureVolume::frame(std::size_t t) const {
  return MatrixView(std::span<const double>(values_).subspan(t * frame_size(), frame_size()), patches(), c_);
}

std::span<double> FeatureVolume::frame_data(std::size_t t) {
  return std::span<double>(values_).subspan(t * frame_size(), frame_size());
}

std::span<const double> FeatureVolume::patch(std::size_t t, std::size_t s) const {
  return std::span<const double>(values_).subspan(t * frame_size() + s * c_, c_);
}

bool FeatureVolume::all_finite() const {
  for (double v : values_)
    if (!std::isfinite(v)) return false;
  return true;
}

bool FeatureVolume::same_dims(const FeatureVolume& o) const {
  return t_len_ == o.t_len_ && h_ == o.h_ && w_ == o.w_ && c_ == o.c_;
}

AlignmentPlan AlignmentPlan::identity(std::size_t t_len, std::size_t h, std::size_t w) {
  AlignmentPlan plan{t_len, h, w, {}};
  plan.perms.assign(t_len, Permutation::identity(h * w));
  return plan;
}

void AlignmentPlan::validate() const {
  if (perms.size() != t_len)
    throw std::invalid_argument("alignment plan holds " + std::to_string(perms.size()) + " maps for T=" +
                                std::to_string(t_len));
  for (std::size_t t = 0; t < perms.size(); ++t) {
    if (perms[t].size() != h * w)
      throw std::invalid_argument("alignment plan map " + std::to_string(t) + " has wrong length");
    if (!is_bijection(perms[t].map()))
      throw std::invalid_argument("alignment plan map " + std::to_string(t) + " is not a bijection");
  }
  if (!perms.empty() && !perms[0].is_identity())
    throw std::invalid_argument("alignment plan map 0 must be the identity");
}

namespace {

void check_plan(const FeatureVolume& x, const AlignmentPlan& plan) {
  plan.validate();
  if (plan.t_len != x.t_len() || plan.h != x.h() || plan.w != x.w())
    throw ShapeError("alignment plan dims do not match the feature volume");
}

FeatureVolume gather_frames(const FeatureVolume& x, const AlignmentPlan& plan, bool inverse) {
  check_plan(x, plan);
  FeatureVolume out = x;
  for (std::size_t t = 1; t < x.t_len(); ++t) {
    const Permutation p = inverse ? plan.perms[t].inverse() : plan.perms[t];
    const auto frame = gather_rows<double>(x.frame(t).data, x.c(), p);
    std::copy(frame.begin(), frame.end(), out.frame_data(t).begin());
  }
  return out;
}

}  // namespace

AlignedClip align_clip(const FeatureVolume& x) {
  if (!x.all_finite()) throw NumericError("align_clip: input volume has non-finite values");
  AlignedClip result{x, AlignmentPlan::identity(x.t_len(), x.h(), x.w())};
  for (std::size_t t = 1; t < x.t_len(); ++t) {
    const SimilarityMatrix s = cosine_similarity_matrix(result.volume.frame(t - 1), x.frame(t));
    Permutation p = solve_assignment_exact(s);
    const auto frame = gather_rows<double>(x.frame(t).data, x.c(), p);
    std::copy(frame.begin(), frame.end(), result.volume.frame_data(t).begin());
    result.plan.perms[t] = std::move(p);
  }
  return result;
}

FeatureVolume dealign_clip(const FeatureVolume& aligned, const AlignmentPlan& plan) {
  return gather_frames(aligned, plan, true);
}

FeatureVolume apply_plan(const FeatureVolume& x, const AlignmentPlan& plan) { return gather_frames(x, plan, false); }

std::vector<std::vector<std::uint8_t>> permutation_matrix(const Permutation& p) {
  std::vector<std::vector<std::uint8_t>> m(p.size(), std::vector<std::uint8_t>(p.size(), 0));
  for (std::size_t j = 0; j < p.size(); ++j) m[j][p[j]] = 1;
  return m;
}

}  // namespace ata
