#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "ata/matrix_view.hpp"
#include "ata/permutation.hpp"

namespace ata {

/// Clip features laid out [T, H, W, C] row-major.
class FeatureVolume {
 public:
  FeatureVolume() = default;
  FeatureVolume(std::size_t t_len, std::size_t h, std::size_t w, std::size_t c);
  FeatureVolume(std::size_t t_len, std::size_t h, std::size_t w, std::size_t c, std::vector<double> values);

  std::size_t t_len() const { return t_len_; }
  std::size_t h() const { return h_; }
  std::size_t w() const { return w_; }
  std::size_t c() const { return c_; }
  std::size_t patches() const { return h_ * w_; }
  std::size_t frame_size() const { return h_ * w_ * c_; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  /// Frame t as an [HW x C] matrix.
  MatrixView frame(std::size_t t) const;
  std::span<double> frame_data(std::size_t t);
  std::span<const double> patch(std::size_t t, std::size_t s) const;

  bool all_finite() const;
  bool same_dims(const FeatureVolume& other) const;

  friend bool operator==(const FeatureVolume&, const FeatureVolume&) = default;

 private:
  std::size_t t_len_ = 0, h_ = 0, w_ = 0, c_ = 0;
  std::vector<double> values_;
};

/// One gather map per frame; perms[0] is the identity and perms[t] is the
/// permutation applied to frame t during alignment.
struct AlignmentPlan {
  std::size_t t_len = 0;
  std::size_t h = 0;
  std::size_t w = 0;
  std::vector<Permutation> perms;

  static AlignmentPlan identity(std::size_t t_len, std::size_t h, std::size_t w);
  /// Throws std::invalid_argument unless the plan is well formed.
  void validate() const;

  friend bool operator==(const AlignmentPlan&, const AlignmentPlan&) = default;
};

struct AlignedClip {
  FeatureVolume volume;
  AlignmentPlan plan;
};

/// Frame-by-frame optimal matching. Frame t is matched against the already
/// aligned frame t-1 using detached, L2-normalized copies, then gathered.
AlignedClip align_clip(const FeatureVolume& x);

/// Gathers each frame t by inverse(plan.perms[t]).
FeatureVolume dealign_clip(const FeatureVolume& aligned, const AlignmentPlan& plan);

/// Gathers each frame t by plan.perms[t] (replays a recorded alignment).
FeatureVolume apply_plan(const FeatureVolume& x, const AlignmentPlan& plan);

/// One-hot matrix with M[j][p[j]] = 1.
std::vector<std::vector<std::uint8_t>> permutation_matrix(const Permutation& p);

}  // namespace ata
