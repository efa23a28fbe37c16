#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ata/alignment.hpp"
#include "ata/permutation.hpp"

namespace ata {

/// A generated clip plus whatever ground truth the generator knows.
///
/// `truth[t]` maps frame t back onto the base frame: gathering frame t by
/// truth[t] reproduces the base layout. This is exactly the plan that
/// align_clip should recover when matchings are unique.
struct SyntheticClip {
  FeatureVolume volume;
  std::optional<std::vector<Permutation>> truth;
  std::optional<std::size_t> label;
  std::uint64_t seed = 0;
};

inline constexpr double kMinCosineGap = 0.1;
inline constexpr int kMaxRejections = 1000;

/// Random [HW x C] frame whose patches pairwise satisfy 1 - cos >= 0.1.
/// Throws std::runtime_error if a patch needs more than 1000 rejections.
std::vector<double> distinct_patch_frame(std::size_t patches, std::size_t c, std::uint64_t seed);

/// Smallest pairwise cosine distance 1 - cos between rows of a frame.
double min_cosine_gap(MatrixView frame);

SyntheticClip gen_static(std::size_t t, std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed);

/// Frame t is the base cyclically translated by (t*dx, t*dy) patches.
SyntheticClip gen_shifted(std::size_t t, std::size_t h, std::size_t w, std::size_t c, int dx, int dy,
                          std::uint64_t seed);

/// Gathers each frame t >= 1 by perms[t] (perms[0] is ignored) and composes the truths.
SyntheticClip shuffle_frames(const SyntheticClip& base, const std::vector<Permutation>& perms);
/// Independent uniformly random permutation for every frame except frame 0.
SyntheticClip gen_shuffled(const SyntheticClip& base, std::uint64_t seed);

enum class Direction : std::size_t { right = 0, left = 1, down = 2, up = 3 };

struct MotionSpec {
  std::size_t n_clips = 1000;
  std::size_t t = 8, h = 4, w = 4, c = 8;
  std::size_t classes = 4;
  bool shuffled = false;
  std::uint64_t seed = 0;
  double noise = 0.05;
  /// Per-step appearance rotation (radians) that travels with each patch.
  double drift = 0.3;
  double train_fraction = 0.8;
  /// Generation workers; 0 selects resolve_threads(). Output does not depend on it.
  std::size_t threads = 0;
};

struct MotionDataset {
  std::vector<SyntheticClip> train;
  std::vector<SyntheticClip> val;
};

/// One clip of the motion task: a centred distinct-patch base translated one
/// patch per step in `dir`, each patch rotated by the direction's drift, plus
/// Gaussian noise.
SyntheticClip gen_motion_clip(const MotionSpec& spec, Direction dir, std::uint64_t seed);

/// Balanced four-direction dataset, split train/val by seed.
MotionDataset gen_motion_dataset(const MotionSpec& spec);

}  // namespace ata
