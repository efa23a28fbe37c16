#include "ata/synthdata.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "ata/error.hpp"
#include "ata/parallel.hpp"
#include "ata/random.hpp"

namespace ata {
namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na < 1e-24 || nb < 1e-24) return 0.0;
  return dot / std::sqrt(na * nb);
}

void check_dims(std::size_t t, std::size_t h, std::size_t w, std::size_t c) {
  if (t == 0 || h == 0 || w == 0 || c == 0) throw ConfigError("synthetic clip dimensions must be >= 1");
}

std::size_t wrap(long long v, std::size_t m) {
  const long long mm = static_cast<long long>(m);
  return static_cast<std::size_t>(((v % mm) + mm) % mm);
}

// truth[t][p]: where base patch p sits in frame t after a cyclic shift of (sx, sy).
Permutation translation(std::size_t h, std::size_t w, long long sx, long long sy) {
  std::vector<std::size_t> map(h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      map[y * w + x] = wrap(static_cast<long long>(y) + sy, h) * w + wrap(static_cast<long long>(x) + sx, w);
  return Permutation::from_map(std::move(map));
}

// Frame whose slot truth[p] holds base patch p.
std::vector<double> place(std::span<const double> base, std::size_t c, const Permutation& truth) {
  std::vector<double> out(base.size());
  for (std::size_t p = 0; p < truth.size(); ++p)
    std::copy_n(base.data() + p * c, c, out.data() + truth[p] * c);
  return out;
}

Permutation random_permutation(std::size_t n, std::mt19937_64& rng) {
  std::vector<std::size_t> map(n);
  std::iota(map.begin(), map.end(), std::size_t{0});
  std::shuffle(map.begin(), map.end(), rng);
  return Permutation::from_map(std::move(map));
}

// Rotates the coordinate pairs (first, first+1), (first+2, first+3), ...
// with wrap-around, skipping a pair that would reuse `first`.
void rotate_pairs(std::span<double> v, std::size_t first, double angle) {
  const std::size_t c = v.size();
  if (c < 2) return;
  const double cs = std::cos(angle), sn = std::sin(angle);
  for (std::size_t a = first; a < c; a += 2) {
    const std::size_t b = (a + 1) % c;
    if (b == first) continue;
    const double va = v[a], vb = v[b];
    v[a] = cs * va - sn * vb;
    v[b] = sn * va + cs * vb;
  }
}

}  // namespace

double min_cosine_gap(MatrixView frame) {
  double gap = 2.0;
  for (std::size_t i = 0; i < frame.rows; ++i)
    for (std::size_t j = i + 1; j < frame.rows; ++j) gap = std::min(gap, 1.0 - cosine(frame.row(i), frame.row(j)));
  return gap;
}

std::vector<double> distinct_patch_frame(std::size_t patches, std::size_t c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> frame(patches * c);
  std::vector<double> candidate(c);
  for (std::size_t p = 0; p < patches; ++p) {
    bool accepted = false;
    for (int attempt = 0; attempt <= kMaxRejections && !accepted; ++attempt) {
      for (double& v : candidate) v = normal(rng);
      accepted = true;
      for (std::size_t q = 0; q < p && accepted; ++q)
        accepted = 1.0 - cosine(candidate, std::span<const double>(frame).subspan(q * c, c)) >= kMinCosineGap;
    }
    if (!accepted)
      throw std::runtime_error("cannot place " + std::to_string(patches) + " patches with cosine gap " +
                               std::to_string(kMinCosineGap) + " in " + std::to_string(c) + " dimensions");
    std::copy(candidate.begin(), candidate.end(), frame.begin() + static_cast<std::ptrdiff_t>(p * c));
  }
  return frame;
}

SyntheticClip gen_static(std::size_t t, std::size_t h, std::size_t w, std::size_t c, std::uint64_t seed) {
  return gen_shifted(t, h, w, c, 0, 0, seed);
}

SyntheticClip gen_shifted(std::size_t t, std::size_t h, std::size_t w, std::size_t c, int dx, int dy,
                          std::uint64_t seed) {
  check_dims(t, h, w, c);
  const auto base = distinct_patch_frame(h * w, c, seed);
  SyntheticClip clip{FeatureVolume(t, h, w, c), std::vector<Permutation>{}, std::nullopt, seed};
  for (std::size_t f = 0; f < t; ++f) {
    const auto ff = static_cast<long long>(f);
    Permutation truth = translation(h, w, ff * dx, ff * dy);
    const auto frame = place(base, c, truth);
    std::copy(frame.begin(), frame.end(), clip.volume.frame_data(f).begin());
    clip.truth->push_back(std::move(truth));
  }
  return clip;
}

SyntheticClip shuffle_frames(const SyntheticClip& base, const std::vector<Permutation>& perms) {
  const FeatureVolume& v = base.volume;
  if (perms.size() != v.t_len()) throw ShapeError("shuffle_frames: need one permutation per frame");
  SyntheticClip out = base;
  std::vector<Permutation> truth =
      base.truth ? *base.truth : std::vector<Permutation>(v.t_len(), Permutation::identity(v.patches()));
  for (std::size_t t = 1; t < v.t_len(); ++t) {
    const Permutation& pi = perms[t];
    if (pi.size() != v.patches()) throw ShapeError("shuffle_frames: permutation size mismatch");
    const auto frame = gather_rows<double>(v.frame(t).data, v.c(), pi);
    std::copy(frame.begin(), frame.end(), out.volume.frame_data(t).begin());
    // Base patch p moves from slot truth[p] to slot pi^-1(truth[p]).
    truth[t] = compose(pi.inverse(), truth[t]);
  }
  out.truth = std::move(truth);
  return out;
}

SyntheticClip gen_shuffled(const SyntheticClip& base, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Permutation> perms;
  perms.push_back(Permutation::identity(base.volume.patches()));
  for (std::size_t t = 1; t < base.volume.t_len(); ++t) perms.push_back(random_permutation(base.volume.patches(), rng));
  SyntheticClip out = shuffle_frames(base, perms);
  out.seed = seed;
  return out;
}

SyntheticClip gen_motion_clip(const MotionSpec& spec, Direction dir, std::uint64_t seed) {
  check_dims(spec.t, spec.h, spec.w, spec.c);
  const std::size_t n = spec.h * spec.w, c = spec.c;
  std::mt19937_64 rng(seed);

  std::vector<double> base;
  for (int attempt = 0;; ++attempt) {
    if (attempt > kMaxRejections) throw std::runtime_error("gen_motion_clip: cannot draw a distinct centred base frame");
    base = distinct_patch_frame(n, c, derive_seed(seed, static_cast<std::uint64_t>(attempt)));
    std::vector<double> mu(c, 0.0);
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t k = 0; k < c; ++k) mu[k] += base[p * c + k] / static_cast<double>(n);
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t k = 0; k < c; ++k) base[p * c + k] -= mu[k];
    if (n == 1 || min_cosine_gap(MatrixView(base, n, c)) >= kMinCosineGap) break;
  }

  int dx = 0, dy = 0;
  std::size_t plane = 0;
  double sign = 1.0;
  switch (dir) {
    case Direction::right: dx = 1; plane = 0; sign = 1.0; break;
    case Direction::left: dx = -1; plane = 0; sign = -1.0; break;
    case Direction::down: dy = 1; plane = 1; sign = 1.0; break;
    case Direction::up: dy = -1; plane = 1; sign = -1.0; break;
  }

  std::normal_distribution<double> noise(0.0, spec.noise);
  SyntheticClip clip{FeatureVolume(spec.t, spec.h, spec.w, c), std::vector<Permutation>{},
                     static_cast<std::size_t>(dir), seed};
  for (std::size_t f = 0; f < spec.t; ++f) {
    std::vector<double> drifted = base;
    for (std::size_t p = 0; p < n; ++p)
      rotate_pairs(std::span<double>(drifted).subspan(p * c, c), plane, sign * spec.drift * static_cast<double>(f));
    const auto ff = static_cast<long long>(f);
    Permutation truth = translation(spec.h, spec.w, ff * dx, ff * dy);
    auto frame = place(drifted, c, truth);
    for (double& v : frame) v += noise(rng);
    std::copy(frame.begin(), frame.end(), clip.volume.frame_data(f).begin());
    clip.truth->push_back(std::move(truth));
  }
  if (spec.shuffled) {
    std::vector<Permutation> perms{Permutation::identity(n)};
    for (std::size_t f = 1; f < spec.t; ++f) perms.push_back(random_permutation(n, rng));
    clip = shuffle_frames(clip, perms);
  }
  return clip;
}

MotionDataset gen_motion_dataset(const MotionSpec& spec) {
  if (spec.classes != 4) throw ConfigError("gen_motion_dataset: exactly 4 direction classes are supported");
  if (spec.n_clips == 0) throw ConfigError("gen_motion_dataset: n_clips must be positive");
  check_dims(spec.t, spec.h, spec.w, spec.c);

  std::vector<std::size_t> order(spec.n_clips);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(spec.seed, 0xD5A7));
  std::shuffle(order.begin(), order.end(), rng);

  const auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(spec.n_clips)));
  std::vector<SyntheticClip> clips(order.size());
  parallel_for(order.size(), resolve_threads(spec.threads), [&](std::size_t k) {
    const std::size_t i = order[k];
    clips[k] = gen_motion_clip(spec, static_cast<Direction>(i % 4), derive_seed(spec.seed, i));
  });
  MotionDataset ds;
  for (std::size_t k = 0; k < clips.size(); ++k) (k < n_train ? ds.train : ds.val).push_back(std::move(clips[k]));
  return ds;
}

}  // namespace ata
